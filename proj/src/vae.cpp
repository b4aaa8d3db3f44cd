#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "symprobe/adam.hpp"
#include "symprobe/vae.hpp"

namespace symprobe {

void VaeModel::validate() const {
  encoder.validate();
  decoder.validate();
  if (latent_dim < 1) throw ShapeError("vae: latent_dim must be >= 1");
  if (encoder.input_dim() != input_dim)
    throw ShapeError("vae: encoder takes " + std::to_string(encoder.input_dim()) +
                     " inputs, model input_dim is " + std::to_string(input_dim));
  if (encoder.output_dim() != 2 * latent_dim)
    throw ShapeError("vae: encoder emits " + std::to_string(encoder.output_dim()) +
                     " values, expected 2*latent_dim = " + std::to_string(2 * latent_dim));
  if (decoder.input_dim() != latent_dim)
    throw ShapeError("vae: decoder takes " + std::to_string(decoder.input_dim()) +
                     " inputs, latent_dim is " + std::to_string(latent_dim));
  if (decoder.output_dim() != input_dim)
    throw ShapeError("vae: decoder emits " + std::to_string(decoder.output_dim()) +
                     " values, input_dim is " + std::to_string(input_dim));
}

Vector VaeModel::flatten() const {
  Vector theta(num_params());
  theta << encoder.flatten(), decoder.flatten();
  return theta;
}

void VaeModel::assign(const Eigen::Ref<const Vector>& theta) {
  if (theta.size() != num_params())
    throw ShapeError("vae: parameter vector has " + std::to_string(theta.size()) +
                     " entries, model has " + std::to_string(num_params()));
  const auto n_enc = encoder.num_params();
  encoder.assign(theta.head(n_enc));
  decoder.assign(theta.tail(decoder.num_params()));
}

VaeModel VaeModel::zeros_like() const {
  VaeModel out = *this;
  out.encoder = encoder.zeros_like();
  out.decoder = decoder.zeros_like();
  return out;
}

VaeModel make_vae(Eigen::Index input_dim, Eigen::Index latent_dim,
                  const std::vector<Eigen::Index>& hidden, Rng& rng) {
  if (input_dim < 1 || latent_dim < 1) throw ShapeError("make_vae: dimensions must be >= 1");
  std::vector<Eigen::Index> enc{input_dim};
  enc.insert(enc.end(), hidden.begin(), hidden.end());
  enc.push_back(2 * latent_dim);
  std::vector<Eigen::Index> dec{latent_dim};
  dec.insert(dec.end(), hidden.rbegin(), hidden.rend());
  dec.push_back(input_dim);
  VaeModel m;
  m.encoder = make_mlp<double>(enc, rng);
  m.decoder = make_mlp<double>(dec, rng);
  m.latent_dim = latent_dim;
  m.input_dim = input_dim;
  return m;
}

void TrainConfig::validate() const {
  if (latent_dim < 1) throw ConfigError("latent_dim must be >= 1");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be >= 0");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  for (auto h : hidden)
    if (h < 1) throw ConfigError("hidden widths must be >= 1");
}

// ---- forward pieces -----------------------------------------------------

namespace {

Matrix clamp_logvar(const Matrix& raw) {
  return raw.cwiseMax(-kLogVarClamp).cwiseMin(kLogVarClamp);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(who) + ": " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

Encoding encode(const VaeModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim)
    throw ShapeError("encode: input " + shape_str(x) + ", model expects " +
                     std::to_string(model.input_dim) + " columns");
  const auto fwd = mlp_forward(model.encoder, x);
  Encoding e;
  e.mu = fwd.output.leftCols(model.latent_dim);
  e.logvar = clamp_logvar(fwd.output.rightCols(model.latent_dim));
  e.sigma = (0.5 * e.logvar.array()).exp().matrix();
  return e;
}

Matrix decode(const VaeModel& model, const Matrix& z) {
  if (z.cols() != model.latent_dim)
    throw ShapeError("decode: latent " + shape_str(z) + ", model has " +
                     std::to_string(model.latent_dim) + " latents");
  return mlp_forward(model.decoder, z).output;
}

Matrix reparameterize(const Matrix& mu, const Matrix& sigma, Rng& rng) {
  require_same_shape(mu, sigma, "reparameterize");
  Matrix z(mu.rows(), mu.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = mu(i, j) + sigma(i, j) * rng.normal();
  return z;
}

double rec_loss(const Matrix& x, const Matrix& x_hat) {
  require_same_shape(x, x_hat, "rec_loss");
  if (x.rows() == 0) throw ShapeError("rec_loss: no events");
  const double v = (x - x_hat).squaredNorm() / static_cast<double>(x.rows());
  if (!std::isfinite(v)) throw NumericError("rec_loss: non-finite value");
  return v;
}

double kl_loss(const Matrix& mu, const Matrix& sigma) {
  require_same_shape(mu, sigma, "kl_loss");
  if (mu.rows() == 0) throw ShapeError("kl_loss: no events");
  if (!(sigma.array() > 0.0).all()) throw NumericError("kl_loss: sigma must be positive");
  const auto s2 = sigma.array().square();
  const double sum = (1.0 + s2.log() - mu.array().square() - s2).sum();
  const double v = -0.5 * sum / static_cast<double>(mu.rows());
  if (!std::isfinite(v)) throw NumericError("kl_loss: non-finite value");
  return v;
}

LossTerms vae_loss(const VaeModel& model, const Matrix& x, const Matrix& eps, double beta,
                   VaeModel* grad) {
  if (x.cols() != model.input_dim)
    throw ShapeError("vae_loss: input " + shape_str(x) + ", model expects " +
                     std::to_string(model.input_dim) + " columns");
  if (eps.rows() != x.rows() || eps.cols() != model.latent_dim)
    throw ShapeError("vae_loss: noise " + shape_str(eps) + ", expected " +
                     shape_str(x.rows(), model.latent_dim));
  const auto n = static_cast<double>(x.rows());
  const Eigen::Index d = model.latent_dim;

  const auto enc = mlp_forward(model.encoder, x);
  const Matrix mu = enc.output.leftCols(d);
  const Matrix raw_logvar = enc.output.rightCols(d);
  const Matrix logvar = clamp_logvar(raw_logvar);
  const Matrix var = logvar.array().exp().matrix();
  const Matrix sigma = (0.5 * logvar.array()).exp().matrix();
  const Matrix z = mu + sigma.cwiseProduct(eps);
  const auto dec = mlp_forward(model.decoder, z);
  const Matrix residual = dec.output - x;

  LossTerms loss;
  loss.rec = residual.squaredNorm() / n;
  loss.kl = -0.5 * (1.0 + logvar.array() - mu.array().square() - var.array()).sum() / n;
  loss.total = loss.rec + beta * loss.kl;
  if (!std::isfinite(loss.total)) throw NumericError("vae_loss: non-finite loss");
  if (grad == nullptr) return loss;

  const Matrix g_xhat = (2.0 / n) * residual;
  auto dec_grads = mlp_backward(model.decoder, dec.cache, g_xhat);
  const Matrix& g_z = dec_grads.input;

  Matrix g_enc(x.rows(), 2 * d);
  g_enc.leftCols(d) = g_z + (beta / n) * mu;
  const Matrix g_logvar = (g_z.array() * eps.array() * 0.5 * sigma.array() +
                           (0.5 * beta / n) * (var.array() - 1.0))
                              .matrix();
  g_enc.rightCols(d) =
      (raw_logvar.array().abs() < kLogVarClamp).select(g_logvar, 0.0);
  auto enc_grads = mlp_backward(model.encoder, enc.cache, g_enc);

  grad->encoder = std::move(enc_grads.params);
  grad->decoder = std::move(dec_grads.params);
  grad->latent_dim = model.latent_dim;
  grad->input_dim = model.input_dim;
  return loss;
}

// ---- training -----------------------------------------------------------

TrainResult train(const Dataset& data, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  const Eigen::Index n = data.rows();
  if (n < 1) throw ConfigError("train: empty dataset");

  Rng rng(cfg.seed);
  TrainResult result;
  result.model = make_vae(data.cols(), cfg.latent_dim, cfg.hidden, rng);
  VaeModel& model = result.model;
  VaeModel grad = model.zeros_like();
  Vector theta = model.flatten();
  auto adam = AdamState<double>::zeros(theta.size(), cfg.lr);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    EpochLoss acc;
    int batch = 0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size, ++batch) {
      const Eigen::Index rows = std::min(cfg.batch_size, n - start);
      Matrix xb(rows, data.cols());
      for (Eigen::Index r = 0; r < rows; ++r)
        xb.row(r) = data.features.row(order[static_cast<std::size_t>(start + r)]);
      Matrix eps(rows, cfg.latent_dim);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index j = 0; j < cfg.latent_dim; ++j) eps(r, j) = rng.normal();

      LossTerms loss;
      try {
        loss = vae_loss(model, xb, eps, cfg.beta, &grad);
        const Vector g = grad.flatten();
        require_finite(g, "gradient");
        adam_step(adam, theta, g);
        require_finite(theta, "parameters");
      } catch (const NumericError& e) {
        throw TrainingError(std::string("training diverged: ") + e.what(), epoch + 1, batch + 1);
      }
      model.assign(theta);

      const auto w = static_cast<double>(rows);
      acc.total += w * loss.total;
      acc.rec += w * loss.rec;
      acc.kl += w * loss.kl;
    }
    const auto nn = static_cast<double>(n);
    result.trace.epochs.push_back({acc.total / nn, acc.rec / nn, acc.kl / nn});
  }
  return result;
}

void LatentStats::validate() const {
  if (z_mean.rows() != z_sigma.rows() || z_mean.cols() != z_sigma.cols())
    throw ShapeError("latent stats: mean " + shape_str(z_mean) + " vs sigma " +
                     shape_str(z_sigma));
  if (!(z_sigma.array() > 0.0).all()) throw NumericError("latent stats: sigma must be positive");
  require_finite(z_mean, "latent stats");
}

LatentStats posterior_stats(const VaeModel& model, const Dataset& data) {
  data.validate();
  auto e = encode(model, data.features);
  return {std::move(e.mu), std::move(e.sigma)};
}

// ---- serialization ------------------------------------------------------

namespace {

void put_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

template <typename Derived>
void put_row(std::string& out, const Eigen::DenseBase<Derived>& row) {
  out += '[';
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) out += ',';
    put_double(out, row.derived()(j));
  }
  out += ']';
}

void put_mlp(std::string& out, const Mlp<double>& net, const char* indent) {
  out += "{\n";
  out += indent;
  out += "  \"layers\": [";
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    out += i ? ",\n" : "\n";
    out += indent;
    out += "    {\"in\": " + std::to_string(l.in_dim()) + ", \"out\": " +
           std::to_string(l.out_dim()) + ", \"activation\": \"" + to_string(l.activation) +
           "\",\n";
    out += indent;
    out += "     \"weight\": [";
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      if (r) out += ',';
      put_row(out, l.weight.row(r));
    }
    out += "],\n";
    out += indent;
    out += "     \"bias\": ";
    put_row(out, l.bias);
    out += '}';
  }
  out += "\n";
  out += indent;
  out += "  ]\n";
  out += indent;
  out += "}";
}

Mlp<double> mlp_from_json(const nlohmann::json& j) {
  Mlp<double> net;
  for (const auto& lj : j.at("layers")) {
    Layer<double> l;
    const auto in = lj.at("in").get<Eigen::Index>();
    const auto out = lj.at("out").get<Eigen::Index>();
    l.activation = activation_from_string(lj.at("activation").get<std::string>());
    const auto& w = lj.at("weight");
    if (static_cast<Eigen::Index>(w.size()) != out)
      throw ShapeError("model file: weight has " + std::to_string(w.size()) + " rows, expected " +
                       std::to_string(out));
    l.weight.resize(out, in);
    for (Eigen::Index r = 0; r < out; ++r) {
      const auto& row = w.at(static_cast<std::size_t>(r));
      if (static_cast<Eigen::Index>(row.size()) != in)
        throw ShapeError("model file: weight row has " + std::to_string(row.size()) +
                         " entries, expected " + std::to_string(in));
      for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
    }
    const auto& b = lj.at("bias");
    if (static_cast<Eigen::Index>(b.size()) != out) throw ShapeError("model file: bias width mismatch");
    l.bias.resize(out);
    for (Eigen::Index c = 0; c < out; ++c) l.bias[c] = b.at(static_cast<std::size_t>(c)).get<double>();
    net.layers.push_back(std::move(l));
  }
  return net;
}

Vector vector_from_json(const nlohmann::json& j) {
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const VaeModel& model, const std::optional<Standardizer>& standardizer) {
  model.validate();
  std::string out = "{\n  \"format\": \"symprobe-vae\",\n  \"version\": 1,\n";
  out += "  \"input_dim\": " + std::to_string(model.input_dim) + ",\n";
  out += "  \"latent_dim\": " + std::to_string(model.latent_dim) + ",\n";
  out += "  \"encoder\": ";
  put_mlp(out, model.encoder, "  ");
  out += ",\n  \"decoder\": ";
  put_mlp(out, model.decoder, "  ");
  if (standardizer) {
    out += ",\n  \"standardizer\": {\"mean\": ";
    put_row(out, standardizer->mean);
    out += ", \"stddev\": ";
    put_row(out, standardizer->stddev);
    out += "}";
  }
  out += "\n}\n";
  return out;
}

LoadedModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("model file: ") + e.what(), 0);
  }
  LoadedModel out;
  try {
    if (j.value("format", std::string()) != "symprobe-vae")
      throw ParseError("model file: missing format tag 'symprobe-vae'", 0);
    out.model.input_dim = j.at("input_dim").get<Eigen::Index>();
    out.model.latent_dim = j.at("latent_dim").get<Eigen::Index>();
    out.model.encoder = mlp_from_json(j.at("encoder"));
    out.model.decoder = mlp_from_json(j.at("decoder"));
    if (j.contains("standardizer")) {
      Standardizer s;
      s.mean = vector_from_json(j["standardizer"].at("mean"));
      s.stddev = vector_from_json(j["standardizer"].at("stddev"));
      if (s.mean.size() != out.model.input_dim || s.stddev.size() != out.model.input_dim)
        throw ShapeError("model file: standardizer width does not match input_dim");
      out.standardizer = std::move(s);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what(), 0);
  }
  out.model.validate();
  return out;
}

void save_model(const std::filesystem::path& path, const VaeModel& model,
                const std::optional<Standardizer>& standardizer) {
  write_file_atomic(path, model_to_json(model, standardizer));
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace symprobe
