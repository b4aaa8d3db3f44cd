#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "symprobe/dataset.hpp"
#include "symprobe/linalg.hpp"
#include "symprobe/mlp.hpp"
#include "symprobe/rng.hpp"

namespace symprobe {

inline constexpr double kLogVarClamp = 10.0;

// Encoder emits 2*latent_dim columns: [mu | log sigma^2]. Decoder maps latent_dim -> input_dim.
struct VaeModel {
  Mlp<double> encoder;
  Mlp<double> decoder;
  Eigen::Index latent_dim = 0;
  Eigen::Index input_dim = 0;

  void validate() const;
  Eigen::Index num_params() const { return encoder.num_params() + decoder.num_params(); }
  Vector flatten() const;
  void assign(const Eigen::Ref<const Vector>& theta);
  VaeModel zeros_like() const;
  friend bool operator==(const VaeModel&, const VaeModel&) = default;
};

// input -> hidden... -> 2*latent for the encoder and the mirror image for the decoder.
VaeModel make_vae(Eigen::Index input_dim, Eigen::Index latent_dim,
                  const std::vector<Eigen::Index>& hidden, Rng& rng);

struct TrainConfig {
  Eigen::Index latent_dim = 4;
  double beta = 0.1;
  double lr = 1e-3;
  int epochs = 30;
  Eigen::Index batch_size = 128;
  std::uint64_t seed = 0;
  std::vector<Eigen::Index> hidden = {64, 64};

  void validate() const;
};

struct EpochLoss {
  double total = 0.0;
  double rec = 0.0;
  double kl = 0.0;
};

struct TrainTrace {
  std::vector<EpochLoss> epochs;
};

struct Encoding {
  Matrix mu;
  Matrix sigma;
  Matrix logvar;  // clamped to [-kLogVarClamp, kLogVarClamp]
};

Encoding encode(const VaeModel& model, const Matrix& x);
Matrix decode(const VaeModel& model, const Matrix& z);
Matrix reparameterize(const Matrix& mu, const Matrix& sigma, Rng& rng);

// (1/N) sum_i ||x_i - x_hat_i||^2
double rec_loss(const Matrix& x, const Matrix& x_hat);
// -(1/2N) sum_i sum_j (1 + log sigma^2 - mu^2 - sigma^2)
double kl_loss(const Matrix& mu, const Matrix& sigma);

struct LossTerms {
  double total = 0.0;
  double rec = 0.0;
  double kl = 0.0;
};

// Loss rec + beta * kl with the reparameterization noise eps held fixed
// (z = mu + sigma * eps). Fills grad, shaped like model, when non-null.
LossTerms vae_loss(const VaeModel& model, const Matrix& x, const Matrix& eps, double beta,
                   VaeModel* grad = nullptr);

struct TrainResult {
  VaeModel model;
  TrainTrace trace;
};

// Mini-batch Adam over shuffled data; deterministic given (data, cfg).
// Expects standardized features.
TrainResult train(const Dataset& data, const TrainConfig& cfg);

// Posterior means and widths per event and latent.
struct LatentStats {
  Matrix z_mean;
  Matrix z_sigma;
  void validate() const;
};

LatentStats posterior_stats(const VaeModel& model, const Dataset& data);

// ---- serialization ------------------------------------------------------

// JSON text with every weight printed to 17 significant digits; loads back bit-exact.
std::string model_to_json(const VaeModel& model,
                          const std::optional<Standardizer>& standardizer = std::nullopt);

struct LoadedModel {
  VaeModel model;
  std::optional<Standardizer> standardizer;
};

LoadedModel model_from_json(const std::string& text);
void save_model(const std::filesystem::path& path, const VaeModel& model,
                const std::optional<Standardizer>& standardizer = std::nullopt);
LoadedModel load_model(const std::filesystem::path& path);

}  // namespace symprobe
