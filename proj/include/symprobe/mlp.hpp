#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "symprobe/linalg.hpp"
#include "symprobe/rng.hpp"

namespace symprobe {

enum class Activation { relu, linear };

inline const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "linear") return Activation::linear;
  throw ConfigError("unknown activation '" + s + "'");
}

// One affine map y = x * W^T + b followed by an elementwise activation.
// weight is out x in, bias is 1 x out.
template <typename Scalar>
struct Layer {
  MatrixX<Scalar> weight;
  RowVectorX<Scalar> bias;
  Activation activation = Activation::linear;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }

  friend bool operator==(const Layer& a, const Layer& b) {
    return a.activation == b.activation && a.weight.rows() == b.weight.rows() &&
           a.weight.cols() == b.weight.cols() && a.bias.size() == b.bias.size() &&
           a.weight == b.weight && a.bias == b.bias;
  }
};

template <typename Scalar>
struct Mlp {
  std::vector<Layer<Scalar>> layers;

  Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  Eigen::Index num_params() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }

  // Throws ShapeError unless the layers chain and the last one is linear.
  void validate() const {
    if (layers.empty()) throw ShapeError("mlp: no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.out_dim())
        throw ShapeError("mlp: layer " + std::to_string(i) + " bias width " +
                         std::to_string(l.bias.size()) + " != " + std::to_string(l.out_dim()));
      if (i > 0 && layers[i - 1].out_dim() != l.in_dim())
        throw ShapeError("mlp: layer " + std::to_string(i) + " expects " +
                         std::to_string(l.in_dim()) + " inputs, previous layer emits " +
                         std::to_string(layers[i - 1].out_dim()));
    }
    if (layers.back().activation != Activation::linear)
      throw ShapeError("mlp: final layer must be linear");
  }

  // Parameters in layer order, each weight row-major followed by its bias.
  VectorX<Scalar> flatten() const {
    VectorX<Scalar> theta(num_params());
    Eigen::Index k = 0;
    for (const auto& l : layers) {
      theta.segment(k, l.weight.size()) = l.weight.template reshaped<Eigen::RowMajor>();
      k += l.weight.size();
      theta.segment(k, l.bias.size()) = l.bias.transpose();
      k += l.bias.size();
    }
    return theta;
  }

  void assign(const Eigen::Ref<const VectorX<Scalar>>& theta) {
    if (theta.size() != num_params())
      throw ShapeError("mlp: parameter vector has " + std::to_string(theta.size()) +
                       " entries, model has " + std::to_string(num_params()));
    Eigen::Index k = 0;
    for (auto& l : layers) {
      l.weight.template reshaped<Eigen::RowMajor>() = theta.segment(k, l.weight.size());
      k += l.weight.size();
      l.bias = theta.segment(k, l.bias.size()).transpose();
      k += l.bias.size();
    }
  }

  // Same architecture with every parameter zero.
  Mlp zeros_like() const {
    Mlp out = *this;
    for (auto& l : out.layers) {
      l.weight.setZero();
      l.bias.setZero();
    }
    return out;
  }

  friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Hidden layers use relu, the last layer is linear. Weights are drawn uniformly from
// +-sqrt(6 / (fan_in + fan_out)); biases start at zero.
template <typename Scalar = double>
Mlp<Scalar> make_mlp(std::span<const Eigen::Index> widths, Rng& rng) {
  if (widths.size() < 2) throw ShapeError("make_mlp: need at least input and output widths");
  Mlp<Scalar> net;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const Eigen::Index fan_in = widths[i];
    const Eigen::Index fan_out = widths[i + 1];
    if (fan_in < 1 || fan_out < 1) throw ShapeError("make_mlp: widths must be positive");
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Layer<Scalar> layer;
    layer.weight.resize(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r)
      for (Eigen::Index c = 0; c < fan_in; ++c)
        layer.weight(r, c) = static_cast<Scalar>(rng.uniform(-limit, limit));
    layer.bias = RowVectorX<Scalar>::Zero(fan_out);
    layer.activation = i + 2 == widths.size() ? Activation::linear : Activation::relu;
    net.layers.push_back(std::move(layer));
  }
  return net;
}

template <typename Scalar = double>
Mlp<Scalar> make_mlp(std::initializer_list<Eigen::Index> widths, Rng& rng) {
  return make_mlp<Scalar>(std::span<const Eigen::Index>(widths.begin(), widths.size()), rng);
}

template <typename Scalar>
struct MlpCache {
  std::vector<MatrixX<Scalar>> inputs;  // input fed to each layer
  std::vector<MatrixX<Scalar>> pre;     // affine output of each layer, before activation
};

template <typename Scalar>
struct MlpForward {
  MatrixX<Scalar> output;
  MlpCache<Scalar> cache;
};

template <typename Scalar>
struct MlpGradients {
  Mlp<Scalar> params;  // same shapes as the network
  MatrixX<Scalar> input;
};

template <typename Scalar>
MlpForward<Scalar> mlp_forward(const Mlp<Scalar>& net, const MatrixX<Scalar>& x) {
  if (net.layers.empty()) throw ShapeError("mlp_forward: empty network");
  if (x.cols() != net.input_dim())
    throw ShapeError("mlp_forward: input " + shape_str(x) + " but network expects " +
                     std::to_string(net.input_dim()) + " columns");
  MlpForward<Scalar> fwd;
  fwd.cache.inputs.reserve(net.layers.size());
  fwd.cache.pre.reserve(net.layers.size());
  MatrixX<Scalar> h = x;
  for (const auto& l : net.layers) {
    MatrixX<Scalar> z = h * l.weight.transpose();
    z.rowwise() += l.bias;
    fwd.cache.inputs.push_back(std::move(h));
    h = l.activation == Activation::relu ? MatrixX<Scalar>(z.cwiseMax(Scalar(0))) : z;
    fwd.cache.pre.push_back(std::move(z));
  }
  require_finite(h, "mlp_forward");
  fwd.output = std::move(h);
  return fwd;
}

template <typename Scalar>
MlpGradients<Scalar> mlp_backward(const Mlp<Scalar>& net, const MlpCache<Scalar>& cache,
                                  const MatrixX<Scalar>& grad_output) {
  const std::size_t depth = net.layers.size();
  if (cache.inputs.size() != depth || cache.pre.size() != depth)
    throw ShapeError("mlp_backward: cache has " + std::to_string(cache.pre.size()) +
                     " layers, network has " + std::to_string(depth));
  if (grad_output.rows() != cache.pre.back().rows() ||
      grad_output.cols() != net.output_dim())
    throw ShapeError("mlp_backward: grad_output " + shape_str(grad_output) + ", expected " +
                     shape_str(cache.pre.back()));

  MlpGradients<Scalar> grads;
  grads.params.layers.resize(depth);
  MatrixX<Scalar> g = grad_output;
  for (std::size_t i = depth; i-- > 0;) {
    const auto& l = net.layers[i];
    const auto& z = cache.pre[i];
    const auto& in = cache.inputs[i];
    if (z.cols() != l.out_dim() || in.cols() != l.in_dim())
      throw ShapeError("mlp_backward: cache does not match layer " + std::to_string(i));
    if (l.activation == Activation::relu) g = (z.array() > Scalar(0)).select(g, Scalar(0));
    auto& out = grads.params.layers[i];
    out.activation = l.activation;
    out.weight = g.transpose() * in;
    out.bias = g.colwise().sum();
    g = g * l.weight;
  }
  grads.input = std::move(g);
  return grads;
}

}  // namespace symprobe
