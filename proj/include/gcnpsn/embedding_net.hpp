#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "gcnpsn/skeleton_graph.hpp"

namespace gcnpsn {

inline constexpr int kMlpHidden1 = 40;
inline constexpr int kMlpHidden2 = 50;
inline constexpr int kEmbeddingDim = 50;
inline constexpr int kDefaultGcnHidden = 2;

using Embedding = Eigen::Matrix<double, kEmbeddingDim, 1>;

// Which feature extractor sits in front of the MLP head.
enum class Variant { kGcn, kMlp };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);

enum class Activation { kRelu, kIdentity };

std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

// Row-vector convention: y = x * w + b, w is fan_in x fan_out.
struct DenseLayer {
  Eigen::MatrixXd w;
  Eigen::VectorXd b;
};

// Every trainable tensor. Gradients and Adam moments reuse the same layout.
struct Parameters {
  std::array<Eigen::MatrixXd, 2> gcn_w;  // 2 x h, h x 2; no bias
  std::array<DenseLayer, 3> mlp;         // 30->40, 40->50, 50->50

  static Parameters zeros(int gcn_hidden);

  std::size_t size() const;

  // Visits every scalar in a fixed order: gcn_w[0], gcn_w[1], then each MLP
  // layer's w followed by its b, matrices in row-major order.
  template <typename F>
  void for_each(F&& f);
  template <typename F>
  void for_each(F&& f) const;

  Parameters& operator+=(const Parameters& o);
  Parameters& operator*=(double s);
  void set_zero();
  bool all_finite() const;
};

struct ArchMeta {
  int gcn_hidden = kDefaultGcnHidden;
  Variant variant = Variant::kGcn;
  std::array<Activation, 2> gcn_activations{Activation::kRelu, Activation::kRelu};
  std::array<Activation, 3> mlp_activations{Activation::kRelu, Activation::kRelu,
                                            Activation::kIdentity};
  std::string flatten_order = "node_major";
  std::uint64_t seed = 0;

  friend bool operator==(const ArchMeta&, const ArchMeta&) = default;
};

struct EmbeddingModel {
  ArchMeta arch;
  Parameters params;

  // Throws Error unless every tensor has the shape implied by arch.
  void validate_shapes() const;
  // validate_shapes() plus a finiteness check on every entry.
  void validate() const;
};

// Activations recorded by a forward pass. For the MLP-only variant the GCN
// fields are left empty.
struct ForwardCache {
  NodeFeatures x = NodeFeatures::Zero();
  Eigen::MatrixXd ax;      // A X
  Eigen::MatrixXd z0;      // A X W0
  Eigen::MatrixXd h1;      // act(z0)
  Eigen::MatrixXd ah1;     // A h1
  Eigen::MatrixXd z1;      // A h1 W1
  Eigen::MatrixXd h2;      // act(z1), 15 x 2
  Eigen::VectorXd flat;    // 30
  std::array<Eigen::VectorXd, 3> pre;   // MLP pre-activations
  std::array<Eigen::VectorXd, 3> post;  // MLP post-activations
};

struct ForwardResult {
  Embedding embedding;
  ForwardCache cache;
};

// Glorot-uniform weights, zero biases, Rng(seed). Throws on h == 0.
EmbeddingModel init_model(int gcn_hidden, std::uint64_t seed,
                          Variant variant = Variant::kGcn);

EmbeddingModel zero_model(int gcn_hidden, Variant variant = Variant::kGcn);

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation a);

// act(a_norm * h_in * w). Throws Error on any shape mismatch.
Eigen::MatrixXd gcn_layer_forward(const Eigen::MatrixXd& h_in,
                                  const Eigen::MatrixXd& a_norm,
                                  const Eigen::MatrixXd& w,
                                  Activation activation);

ForwardResult forward(const EmbeddingModel& model, const NormalizedPose& np,
                      const SkeletonTopology& topo);

ForwardResult forward_mlp_baseline(const EmbeddingModel& model,
                                   const NormalizedPose& np);

// Dispatches on variant.
ForwardResult embed(const EmbeddingModel& model, const NormalizedPose& np,
                    const SkeletonTopology& topo, Variant variant);

// Node-major flatten: [x0*, y0*, x1*, y1*, ...].
Eigen::VectorXd flatten_node_major(const Eigen::MatrixXd& m);

// JSON checkpoint (see README for the schema).
std::string save_checkpoint(const EmbeddingModel& model);
EmbeddingModel load_checkpoint(std::string_view bytes);

// -- template definitions ---------------------------------------------------

template <typename F>
void Parameters::for_each(F&& f) {
  auto visit = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f(m(r, c));
  };
  visit(gcn_w[0]);
  visit(gcn_w[1]);
  for (auto& layer : mlp) {
    visit(layer.w);
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) f(layer.b(i));
  }
}

template <typename F>
void Parameters::for_each(F&& f) const {
  const_cast<Parameters*>(this)->for_each(
      [&](double& v) { f(static_cast<const double&>(v)); });
}

}  // namespace gcnpsn
