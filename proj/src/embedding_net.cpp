#include "gcnpsn/embedding_net.hpp"

#include <cmath>
#include <string>

#include "gcnpsn/error.hpp"
#include "gcnpsn/rng.hpp"

namespace gcnpsn {

namespace {

constexpr std::array<int, 4> kMlpWidths = {kFlatDim, kMlpHidden1, kMlpHidden2,
                                           kEmbeddingDim};

std::string shape_str(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_shape(const Eigen::MatrixXd& m, Eigen::Index rows,
                   Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(what + ": expected " + std::to_string(rows) + "x" +
                std::to_string(cols) + ", got " + shape_str(m));
  }
}

void glorot_fill(Eigen::MatrixXd& w, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index r = 0; r < w.rows(); ++r)
    for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
}

Eigen::VectorXd dense_forward(const DenseLayer& layer, const Eigen::VectorXd& x) {
  return layer.w.transpose() * x + layer.b;
}

void run_mlp(const EmbeddingModel& model, ForwardCache& cache) {
  const Eigen::VectorXd* in = &cache.flat;
  for (std::size_t l = 0; l < model.params.mlp.size(); ++l) {
    cache.pre[l] = dense_forward(model.params.mlp[l], *in);
    cache.post[l] = apply_activation(cache.pre[l], model.arch.mlp_activations[l]);
    in = &cache.post[l];
  }
}

}  // namespace

std::string_view variant_name(Variant v) {
  return v == Variant::kGcn ? "gcn" : "mlp";
}

Variant parse_variant(std::string_view name) {
  if (name == "gcn") return Variant::kGcn;
  if (name == "mlp") return Variant::kMlp;
  throw Error("unknown variant '" + std::string(name) + "' (expected gcn|mlp)");
}

std::string_view activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw Error("unknown activation '" + std::string(name) + "'");
}

Parameters Parameters::zeros(int gcn_hidden) {
  if (gcn_hidden < 1) throw Error("gcn hidden width must be >= 1");
  Parameters p;
  p.gcn_w[0] = Eigen::MatrixXd::Zero(kCoordDim, gcn_hidden);
  p.gcn_w[1] = Eigen::MatrixXd::Zero(gcn_hidden, kCoordDim);
  const auto& widths = kMlpWidths;
  for (std::size_t l = 0; l < p.mlp.size(); ++l) {
    p.mlp[l].w = Eigen::MatrixXd::Zero(widths[l], widths[l + 1]);
    p.mlp[l].b = Eigen::VectorXd::Zero(widths[l + 1]);
  }
  return p;
}

std::size_t Parameters::size() const {
  std::size_t n = gcn_w[0].size() + gcn_w[1].size();
  for (const auto& layer : mlp) n += layer.w.size() + layer.b.size();
  return n;
}

Parameters& Parameters::operator+=(const Parameters& o) {
  gcn_w[0] += o.gcn_w[0];
  gcn_w[1] += o.gcn_w[1];
  for (std::size_t l = 0; l < mlp.size(); ++l) {
    mlp[l].w += o.mlp[l].w;
    mlp[l].b += o.mlp[l].b;
  }
  return *this;
}

Parameters& Parameters::operator*=(double s) {
  for_each([s](double& v) { v *= s; });
  return *this;
}

void Parameters::set_zero() {
  for_each([](double& v) { v = 0.0; });
}

bool Parameters::all_finite() const {
  bool ok = true;
  for_each([&ok](const double& v) { ok = ok && std::isfinite(v); });
  return ok;
}

void EmbeddingModel::validate_shapes() const {
  const int h = arch.gcn_hidden;
  if (h < 1) throw Error("model: gcn_hidden must be >= 1");
  if (arch.flatten_order != "node_major") {
    throw Error("model: unsupported flatten order '" + arch.flatten_order + "'");
  }
  require_shape(params.gcn_w[0], kCoordDim, h, "gcn_w0");
  require_shape(params.gcn_w[1], h, kCoordDim, "gcn_w1");
  const auto& widths = kMlpWidths;
  for (std::size_t l = 0; l < params.mlp.size(); ++l) {
    const std::string name = "mlp[" + std::to_string(l) + "]";
    require_shape(params.mlp[l].w, widths[l], widths[l + 1], name + ".w");
    if (params.mlp[l].b.size() != widths[l + 1]) {
      throw Error(name + ".b: expected length " + std::to_string(widths[l + 1]) +
                  ", got " + std::to_string(params.mlp[l].b.size()));
    }
  }
}

void EmbeddingModel::validate() const {
  validate_shapes();
  if (!params.all_finite()) throw Error("model: non-finite parameter");
}

EmbeddingModel init_model(int gcn_hidden, std::uint64_t seed, Variant variant) {
  if (gcn_hidden < 1) throw Error("init_model: gcn hidden width must be >= 1");
  EmbeddingModel model;
  model.arch.gcn_hidden = gcn_hidden;
  model.arch.variant = variant;
  model.arch.seed = seed;
  model.params = Parameters::zeros(gcn_hidden);
  Rng rng(seed);
  // The GCN weights are always drawn, so both variants built from one seed
  // share an identical MLP head.
  glorot_fill(model.params.gcn_w[0], rng);
  glorot_fill(model.params.gcn_w[1], rng);
  for (auto& layer : model.params.mlp) glorot_fill(layer.w, rng);
  return model;
}

EmbeddingModel zero_model(int gcn_hidden, Variant variant) {
  EmbeddingModel model;
  model.arch.gcn_hidden = gcn_hidden;
  model.arch.variant = variant;
  model.params = Parameters::zeros(gcn_hidden);
  return model;
}

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation a) {
  if (a == Activation::kIdentity) return z;
  return z.cwiseMax(0.0);
}

Eigen::MatrixXd gcn_layer_forward(const Eigen::MatrixXd& h_in,
                                  const Eigen::MatrixXd& a_norm,
                                  const Eigen::MatrixXd& w,
                                  Activation activation) {
  if (a_norm.rows() != a_norm.cols() || a_norm.cols() != h_in.rows()) {
    throw Error("gcn_layer_forward: adjacency " + shape_str(a_norm) +
                " does not match features " + shape_str(h_in));
  }
  if (w.rows() != h_in.cols()) {
    throw Error("gcn_layer_forward: weight " + shape_str(w) +
                " does not match features " + shape_str(h_in));
  }
  return apply_activation((a_norm * h_in) * w, activation);
}

Eigen::VectorXd flatten_node_major(const Eigen::MatrixXd& m) {
  Eigen::VectorXd out(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(r * m.cols() + c) = m(r, c);
  return out;
}

ForwardResult forward(const EmbeddingModel& model, const NormalizedPose& np,
                      const SkeletonTopology& topo) {
  model.validate_shapes();
  ForwardResult res;
  auto& c = res.cache;
  const auto& a = topo.adjacency_norm;
  const auto& w = model.params.gcn_w;
  c.x = np.features;
  c.ax = a * c.x;
  c.z0 = c.ax * w[0];
  c.h1 = apply_activation(c.z0, model.arch.gcn_activations[0]);
  c.ah1 = a * c.h1;
  c.z1 = c.ah1 * w[1];
  c.h2 = apply_activation(c.z1, model.arch.gcn_activations[1]);
  c.flat = flatten_node_major(c.h2);
  run_mlp(model, c);
  res.embedding = c.post[2];
  return res;
}

ForwardResult forward_mlp_baseline(const EmbeddingModel& model,
                                   const NormalizedPose& np) {
  model.validate_shapes();
  ForwardResult res;
  auto& c = res.cache;
  c.x = np.features;
  c.flat = flatten_node_major(c.x);
  run_mlp(model, c);
  res.embedding = c.post[2];
  return res;
}

ForwardResult embed(const EmbeddingModel& model, const NormalizedPose& np,
                    const SkeletonTopology& topo, Variant variant) {
  return variant == Variant::kGcn ? forward(model, np, topo)
                                  : forward_mlp_baseline(model, np);
}

}  // namespace gcnpsn
