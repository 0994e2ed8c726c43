#include "gcnpsn/contrastive_trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gcnpsn/csv.hpp"
#include "gcnpsn/error.hpp"
#include "gcnpsn/parallel_kernels.hpp"
#include "gcnpsn/rng.hpp"

namespace gcnpsn {

namespace {

constexpr double kNormFloorSq = kNormFloor * kNormFloor;

Eigen::MatrixXd activation_mask(const Eigen::MatrixXd& pre, Activation a) {
  if (a == Activation::kIdentity) return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
  return (pre.array() > 0.0).cast<double>().matrix();
}

// Accumulates dLoss/dparams for one twin given dLoss/dembedding.
void backward(const EmbeddingModel& model, const SkeletonTopology& topo,
              const ForwardCache& c, const Embedding& d_embedding,
              Variant variant, Parameters& grads) {
  const auto& arch = model.arch;
  const auto& mlp = model.params.mlp;
  Eigen::VectorXd d_post = d_embedding;
  for (int l = static_cast<int>(mlp.size()) - 1; l >= 0; --l) {
    const Eigen::VectorXd d_pre =
        d_post.cwiseProduct(activation_mask(c.pre[l], arch.mlp_activations[l]));
    const Eigen::VectorXd& in = l == 0 ? c.flat : c.post[l - 1];
    grads.mlp[l].w.noalias() += in * d_pre.transpose();
    grads.mlp[l].b += d_pre;
    d_post = mlp[l].w * d_pre;
  }
  if (variant == Variant::kMlp) return;

  // d_post is now dLoss/dflat; undo the node-major flatten.
  Eigen::MatrixXd d_h2(kNumJoints, kCoordDim);
  for (int i = 0; i < kNumJoints; ++i)
    for (int k = 0; k < kCoordDim; ++k) d_h2(i, k) = d_post(i * kCoordDim + k);

  const auto& a = topo.adjacency_norm;
  const auto& w = model.params.gcn_w;
  const Eigen::MatrixXd d_z1 =
      d_h2.cwiseProduct(activation_mask(c.z1, arch.gcn_activations[1]));
  grads.gcn_w[1].noalias() += c.ah1.transpose() * d_z1;
  const Eigen::MatrixXd d_h1 = a.transpose() * (d_z1 * w[1].transpose());
  const Eigen::MatrixXd d_z0 =
      d_h1.cwiseProduct(activation_mask(c.z0, arch.gcn_activations[0]));
  grads.gcn_w[0].noalias() += c.ax.transpose() * d_z0;
}

struct TwinForward {
  ForwardResult a;
  ForwardResult b;
  double distance = 0.0;
};

TwinForward twin_forward(const EmbeddingModel& model, const SkeletonTopology& topo,
                         const PosePair& pair, Variant variant) {
  TwinForward tf;
  tf.a = embed(model, normalize_pose(pair.pose_a), topo, variant);
  tf.b = embed(model, normalize_pose(pair.pose_b), topo, variant);
  tf.distance = cosine_distance(tf.a.embedding, tf.b.embedding);
  return tf;
}

// d(cos)/d(e1) with the clamped norm treated as a constant.
Embedding cosine_similarity_grad(const Embedding& e1, const Embedding& e2) {
  const double s1 = e1.squaredNorm();
  const double s2 = e2.squaredNorm();
  const double s1c = std::max(s1, kNormFloorSq);
  const double s2c = std::max(s2, kNormFloorSq);
  const double inv = 1.0 / std::sqrt(s1c * s2c);
  const double cos = e1.dot(e2) * inv;
  Embedding g = e2 * inv;
  if (s1 > kNormFloorSq) g -= (cos / s1c) * e1;
  return g;
}

// Loop-based forward pass in extended precision over a flat parameter vector
// laid out in Parameters::for_each order. Used only as the finite-difference
// reference: in double, 1 - cos loses enough digits that central differences
// cannot resolve gradients much below 1e-7.
using Wide = long double;

struct WideNet {
  WideNet(const EmbeddingModel& model, const SkeletonTopology& topo, Variant v)
      : arch(model.arch), variant(v) {
    model.params.for_each([&](const double& x) { params.push_back(x); });
    for (int i = 0; i < kNumJoints; ++i)
      for (int j = 0; j < kNumJoints; ++j) adj[i][j] = topo.adjacency_norm(i, j);
  }

  static Wide act(Wide z, Activation a) {
    return a == Activation::kRelu && z < 0 ? Wide{0} : z;
  }

  // out[i][c] = act(sum_j A[i][j] * sum_k in[j][k] * W[k][c]), W row-major at
  // params[offset].
  std::vector<Wide> graph_conv(const std::vector<Wide>& in, int in_w, int out_w,
                               std::size_t offset, Activation a) const {
    std::vector<Wide> agg(kNumJoints * in_w, 0);
    for (int i = 0; i < kNumJoints; ++i)
      for (int j = 0; j < kNumJoints; ++j)
        for (int k = 0; k < in_w; ++k) agg[i * in_w + k] += adj[i][j] * in[j * in_w + k];
    std::vector<Wide> out(kNumJoints * out_w, 0);
    for (int i = 0; i < kNumJoints; ++i)
      for (int c = 0; c < out_w; ++c) {
        Wide z = 0;
        for (int k = 0; k < in_w; ++k) z += agg[i * in_w + k] * params[offset + k * out_w + c];
        out[i * out_w + c] = act(z, a);
      }
    return out;
  }

  std::vector<Wide> embed(const NodeFeatures& x) const {
    const int h = arch.gcn_hidden;
    std::vector<Wide> flat(kFlatDim);
    for (int i = 0; i < kNumJoints; ++i)
      for (int k = 0; k < kCoordDim; ++k) flat[i * kCoordDim + k] = x(i, k);
    if (variant == Variant::kGcn) {
      const auto h1 = graph_conv(flat, kCoordDim, h, 0, arch.gcn_activations[0]);
      flat = graph_conv(h1, h, kCoordDim, static_cast<std::size_t>(kCoordDim * h),
                        arch.gcn_activations[1]);
    }
    std::size_t offset = static_cast<std::size_t>(4 * h);
    const std::array<int, 4> widths = {kFlatDim, kMlpHidden1, kMlpHidden2, kEmbeddingDim};
    std::vector<Wide> cur = flat;
    for (int l = 0; l < 3; ++l) {
      const int in_w = widths[l];
      const int out_w = widths[l + 1];
      const std::size_t bias = offset + static_cast<std::size_t>(in_w * out_w);
      std::vector<Wide> next(out_w);
      for (int c = 0; c < out_w; ++c) {
        Wide z = params[bias + c];
        for (int k = 0; k < in_w; ++k) z += cur[k] * params[offset + k * out_w + c];
        next[c] = act(z, arch.mlp_activations[l]);
      }
      offset = bias + static_cast<std::size_t>(out_w);
      cur = std::move(next);
    }
    return cur;
  }

  Wide loss(const NodeFeatures& xa, const NodeFeatures& xb, int y, double margin) const {
    const auto ea = embed(xa);
    const auto eb = embed(xb);
    Wide dot = 0, sa = 0, sb = 0;
    for (std::size_t i = 0; i < ea.size(); ++i) {
      dot += ea[i] * eb[i];
      sa += ea[i] * ea[i];
      sb += eb[i] * eb[i];
    }
    const Wide floor = static_cast<Wide>(kNormFloorSq);
    const Wide d = 1 - dot / std::sqrt(std::max(sa, floor) * std::max(sb, floor));
    if (y == 1) return d * d / 2;
    const Wide hinge = std::max(Wide{0}, static_cast<Wide>(margin) - d);
    return hinge * hinge / 2;
  }

  ArchMeta arch;
  Variant variant;
  std::vector<Wide> params;
  std::array<std::array<Wide, kNumJoints>, kNumJoints> adj{};
};

}  // namespace

void PosePair::validate() const {
  if (label_y != 0 && label_y != 1) throw Error("pair: label must be 0 or 1");
  if (magnitude && !(*magnitude >= 0.0 && std::isfinite(*magnitude))) {
    throw Error("pair: magnitude must be finite and >= 0");
  }
  validate_pose(pose_a);
  validate_pose(pose_b);
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error("train: learning rate must be > 0");
  if (batch_size < 1) throw Error("train: batch size must be >= 1");
  if (epochs < 1) throw Error("train: epochs must be >= 1");
  if (!(margin > 0.0 && margin <= 2.0)) throw Error("train: margin must lie in (0, 2]");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw Error("train: Adam betas must lie in (0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw Error("train: Adam epsilon must be > 0");
}

AdamState AdamState::for_model(const EmbeddingModel& model) {
  AdamState s;
  s.m = Parameters::zeros(model.arch.gcn_hidden);
  s.v = Parameters::zeros(model.arch.gcn_hidden);
  return s;
}

std::string TrainHistory::to_csv() const {
  std::string out = "epoch,mean_loss,mean_pos_dist,mean_neg_dist\n";
  for (std::size_t e = 0; e < mean_loss.size(); ++e) {
    out += std::to_string(e + 1) + "," + format_double(mean_loss[e]) + "," +
           format_optional(mean_pos_dist[e]) + "," + format_optional(mean_neg_dist[e]) + "\n";
  }
  return out;
}

double cosine_distance(const Embedding& e1, const Embedding& e2) {
  if (!e1.allFinite() || !e2.allFinite()) {
    throw Error("cosine_distance: non-finite embedding");
  }
  // sqrt(s1 * s2) rather than |e1| * |e2| so that e1 == e2 gives exactly 0.
  const double s1 = std::max(e1.squaredNorm(), kNormFloorSq);
  const double s2 = std::max(e2.squaredNorm(), kNormFloorSq);
  return 1.0 - e1.dot(e2) / std::sqrt(s1 * s2);
}

double contrastive_loss(double d_c, int y, double margin) {
  if (y == 1) return 0.5 * d_c * d_c;
  const double hinge = std::max(0.0, margin - d_c);
  return 0.5 * hinge * hinge;
}

double contrastive_loss_grad(double d_c, int y, double margin) {
  if (y == 1) return d_c;
  return d_c < margin ? -(margin - d_c) : 0.0;
}

PairGradient pair_backward(const EmbeddingModel& model,
                           const SkeletonTopology& topo, const PosePair& pair,
                           const TrainConfig& cfg, Variant variant) {
  const TwinForward tf = twin_forward(model, topo, pair, variant);
  PairGradient out;
  out.distance = tf.distance;
  out.loss = contrastive_loss(tf.distance, pair.label_y, cfg.margin);
  out.grads = Parameters::zeros(model.arch.gcn_hidden);

  const double d_loss = contrastive_loss_grad(tf.distance, pair.label_y, cfg.margin);
  if (d_loss == 0.0) return out;

  // d_c = 1 - cos, so dLoss/de = -dLoss/dd_c * dcos/de.
  const Embedding& ea = tf.a.embedding;
  const Embedding& eb = tf.b.embedding;
  const Embedding d_ea = -d_loss * cosine_similarity_grad(ea, eb);
  const Embedding d_eb = -d_loss * cosine_similarity_grad(eb, ea);
  backward(model, topo, tf.a.cache, d_ea, variant, out.grads);
  backward(model, topo, tf.b.cache, d_eb, variant, out.grads);
  return out;
}

double pair_loss(const EmbeddingModel& model, const SkeletonTopology& topo,
                 const PosePair& pair, const TrainConfig& cfg, Variant variant) {
  return contrastive_loss(twin_forward(model, topo, pair, variant).distance,
                          pair.label_y, cfg.margin);
}

void adam_step(EmbeddingModel& model, const Parameters& grads, AdamState& state,
               const TrainConfig& cfg) {
  if (grads.size() != model.params.size() || state.m.size() != model.params.size() ||
      state.v.size() != model.params.size()) {
    throw Error("adam_step: parameter/gradient/state size mismatch");
  }
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double b1 = cfg.adam_beta1;
  const double b2 = cfg.adam_beta2;
  const double corr1 = 1.0 - std::pow(b1, t);
  const double corr2 = 1.0 - std::pow(b2, t);

  std::vector<const double*> g;
  g.reserve(grads.size());
  grads.for_each([&](const double& v) { g.push_back(&v); });
  std::vector<double*> m;
  std::vector<double*> v;
  m.reserve(g.size());
  v.reserve(g.size());
  state.m.for_each([&](double& x) { m.push_back(&x); });
  state.v.for_each([&](double& x) { v.push_back(&x); });

  std::size_t k = 0;
  model.params.for_each([&](double& w) {
    const double gk = *g[k];
    double& mk = *m[k];
    double& vk = *v[k];
    mk = b1 * mk + (1.0 - b1) * gk;
    vk = b2 * vk + (1.0 - b2) * gk * gk;
    const double m_hat = mk / corr1;
    const double v_hat = vk / corr2;
    w -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
    ++k;
  });
}

TrainResult train(EmbeddingModel model, const SkeletonTopology& topo,
                  std::span<const PosePair> pairs, const TrainConfig& cfg,
                  Variant variant) {
  if (pairs.empty()) throw Error("train: empty pair list");
  cfg.validate();
  model.validate();
  for (const auto& p : pairs) p.validate();

  Rng rng(cfg.seed);
  AdamState state = AdamState::for_model(model);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    double pos_sum = 0.0;
    double neg_sum = 0.0;
    std::size_t pos_n = 0;
    std::size_t neg_n = 0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      BatchGradient bg =
          cfg.parallel ? batch_gradient_parallel(model, topo, pairs, idx, cfg, variant)
                       : batch_gradient_serial(model, topo, pairs, idx, cfg, variant);
      for (std::size_t i = 0; i < len; ++i) {
        loss_sum += bg.losses[i];
        if (pairs[idx[i]].label_y == 1) {
          pos_sum += bg.distances[i];
          ++pos_n;
        } else {
          neg_sum += bg.distances[i];
          ++neg_n;
        }
      }
      if (cfg.loss_reduction == LossReduction::kMean) {
        bg.grad_sum *= 1.0 / static_cast<double>(len);
      }
      adam_step(model, bg.grad_sum, state, cfg);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    result.history.mean_loss.push_back(loss_sum / static_cast<double>(pairs.size()));
    result.history.mean_pos_dist.push_back(pos_n ? pos_sum / static_cast<double>(pos_n) : nan);
    result.history.mean_neg_dist.push_back(neg_n ? neg_sum / static_cast<double>(neg_n) : nan);
  }
  result.model = std::move(model);
  return result;
}

double gradient_check(const EmbeddingModel& model, const SkeletonTopology& topo,
                      const PosePair& pair, const TrainConfig& cfg,
                      Variant variant, double fd_epsilon) {
  if (!(fd_epsilon > 0.0)) throw Error("gradient_check: epsilon must be > 0");
  const PairGradient analytic = pair_backward(model, topo, pair, cfg, variant);
  std::vector<double> g;
  g.reserve(analytic.grads.size());
  analytic.grads.for_each([&](const double& v) { g.push_back(v); });

  WideNet net(model, topo, variant);
  const NodeFeatures xa = normalize_pose(pair.pose_a).features;
  const NodeFeatures xb = normalize_pose(pair.pose_b).features;
  const Wide eps = fd_epsilon;
  double worst = 0.0;
  for (std::size_t k = 0; k < net.params.size(); ++k) {
    const Wide orig = net.params[k];
    net.params[k] = orig + eps;
    const Wide up = net.loss(xa, xb, pair.label_y, cfg.margin);
    net.params[k] = orig - eps;
    const Wide down = net.loss(xa, xb, pair.label_y, cfg.margin);
    net.params[k] = orig;
    const auto numeric = static_cast<double>((up - down) / (2 * eps));
    const double denom = std::max({std::abs(g[k]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(g[k] - numeric) / denom);
  }
  return worst;
}

namespace {

bool near_relu_kink(const EmbeddingModel& model, const SkeletonTopology& topo,
                    const Pose& pose, Variant variant) {
  const NormalizedPose np = normalize_pose(pose);
  const ForwardCache c = variant == Variant::kGcn ? forward(model, np, topo).cache
                                                  : forward_mlp_baseline(model, np).cache;
  auto near = [](const auto& z) { return (z.array().abs() < 1e-3).any(); };
  bool kink = near(c.pre[0]) || near(c.pre[1]);
  if (variant == Variant::kGcn) kink = kink || near(c.z0) || near(c.z1);
  return kink;
}

Pose random_frame_pose(Rng& rng) {
  Pose p;
  for (auto& kp : p.keypoints) kp = {rng.uniform(0.0, 640.0), rng.uniform(0.0, 480.0)};
  return p;
}

}  // namespace

std::vector<GradCheckCase> gradient_check_cases(int count, std::uint64_t seed,
                                                std::optional<Variant> variant) {
  if (count < 0) throw Error("gradient_check_cases: count must be >= 0");
  const SkeletonTopology& topo = build_skeleton_topology();
  Rng rng(seed);
  std::vector<GradCheckCase> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    GradCheckCase c;
    c.variant = variant.value_or(i % 2 == 0 ? Variant::kGcn : Variant::kMlp);
    const int y = (i / 2) % 2;
    do {
      c.model = init_model(kDefaultGcnHidden, rng.next_u64(), c.variant);
      c.pair = {random_frame_pose(rng), random_frame_pose(rng), y, std::nullopt};
    } while (near_relu_kink(c.model, topo, c.pair.pose_a, c.variant) ||
             near_relu_kink(c.model, topo, c.pair.pose_b, c.variant));
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace gcnpsn
