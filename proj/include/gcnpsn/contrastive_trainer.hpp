#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcnpsn/embedding_net.hpp"
#include "gcnpsn/skeleton_graph.hpp"

namespace gcnpsn {

struct PosePair {
  Pose pose_a;
  Pose pose_b;
  int label_y = 1;  // 1 similar, 0 dissimilar
  std::optional<double> magnitude;

  void validate() const;
};

enum class LossReduction { kMean, kSum };

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 64;
  int epochs = 50;
  double margin = 1.35;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 0;
  LossReduction loss_reduction = LossReduction::kMean;
  // Per-pair work inside a batch runs on OpenMP threads; the reduction is
  // index-ordered either way, so this never changes results.
  bool parallel = true;

  void validate() const;
};

struct AdamState {
  Parameters m;
  Parameters v;
  std::uint64_t t = 0;

  static AdamState for_model(const EmbeddingModel& model);
};

struct TrainHistory {
  std::vector<double> mean_loss;
  std::vector<double> mean_pos_dist;  // NaN when an epoch saw no positives
  std::vector<double> mean_neg_dist;  // NaN when an epoch saw no negatives

  std::string to_csv() const;
  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

// Norms below this are clamped, and the clamped norm is treated as constant
// when differentiating.
inline constexpr double kNormFloor = 1e-12;

double cosine_distance(const Embedding& e1, const Embedding& e2);

// 0.5*y*d^2 + 0.5*(1-y)*max(0, m-d)^2
double contrastive_loss(double d_c, int y, double margin);

// dLoss/dd_c, with the hinge subgradient at d_c == m taken as 0.
double contrastive_loss_grad(double d_c, int y, double margin);

struct PairGradient {
  double loss = 0.0;
  double distance = 0.0;
  Parameters grads;
};

// Loss and exact gradient for one pair through the weight-shared twins.
PairGradient pair_backward(const EmbeddingModel& model,
                           const SkeletonTopology& topo, const PosePair& pair,
                           const TrainConfig& cfg, Variant variant);

// Loss only, no gradient. Shares the forward path with pair_backward.
double pair_loss(const EmbeddingModel& model, const SkeletonTopology& topo,
                 const PosePair& pair, const TrainConfig& cfg, Variant variant);

void adam_step(EmbeddingModel& model, const Parameters& grads, AdamState& state,
               const TrainConfig& cfg);

struct TrainResult {
  EmbeddingModel model;
  TrainHistory history;
};

// Throws Error on an empty pair list.
TrainResult train(EmbeddingModel model, const SkeletonTopology& topo,
                  std::span<const PosePair> pairs, const TrainConfig& cfg,
                  Variant variant);

// Max over all parameters of |analytic - numeric| / max(|analytic|,
// |numeric|, 1e-8), numeric being central differences with step fd_epsilon.
double gradient_check(const EmbeddingModel& model, const SkeletonTopology& topo,
                      const PosePair& pair, const TrainConfig& cfg,
                      Variant variant, double fd_epsilon);

struct GradCheckCase {
  EmbeddingModel model;
  PosePair pair;
  Variant variant = Variant::kGcn;
};

// Seeded random (model, pair) cases for gradient_check. Without a fixed
// variant the cases alternate gcn/mlp; labels alternate in pairs so both loss
// branches are covered. Cases where some ReLU input lies within 1e-3 of zero
// are redrawn, since finite differences straddle the kink there.
std::vector<GradCheckCase> gradient_check_cases(int count, std::uint64_t seed,
                                                std::optional<Variant> variant = {});

}  // namespace gcnpsn
