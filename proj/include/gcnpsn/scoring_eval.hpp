#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gcnpsn/contrastive_trainer.hpp"

namespace gcnpsn {

struct ScoreParams {
  double amplitude_sigma = 100.0;
  double width_u = 0.3;

  void validate() const;
};

// amplitude * exp(-0.5 * (d_c / u)^2). Throws on negative d_c.
double similarity_score(double d_c, const ScoreParams& p = {});

struct PairScore {
  double d_c = 0.0;
  double score = 0.0;
};

PairScore score_pair(const EmbeddingModel& model, const SkeletonTopology& topo,
                     const Pose& a, const Pose& b, const ScoreParams& p = {},
                     Variant variant = Variant::kGcn);

// Fractional (average) ranks, 1-based.
std::vector<double> average_ranks(std::span<const double> xs);

// Pearson correlation of average ranks. Throws for n < 2, mismatched
// lengths, non-finite input, or a constant list.
double spearman_rho(std::span<const double> xs, std::span<const double> ys);

struct PairRecord {
  double d_c = 0.0;
  double score = 0.0;
  int label = 0;
  std::optional<double> magnitude;
};

struct EvalReport {
  std::vector<PairRecord> records;
  std::optional<double> spearman_rho;
  std::optional<double> mean_pos_dist;
  std::optional<double> mean_neg_dist;

  // pair_id,d_c,score,label,magnitude
  std::string to_csv() const;
  // spearman_rho,mean_pos_dist,mean_neg_dist
  std::string summary_csv() const;
};

// rho is computed between score and negated magnitude over the pairs that
// carry a magnitude; omitted when fewer than two do or either side is
// constant.
EvalReport evaluate(const EmbeddingModel& model, const SkeletonTopology& topo,
                    std::span<const PosePair> pairs, const ScoreParams& p,
                    Variant variant, bool parallel = true);

}  // namespace gcnpsn
