#include "gcnpsn/scoring_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gcnpsn/csv.hpp"
#include "gcnpsn/error.hpp"
#include "gcnpsn/parallel_kernels.hpp"

namespace gcnpsn {

void ScoreParams::validate() const {
  if (!(amplitude_sigma > 0.0) || !(width_u > 0.0)) {
    throw Error("score params: amplitude and width must be > 0");
  }
}

double similarity_score(double d_c, const ScoreParams& p) {
  if (!(d_c >= 0.0)) throw Error("similarity_score: distance must be >= 0");
  const double r = d_c / p.width_u;
  return p.amplitude_sigma * std::exp(-0.5 * r * r);
}

PairScore score_pair(const EmbeddingModel& model, const SkeletonTopology& topo,
                     const Pose& a, const Pose& b, const ScoreParams& p,
                     Variant variant) {
  p.validate();
  const auto ea = embed(model, normalize_pose(a), topo, variant).embedding;
  const auto eb = embed(model, normalize_pose(b), topo, variant).embedding;
  PairScore out;
  // Rounding can leave 1 - cos a hair below zero.
  out.d_c = std::max(0.0, cosine_distance(ea, eb));
  out.score = similarity_score(out.d_c, p);
  return out;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    // Positions i..j-1 share the mean of 1-based ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double spearman_rho(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("spearman_rho: length mismatch");
  if (xs.size() < 2) throw Error("spearman_rho: need at least 2 observations");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw Error("spearman_rho: non-finite value");
    }
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  // Average ranks always have mean (n + 1) / 2.
  const double mean = 0.5 * (n + 1.0);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error("spearman_rho: constant input, correlation undefined");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::string EvalReport::to_csv() const {
  std::string out = "pair_id,d_c,score,label,magnitude\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out += std::to_string(i) + "," + format_double(r.d_c) + "," + format_double(r.score) +
           "," + std::to_string(r.label) + "," + format_optional(r.magnitude) + "\n";
  }
  return out;
}

std::string EvalReport::summary_csv() const {
  return "spearman_rho,mean_pos_dist,mean_neg_dist\n" + format_optional(spearman_rho) +
         "," + format_optional(mean_pos_dist) + "," + format_optional(mean_neg_dist) + "\n";
}

EvalReport evaluate(const EmbeddingModel& model, const SkeletonTopology& topo,
                    std::span<const PosePair> pairs, const ScoreParams& p,
                    Variant variant, bool parallel) {
  if (pairs.empty()) throw Error("evaluate: empty pair list");
  p.validate();
  model.validate_shapes();
  for (const auto& pair : pairs) pair.validate();

  const auto distances = parallel ? pair_distances_parallel(model, topo, pairs, variant)
                                  : pair_distances_serial(model, topo, pairs, variant);
  EvalReport report;
  report.records.reserve(pairs.size());
  std::vector<double> graded_scores;
  std::vector<double> neg_magnitudes;
  double pos_sum = 0.0;
  double neg_sum = 0.0;
  std::size_t pos_n = 0;
  std::size_t neg_n = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    PairRecord rec;
    rec.d_c = std::max(0.0, distances[i]);
    rec.score = similarity_score(rec.d_c, p);
    rec.label = pairs[i].label_y;
    rec.magnitude = pairs[i].magnitude;
    if (rec.label == 1) {
      pos_sum += rec.d_c;
      ++pos_n;
    } else {
      neg_sum += rec.d_c;
      ++neg_n;
    }
    if (rec.magnitude) {
      graded_scores.push_back(rec.score);
      neg_magnitudes.push_back(-*rec.magnitude);
    }
    report.records.push_back(rec);
  }
  if (pos_n) report.mean_pos_dist = pos_sum / static_cast<double>(pos_n);
  if (neg_n) report.mean_neg_dist = neg_sum / static_cast<double>(neg_n);

  const auto distinct = [](const std::vector<double>& v) {
    return std::adjacent_find(v.begin(), v.end(), std::not_equal_to<>()) != v.end();
  };
  if (graded_scores.size() >= 2 && distinct(graded_scores) && distinct(neg_magnitudes)) {
    report.spearman_rho = spearman_rho(graded_scores, neg_magnitudes);
  }
  return report;
}

}  // namespace gcnpsn
