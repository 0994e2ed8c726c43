#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcnpsn/contrastive_trainer.hpp"
#include "gcnpsn/rng.hpp"
#include "gcnpsn/skeleton_graph.hpp"

namespace gcnpsn {

struct PoseRecord {
  std::string id;
  Pose pose;
  std::optional<std::array<double, kNumJoints>> confidences;
  std::optional<std::string> category;
  std::optional<double> quality_score;

  friend bool operator==(const PoseRecord&, const PoseRecord&) = default;
};

// A pair as stored on disk: references into a pose file by id.
struct PairRef {
  std::string a;
  std::string b;
  int y = 1;
  std::optional<double> magnitude;

  friend bool operator==(const PairRef&, const PairRef&) = default;
};

struct PairFile {
  std::string poses;  // path of the pose file, relative to the pair file
  std::vector<PairRef> pairs;
};

std::vector<PoseRecord> parse_pose_file(std::string_view bytes);
std::string write_pose_file(std::span<const PoseRecord> records);

PairFile parse_pair_file(std::string_view bytes);
std::string write_pair_file(const PairFile& file);

// Throws Error naming the first id that does not resolve.
std::vector<PosePair> resolve_pairs(std::span<const PairRef> refs,
                                    std::span<const PoseRecord> records);

enum class NegativeStrategy { kCrossTemplate, kNone };

std::string_view negative_strategy_name(NegativeStrategy s);
NegativeStrategy parse_negative_strategy(std::string_view name);

struct SynthConfig {
  int template_count = 8;
  int pairs_per_template = 32;
  // Fractions of the anchor's keypoint-extent diagonal.
  std::vector<double> jitter_levels{0.01, 0.03, 0.05, 0.10};
  NegativeStrategy negative_strategy = NegativeStrategy::kCrossTemplate;
  std::uint64_t seed = 0;
  // Per-joint bone-angle noise (radians) applied when instancing a template.
  double angle_noise = 0.15;

  void validate() const;
};

struct SyntheticCorpus {
  std::vector<PoseRecord> records;
  std::vector<PairRef> pair_refs;
  std::vector<PosePair> pairs;
};

inline constexpr int kTemplateLibrarySize = 8;

// Hand-authored template poses, y pointing down, pelvis at the origin.
const std::array<Pose, kTemplateLibrarySize>& template_library();
std::string_view template_name(int index);

// Isotropic Gaussian jitter in pixel space: the 2D displacement of each
// keypoint has total standard deviation level * (extent diagonal of pose).
Pose jitter_pose(const Pose& pose, double level, Rng& rng);

double extent_diagonal(const Pose& pose);

// For each template, pairs_per_template positives (jitter levels cycled) and
// as many cross-template negatives.
SyntheticCorpus generate_synthetic_corpus(const SynthConfig& cfg);

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> held_out;
};

// Seeded shuffle, then the first round(fraction * n) go to train.
template <typename T>
Split<T> split_corpus(std::span<const T> items, double train_fraction,
                      std::uint64_t seed);

std::vector<std::size_t> split_indices(std::size_t n, double train_fraction,
                                       std::uint64_t seed,
                                       std::size_t* train_count);

template <typename T>
Split<T> split_corpus(std::span<const T> items, double train_fraction,
                      std::uint64_t seed) {
  std::size_t n_train = 0;
  const auto order = split_indices(items.size(), train_fraction, seed, &n_train);
  Split<T> out;
  out.train.reserve(n_train);
  out.held_out.reserve(items.size() - n_train);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? out.train : out.held_out).push_back(items[order[i]]);
  }
  return out;
}

}  // namespace gcnpsn
