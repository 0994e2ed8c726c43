#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcnpsn/contrastive_trainer.hpp"

namespace gcnpsn {

// Sum of per-pair gradients over pairs[indices[i]], plus per-pair loss and
// distance in index order.
struct BatchGradient {
  Parameters grad_sum;
  std::vector<double> losses;
  std::vector<double> distances;
};

// Reference implementation: one pair at a time, accumulating as it goes.
BatchGradient batch_gradient_serial(const EmbeddingModel& model,
                                    const SkeletonTopology& topo,
                                    std::span<const PosePair> pairs,
                                    std::span<const std::size_t> indices,
                                    const TrainConfig& cfg, Variant variant);

// OpenMP over pairs, then a reduction in index order. Bit-identical to the
// serial version.
BatchGradient batch_gradient_parallel(const EmbeddingModel& model,
                                      const SkeletonTopology& topo,
                                      std::span<const PosePair> pairs,
                                      std::span<const std::size_t> indices,
                                      const TrainConfig& cfg, Variant variant);

std::vector<double> pair_distances_serial(const EmbeddingModel& model,
                                          const SkeletonTopology& topo,
                                          std::span<const PosePair> pairs,
                                          Variant variant);

std::vector<double> pair_distances_parallel(const EmbeddingModel& model,
                                            const SkeletonTopology& topo,
                                            std::span<const PosePair> pairs,
                                            Variant variant);

}  // namespace gcnpsn
