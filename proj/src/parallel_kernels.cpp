#include "gcnpsn/parallel_kernels.hpp"

#include <exception>

namespace gcnpsn {

namespace {

// Exceptions must not escape an OpenMP region; keep the one from the lowest
// index and rethrow it after the loop.
void rethrow_first(const std::vector<std::exception_ptr>& errors) {
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

BatchGradient batch_gradient_serial(const EmbeddingModel& model,
                                    const SkeletonTopology& topo,
                                    std::span<const PosePair> pairs,
                                    std::span<const std::size_t> indices,
                                    const TrainConfig& cfg, Variant variant) {
  BatchGradient out;
  out.grad_sum = Parameters::zeros(model.arch.gcn_hidden);
  out.losses.reserve(indices.size());
  out.distances.reserve(indices.size());
  for (const std::size_t i : indices) {
    const PairGradient pg = pair_backward(model, topo, pairs[i], cfg, variant);
    out.grad_sum += pg.grads;
    out.losses.push_back(pg.loss);
    out.distances.push_back(pg.distance);
  }
  return out;
}

BatchGradient batch_gradient_parallel(const EmbeddingModel& model,
                                      const SkeletonTopology& topo,
                                      std::span<const PosePair> pairs,
                                      std::span<const std::size_t> indices,
                                      const TrainConfig& cfg, Variant variant) {
  const auto n = static_cast<std::ptrdiff_t>(indices.size());
  std::vector<PairGradient> per_pair(indices.size());
  std::vector<std::exception_ptr> errors(indices.size());

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      per_pair[k] = pair_backward(model, topo, pairs[indices[k]], cfg, variant);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);

  BatchGradient out;
  out.grad_sum = Parameters::zeros(model.arch.gcn_hidden);
  out.losses.reserve(indices.size());
  out.distances.reserve(indices.size());
  for (const auto& pg : per_pair) {
    out.grad_sum += pg.grads;
    out.losses.push_back(pg.loss);
    out.distances.push_back(pg.distance);
  }
  return out;
}

namespace {

double pair_distance(const EmbeddingModel& model, const SkeletonTopology& topo,
                     const PosePair& pair, Variant variant) {
  const auto ea = embed(model, normalize_pose(pair.pose_a), topo, variant).embedding;
  const auto eb = embed(model, normalize_pose(pair.pose_b), topo, variant).embedding;
  return cosine_distance(ea, eb);
}

}  // namespace

std::vector<double> pair_distances_serial(const EmbeddingModel& model,
                                          const SkeletonTopology& topo,
                                          std::span<const PosePair> pairs,
                                          Variant variant) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.push_back(pair_distance(model, topo, p, variant));
  return out;
}

std::vector<double> pair_distances_parallel(const EmbeddingModel& model,
                                            const SkeletonTopology& topo,
                                            std::span<const PosePair> pairs,
                                            Variant variant) {
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  std::vector<double> out(pairs.size());
  std::vector<std::exception_ptr> errors(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    try {
      out[k] = pair_distance(model, topo, pairs[k], variant);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  rethrow_first(errors);
  return out;
}

}  // namespace gcnpsn
