// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gcnpsn/csv.hpp"
#include "gcnpsn/gcnpsn.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace gcnpsn;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int n, const char* title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("criterion %d %s %s: %s\n", n, o.pass ? "PASS" : "FAIL", title, o.detail.c_str());
  std::fflush(stdout);
}

Pose random_pose(Rng& rng) {
  Pose p;
  for (auto& kp : p.keypoints) kp = {rng.uniform(0.0, 1920.0), rng.uniform(0.0, 1080.0)};
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  const auto& topo = build_skeleton_topology();
  const TrainConfig cfg;
  double worst = 0.0;
  int gcn = 0, mlp = 0, hinge = 0, pos = 0;
  for (const auto& c : gradient_check_cases(20, 2024)) {
    (c.variant == Variant::kGcn ? gcn : mlp) += 1;
    const double d = pair_backward(c.model, topo, c.pair, cfg, c.variant).distance;
    if (c.pair.label_y == 1) ++pos;
    if (c.pair.label_y == 0 && d < cfg.margin) ++hinge;
    worst = std::max(worst, gradient_check(c.model, topo, c.pair, cfg, c.variant, 1e-6));
  }
  const double secs = seconds_since(t0);
  const bool covered = gcn > 0 && mlp > 0 && hinge > 0 && pos > 0 && hinge + pos == 20;
  return {worst < 1e-4 && covered && secs < 30.0,
          "max rel error " + fmt(worst) + " over 20 cases (gcn " + std::to_string(gcn) + ", mlp " +
              std::to_string(mlp) + ", y=1 " + std::to_string(pos) + ", active hinge " +
              std::to_string(hinge) + "), " + fmt(secs) + " s"};
}

// ---- 2

Outcome affine_invariance() {
  Rng rng(99);
  const auto& topo = build_skeleton_topology();
  const EmbeddingModel gcn = init_model(kDefaultGcnHidden, 7, Variant::kGcn);
  const EmbeddingModel mlp = init_model(kDefaultGcnHidden, 7, Variant::kMlp);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Pose p = random_pose(rng);
    const double a = rng.uniform(0.1, 10.0), b = rng.uniform(-1e3, 1e3);
    const double c = rng.uniform(0.1, 10.0), d = rng.uniform(-1e3, 1e3);
    Pose q;
    for (int j = 0; j < kNumJoints; ++j) {
      q.keypoints[j] = {a * p.keypoints[j].x + b, c * p.keypoints[j].y + d};
    }
    for (const auto* m : {&gcn, &mlp}) {
      const Embedding e1 = embed(*m, normalize_pose(p), topo, m->arch.variant).embedding;
      const Embedding e2 = embed(*m, normalize_pose(q), topo, m->arch.variant).embedding;
      worst = std::max(worst, (e1 - e2).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-12, "max |delta embedding| " + fmt(worst) + " over 100 poses, both variants"};
}

// ---- 3

Outcome adjacency_oracle() {
  const Adjacency& a = build_skeleton_topology().adjacency_norm;
  const oracle::Mat ref = oracle::skeleton_adjacency_norm();
  double diff = 0.0, asym = 0.0;
  for (int i = 0; i < kNumJoints; ++i) {
    for (int j = 0; j < kNumJoints; ++j) {
      diff = std::max(diff, std::abs(a(i, j) - ref[i][j]));
      asym = std::max(asym, std::abs(a(i, j) - a(j, i)));
    }
  }
  const double rho = oracle::spectral_radius(oracle::to_mat(a));
  return {diff <= 1e-12 && asym == 0.0 && rho <= 1.0 + 1e-12,
          "max entry diff " + fmt(diff) + ", asymmetry " + fmt(asym) + ", spectral radius " +
              format_double(rho)};
}

// ---- 4

Outcome score_endpoints() {
  const double s0 = similarity_score(0.0);
  bool decreasing = true;
  double prev = s0;
  for (int i = 1; i < 1000; ++i) {
    const double s = similarity_score(2.0 * i / 999.0);
    decreasing = decreasing && s < prev;
    prev = s;
  }
  const double s3 = similarity_score(0.3);
  return {s0 == 100.0 && decreasing && std::abs(s3 - 60.6531) <= 1e-3,
          "score(0) = " + format_double(s0) + ", strictly decreasing on 1000-point grid: " +
              (decreasing ? "yes" : "no") + ", score(0.3) = " + format_double(s3)};
}

// ---- 5

Outcome spearman_oracle() {
  double worst = 0.0;
  int cases = 0;
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> xs(n), ys(n);
    std::iota(xs.begin(), xs.end(), 1.0);
    std::iota(ys.begin(), ys.end(), 1.0);
    do {
      worst = std::max(worst, std::abs(spearman_rho(xs, ys) - oracle::spearman(xs, ys)));
      ++cases;
    } while (std::next_permutation(ys.begin(), ys.end()));
  }
  Rng rng(5);
  int random_cases = 0;
  while (random_cases < 1000) {
    const auto n = 2 + rng.below(29);
    std::vector<double> xs(n), ys(n);
    for (auto& v : xs) v = static_cast<double>(rng.below(5));
    for (auto& v : ys) v = static_cast<double>(rng.below(5)) * 0.5;
    auto constant = [](const std::vector<double>& v) {
      return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    };
    if (constant(xs) || constant(ys)) continue;
    worst = std::max(worst, std::abs(spearman_rho(xs, ys) - oracle::spearman(xs, ys)));
    ++random_cases;
  }
  return {worst <= 1e-12, "max |diff| " + fmt(worst) + " over " + std::to_string(cases) +
                              " permutations and 1000 tied random lists"};
}

// ---- 6 and 7 share one corpus and split

struct Ablation {
  TrainHistory gcn_history;
  EvalReport gcn;
  EvalReport mlp;
  double gcn_train_seconds = 0.0;
  std::size_t n_train = 0;
  std::size_t n_held = 0;
};

Ablation run_ablation() {
  constexpr std::uint64_t kSeed = 7;
  SynthConfig sc;
  sc.seed = kSeed;
  const SyntheticCorpus corpus = generate_synthetic_corpus(sc);
  const auto split = split_corpus<PosePair>(corpus.pairs, 0.8, kSeed);
  const auto& topo = build_skeleton_topology();
  TrainConfig cfg;
  cfg.seed = kSeed;

  Ablation out;
  out.n_train = split.train.size();
  out.n_held = split.held_out.size();
  const auto t0 = Clock::now();
  const auto g = train(init_model(kDefaultGcnHidden, kSeed, Variant::kGcn), topo, split.train, cfg,
                       Variant::kGcn);
  out.gcn_train_seconds = seconds_since(t0);
  out.gcn_history = g.history;
  out.gcn = evaluate(g.model, topo, split.held_out, {}, Variant::kGcn);
  const auto m = train(init_model(kDefaultGcnHidden, kSeed, Variant::kMlp), topo, split.train, cfg,
                       Variant::kMlp);
  out.mlp = evaluate(m.model, topo, split.held_out, {}, Variant::kMlp);
  return out;
}

Outcome end_to_end(const Ablation& ab) {
  const auto& h = ab.gcn_history.mean_loss;
  const bool loss_down = h.back() < h.front();
  const double pos = ab.gcn.mean_pos_dist.value_or(NAN);
  const double neg = ab.gcn.mean_neg_dist.value_or(NAN);
  const bool gap = pos + 0.2 < neg;
  const double rho = ab.gcn.spearman_rho.value_or(NAN);
  const bool ranked = rho >= 0.9;
  return {loss_down && gap && ranked && ab.gcn_train_seconds < 60.0,
          std::to_string(ab.n_train) + "/" + std::to_string(ab.n_held) + " pairs; loss " + fmt(h.front()) +
              " -> " + fmt(h.back()) + (loss_down ? " ok" : " NOT DECREASED") + "; held-out d_c pos " +
              fmt(pos) + " neg " + fmt(neg) + (gap ? " ok" : " GAP < 0.2") + "; rho " + fmt(rho) +
              (ranked ? " ok" : " < 0.9") + "; train " + fmt(ab.gcn_train_seconds) + " s"};
}

Outcome ablation_direction(const Ablation& ab) {
  const double g = ab.gcn.spearman_rho.value_or(NAN);
  const double m = ab.mlp.spearman_rho.value_or(NAN);
  return {g >= m - 0.02, "held-out rho gcn " + fmt(g) + ", mlp " + fmt(m)};
}

// ---- 8

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + GCNPSN_CLI_PATH + "\" " + args + " >> \"" + log.string() +
                          "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism_and_persistence() {
  const fs::path root = fs::temp_directory_path() / "gcnpsn_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path log = root / "cli.log";
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    const std::string c = (d / "corpus").string(), m = (d / "model").string();
    if (cli("gen --seed 11 --out " + c, log) != 0 ||
        cli("train --seed 11 --split 0.8 --split-seed 11 --pairs " + c + "/pairs.json --out " + m, log) != 0 ||
        cli("eval --split 0.8 --split-seed 11 --checkpoint " + m + "/checkpoint.json --pairs " + c +
                "/pairs.json --out " + (d / "eval").string(),
            log) != 0) {
      return {false, "CLI run failed, see " + log.string()};
    }
  }
  std::string mismatched;
  for (const char* f : {"model/checkpoint.json", "model/history.csv", "eval/report.csv", "eval/summary.csv"}) {
    const std::string x = slurp(root / "a" / f);
    if (x.empty() || x != slurp(root / "b" / f)) mismatched += std::string(" ") + f;
  }

  const EmbeddingModel model = load_checkpoint(slurp(root / "a/model/checkpoint.json"));
  const EmbeddingModel again = load_checkpoint(save_checkpoint(model));
  const auto& topo = build_skeleton_topology();
  Rng rng(8);
  int differing = 0;
  for (int i = 0; i < 100; ++i) {
    const NormalizedPose np = normalize_pose(random_pose(rng));
    for (const Variant v : {Variant::kGcn, Variant::kMlp}) {
      const Embedding e1 = embed(model, np, topo, v).embedding;
      const Embedding e2 = embed(again, np, topo, v).embedding;
      differing += std::memcmp(e1.data(), e2.data(), sizeof(double) * kEmbeddingDim) != 0;
    }
  }
  const bool params_same = save_checkpoint(again) == save_checkpoint(model);
  return {mismatched.empty() && differing == 0 && params_same,
          std::string("repeat runs ") + (mismatched.empty() ? "byte-identical" : "differ in" + mismatched) +
              "; round-trip embeddings differing " + std::to_string(differing) + "/200"};
}

// ---- 9

// 0.5 * x * x for the double x, computed exactly and rounded once.
double exact_half_square(double x) {
  int e = 0;
  const double frac = std::frexp(x, &e);  // x = frac * 2^e, 0.5 <= frac < 1
  const auto m = static_cast<__int128>(std::ldexp(frac, 53));
  return std::ldexp(static_cast<double>(m * m), 2 * (e - 53) - 1);
}

Outcome loss_table() {
  const double a = contrastive_loss(1.5, 0, 1.35);
  const double b = contrastive_loss(0.4, 1, 1.35);
  const double c = contrastive_loss(0.35, 0, 1.35);
  const double b_exact = exact_half_square(0.4);
  const bool ok = a == 0.0 && b == b_exact && c == 0.5;
  return {ok, "(y=0,d=1.5) " + format_double(a) + ", (y=1,d=0.4) " + format_double(b) +
                  " [correctly rounded 0.5*0.4^2 = " + format_double(b_exact) + ", " +
                  fmt(std::abs(b - 0.08) / (std::nextafter(0.08, 1.0) - 0.08)) +
                  " ulp from 0.08], (y=0,d=0.35) " + format_double(c)};
}

}  // namespace

int main() {
  const auto t0 = Clock::now();
  report(1, "gradient correctness", gradient_correctness);
  report(2, "affine invariance", affine_invariance);
  report(3, "adjacency oracle", adjacency_oracle);
  report(4, "score endpoints", score_endpoints);
  report(5, "spearman oracle", spearman_oracle);
  Ablation ab;
  std::string ablation_error;
  try {
    ab = run_ablation();
  } catch (const std::exception& e) {
    ablation_error = e.what();
  }
  auto guarded = [&](auto fn) {
    return [&, fn]() -> Outcome {
      if (!ablation_error.empty()) return {false, "exception: " + ablation_error};
      return fn(ab);
    };
  };
  report(6, "end-to-end training", guarded(end_to_end));
  report(7, "ablation direction", guarded(ablation_direction));
  report(8, "determinism and persistence", determinism_and_persistence);
  report(9, "contrastive loss table", loss_table);
  std::printf("%d of 9 criteria failed (%.1f s)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
