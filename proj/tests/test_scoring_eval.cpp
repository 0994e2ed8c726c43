#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gcnpsn/error.hpp"
#include "gcnpsn/rng.hpp"
#include "gcnpsn/scoring_eval.hpp"
#include "oracles.hpp"

using namespace gcnpsn;

TEST_CASE("similarity_score examples") {
  CHECK(similarity_score(0.0) == 100.0);
  CHECK(similarity_score(0.3) == doctest::Approx(60.65306597126334).epsilon(1e-14));
  CHECK(similarity_score(0.6) == doctest::Approx(13.533528323661270).epsilon(1e-14));
  CHECK_THROWS_AS(similarity_score(-0.01), Error);
  ScoreParams p{50.0, 1.0};
  CHECK(similarity_score(0.0, p) == 50.0);
  CHECK(similarity_score(1.0, p) == doctest::Approx(50.0 * std::exp(-0.5)));
}

TEST_CASE("similarity_score is strictly decreasing") {
  double prev = similarity_score(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double s = similarity_score(2.0 * i / 1000.0);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("score_pair examples") {
  const auto model = init_model(2, 42);
  const auto& topo = build_skeleton_topology();
  const Pose a = oracle::canned_pose_a();

  const auto same = score_pair(model, topo, a, a);
  CHECK(same.d_c == 0.0);
  CHECK(same.score == 100.0);

  Pose moved = a;
  for (auto& kp : moved.keypoints) kp = {3.0 * kp.x - 40.0, 0.5 * kp.y + 900.0};
  const auto affine = score_pair(model, topo, a, moved);
  CHECK(affine.d_c <= 1e-12);
  CHECK(affine.score == doctest::Approx(100.0).epsilon(1e-12));

  // Frozen from the numpy reference chaining normalization, GCN, MLP, cosine
  // distance and the Gaussian score.
  const auto ab = score_pair(model, topo, a, oracle::canned_pose_b());
  CHECK(std::abs(ab.d_c - 0.003950531958830661) <= 1e-8);
  CHECK(std::abs(ab.score - 99.99132998544653) <= 1e-8);
  const auto ab_mlp = score_pair(model, topo, a, oracle::canned_pose_b(), {}, Variant::kMlp);
  CHECK(std::abs(ab_mlp.d_c - 0.038819049073481104) <= 1e-8);
  CHECK(std::abs(ab_mlp.score - 99.16631758393439) <= 1e-8);
}

TEST_CASE("spearman_rho examples") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> rev(x.rbegin(), x.rend());
  CHECK(spearman_rho(x, x) == 1.0);
  CHECK(spearman_rho(x, rev) == -1.0);
  CHECK(spearman_rho(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
        doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("spearman_rho errors") {
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1}, std::vector<double>{2}), Error);
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 2}, std::vector<double>{2}), Error);
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, NAN}, std::vector<double>{1, 2}), Error);
}

TEST_CASE("average ranks on ties") {
  const std::vector<double> xs{10, 20, 20, 5, 20};
  CHECK(average_ranks(xs) == std::vector<double>{2, 4, 4, 1, 4});
}

TEST_CASE("spearman_rho matches the brute-force oracle on every permutation up to n=6") {
  double worst = 0.0;
  for (int n = 2; n <= 6; ++n) {
    std::vector<double> base(n);
    std::iota(base.begin(), base.end(), 1.0);
    std::vector<double> perm = base;
    do {
      worst = std::max(worst, std::abs(spearman_rho(base, perm) - oracle::spearman(base, perm)));
    } while (std::next_permutation(perm.begin(), perm.end()));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("spearman_rho matches the oracle on random tied lists") {
  Rng rng(77);
  double worst = 0.0;
  int checked = 0;
  while (checked < 1000) {
    const auto n = 2 + rng.below(40);
    std::vector<double> xs(n), ys(n);
    // Small integer range forces ties.
    for (auto& v : xs) v = static_cast<double>(rng.below(6));
    for (auto& v : ys) v = rng.uniform01() < 0.5 ? static_cast<double>(rng.below(5)) : rng.normal();
    const bool const_x = std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; });
    const bool const_y = std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; });
    if (const_x || const_y) continue;
    worst = std::max(worst, std::abs(spearman_rho(xs, ys) - oracle::spearman(xs, ys)));
    ++checked;
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("spearman_rho is rank invariant and bounded") {
  Rng rng(78);
  for (int t = 0; t < 200; ++t) {
    const auto n = 3 + rng.below(30);
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = rng.uniform(-2, 2);
      ys[i] = xs[i] + rng.normal();
    }
    std::vector<double> cubed(n), expd(n);
    for (std::size_t i = 0; i < n; ++i) {
      cubed[i] = xs[i] * xs[i] * xs[i];
      expd[i] = std::exp(ys[i]);
    }
    const double rho = spearman_rho(xs, ys);
    CHECK(rho >= -1.0);
    CHECK(rho <= 1.0);
    CHECK(spearman_rho(cubed, expd) == rho);
    CHECK(spearman_rho(xs, xs) == 1.0);
  }
}

TEST_CASE("evaluate: identical poses omit rho") {
  const auto model = init_model(2, 42);
  std::vector<PosePair> pairs;
  for (int i = 0; i < 5; ++i) pairs.push_back({oracle::canned_pose_a(), oracle::canned_pose_a(), 1, 0.0});
  const auto rep = evaluate(model, build_skeleton_topology(), pairs, {}, Variant::kGcn);
  for (const auto& r : rep.records) CHECK(r.score == 100.0);
  CHECK(!rep.spearman_rho.has_value());
  CHECK(rep.mean_pos_dist.value() == 0.0);
  CHECK(!rep.mean_neg_dist.has_value());
  CHECK(rep.summary_csv() == "spearman_rho,mean_pos_dist,mean_neg_dist\n,0,\n");
}

TEST_CASE("evaluate: missing magnitudes still report distances") {
  const auto model = init_model(2, 7);
  std::vector<PosePair> pairs{{oracle::canned_pose_a(), oracle::canned_pose_b(), 0, {}},
                              {oracle::canned_pose_b(), oracle::canned_pose_a(), 1, {}}};
  const auto rep = evaluate(model, build_skeleton_topology(), pairs, {}, Variant::kGcn);
  CHECK(!rep.spearman_rho.has_value());
  CHECK(rep.mean_pos_dist.has_value());
  CHECK(rep.mean_neg_dist.has_value());
  CHECK(*rep.mean_pos_dist == doctest::Approx(*rep.mean_neg_dist));
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("pair_id,d_c,score,label,magnitude\n0,", 0) == 0);
  CHECK(csv.find(",0,\n1,") != std::string::npos);
}

TEST_CASE("evaluate: graded set reports a bounded rho, serial equals parallel") {
  const auto model = init_model(2, 7);
  const Pose a = oracle::canned_pose_a();
  std::vector<PosePair> pairs;
  Rng rng(5);
  for (int i = 0; i < 12; ++i) {
    const double level = 0.01 * (i + 1);
    Pose b = a;
    for (auto& kp : b.keypoints) kp = {kp.x + 200 * level * rng.normal(), kp.y + 200 * level * rng.normal()};
    pairs.push_back({a, b, 1, level});
  }
  const auto& topo = build_skeleton_topology();
  const auto rep = evaluate(model, topo, pairs, {}, Variant::kGcn, true);
  REQUIRE(rep.spearman_rho.has_value());
  CHECK(*rep.spearman_rho >= -1.0);
  CHECK(*rep.spearman_rho <= 1.0);
  const auto rep_serial = evaluate(model, topo, pairs, {}, Variant::kGcn, false);
  CHECK(rep.to_csv() == rep_serial.to_csv());
  CHECK(rep.summary_csv() == rep_serial.summary_csv());
}
