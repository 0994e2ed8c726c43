#include "gcnpsn/corpus_io.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "gcnpsn/error.hpp"

namespace gcnpsn {

namespace {

using nlohmann::json;

constexpr int kFileVersion = 1;

Pose make_pose(std::initializer_list<Point2> pts) {
  Pose p;
  std::size_t i = 0;
  for (const auto& pt : pts) p.keypoints[i++] = pt;
  return p;
}

const std::array<std::string_view, kTemplateLibrarySize> kTemplateNames = {
    "standing", "t_pose", "squat", "lunge", "arms_raised", "kick", "sit", "bend"};

// Parent of each joint in the kinematic tree rooted at the pelvis, and an
// order in which every parent precedes its children.
constexpr std::array<int, kNumJoints> kParent = {1, 2, 3, -1, 3, 4, 5, 8, 9, 10, 3, 10, 11, 12, 10};
constexpr std::array<int, kNumJoints> kTreeOrder = {3, 2, 1, 0, 4, 5, 6, 10, 14, 9, 8, 7, 11, 12, 13};

// Rotates every bone by a Gaussian angle; rotations compound down the tree.
Pose vary_joint_angles(const Pose& base, double sd, Rng& rng) {
  std::array<double, kNumJoints> angle{};
  Pose out;
  out.keypoints[kPelvis] = base.keypoints[kPelvis];
  for (const int j : kTreeOrder) {
    const int parent = kParent[j];
    if (parent < 0) continue;
    angle[j] = angle[parent] + sd * rng.normal();
    const double bx = base.keypoints[j].x - base.keypoints[parent].x;
    const double by = base.keypoints[j].y - base.keypoints[parent].y;
    const double c = std::cos(angle[j]);
    const double s = std::sin(angle[j]);
    out.keypoints[j] = {out.keypoints[parent].x + c * bx - s * by,
                        out.keypoints[parent].y + s * bx + c * by};
  }
  return out;
}

// Places a pose somewhere in a 1920x1080-ish frame at a random size.
Pose random_placement(const Pose& p, Rng& rng) {
  const double scale = rng.uniform(1.5, 4.0);
  const double tx = rng.uniform(300.0, 1600.0);
  const double ty = rng.uniform(300.0, 800.0);
  Pose out;
  for (int i = 0; i < kNumJoints; ++i) {
    out.keypoints[i] = {scale * p.keypoints[i].x + tx, scale * p.keypoints[i].y + ty};
  }
  return out;
}

std::string record_context(const json& rec, std::size_t index) {
  std::string ctx = "record " + std::to_string(index);
  if (rec.is_object()) {
    auto it = rec.find("id");
    if (it != rec.end() && it->is_string()) ctx += " ('" + it->get<std::string>() + "')";
  }
  return ctx;
}

double finite_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw Error(where + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw Error(where + ": non-finite value");
  return v;
}

PoseRecord parse_record(const json& rec, const std::string& ctx) {
  if (!rec.is_object()) throw Error(ctx + ": must be an object");
  PoseRecord out;
  auto id = rec.find("id");
  if (id == rec.end() || !id->is_string()) throw Error(ctx + ": missing string id");
  out.id = id->get<std::string>();

  auto kps = rec.find("keypoints");
  if (kps == rec.end() || !kps->is_array()) throw Error(ctx + ": missing keypoints array");
  if (kps->size() != kNumJoints) {
    throw Error(ctx + ": expected " + std::to_string(kNumJoints) + " keypoints, got " +
                std::to_string(kps->size()));
  }
  for (std::size_t i = 0; i < kps->size(); ++i) {
    const auto& kp = (*kps)[i];
    const std::string where = ctx + " keypoint " + std::to_string(i);
    if (!kp.is_array() || kp.size() != 2) throw Error(where + ": expected [x, y]");
    out.pose.keypoints[i] = {finite_number(kp[0], where), finite_number(kp[1], where)};
  }

  if (auto conf = rec.find("confidences"); conf != rec.end() && !conf->is_null()) {
    if (!conf->is_array() || conf->size() != kNumJoints) {
      throw Error(ctx + ": confidences must list " + std::to_string(kNumJoints) + " values");
    }
    std::array<double, kNumJoints> c{};
    for (std::size_t i = 0; i < kNumJoints; ++i) {
      c[i] = finite_number((*conf)[i], ctx + " confidence " + std::to_string(i));
      if (c[i] < 0.0 || c[i] > 1.0) {
        throw Error(ctx + " confidence " + std::to_string(i) + ": outside [0, 1]");
      }
    }
    out.confidences = c;
  }
  if (auto cat = rec.find("category"); cat != rec.end() && !cat->is_null()) {
    if (!cat->is_string()) throw Error(ctx + ": category must be a string");
    out.category = cat->get<std::string>();
  }
  if (auto q = rec.find("quality_score"); q != rec.end() && !q->is_null()) {
    out.quality_score = finite_number(*q, ctx + " quality_score");
  }
  return out;
}

json parse_document(std::string_view bytes, const char* what) {
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(std::string(what) + ": malformed JSON: " + e.what());
  }
  if (!doc.is_object()) throw Error(std::string(what) + ": top level must be an object");
  auto v = doc.find("format_version");
  if (v == doc.end() || !v->is_number_integer() || v->get<int>() != kFileVersion) {
    throw Error(std::string(what) + ": format_version must be 1");
  }
  return doc;
}

}  // namespace

std::vector<PoseRecord> parse_pose_file(std::string_view bytes) {
  const json doc = parse_document(bytes, "pose file");
  if (auto order = doc.find("keypoint_order"); order != doc.end()) {
    bool ok = order->is_array() && order->size() == kNumJoints;
    for (std::size_t i = 0; ok && i < kNumJoints; ++i) {
      ok = (*order)[i].is_string() && (*order)[i].get<std::string>() == kJointNames[i];
    }
    if (!ok) throw Error("pose file: keypoint_order does not match the 15-joint layout");
  }
  auto recs = doc.find("records");
  if (recs == doc.end() || !recs->is_array()) throw Error("pose file: missing records array");

  std::vector<PoseRecord> out;
  out.reserve(recs->size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < recs->size(); ++i) {
    const std::string ctx = "pose file: " + record_context((*recs)[i], i);
    PoseRecord rec = parse_record((*recs)[i], ctx);
    if (!seen.insert(rec.id).second) throw Error(ctx + ": duplicate id");
    out.push_back(std::move(rec));
  }
  return out;
}

std::string write_pose_file(std::span<const PoseRecord> records) {
  json doc;
  doc["format_version"] = kFileVersion;
  doc["keypoint_order"] = json::array();
  for (const auto name : kJointNames) doc["keypoint_order"].push_back(name);
  doc["records"] = json::array();
  for (const auto& r : records) {
    validate_pose(r.pose);
    json rec;
    rec["id"] = r.id;
    rec["keypoints"] = json::array();
    for (const auto& kp : r.pose.keypoints) rec["keypoints"].push_back({kp.x, kp.y});
    if (r.confidences) rec["confidences"] = *r.confidences;
    if (r.category) rec["category"] = *r.category;
    if (r.quality_score) rec["quality_score"] = *r.quality_score;
    doc["records"].push_back(std::move(rec));
  }
  return doc.dump() + "\n";
}

PairFile parse_pair_file(std::string_view bytes) {
  const json doc = parse_document(bytes, "pair file");
  PairFile out;
  auto poses = doc.find("poses");
  if (poses == doc.end() || !poses->is_string()) {
    throw Error("pair file: missing \"poses\" path");
  }
  out.poses = poses->get<std::string>();
  auto pairs = doc.find("pairs");
  if (pairs == doc.end() || !pairs->is_array()) throw Error("pair file: missing pairs array");
  for (std::size_t i = 0; i < pairs->size(); ++i) {
    const auto& p = (*pairs)[i];
    const std::string ctx = "pair file: pair " + std::to_string(i);
    if (!p.is_object()) throw Error(ctx + ": must be an object");
    PairRef ref;
    auto a = p.find("a");
    auto b = p.find("b");
    auto y = p.find("y");
    if (a == p.end() || !a->is_string() || b == p.end() || !b->is_string()) {
      throw Error(ctx + ": a and b must be pose ids");
    }
    if (y == p.end() || !y->is_number_integer() || (y->get<int>() != 0 && y->get<int>() != 1)) {
      throw Error(ctx + ": y must be 0 or 1");
    }
    ref.a = a->get<std::string>();
    ref.b = b->get<std::string>();
    ref.y = y->get<int>();
    if (auto m = p.find("magnitude"); m != p.end() && !m->is_null()) {
      ref.magnitude = finite_number(*m, ctx + " magnitude");
      if (*ref.magnitude < 0.0) throw Error(ctx + ": magnitude must be >= 0");
    }
    out.pairs.push_back(std::move(ref));
  }
  return out;
}

std::string write_pair_file(const PairFile& file) {
  json doc;
  doc["format_version"] = kFileVersion;
  doc["poses"] = file.poses;
  doc["pairs"] = json::array();
  for (const auto& p : file.pairs) {
    json j = {{"a", p.a}, {"b", p.b}, {"y", p.y}};
    if (p.magnitude) j["magnitude"] = *p.magnitude;
    doc["pairs"].push_back(std::move(j));
  }
  return doc.dump() + "\n";
}

std::vector<PosePair> resolve_pairs(std::span<const PairRef> refs,
                                    std::span<const PoseRecord> records) {
  std::unordered_map<std::string, const Pose*> by_id;
  for (const auto& r : records) by_id.emplace(r.id, &r.pose);
  auto lookup = [&](const std::string& id, std::size_t i) -> const Pose& {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error("pair " + std::to_string(i) + ": unknown pose id '" + id + "'");
    }
    return *it->second;
  };
  std::vector<PosePair> out;
  out.reserve(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) {
    PosePair p;
    p.pose_a = lookup(refs[i].a, i);
    p.pose_b = lookup(refs[i].b, i);
    p.label_y = refs[i].y;
    p.magnitude = refs[i].magnitude;
    out.push_back(p);
  }
  return out;
}

std::string_view negative_strategy_name(NegativeStrategy s) {
  return s == NegativeStrategy::kCrossTemplate ? "cross_template" : "none";
}

NegativeStrategy parse_negative_strategy(std::string_view name) {
  if (name == "cross_template") return NegativeStrategy::kCrossTemplate;
  if (name == "none") return NegativeStrategy::kNone;
  throw Error("unknown negative strategy '" + std::string(name) +
              "' (expected cross_template|none)");
}

void SynthConfig::validate() const {
  if (template_count < 1) throw Error("synth: template count must be >= 1");
  if (pairs_per_template < 1) throw Error("synth: pairs per template must be >= 1");
  if (jitter_levels.empty()) throw Error("synth: at least one jitter level is required");
  for (std::size_t i = 0; i < jitter_levels.size(); ++i) {
    if (!(jitter_levels[i] >= 0.0) || !std::isfinite(jitter_levels[i])) {
      throw Error("synth: jitter levels must be finite and >= 0");
    }
    if (i > 0 && jitter_levels[i] < jitter_levels[i - 1]) {
      throw Error("synth: jitter levels must be sorted ascending");
    }
  }
  if (!(angle_noise >= 0.0)) throw Error("synth: angle noise must be >= 0");
  if (negative_strategy == NegativeStrategy::kCrossTemplate && template_count < 2) {
    throw Error("synth: cross-template negatives need at least 2 templates");
  }
}

const std::array<Pose, kTemplateLibrarySize>& template_library() {
  static const std::array<Pose, kTemplateLibrarySize> lib = {
      // standing
      make_pose({{-10, 90}, {-10, 46}, {-10, 2}, {0, 0}, {10, 2}, {10, 46}, {10, 90},
                 {-24, 2}, {-22, -26}, {-18, -52}, {0, -54}, {18, -52}, {22, -26},
                 {24, 2}, {0, -74}}),
      // t_pose
      make_pose({{-10, 90}, {-10, 46}, {-10, 2}, {0, 0}, {10, 2}, {10, 46}, {10, 90},
                 {-72, -52}, {-45, -52}, {-18, -52}, {0, -54}, {18, -52}, {45, -52},
                 {72, -52}, {0, -74}}),
      // squat
      make_pose({{-22, 56}, {-30, 18}, {-10, 2}, {0, 0}, {10, 2}, {30, 18}, {22, 56},
                 {-10, -22}, {-16, -30}, {-18, -48}, {0, -50}, {18, -48}, {16, -30},
                 {10, -22}, {0, -70}}),
      // lunge
      make_pose({{-36, 52}, {-34, 12}, {-4, 2}, {0, 0}, {4, 2}, {24, 38}, {56, 50},
                 {-14, 0}, {-12, -26}, {-8, -52}, {-2, -54}, {4, -52}, {8, -26},
                 {10, 0}, {-3, -74}}),
      // arms_raised
      make_pose({{-10, 90}, {-10, 46}, {-10, 2}, {0, 0}, {10, 2}, {10, 46}, {10, 90},
                 {-28, -108}, {-24, -80}, {-18, -52}, {0, -54}, {18, -52}, {24, -80},
                 {28, -108}, {0, -74}}),
      // kick
      make_pose({{-90, -18}, {-50, -8}, {-10, 2}, {0, 0}, {10, 2}, {12, 46}, {14, 90},
                 {-60, -66}, {-36, -60}, {-10, -52}, {8, -53}, {26, -50}, {48, -40},
                 {66, -28}, {12, -73}}),
      // sit
      make_pose({{-42, 46}, {-40, 4}, {-3, 2}, {0, 0}, {3, 2}, {-38, 6}, {-40, 48},
                 {-30, -4}, {-8, -24}, {-4, -50}, {2, -52}, {6, -50}, {2, -22},
                 {-24, -2}, {4, -72}}),
      // bend
      make_pose({{-1, 90}, {-2, 46}, {-3, 2}, {0, 0}, {3, 2}, {2, 46}, {1, 90},
                 {-48, 40}, {-50, 14}, {-50, -14}, {-52, -10}, {-54, -6}, {-54, 20},
                 {-52, 46}, {-72, -4}}),
  };
  return lib;
}

std::string_view template_name(int index) {
  return kTemplateNames[static_cast<std::size_t>(index % kTemplateLibrarySize)];
}

double extent_diagonal(const Pose& pose) {
  double x0 = pose.keypoints[0].x, x1 = x0;
  double y0 = pose.keypoints[0].y, y1 = y0;
  for (const auto& kp : pose.keypoints) {
    x0 = std::min(x0, kp.x);
    x1 = std::max(x1, kp.x);
    y0 = std::min(y0, kp.y);
    y1 = std::max(y1, kp.y);
  }
  return std::hypot(x1 - x0, y1 - y0);
}

Pose jitter_pose(const Pose& pose, double level, Rng& rng) {
  const double per_axis_sd = level * extent_diagonal(pose) / std::sqrt(2.0);
  Pose out = pose;
  for (auto& kp : out.keypoints) {
    kp.x += per_axis_sd * rng.normal();
    kp.y += per_axis_sd * rng.normal();
  }
  return out;
}

SyntheticCorpus generate_synthetic_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto& lib = template_library();

  // Templates past the library size are seeded re-posings of library entries.
  std::vector<Pose> templates;
  std::vector<std::string> categories;
  for (int t = 0; t < cfg.template_count; ++t) {
    const Pose& base = lib[static_cast<std::size_t>(t % kTemplateLibrarySize)];
    templates.push_back(t < kTemplateLibrarySize
                            ? base
                            : vary_joint_angles(base, 4.0 * cfg.angle_noise, rng));
    std::string cat(template_name(t));
    if (t >= kTemplateLibrarySize) cat += "_" + std::to_string(t / kTemplateLibrarySize);
    categories.push_back(std::move(cat));
  }

  SyntheticCorpus corpus;
  auto add_record = [&](std::string id, const Pose& pose, int t) {
    PoseRecord rec;
    rec.id = std::move(id);
    rec.pose = pose;
    rec.category = categories[static_cast<std::size_t>(t)];
    corpus.records.push_back(rec);
    return corpus.records.back().id;
  };
  auto instance = [&](int t) {
    return random_placement(
        vary_joint_angles(templates[static_cast<std::size_t>(t)], cfg.angle_noise, rng), rng);
  };

  const auto levels = cfg.jitter_levels.size();
  for (int t = 0; t < cfg.template_count; ++t) {
    for (int k = 0; k < cfg.pairs_per_template; ++k) {
      const std::string stem = "t" + std::to_string(t) + "_" + std::to_string(k);
      const double level = cfg.jitter_levels[static_cast<std::size_t>(k) % levels];
      const Pose anchor = instance(t);
      const Pose jittered = jitter_pose(anchor, level, rng);
      PairRef pos;
      pos.a = add_record(stem + "_pa", anchor, t);
      pos.b = add_record(stem + "_pb", jittered, t);
      pos.y = 1;
      pos.magnitude = level;
      corpus.pair_refs.push_back(pos);

      if (cfg.negative_strategy == NegativeStrategy::kCrossTemplate) {
        const auto offset = 1 + rng.below(static_cast<std::uint64_t>(cfg.template_count - 1));
        const int other = static_cast<int>((static_cast<std::uint64_t>(t) + offset) %
                                           static_cast<std::uint64_t>(cfg.template_count));
        PairRef neg;
        neg.a = add_record(stem + "_na", instance(t), t);
        neg.b = add_record(stem + "_nb", instance(other), other);
        neg.y = 0;
        corpus.pair_refs.push_back(neg);
      }
    }
  }
  corpus.pairs = resolve_pairs(corpus.pair_refs, corpus.records);
  return corpus;
}

std::vector<std::size_t> split_indices(std::size_t n, double train_fraction,
                                       std::uint64_t seed, std::size_t* train_count) {
  if (n == 0) throw Error("split: empty input");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("split: train fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  *train_count = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  return order;
}

}  // namespace gcnpsn
