#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gcnpsn/csv.hpp"
#include "gcnpsn/gcnpsn.hpp"

namespace fs = std::filesystem;
using namespace gcnpsn;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << bytes;
  out.close();
  if (!out) throw Error("write failed for " + path.string());
}

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw Error(std::string(what) + " not found: " + path);
}

// Creates the directory if needed and checks it is actually writable.
fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error("cannot create output directory " + dir);
  const fs::path probe = fs::path(dir) / ".gcnpsn_probe";
  {
    std::ofstream p(probe);
    if (!p) throw Error("output directory not writable: " + dir);
  }
  fs::remove(probe, ec);
  return fs::path(dir);
}

std::vector<PosePair> load_pairs(const std::string& pair_path) {
  const PairFile pf = parse_pair_file(read_file(pair_path));
  const fs::path poses = fs::path(pair_path).parent_path() / pf.poses;
  const auto records = parse_pose_file(read_file(poses));
  return resolve_pairs(pf.pairs, records);
}

std::vector<PosePair> select_part(std::vector<PosePair> pairs, std::optional<double> split,
                                  std::uint64_t split_seed, const std::string& part) {
  if (!split || part == "all") return pairs;
  auto s = split_corpus<PosePair>(pairs, *split, split_seed);
  return part == "train" ? std::move(s.train) : std::move(s.held_out);
}

// ---- gen

struct GenOpts {
  int templates = 8;
  int pairs_per_template = 32;
  std::vector<double> jitter{0.01, 0.03, 0.05, 0.10};
  std::string negatives = "cross_template";
  double angle_noise = SynthConfig{}.angle_noise;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen(const GenOpts& o) {
  SynthConfig cfg;
  cfg.template_count = o.templates;
  cfg.pairs_per_template = o.pairs_per_template;
  cfg.jitter_levels = o.jitter;
  cfg.negative_strategy = parse_negative_strategy(o.negatives);
  cfg.angle_noise = o.angle_noise;
  cfg.seed = o.seed;
  cfg.validate();
  const fs::path dir = prepare_out_dir(o.out);

  const SyntheticCorpus corpus = generate_synthetic_corpus(cfg);
  write_file(dir / "poses.json", write_pose_file(corpus.records));
  write_file(dir / "pairs.json", write_pair_file(PairFile{"poses.json", corpus.pair_refs}));

  std::size_t pos = 0;
  for (const auto& r : corpus.pair_refs) pos += r.y == 1;
  std::cout << "poses " << corpus.records.size() << "\n"
            << "pairs " << corpus.pair_refs.size() << "\n"
            << "positive " << pos << "\n"
            << "negative " << corpus.pair_refs.size() - pos << "\n";
  return 0;
}

// ---- train

struct TrainOpts {
  std::string pairs;
  std::string out;
  std::string variant = "gcn";
  TrainConfig cfg;
  int gcn_hidden = kDefaultGcnHidden;
  std::optional<double> split;
  std::uint64_t split_seed = 0;
};

int run_train(TrainOpts o) {
  require_file(o.pairs, "pair file");
  const Variant variant = parse_variant(o.variant);
  o.cfg.validate();
  const fs::path dir = prepare_out_dir(o.out);

  const auto pairs = select_part(load_pairs(o.pairs), o.split, o.split_seed, "train");
  const auto& topo = build_skeleton_topology();
  const auto result = train(init_model(o.gcn_hidden, o.cfg.seed, variant), topo, pairs, o.cfg, variant);

  write_file(dir / "checkpoint.json", save_checkpoint(result.model));
  write_file(dir / "history.csv", result.history.to_csv());
  const auto& h = result.history;
  std::cout << "pairs " << pairs.size() << "\n"
            << "first_epoch_loss " << format_double(h.mean_loss.front()) << "\n"
            << "final_loss " << format_double(h.mean_loss.back()) << "\n";
  return 0;
}

// ---- score

struct ScoreOpts {
  std::string checkpoint;
  std::string poses;
  std::string a;
  std::string b;
  std::optional<std::string> variant;
  ScoreParams params;
  bool round = false;
  std::optional<std::string> csv;
};

const Pose& find_pose(const std::vector<PoseRecord>& recs, const std::string& id) {
  for (const auto& r : recs) {
    if (r.id == id) return r.pose;
  }
  throw Error("unknown pose id '" + id + "'");
}

int run_score(const ScoreOpts& o) {
  require_file(o.checkpoint, "checkpoint");
  require_file(o.poses, "pose file");
  o.params.validate();
  const EmbeddingModel model = load_checkpoint(read_file(o.checkpoint));
  const Variant variant = o.variant ? parse_variant(*o.variant) : model.arch.variant;
  const auto recs = parse_pose_file(read_file(o.poses));
  const Pose& pa = find_pose(recs, o.a);
  const Pose& pb = find_pose(recs, o.b);

  const PairScore s = score_pair(model, build_skeleton_topology(), pa, pb, o.params, variant);
  if (o.csv) {
    write_file(*o.csv, "a,b,d_c,score\n" + o.a + "," + o.b + "," + format_double(s.d_c) + "," +
                           format_double(s.score) + "\n");
  }
  std::cout << "d_c " << format_double(s.d_c) << "\n";
  if (o.round) {
    std::cout << "score " << static_cast<long long>(std::llround(s.score)) << "\n";
  } else {
    std::cout << "score " << format_double(s.score) << "\n";
  }
  return 0;
}

// ---- eval

struct EvalOpts {
  std::string checkpoint;
  std::string pairs;
  std::string out;
  std::optional<std::string> variant;
  ScoreParams params;
  std::optional<double> split;
  std::uint64_t split_seed = 0;
  std::string part = "held_out";
};

int run_eval(const EvalOpts& o) {
  require_file(o.checkpoint, "checkpoint");
  require_file(o.pairs, "pair file");
  o.params.validate();
  const fs::path dir = prepare_out_dir(o.out);
  const EmbeddingModel model = load_checkpoint(read_file(o.checkpoint));
  const Variant variant = o.variant ? parse_variant(*o.variant) : model.arch.variant;
  const auto pairs = select_part(load_pairs(o.pairs), o.split, o.split_seed, o.part);

  const EvalReport rep = evaluate(model, build_skeleton_topology(), pairs, o.params, variant);
  write_file(dir / "report.csv", rep.to_csv());
  write_file(dir / "summary.csv", rep.summary_csv());
  auto show = [](const char* name, std::optional<double> v) {
    std::cout << name << " " << (v ? format_double(*v) : "n/a") << "\n";
  };
  std::cout << "pairs " << pairs.size() << "\n";
  show("spearman_rho", rep.spearman_rho);
  show("mean_pos_dist", rep.mean_pos_dist);
  show("mean_neg_dist", rep.mean_neg_dist);
  return 0;
}

// ---- gradcheck

struct GradOpts {
  int instances = 20;
  std::uint64_t seed = 0;
  std::optional<std::string> variant;
  double threshold = 1e-4;
  double epsilon = 1e-6;
};

int run_gradcheck(const GradOpts& o) {
  std::optional<Variant> v;
  if (o.variant) v = parse_variant(*o.variant);
  const auto& topo = build_skeleton_topology();
  const TrainConfig cfg;
  double worst = 0.0;
  for (const auto& c : gradient_check_cases(o.instances, o.seed, v)) {
    worst = std::max(worst, gradient_check(c.model, topo, c.pair, cfg, c.variant, o.epsilon));
  }
  std::cout << "instances " << o.instances << "\n"
            << "max_rel_error " << format_double(worst) << "\n";
  if (!(worst < o.threshold)) {
    std::cerr << "gradcheck: max relative error " << worst << " exceeds threshold "
              << o.threshold << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GCN pose-similarity network: corpus generation, training, scoring, evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "gcnpsn 0.1.0");

  const auto variant_check = CLI::IsMember({"gcn", "mlp"});

  GenOpts gen;
  auto* g = app.add_subcommand("gen", "generate a synthetic pose corpus");
  g->add_option("--templates", gen.templates, "number of pose templates")->capture_default_str();
  g->add_option("--pairs-per-template", gen.pairs_per_template)->capture_default_str();
  g->add_option("--jitter", gen.jitter, "comma-separated jitter levels")->delimiter(',')->capture_default_str();
  g->add_option("--negatives", gen.negatives)->check(CLI::IsMember({"cross_template", "none"}))->capture_default_str();
  g->add_option("--angle-noise", gen.angle_noise, "bone-angle noise per template instance (rad)")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out, "output directory")->required();

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "train an embedding model on a pair file");
  t->add_option("--pairs", tr.pairs, "pair file")->required();
  t->add_option("--out", tr.out, "output directory")->required();
  t->add_option("--variant", tr.variant)->check(variant_check)->capture_default_str();
  t->add_option("--lr", tr.cfg.learning_rate)->capture_default_str();
  t->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  t->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  t->add_option("--margin", tr.cfg.margin)->capture_default_str();
  t->add_option("--seed", tr.cfg.seed, "init and shuffle seed")->capture_default_str();
  t->add_option("--gcn-hidden", tr.gcn_hidden)->capture_default_str();
  t->add_option("--split", tr.split, "train on this fraction of the pairs");
  t->add_option("--split-seed", tr.split_seed)->capture_default_str();

  ScoreOpts sc;
  auto* s = app.add_subcommand("score", "score one pose pair");
  s->add_option("--checkpoint", sc.checkpoint)->required();
  s->add_option("--poses", sc.poses, "pose file")->required();
  s->add_option("--a", sc.a, "first pose id")->required();
  s->add_option("--b", sc.b, "second pose id")->required();
  s->add_option("--variant", sc.variant)->check(variant_check);
  s->add_option("--sigma", sc.params.amplitude_sigma)->capture_default_str();
  s->add_option("--u", sc.params.width_u)->capture_default_str();
  s->add_flag("--round", sc.round, "round the displayed score");
  s->add_option("--csv", sc.csv, "also write the unrounded result here");

  EvalOpts ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint on a pair file");
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--pairs", ev.pairs)->required();
  e->add_option("--out", ev.out, "output directory")->required();
  e->add_option("--variant", ev.variant)->check(variant_check);
  e->add_option("--sigma", ev.params.amplitude_sigma)->capture_default_str();
  e->add_option("--u", ev.params.width_u)->capture_default_str();
  e->add_option("--split", ev.split, "split fraction used for training");
  e->add_option("--split-seed", ev.split_seed)->capture_default_str();
  e->add_option("--part", ev.part, "which side of the split")
      ->check(CLI::IsMember({"held_out", "train", "all"}))
      ->capture_default_str();

  GradOpts gc;
  auto* c = app.add_subcommand("gradcheck", "compare analytic and numeric gradients");
  c->add_option("--instances", gc.instances)->capture_default_str();
  c->add_option("--seed", gc.seed)->capture_default_str();
  c->add_option("--variant", gc.variant, "default: alternate both")->check(variant_check);
  c->add_option("--threshold", gc.threshold)->capture_default_str();
  c->add_option("--epsilon", gc.epsilon)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (*g) return run_gen(gen);
    if (*t) return run_train(tr);
    if (*s) return run_score(sc);
    if (*e) return run_eval(ev);
    if (*c) return run_gradcheck(gc);
  } catch (const std::exception& ex) {
    std::cerr << "gcnpsn: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
