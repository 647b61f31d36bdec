#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rss/baselines.hpp"
#include "rss/clustering.hpp"
#include "rss/error.hpp"
#include "rss/evaluation.hpp"
#include "rss/io.hpp"
#include "rss/stability.hpp"
#include "rss/synthgen.hpp"

#ifndef RSS_VERSION
#define RSS_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rss;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = ".";
};

/// Parameters shared by select and perm.
struct SelectOpts {
  std::string data;
  std::string parcellation;
  std::string method = "rss";
  int K = 0;  // 0 picks the method default
  double alpha = 0.5;
  double beta = 0.1;
  std::string block = "3x3x3";
  double lambda = 1.0;
  double weakness = 0.5;
  double row_fraction = 0.5;
  double ridge = 1.0;
  int max_iters = 10000;
  double tol_kkt = 1e-6;
};

std::array<std::int32_t, 3> parse_triple(const std::string& text, const char* what) {
  std::array<std::int32_t, 3> out{};
  std::istringstream in(text);
  char sep = 0;
  if (!(in >> out[0] >> sep >> out[1]) || sep != 'x' || !(in >> sep >> out[2]) || sep != 'x' || !in.eof()) {
    throw Error(std::string(what) + ": expected AxBxC, got '" + text + "'");
  }
  for (auto v : out)
    if (v <= 0) throw Error(std::string(what) + ": entries must be positive");
  return out;
}

std::string triple_text(const std::array<std::int32_t, 3>& t) {
  return std::to_string(t[0]) + "x" + std::to_string(t[1]) + "x" + std::to_string(t[2]);
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw Error("cannot write " + file.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  return json::parse(in);
}

/// Collects the provenance of one command and writes <name>_manifest.json.
class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv, const Globals& g, std::string name = {})
      : command_(std::move(command)),
        name_(name.empty() ? command_ : std::move(name)),
        start_(std::chrono::steady_clock::now()) {
    j_["command"] = command_;
    j_["argv"] = argv;
    j_["cwd"] = fs::current_path().string();
    j_["version"] = RSS_VERSION;
    j_["seed"] = g.seed;
    j_["threads"] = g.threads;
    j_["out_dir"] = g.out_dir;
    j_["parameters"] = json::object();
    j_["inputs"] = json::object();
    j_["outputs"] = json::object();
  }

  json& params() { return j_["parameters"]; }
  void input_file(const fs::path& p) { j_["inputs"][p.string()] = io::file_checksum(p); }
  void input_container(const fs::path& p) { j_["inputs"][p.string()] = io::container_checksum(p); }
  void output_file(const fs::path& p) { j_["outputs"][p.string()] = io::file_checksum(p); }
  void output_container(const fs::path& p) { j_["outputs"][p.string()] = io::container_checksum(p); }

  void write(const fs::path& out_dir) {
    j_["duration_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_json(out_dir / (name_ + "_manifest.json"), j_);
  }

 private:
  std::string command_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
  json j_;
};

SolverConfig solver_config(const SelectOpts& o) {
  SolverConfig cfg;
  cfg.lambda = o.lambda;
  cfg.max_iters = o.max_iters;
  cfg.tol_kkt = o.tol_kkt;
  return cfg;
}

StabilityConfig stability_config(const SelectOpts& o, const Globals& g) {
  StabilityConfig cfg;
  cfg.K = o.K > 0 ? o.K : 50;
  cfg.alpha = o.alpha;
  cfg.beta = o.beta;
  const auto b = parse_triple(o.block, "--block");
  cfg.block = {b[0], b[1], b[2]};
  cfg.solver = solver_config(o);
  cfg.master_seed = g.seed;
  cfg.threads = g.threads;
  return cfg;
}

RandL1Config randl1_config(const SelectOpts& o, const Globals& g) {
  RandL1Config cfg;
  cfg.K = o.K > 0 ? o.K : 500;
  cfg.row_fraction = o.row_fraction;
  cfg.weakness = o.weakness;
  cfg.solver = solver_config(o);
  cfg.master_seed = g.seed;
  cfg.threads = g.threads;
  return cfg;
}

void add_select_options(CLI::App* cmd, SelectOpts& o) {
  cmd->add_option("--data", o.data, "Dataset container directory")->required();
  cmd->add_option("--parcellation", o.parcellation, "Parcellation CSV (rss only)");
  cmd->add_option("--method", o.method, "Selection method")
      ->check(CLI::IsMember({"rss", "rand-l1", "l1", "l2", "ttest"}))
      ->capture_default_str();
  cmd->add_option("--K", o.K, "Resamplings (default 50 for rss, 500 for rand-l1)");
  cmd->add_option("--alpha", o.alpha, "Row subsampling fraction (rss)")->capture_default_str();
  cmd->add_option("--beta", o.beta, "Per-cluster feature fraction (rss)")->capture_default_str();
  cmd->add_option("--block", o.block, "Block shape AxBxC (rss)")->capture_default_str();
  cmd->add_option("--lambda", o.lambda, "Loss weight of the sparse model")->capture_default_str();
  cmd->add_option("--weakness", o.weakness, "Lower rescaling bound (rand-l1)")->capture_default_str();
  cmd->add_option("--row-fraction", o.row_fraction, "Row subsampling fraction (rand-l1)")->capture_default_str();
  cmd->add_option("--ridge", o.ridge, "Ridge weight (l2)")->capture_default_str();
  cmd->add_option("--max-iters", o.max_iters, "Solver iteration cap")->capture_default_str();
  cmd->add_option("--tol-kkt", o.tol_kkt, "Solver KKT tolerance")->capture_default_str();
}

json select_params(const SelectOpts& o, const Globals& g) {
  json p{{"data", o.data}, {"method", o.method}};
  if (o.method == "rss") {
    const auto cfg = stability_config(o, g);
    p.update({{"parcellation", o.parcellation}, {"K", cfg.K}, {"alpha", cfg.alpha}, {"beta", cfg.beta},
              {"block", o.block}});
  } else if (o.method == "rand-l1") {
    const auto cfg = randl1_config(o, g);
    p.update({{"K", cfg.K}, {"row_fraction", cfg.row_fraction}, {"weakness", cfg.weakness}});
  }
  if (o.method == "l2") {
    p["ridge"] = o.ridge;
  } else if (o.method != "ttest") {
    p.update({{"lambda", o.lambda}, {"max_iters", o.max_iters}, {"tol_kkt", o.tol_kkt}});
  }
  return p;
}

Parcellation load_rss_parcellation(const SelectOpts& o, const Dataset& d, Manifest& m) {
  if (o.parcellation.empty()) throw Error("--parcellation is required for --method rss");
  auto parc = io::load_parcellation(o.parcellation);
  if (static_cast<Index>(parc.p()) != d.p()) throw Error("parcellation does not match the dataset's p");
  m.input_file(o.parcellation);
  if (!d.geometry()) {
    std::cerr << "warning: dataset has no geometry; rss falls back to non-block stratified sampling\n";
  }
  return parc;
}

// ---- synth -----------------------------------------------------------------

struct SynthOpts {
  std::string dims = "46x55x46";
  std::int64_t mask = 27884;
  std::int64_t n_per_group = 50;
  std::vector<std::int64_t> clusters{76, 76, 77, 77, 77};
  double noise_sd = 1.0;
  double threshold = 1.0;
};

void cmd_synth(const SynthOpts& o, const Globals& g, const std::vector<std::string>& argv) {
  Manifest m("synth", argv, g);
  SynthConfig cfg;
  cfg.dims = parse_triple(o.dims, "--dims");
  cfg.mask_size = o.mask;
  cfg.n_per_group = o.n_per_group;
  if (o.clusters.size() != 5) throw Error("--clusters needs exactly 5 sizes");
  std::copy(o.clusters.begin(), o.clusters.end(), cfg.cluster_sizes.begin());
  cfg.noise_sd = o.noise_sd;
  cfg.constraint_threshold = o.threshold;
  cfg.seed = g.seed;
  m.params() = {{"dims", triple_text(cfg.dims)}, {"mask", cfg.mask_size},   {"n_per_group", cfg.n_per_group},
                {"clusters", o.clusters},         {"noise_sd", cfg.noise_sd}, {"threshold", cfg.constraint_threshold}};

  const auto s = generate_synthetic(cfg);
  const fs::path out(g.out_dir);
  io::save_dataset(s.data, out / "dataset");
  io::save_ground_truth(s.truth.cluster_of, out / "ground_truth.csv");
  m.output_container(out / "dataset");
  m.output_file(out / "ground_truth.csv");
  m.write(out);
  std::cout << "wrote dataset n=" << s.data.n() << " p=" << s.data.p()
            << " discriminative=" << s.truth.discriminative.size() << "\n";
}

// ---- cluster ---------------------------------------------------------------

struct ClusterOpts {
  std::string data;
  int q = 200;
  int restarts = 10;
  int max_iters = 300;
  double spatial_weight = 0.0;
};

void cmd_cluster(const ClusterOpts& o, const Globals& g, const std::vector<std::string>& argv) {
  Manifest m("cluster", argv, g);
  const auto d = io::load_dataset(o.data);
  m.input_container(o.data);
  ClusterConfig cfg;
  cfg.q = o.q;
  cfg.restarts = o.restarts;
  cfg.max_lloyd_iters = o.max_iters;
  cfg.spatial_weight = o.spatial_weight;
  cfg.seed = g.seed;
  cfg.threads = g.threads;
  m.params() = {{"data", o.data},
                {"q", cfg.q},
                {"restarts", cfg.restarts},
                {"max_iters", cfg.max_lloyd_iters},
                {"spatial_weight", cfg.spatial_weight}};

  const auto fit = kmeans_fit(build_feature_vectors(d, cfg.spatial_weight), cfg);
  const fs::path out(g.out_dir);
  io::save_parcellation(fit.parcellation, out / "parcellation.csv");
  std::vector<std::size_t> sizes;
  for (const auto& mem : fit.parcellation.members()) sizes.push_back(mem.size());
  write_json(out / "parcellation.json", {{"q", fit.parcellation.q()},
                                         {"p", fit.parcellation.p()},
                                         {"inertia", fit.inertia},
                                         {"best_restart", fit.restart},
                                         {"checksum", fit.parcellation.checksum()},
                                         {"cluster_sizes", sizes}});
  m.output_file(out / "parcellation.csv");
  m.output_file(out / "parcellation.json");
  m.write(out);
  std::cout << "wrote parcellation q=" << fit.parcellation.q() << " inertia=" << io::format_double(fit.inertia)
            << "\n";
}

// ---- select ----------------------------------------------------------------

void cmd_select(const SelectOpts& o, const Globals& g, const std::vector<std::string>& argv) {
  Manifest m("select", argv, g, "select_" + o.method);
  const auto d = io::load_dataset(o.data);
  m.input_container(o.data);
  m.params() = select_params(o, g);

  const fs::path out(g.out_dir);
  const fs::path csv = out / ("scores_" + o.method + ".csv");
  json meta{{"method", o.method}, {"p", d.p()}};
  if (o.method == "rss") {
    const auto parc = load_rss_parcellation(o, d, m);
    const auto run = run_stability_selection_detailed(d, parc, stability_config(o, g));
    io::save_scores(run.scores, d, csv);
    meta.update({{"K", run.scores.K}, {"failed_fits", run.failed_fits}, {"kind", "selection_frequency"}});
  } else if (o.method == "rand-l1") {
    const auto scores = randomized_l1(d, randl1_config(o, g));
    io::save_scores(scores, d, csv);
    meta.update({{"K", scores.K}, {"kind", "selection_frequency"}});
  } else {
    std::vector<double> scores;
    if (o.method == "l1") {
      scores = l1_weight_scores(d, solver_config(o));
    } else if (o.method == "l2") {
      scores = l2_weight_scores(d, o.ridge);
    } else {
      scores = ttest_scores(d);
    }
    io::save_real_scores(scores, d, csv);
    meta["kind"] = o.method == "ttest" ? "abs_welch_t" : "abs_weight";
  }
  meta["parameters"] = m.params();
  meta["checksum"] = io::file_checksum(csv);
  const fs::path meta_file = out / ("scores_" + o.method + ".json");
  write_json(meta_file, meta);
  m.output_file(csv);
  m.output_file(meta_file);
  m.write(out);
  std::cout << "wrote " << csv.string() << "\n";
}

// ---- eval ------------------------------------------------------------------

struct EvalOpts {
  std::string data;
  std::string scores;
  std::string truth;
  std::string test;
  Index T = 0;
  std::optional<double> tau;
  double ridge = 1.0;
  int folds = 5;
};

void cmd_eval(const EvalOpts& o, const Globals& g, const std::vector<std::string>& argv) {
  if (o.truth.empty() && o.test.empty()) throw Error("eval needs --truth and/or --test");
  Manifest m("eval", argv, g);
  const auto scores = io::load_score_column(o.scores);
  m.input_file(o.scores);
  m.params() = {{"scores", o.scores}, {"truth", o.truth}, {"test", o.test}, {"ridge", o.ridge}, {"folds", o.folds}};
  const fs::path out(g.out_dir);

  if (!o.truth.empty()) {
    const auto cluster_of = io::load_ground_truth(o.truth);
    m.input_file(o.truth);
    if (cluster_of.size() != scores.size()) throw Error("ground truth length differs from the scores");
    std::vector<Index> truth;
    for (std::size_t j = 0; j < cluster_of.size(); ++j)
      if (cluster_of[j] > 0) truth.push_back(static_cast<Index>(j));
    const auto curve = precision_recall_curve(scores, truth);
    std::string csv = "threshold,precision,recall\n";
    for (const auto& pt : curve.points) {
      csv += io::format_double(pt.threshold) + "," + io::format_double(pt.precision) + "," +
             io::format_double(pt.recall) + "\n";
    }
    std::ofstream(out / "pr.csv", std::ios::binary) << csv;
    const Index T = o.T > 0 ? o.T : static_cast<Index>(truth.size());
    Index hits = 0;
    for (auto j : top_t_selection(scores, T)) hits += cluster_of[static_cast<std::size_t>(j)] > 0;
    const double top_precision = static_cast<double>(hits) / static_cast<double>(T);
    write_json(out / "pr_summary.json", {{"auc", curve.auc}, {"T", T}, {"top_t_precision", top_precision}});
    m.params()["T"] = T;
    m.output_file(out / "pr.csv");
    m.output_file(out / "pr_summary.json");
    std::cout << "auc=" << io::format_double(curve.auc) << " top_t_precision=" << io::format_double(top_precision)
              << "\n";
  }

  if (!o.test.empty()) {
    if (o.data.empty()) throw Error("--test needs --data for the training set");
    const auto train = io::load_dataset(o.data);
    const auto test = io::load_dataset(o.test);
    m.input_container(o.data);
    m.input_container(o.test);
    const FoldSpec folds{o.folds, g.seed, o.ridge};
    const double tau = o.tau ? *o.tau : cv_threshold(train, scores, default_threshold_grid(), folds);
    std::vector<Index> features;
    for (std::size_t j = 0; j < scores.size(); ++j)
      if (scores[j] >= tau) features.push_back(static_cast<Index>(j));
    const double acc = prediction_accuracy(train, test, features, o.ridge);
    write_json(out / "accuracy.json", {{"tau", tau},
                                       {"tau_from_cv", !o.tau.has_value()},
                                       {"selected", features.size()},
                                       {"accuracy", acc}});
    m.params()["tau"] = tau;
    m.output_file(out / "accuracy.json");
    std::cout << "tau=" << io::format_double(tau) << " selected=" << features.size()
              << " accuracy=" << io::format_double(acc) << "\n";
  }
  m.write(out);
}

// ---- perm ------------------------------------------------------------------

struct PermOpts {
  SelectOpts select;
  std::string scores;
  double tau = 0.9;
  int B = 20;
};

void cmd_perm(const PermOpts& o, const Globals& g, const std::vector<std::string>& argv) {
  const auto& so = o.select;
  if (so.method != "rss" && so.method != "rand-l1") throw Error("perm supports --method rss or rand-l1");
  Manifest m("perm", argv, g);
  const auto d = io::load_dataset(so.data);
  m.input_container(so.data);
  m.params() = select_params(so, g);
  m.params().update({{"tau", o.tau}, {"B", o.B}, {"scores", o.scores}});

  Selector selector;
  if (so.method == "rss") {
    selector = make_rss_selector(load_rss_parcellation(so, d, m), stability_config(so, g));
  } else {
    selector = make_randl1_selector(randl1_config(so, g));
  }

  // Observed selection on the true labels: from --scores when given, else recomputed.
  std::int64_t observed = 0;
  if (!o.scores.empty()) {
    m.input_file(o.scores);
    for (double s : io::load_score_column(o.scores)) observed += s >= o.tau;
  } else {
    for (double s : selector(d, g.seed).normalized()) observed += s >= o.tau;
  }
  const auto report = permutation_fp_estimate(d, selector, o.tau, o.B, g.seed);
  const fs::path out(g.out_dir);
  write_json(out / "permutation.json", {{"tau", report.tau},
                                        {"B", report.B},
                                        {"estimate", report.estimate},
                                        {"observed_count", observed},
                                        {"replicate_counts", report.replicate_counts}});
  m.output_file(out / "permutation.json");
  m.write(out);
  std::cout << "estimate=" << io::format_double(report.estimate) << " observed_count=" << observed << "\n";
}

int run(const std::vector<std::string>& args);

// ---- replay ----------------------------------------------------------------

int cmd_replay(const std::string& manifest_file) {
  const auto j = read_json(manifest_file);
  const auto argv = j.at("argv").get<std::vector<std::string>>();
  if (!argv.empty() && argv.front() == "replay") throw Error("refusing to replay a replay");
  const fs::path cwd = j.at("cwd").get<std::string>();
  if (fs::exists(cwd)) fs::current_path(cwd);
  return run(argv);
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Randomized structural sparsity feature selection"};
  app.set_version_flag("--version", RSS_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (never changes outputs)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();

  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic case/control dataset");
  c_synth->add_option("--dims", synth.dims, "Grid dimensions AxBxC")->capture_default_str();
  c_synth->add_option("--mask", synth.mask, "Voxels of interest")->capture_default_str();
  c_synth->add_option("--n-per-group", synth.n_per_group, "Samples per class")->capture_default_str();
  c_synth->add_option("--clusters", synth.clusters, "Five planted cluster sizes")
      ->delimiter(',')
      ->expected(5)
      ->capture_default_str();
  c_synth->add_option("--noise-sd", synth.noise_sd, "Noise standard deviation")->capture_default_str();
  c_synth->add_option("--threshold", synth.threshold, "Triple-sum threshold")->capture_default_str();

  ClusterOpts cluster;
  auto* c_cluster = app.add_subcommand("cluster", "Parcellate features with k-means");
  c_cluster->add_option("--data", cluster.data, "Dataset container directory")->required();
  c_cluster->add_option("--q", cluster.q, "Number of clusters")->capture_default_str();
  c_cluster->add_option("--restarts", cluster.restarts, "k-means restarts")->capture_default_str();
  c_cluster->add_option("--max-iters", cluster.max_iters, "Lloyd iteration cap")->capture_default_str();
  c_cluster->add_option("--spatial-weight", cluster.spatial_weight, "Weight of voxel coordinates")
      ->capture_default_str();

  SelectOpts select;
  auto* c_select = app.add_subcommand("select", "Score features");
  add_select_options(c_select, select);

  EvalOpts eval;
  auto* c_eval = app.add_subcommand("eval", "Precision-recall and accuracy reports");
  c_eval->add_option("--scores", eval.scores, "Scores CSV")->required();
  c_eval->add_option("--truth", eval.truth, "Ground truth CSV");
  c_eval->add_option("--data", eval.data, "Training dataset (accuracy)");
  c_eval->add_option("--test", eval.test, "Test dataset (accuracy)");
  c_eval->add_option("--T", eval.T, "Top-T size (default: number of true features)");
  c_eval->add_option("--tau", eval.tau, "Score threshold (default: cross-validated)");
  c_eval->add_option("--ridge", eval.ridge, "Ridge weight of the classifier")->capture_default_str();
  c_eval->add_option("--folds", eval.folds, "Cross-validation folds")->capture_default_str();

  PermOpts perm;
  auto* c_perm = app.add_subcommand("perm", "Permutation false-positive estimate");
  add_select_options(c_perm, perm.select);
  c_perm->add_option("--scores", perm.scores, "Observed scores CSV (default: recompute)");
  c_perm->add_option("--tau", perm.tau, "Selection threshold")->capture_default_str();
  c_perm->add_option("--B", perm.B, "Permutations")->check(CLI::PositiveNumber)->capture_default_str();

  std::string replay_file;
  auto* c_replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  c_replay->add_option("manifest", replay_file, "Manifest JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (c_replay->parsed()) return cmd_replay(replay_file);
  fs::create_directories(g.out_dir);
  if (c_synth->parsed()) cmd_synth(synth, g, args);
  if (c_cluster->parsed()) cmd_cluster(cluster, g, args);
  if (c_select->parsed()) cmd_select(select, g, args);
  if (c_eval->parsed()) cmd_eval(eval, g, args);
  if (c_perm->parsed()) cmd_perm(perm, g, args);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
