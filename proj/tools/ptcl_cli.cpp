#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptcl/config.hpp"
#include "ptcl/evaluation.hpp"
#include "ptcl/plot.hpp"

namespace fs = std::filesystem;
using namespace ptcl;

namespace {

constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Relative output paths land under $PTCL_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& path) {
  fs::path p(path);
  const char* root = std::getenv("PTCL_OUTPUT_ROOT");
  if (p.is_relative() && root && *root) return fs::path(root) / p;
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw std::runtime_error("missing artifact: " + path.string());
  return load_json_file(path);
}

void require_path(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw std::runtime_error(what + " not found: " + path.string());
}

Json split_json(const SplitSpec& split, std::uint64_t seed, const SplitOptions& options) {
  return Json{{"seed", seed},
              {"mode", to_string(options.mode)},
              {"ratios", {{"train", options.ratios.train}, {"val", options.ratios.val}, {"test", options.ratios.test}}},
              {"boundary_time", split.boundary_time},
              {"train", split.train_nodes},
              {"val", split.val_nodes},
              {"test", split.test_nodes}};
}

SplitMode parse_split_mode(const std::string& text) {
  if (text == "chronological") return SplitMode::chronological;
  if (text == "stratified") return SplitMode::stratified;
  throw UsageError("unknown split mode '" + text + "'");
}

// ---- prepare ----

struct PrepareArgs {
  std::string synthetic, jodie, generic, out;
  bool drop_dynamic = false;
  std::optional<std::uint64_t> seed;
  std::uint64_t split_seed = 0;
  std::string split_mode = "chronological";
};

int cmd_prepare(const PrepareArgs& a) {
  const int sources = !a.synthetic.empty() + !a.jodie.empty() + !a.generic.empty();
  if (sources != 1) throw UsageError("prepare needs exactly one of --synthetic, --jodie, --generic");
  LabeledDataset data;
  if (!a.synthetic.empty()) {
    DriftConfig cfg;
    try {
      cfg = drift_preset(a.synthetic);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (a.seed) cfg.seed = *a.seed;
    data = generate_drift(cfg);
  } else if (!a.jodie.empty()) {
    require_path(a.jodie, "JODIE file");
    data = load_jodie_csv(a.jodie);
  } else {
    require_path(a.generic, "dataset directory");
    data = load_dsub_like(a.generic);
  }
  if (a.drop_dynamic) data.dynamic_labels.reset();

  const fs::path out = output_path(a.out);
  fs::create_directories(out);
  save_generic(data, out, data.dynamic_labels.has_value());
  SplitOptions options;
  options.mode = parse_split_mode(a.split_mode);
  const SplitSpec split = split_nodes(data.graph, data.final_labels, options.ratios, a.split_seed, options.mode);
  write_json(out / "split.json", split_json(split, a.split_seed, options));
  std::printf("prepared %s: %zu nodes, %zu events, %zu labeled -> %s\n", data.name.c_str(), data.graph.node_count(),
              data.graph.event_count(), data.labeled_count(), out.string().c_str());
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string config, out;
  std::vector<std::string> overrides;
  std::vector<std::uint64_t> seeds;
};

Json epoch_json(const EpochRecord& r) {
  return Json{{"type", "epoch"}, {"phase", r.phase}, {"iteration", r.iteration},
              {"epoch", r.epoch},  {"loss", r.loss},   {"val_metric", r.val_metric}};
}

Json iteration_json(const IterationRecord& r) {
  return Json{{"type", "iteration"},
              {"tau", r.tau},
              {"val_metric", r.val_metric},
              {"pseudo_count", r.pseudo_count},
              {"mean_weight", r.mean_weight}};
}

void write_predictions(const fs::path& path, const Predictions& p, const LabeledDataset& data) {
  std::ostringstream out;
  out << "node_id,timestamp,label";
  for (Eigen::Index c = 0; c < p.probabilities.cols(); ++c) out << ",p" << c;
  out << ",predicted\n";
  char buf[64];
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", p.times[i]);
    out << p.nodes[i] << "," << buf << "," << data.final_labels.at(static_cast<std::size_t>(p.nodes[i]));
    for (Eigen::Index c = 0; c < p.probabilities.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", p.probabilities(static_cast<Eigen::Index>(i), c));
      out << "," << buf;
    }
    out << "," << p.labels[i] << "\n";
  }
  write_text(path, out.str());
}

std::string dataset_id(const DatasetSource& source, const LabeledDataset& data) {
  if (source.kind == DatasetKind::synthetic) return data.name + "@seed" + std::to_string(source.synthetic.seed);
  return data.name + ":" + source.path;
}

int cmd_train(const TrainArgs& a) {
  require_path(a.config, "config file");
  Json doc = load_json_file(a.config);
  std::vector<std::string> problems;
  for (const auto& o : a.overrides) {
    try {
      apply_override(doc, o);
    } catch (const std::exception& e) {
      problems.push_back(e.what());
    }
  }
  if (!a.seeds.empty()) doc["seeds"] = a.seeds;
  if (!a.out.empty()) doc["output_dir"] = a.out;
  RunConfig cfg;
  try {
    cfg = parse_run_config(doc);
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  if (cfg.dataset.kind != DatasetKind::synthetic && !cfg.dataset.path.empty() && !fs::exists(cfg.dataset.path)) {
    problems.push_back("dataset.path: not found: " + cfg.dataset.path);
  }
  if (!problems.empty()) throw ConfigError(problems);

  const LabeledDataset data = load_dataset(cfg.dataset);
  if (cfg.method.method == Method::dls && !data.dynamic_labels) {
    throw UnsupportedMethodError("dls needs dynamic labels, but dataset '" + data.name + "' has none");
  }
  const auto sampler = make_sampler(data.graph, cfg.sampler);
  const fs::path out = output_path(cfg.output_dir);
  fs::create_directories(out);
  const Json resolved = to_json(cfg);

  Json run_manifest{{"tool", "ptcl"},
                    {"version", kVersion},
                    {"config_path", fs::absolute(a.config).string()},
                    {"dataset", dataset_id(cfg.dataset, data)},
                    {"output_dir", out.string()},
                    {"config", resolved},
                    {"runs", Json::array()}};

  for (std::uint64_t seed : cfg.seeds) {
    const auto started = std::chrono::steady_clock::now();
    const fs::path dir = out / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().filename().string().rfind("pseudo_labels_iter", 0) == 0) fs::remove(entry.path());
    }
    const SplitSpec split = split_nodes(data.graph, data.final_labels, cfg.split.ratios, seed, cfg.split.mode);
    MethodSpec spec = cfg.method;
    spec.seed = seed;
    const TrainContext ctx{data, split, *sampler};
    RunHooks hooks;
    hooks.on_pseudo_labels = [&](const PseudoLabelSet& set) {
      write_pseudo_labels_csv(dir / ("pseudo_labels_iter" + std::to_string(set.iteration) + ".csv"), set);
    };
    std::fprintf(stderr, "[seed %llu] training %s on %s\n", static_cast<unsigned long long>(seed),
                 to_string(spec.method).c_str(), data.name.c_str());
    const RunResult result = run_method(ctx, cfg.encoder, spec, nullptr, hooks);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    std::ostringstream history;
    for (const auto& r : result.history.epochs) history << epoch_json(r).dump() << "\n";
    for (const auto& r : result.history.iterations) history << iteration_json(r).dump() << "\n";
    history << Json{{"type", "summary"},
                    {"best_iteration", result.history.best_iteration},
                    {"best_val_metric", result.history.best_val_metric},
                    {"metric", result.metric_name},
                    {"val_metric", result.val_metric},
                    {"test_metric", result.test_metric}}
                   .dump()
            << "\n";
    write_text(dir / "history.jsonl", history.str());
    write_predictions(dir / "predictions.csv", result.test_predictions, data);
    write_json(dir / "split.json", split_json(split, seed, cfg.split));
    save_checkpoint(dir / "checkpoint.json", result.model.parameters(),
                    Json{{"method", to_string(spec.method)}, {"seed", seed}, {"best_iteration", result.history.best_iteration}});

    Json timings = Json::object();
    for (const auto& [phase, s] : result.history.phase_seconds) timings[phase] = s;
    timings["total"] = seconds;
    Json metrics{{"name", result.metric_name}, {"val", result.val_metric}, {"test", result.test_metric}};
    Json manifest{{"tool", "ptcl"},
                  {"version", kVersion},
                  {"config_path", fs::absolute(a.config).string()},
                  {"dataset", dataset_id(cfg.dataset, data)},
                  {"output_dir", dir.string()},
                  {"seed", seed},
                  {"config", resolved},
                  {"timings_seconds", timings},
                  {"metrics", metrics}};
    write_json(dir / "manifest.json", manifest);
    run_manifest["runs"].push_back(Json{{"seed", seed}, {"dir", dir.filename().string()}, {"metrics", metrics}});
    std::printf("seed %llu: val %s %.4f, test %s %.4f (%.1fs)\n", static_cast<unsigned long long>(seed),
                result.metric_name.c_str(), result.val_metric, result.metric_name.c_str(), result.test_metric, seconds);
  }
  write_json(out / "manifest.json", run_manifest);
  return 0;
}

// ---- evaluate ----

struct SeedArtifacts {
  std::uint64_t seed = 0;
  fs::path dir;
};

std::vector<SeedArtifacts> seed_dirs(const fs::path& run, const Json& manifest) {
  std::vector<SeedArtifacts> out;
  if (!manifest.contains("runs")) throw std::runtime_error("manifest without runs: " + (run / "manifest.json").string());
  for (const auto& r : manifest["runs"]) {
    SeedArtifacts s{r["seed"].get<std::uint64_t>(), run / r["dir"].get<std::string>()};
    require_path(s.dir, "seed directory");
    out.push_back(std::move(s));
  }
  return out;
}

struct PredictionTable {
  std::vector<int> labels;
  std::vector<std::vector<double>> probabilities;
  std::vector<ClassId> predicted;
};

PredictionTable read_predictions(const fs::path& path) {
  require_path(path, "predictions");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  PredictionTable t;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() < 5) throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": too few columns");
    t.labels.push_back(std::stoi(cells[2]));
    std::vector<double> p;
    for (std::size_t i = 3; i + 1 < cells.size(); ++i) p.push_back(std::stod(cells[i]));
    t.probabilities.push_back(std::move(p));
    t.predicted.push_back(std::stoi(cells.back()));
  }
  return t;
}

double score_table(const PredictionTable& t, std::string& metric) {
  const std::size_t classes = t.probabilities.empty() ? 0 : t.probabilities.front().size();
  if (classes == 2) {
    std::vector<double> scores;
    for (const auto& p : t.probabilities) scores.push_back(p[1]);
    const bool both = std::count(t.labels.begin(), t.labels.end(), 1) > 0 && std::count(t.labels.begin(), t.labels.end(), 0) > 0;
    if (both) {
      metric = "auc";
      return auc(scores, t.labels);
    }
  }
  metric = "acc";
  std::vector<ClassId> labels(t.labels.begin(), t.labels.end());
  return accuracy(t.predicted, labels);
}

std::vector<double> iteration_curve(const fs::path& history) {
  require_path(history, "history");
  std::ifstream in(history);
  std::vector<double> curve;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    const Json r = Json::parse(line);
    if (r.value("type", "") == "iteration") curve.push_back(r["val_metric"].get<double>());
  }
  return curve;
}

EvalReport evaluate_run(const fs::path& run) {
  const Json manifest = read_json(run / "manifest.json");
  EvalReport report;
  report.method = manifest["config"]["method"]["name"].get<std::string>();
  std::vector<std::vector<double>> curves;
  for (const auto& s : seed_dirs(run, manifest)) {
    SeedOutcome outcome;
    outcome.seed = s.seed;
    try {
      const PredictionTable t = read_predictions(s.dir / "predictions.csv");
      outcome.value = score_table(t, report.metric_name);
      outcome.ok = true;
      report.per_seed_values.push_back(outcome.value);
      curves.push_back(iteration_curve(s.dir / "history.jsonl"));
    } catch (const std::exception& e) {
      outcome.error = e.what();
    }
    report.seeds.push_back(outcome);
  }
  std::size_t longest = 0;
  for (const auto& c : curves) longest = std::max(longest, c.size());
  for (std::size_t i = 0; i < longest; ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& c : curves) {
      if (i < c.size()) sum += c[i], ++n;
    }
    report.convergence_curve.push_back(sum / static_cast<double>(n));
  }
  finalize_report(report);
  return report;
}

Json report_json(const EvalReport& r) {
  Json seeds = Json::array();
  for (const auto& s : r.seeds) {
    Json j{{"seed", s.seed}, {"ok", s.ok}};
    if (s.ok) j["value"] = s.value;
    else j["error"] = s.error;
    seeds.push_back(j);
  }
  Json doc{{"method", r.method},
           {"metric", r.metric_name},
           {"seeds", seeds},
           {"per_seed", r.per_seed_values},
           {"mean", r.mean},
           {"std", r.standard_deviation ? Json(*r.standard_deviation) : Json(nullptr)},
           {"cell", format_cell(r)},
           {"convergence_curve", r.convergence_curve}};
  return doc;
}

int cmd_evaluate(const std::string& run_arg, const std::string& out_arg) {
  const fs::path run = fs::path(run_arg);
  require_path(run, "run directory");
  const EvalReport report = evaluate_run(run);
  const fs::path out = out_arg.empty() ? run : output_path(out_arg);
  fs::create_directories(out);
  write_json(out / "report.json", report_json(report));
  if (!report.convergence_curve.empty()) {
    write_curves_svg(out / "convergence.svg", {{report.method, report.convergence_curve}}, "Validation by EM iteration",
                     "iteration", report.metric_name);
  }
  std::printf("%s: %s %s over %zu seed(s)\n", report.method.c_str(), report.metric_name.c_str(),
              format_cell(report).c_str(), report.per_seed_values.size());
  for (const auto& s : report.seeds) {
    if (!s.ok) std::fprintf(stderr, "seed %llu failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
  }
  return report.per_seed_values.empty() ? 1 : 0;
}

// ---- compare ----

int cmd_compare(const std::vector<std::string>& runs, const std::string& out_arg) {
  if (runs.empty()) throw UsageError("compare needs at least one run directory");
  std::ostringstream md;
  md << "| method | metric | seeds | mean ± std |\n|---|---|---|---|\n";
  std::map<std::string, std::vector<double>> curves;
  Json rows = Json::array();
  for (const auto& r : runs) {
    const fs::path run = fs::path(r);
    require_path(run, "run directory");
    const EvalReport report = evaluate_run(run);
    md << "| " << report.method << " | " << report.metric_name << " | " << report.per_seed_values.size() << " | "
       << format_cell(report) << " |\n";
    rows.push_back(report_json(report));
    if (!report.convergence_curve.empty()) curves[report.method + " (" + run.filename().string() + ")"] = report.convergence_curve;
  }
  std::cout << md.str();
  if (!out_arg.empty()) {
    const fs::path out = output_path(out_arg);
    fs::create_directories(out);
    write_text(out / "compare.md", md.str());
    write_json(out / "compare.json", rows);
    if (!curves.empty()) write_curves_svg(out / "convergence.svg", curves, "Validation by EM iteration", "iteration", "val");
  }
  return 0;
}

// ---- analyze ----

struct AnalyzeArgs {
  std::string run, dataset, pseudo, out;
  std::size_t bins = 10;
};

std::optional<fs::path> last_pseudo_dump(const fs::path& dir) {
  std::optional<fs::path> best;
  long best_iter = -1;
  const std::regex pattern("pseudo_labels_iter([0-9]+)\\.csv");
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern) && std::stol(m[1]) > best_iter) {
      best_iter = std::stol(m[1]);
      best = entry.path();
    }
  }
  return best;
}

Json histogram_json(const std::vector<double>& values, std::size_t bins) {
  return Json{{"count", values.size()}, {"bins", bins}, {"histogram", histogram(values, bins)}};
}

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.run.empty() == a.dataset.empty()) throw UsageError("analyze needs exactly one of --run or --dataset");
  std::vector<double> pseudo_values, truth_values;
  bool have_pseudo = false, have_truth = false;
  fs::path out;

  if (!a.run.empty()) {
    const fs::path run = fs::path(a.run);
    require_path(run, "run directory");
    const Json manifest = read_json(run / "manifest.json");
    const RunConfig cfg = parse_run_config(manifest["config"]);
    const LabeledDataset data = load_dataset(cfg.dataset);
    for (const auto& s : seed_dirs(run, manifest)) {
      const SplitSpec split = split_nodes(data.graph, data.final_labels, cfg.split.ratios, s.seed, cfg.split.mode);
      PseudoLabelSet set;
      if (const auto dump = last_pseudo_dump(s.dir)) {
        set = read_pseudo_labels_csv(*dump);
      } else {
        // Supervised runs: every earlier timestamp carries the final label.
        for (NodeId u : split.train_nodes) {
          const auto& tl = data.graph.timeline(u);
          for (std::size_t i = 0; i + 1 < tl.size(); ++i) set.entries.push_back({u, tl[i], data.final_labels[u], 1.0});
        }
      }
      const auto pv = consistency_values(label_sequences(set, data.final_labels));
      pseudo_values.insert(pseudo_values.end(), pv.begin(), pv.end());
      have_pseudo = true;
      if (data.dynamic_labels) {
        const auto tv = consistency_values(dynamic_label_sequences(data, split.train_nodes));
        truth_values.insert(truth_values.end(), tv.begin(), tv.end());
        have_truth = true;
      }
    }
    out = a.out.empty() ? run : output_path(a.out);
  } else {
    require_path(a.dataset, "dataset directory");
    const LabeledDataset data = load_dsub_like(a.dataset);
    std::vector<NodeId> labeled;
    for (std::size_t u = 0; u < data.final_labels.size(); ++u) {
      if (data.final_labels[u] != kUnlabeled) labeled.push_back(static_cast<NodeId>(u));
    }
    if (!a.pseudo.empty()) {
      require_path(a.pseudo, "pseudo-label dump");
      pseudo_values = consistency_values(label_sequences(read_pseudo_labels_csv(a.pseudo), data.final_labels));
      have_pseudo = true;
    }
    if (data.dynamic_labels) {
      truth_values = consistency_values(dynamic_label_sequences(data, labeled));
      have_truth = true;
    }
    if (a.out.empty()) throw UsageError("analyze --dataset needs --out");
    out = output_path(a.out);
  }
  if (!have_pseudo && !have_truth) throw std::runtime_error("nothing to analyze: no pseudo-labels and no ground-truth labels");

  fs::create_directories(out);
  Json doc = Json::object();
  if (have_pseudo) {
    doc["pseudo_labels"] = histogram_json(pseudo_values, a.bins);
    write_histogram_svg(out / "consistency_pseudo.svg", histogram(pseudo_values, a.bins), "Pseudo-label consistency");
  }
  if (have_truth) {
    doc["ground_truth"] = histogram_json(truth_values, a.bins);
    write_histogram_svg(out / "consistency_truth.svg", histogram(truth_values, a.bins), "Ground-truth consistency");
  }
  write_json(out / "analysis.json", doc);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporal curriculum training for dynamic node classification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  PrepareArgs prep;
  auto* prepare = app.add_subcommand("prepare", "Materialize a dataset in the generic format plus a split manifest");
  prepare->add_option("--synthetic", prep.synthetic, "Synthetic preset (drift-default, drift-static)");
  prepare->add_option("--jodie", prep.jodie, "JODIE-format CSV file");
  prepare->add_option("--generic", prep.generic, "Generic-format directory");
  prepare->add_option("--out", prep.out, "Output directory")->required();
  prepare->add_flag("--drop-dynamic-labels", prep.drop_dynamic, "Omit per-event labels from the output");
  prepare->add_option("--seed", prep.seed, "Generator seed for synthetic presets");
  prepare->add_option("--split-seed", prep.split_seed, "Seed for the split manifest");
  prepare->add_option("--split-mode", prep.split_mode, "chronological or stratified");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train one method over the configured seeds");
  train->add_option("--config", train_args.config, "JSON config file")->required();
  train->add_option("--set", train_args.overrides, "Override a config key, e.g. method.beta=0.9");
  train->add_option("--seeds", train_args.seeds, "Replace the configured seeds");
  train->add_option("--out", train_args.out, "Replace the configured output directory");

  std::string eval_run, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score a finished run and write report.json");
  evaluate->add_option("--run", eval_run, "Run directory written by train")->required();
  evaluate->add_option("--out", eval_out, "Report directory (default: the run directory)");

  std::vector<std::string> compare_runs;
  std::string compare_out;
  auto* compare = app.add_subcommand("compare", "Side-by-side table over several runs");
  compare->add_option("runs", compare_runs, "Run directories")->required();
  compare->add_option("--out", compare_out, "Write compare.md, compare.json and a convergence plot here");

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "Consistency histograms of pseudo-labels and ground truth");
  analyze->add_option("--run", an.run, "Run directory written by train");
  analyze->add_option("--dataset", an.dataset, "Generic-format dataset directory");
  analyze->add_option("--pseudo", an.pseudo, "Pseudo-label dump to analyze with --dataset");
  analyze->add_option("--bins", an.bins, "Histogram bins")->check(CLI::PositiveNumber);
  analyze->add_option("--out", an.out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) return cmd_prepare(prep);
    if (*train) return cmd_train(train_args);
    if (*evaluate) return cmd_evaluate(eval_run, eval_out);
    if (*compare) return cmd_compare(compare_runs, compare_out);
    if (*analyze) return cmd_analyze(an);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config errors:\n");
    for (const auto& p : e.problems()) std::fprintf(stderr, "  - %s\n", p.c_str());
    return 2;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const UnsupportedMethodError& e) {
    std::fprintf(stderr, "unsupported method: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
