#pragma once

// `scamlens` command line. Every subcommand reads a JSON config (optional),
// applies flag overrides, runs one pipeline stage and writes its outputs plus
// a manifest-<command>.json listing the resolved config and every file written.

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "scamlens/error.hpp"
#include "scamlens/eval.hpp"
#include "scamlens/features.hpp"
#include "scamlens/ingest.hpp"
#include "scamlens/neural.hpp"
#include "scamlens/pipeline.hpp"
#include "scamlens/resampling.hpp"
#include "scamlens/synth.hpp"
#include "scamlens/table.hpp"
#include "scamlens/trees.hpp"
// last: <resolv.h> (via httplib) defines a `_res` macro that breaks Eigen
#include "scamlens/http_source.hpp"

#ifndef SCAMLENS_VERSION
#define SCAMLENS_VERSION "0.0.0"
#endif

namespace scamlens::cli {

namespace fs = std::filesystem;

struct RunConfig {
  // paths
  std::string out = ".";
  std::string input;       // histories / feature table, depending on the command
  std::string test;        // evaluation table
  std::string checkpoint;  // model.json
  std::string labels;
  std::string fixtures;
  std::string http;  // host:port/prefix/

  std::uint64_t seed = 42;
  double ratio = 0.8;
  std::string resample = "none";
  std::size_t k = 5;
  std::size_t k_enn = 3;
  std::string model = "alstm";

  // neural
  int epochs = 200;
  int hidden = 32;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int patience = 20;
  double valid_fraction = 0.1;
  bool scaled_attention = false;
  std::string optimizer = "adam";

  // trees
  std::size_t n_trees = 100;
  std::size_t n_stages = 100;
  int gb_max_depth = 3;
  double gb_learning_rate = 0.1;
  std::string importance_model = "rf";

  // compare grid
  std::vector<std::string> classifiers = {"alstm", "lstm", "rf", "et", "gb"};
  std::vector<std::string> resamplers = {"none", "ros", "smote", "adasyn", "smote-enn", "smote-tomek", "tomek"};

  // synth
  std::size_t n = 1500;
  double separation = 6.0;
  std::size_t informative = features::kNumFeatures;
  std::size_t dims = features::kNumFeatures;
};

#define SCAMLENS_CONFIG_FIELDS(X)                                                                                   \
  X(out) X(input) X(test) X(checkpoint) X(labels) X(fixtures) X(http) X(seed) X(ratio) X(resample) X(k) X(k_enn)   \
  X(model) X(epochs) X(hidden) X(batch_size) X(learning_rate) X(patience) X(valid_fraction) X(scaled_attention)     \
  X(optimizer) X(n_trees) X(n_stages) X(gb_max_depth) X(gb_learning_rate) X(importance_model) X(classifiers)        \
  X(resamplers) X(n) X(separation) X(informative) X(dims)

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
#define X(name) j[#name] = c.name;
  SCAMLENS_CONFIG_FIELDS(X)
#undef X
  return j;
}

/// Accepts either a bare config object or a manifest with a "config" member.
inline RunConfig config_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = doc.contains("config") ? doc.at("config") : doc;
  RunConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
#define X(name)                         \
  if (it.key() == #name) {              \
    c.name = it->get<decltype(c.name)>(); \
    known = true;                       \
  }
    SCAMLENS_CONFIG_FIELDS(X)
#undef X
    if (!known) throw Error("cli", ErrorKind::BadInput, "unknown config key '" + it.key() + "'");
  }
  return c;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::shared_ptr<spdlog::logger> make_logger() {
  auto logger = spdlog::get("scamlens");
  if (!logger) logger = spdlog::stderr_color_mt("scamlens");
  const char* env = std::getenv("SCAMLENS_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    logger->set_level(spdlog::level::err);
  } else if (level == "debug") {
    logger->set_level(spdlog::level::debug);
  } else {
    logger->set_level(spdlog::level::info);
  }
  logger->set_pattern("[%l] %v");
  return logger;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cli", ErrorKind::BadInput, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline LabeledTable load_table(const std::string& path) {
  if (path.empty()) throw UsageError("--input is required");
  std::ifstream in(path);
  if (!in) throw Error("cli", ErrorKind::BadInput, "cannot open " + path);
  return read_table_csv(in);
}

/// Collects outputs so the manifest can list them.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

  void write(const std::string& name, const std::string& contents) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cli", ErrorKind::BadInput, "cannot write " + (dir_ / name).string());
    out << contents;
    files_.push_back(name);
  }

  void manifest(const std::string& command, const RunConfig& cfg, const nlohmann::json& seeds,
                const std::vector<std::string>& inputs) {
    nlohmann::json m{{"tool", "scamlens"},
                     {"version", SCAMLENS_VERSION},
                     {"command", command},
                     {"config", to_json(cfg)},
                     {"seeds", seeds},
                     {"inputs", inputs},
                     {"outputs", files_}};
    const std::string name = "manifest-" + command + ".json";
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    out << m.dump(2) << '\n';
  }

  fs::path path(const std::string& name) const { return dir_ / name; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

inline resampling::ResampleConfig resample_config(const RunConfig& c, const std::string& method_name) {
  auto method = resampling::parse_method(method_name);
  if (!method) throw UsageError("unknown resampler '" + method_name + "' (none|ros|smote|adasyn|smote-enn|smote-tomek|tomek)");
  return {*method, c.k, c.k_enn, c.seed};
}

inline pipeline::ModelKind model_kind(const std::string& name) {
  auto kind = pipeline::parse_model(name);
  if (!kind) throw UsageError("unknown model '" + name + "' (alstm|lstm|rf|et|gb)");
  return *kind;
}

inline pipeline::Hyperparameters hyperparameters(const RunConfig& c) {
  pipeline::Hyperparameters hp;
  hp.neural.epochs = c.epochs;
  hp.neural.hidden = c.hidden;
  hp.neural.batch_size = c.batch_size;
  hp.neural.learning_rate = c.learning_rate;
  hp.neural.early_stop_patience = c.patience;
  hp.neural.scaled_attention = c.scaled_attention;
  hp.neural.seed = c.seed;
  if (c.optimizer != "adam" && c.optimizer != "sgd") throw UsageError("optimizer must be adam or sgd");
  hp.neural.optimizer = c.optimizer == "sgd" ? neural::Optimizer::SGD : neural::Optimizer::Adam;
  hp.valid_fraction = c.valid_fraction;
  hp.forest.n_trees = c.n_trees;
  hp.gb.n_stages = c.n_stages;
  hp.gb.max_depth = c.gb_max_depth;
  hp.gb.learning_rate = c.gb_learning_rate;
  hp.seed = c.seed;
  return hp;
}

inline std::unique_ptr<ingest::ReportSource> make_source(const RunConfig& c) {
  if (!c.fixtures.empty()) return std::make_unique<ingest::FixtureSource>(c.fixtures);
  if (!c.http.empty()) {
    // host:port/prefix/
    ingest::HttpEndpoint ep;
    std::string rest = c.http;
    if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
    const auto slash = rest.find('/');
    std::string hostport = rest.substr(0, slash);
    ep.path_prefix = slash == std::string::npos ? "/" : rest.substr(slash);
    if (ep.path_prefix.back() != '/') ep.path_prefix.push_back('/');
    const auto colon = hostport.find(':');
    ep.host = hostport.substr(0, colon);
    ep.port = colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1));
    return std::make_unique<ingest::HttpSource>(ep);
  }
  throw UsageError("ingest needs --fixtures DIR or --http HOST:PORT/PREFIX");
}

inline std::string predictions_csv(const LabeledTable& table, const std::vector<ScamLabel>& predicted) {
  std::ostringstream out;
  out << "address,label,predicted\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids[i] << ',' << to_string(table.labels[i]) << ',' << to_string(predicted[i]) << '\n';
  }
  return out.str();
}

inline std::string metrics_csv(const std::string& classifier, const std::string& resampler, const eval::MetricsReport& m) {
  return eval::compare_report({{classifier, resampler, m}}).table_csv;
}

inline std::vector<trees::Importance> importance_for(const LabeledTable& raw_train, const RunConfig& c) {
  if (c.importance_model != "rf" && c.importance_model != "et") throw UsageError("importance model must be rf or et");
  const auto z = features::scaler_apply(features::scaler_fit(raw_train), raw_train);
  trees::ForestOptions opt;
  opt.n_trees = c.n_trees;
  const auto forest = c.importance_model == "rf" ? trees::train_random_forest(z, opt, c.seed)
                                                 : trees::train_extra_trees(z, opt, c.seed);
  return trees::feature_importance(forest);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_synth(const RunConfig& c, spdlog::logger& log) {
  synth::SynthOptions opt{c.n, c.separation, c.dims, c.informative, c.seed};
  const auto table = synth::generate(opt);
  detail::OutputDir out(c.out);
  out.write("features.csv", table_to_csv(table));
  const auto counts = table.class_counts();
  log.info("synth: {} rows ({} normal / {} ponzi / {} other_scam)", table.size(), counts[0], counts[1], counts[2]);
  out.manifest("synth", c, {{"synth", c.seed}}, {});
}

inline void cmd_ingest(const RunConfig& c, spdlog::logger& log) {
  if (c.labels.empty()) throw UsageError("ingest needs --labels FILE");
  std::ifstream labels(c.labels);
  if (!labels) throw Error("cli", ErrorKind::BadInput, "cannot open " + c.labels);
  const auto entries = ingest::read_label_csv(labels);
  auto source = detail::make_source(c);
  const auto result = ingest::validate_and_dedup(entries, *source);
  for (const auto& w : result.warnings) log.warn("{}", w);
  std::ostringstream hist, warn;
  ingest::write_histories(hist, result.kept);
  for (const auto& w : result.warnings) warn << w << '\n';
  detail::OutputDir out(c.out);
  out.write("histories.jsonl", hist.str());
  out.write("ingest_warnings.txt", warn.str());
  log.info("ingest: {} of {} addresses kept", result.kept.size(), entries.size());
  out.manifest("ingest", c, nlohmann::json::object(), {c.labels, c.fixtures.empty() ? c.http : c.fixtures});
}

inline void cmd_featurize(const RunConfig& c, spdlog::logger& log) {
  if (c.input.empty()) throw UsageError("featurize needs --input histories.jsonl");
  std::ifstream in(c.input);
  if (!in) throw Error("cli", ErrorKind::BadInput, "cannot open " + c.input);
  const auto table = features::featurize_all(ingest::read_histories(in));
  detail::OutputDir out(c.out);
  out.write("features.csv", table_to_csv(table));
  log.info("featurize: {} rows x {} features", table.size(), table.dims());
  out.manifest("featurize", c, nlohmann::json::object(), {c.input});
}

inline void cmd_split(const RunConfig& c, spdlog::logger& log) {
  const auto table = detail::load_table(c.input);
  const auto parts = ingest::split(table, c.ratio, c.seed);
  detail::OutputDir out(c.out);
  out.write("train.csv", table_to_csv(parts.train));
  out.write("test.csv", table_to_csv(parts.test));
  log.info("split: {} train / {} test", parts.train.size(), parts.test.size());
  out.manifest("split", c, {{"split", c.seed}}, {c.input});
}

inline void cmd_resample(const RunConfig& c, spdlog::logger& log) {
  const auto raw = detail::load_table(c.input);
  const auto scaler = features::scaler_fit(raw);
  const auto z = resampling::resample(features::scaler_apply(scaler, raw), detail::resample_config(c, c.resample));
  // originals keep their raw values; synthetic rows are mapped back to raw units
  std::unordered_map<std::string, std::size_t> original;
  for (std::size_t i = 0; i < raw.size(); ++i) original.emplace(raw.ids[i], i);
  LabeledTable result = raw.empty_like();
  for (std::size_t i = 0; i < z.size(); ++i) {
    auto it = original.find(z.ids[i]);
    result.push_back(it != original.end() ? raw.rows[it->second] : features::scaler_invert(scaler, z.rows[i]), z.labels[i],
                     z.ids[i]);
  }
  detail::OutputDir out(c.out);
  out.write("resampled.csv", table_to_csv(result));
  const auto counts = result.class_counts();
  log.info("resample ({}): {} -> {} rows ({} / {} / {})", c.resample, raw.size(), result.size(), counts[0], counts[1], counts[2]);
  out.manifest("resample", c, {{"resample", c.seed}}, {c.input});
}

inline void cmd_train(const RunConfig& c, spdlog::logger& log) {
  const auto raw = detail::load_table(c.input);
  const auto kind = detail::model_kind(c.model);
  const auto fit = pipeline::fit(kind, raw, detail::resample_config(c, c.resample), detail::hyperparameters(c));
  detail::OutputDir out(c.out);
  out.write("model.json", pipeline::to_json(fit.model).dump() + "\n");
  if (auto* nn = std::get_if<neural::TrainedModel>(&fit.model.impl)) {
    std::ostringstream logcsv;
    neural::write_log_csv(logcsv, nn->log);
    out.write("training_log.csv", logcsv.str());
    log.info("train {}: {} epochs, best validation loss at epoch {}", c.model, nn->log.size(), nn->best_epoch);
  } else {
    log.info("train {}: done on {} rows", c.model, fit.train_rows);
  }
  out.manifest("train", c, {{"model", c.seed}, {"resample", c.seed}}, {c.input});
}

inline void cmd_evaluate(const RunConfig& c, spdlog::logger& log) {
  if (c.checkpoint.empty()) throw UsageError("evaluate needs --checkpoint model.json");
  const auto test_path = c.test.empty() ? c.input : c.test;
  const auto table = detail::load_table(test_path);
  const auto model = pipeline::model_from_json(nlohmann::json::parse(detail::read_file(c.checkpoint)));
  const auto e = pipeline::evaluate(model, table);
  detail::OutputDir out(c.out);
  out.write("report.txt", eval::format_metrics(e.metrics, e.confusion));
  out.write("metrics.csv", detail::metrics_csv(std::string(pipeline::to_string(model.kind)), c.resample, e.metrics));
  out.write("predictions.csv", detail::predictions_csv(table, e.predicted));
  std::cout << "weighted F1: " << csv::format_value(e.metrics.weighted.f1) << '\n';
  log.info("evaluate: accuracy {:.4f}, weighted F1 {:.4f}, macro F1 {:.4f}", e.metrics.accuracy, e.metrics.weighted.f1,
           e.metrics.macro.f1);
  out.manifest("evaluate", c, nlohmann::json::object(), {c.checkpoint, test_path});
}

inline void cmd_importance(const RunConfig& c, spdlog::logger& log) {
  const auto raw = detail::load_table(c.input);
  const auto ranked = detail::importance_for(raw, c);
  std::ostringstream csv_out;
  trees::write_importance_csv(csv_out, ranked);
  detail::OutputDir out(c.out);
  out.write("importance.csv", csv_out.str());
  for (std::size_t i = 0; i < std::min<std::size_t>(5, ranked.size()); ++i) {
    log.info("importance #{}: {} {:.4f}", i + 1, ranked[i].feature, ranked[i].vim);
  }
  out.manifest("importance", c, {{"forest", c.seed}}, {c.input});
}

inline void cmd_compare(const RunConfig& c, spdlog::logger& log) {
  const auto table = detail::load_table(c.input);
  const auto parts = ingest::split(table, c.ratio, c.seed);
  const auto hp = detail::hyperparameters(c);
  std::vector<eval::ComparisonRow> rows;
  for (const auto& clf : c.classifiers) {
    const auto kind = detail::model_kind(clf);
    for (const auto& rs : c.resamplers) {
      const auto fit = pipeline::fit(kind, parts.train, detail::resample_config(c, rs), hp);
      const auto e = pipeline::evaluate(fit.model, parts.test);
      log.info("compare {} & {}: weighted F1 {:.4f}", clf, rs, e.metrics.weighted.f1);
      rows.push_back({clf, rs, e.metrics});
    }
  }
  const auto doc = eval::compare_report(rows, detail::importance_for(parts.train, c));
  detail::OutputDir out(c.out);
  out.write("report.txt", doc.table_text);
  out.write("report.csv", doc.table_csv);
  out.write("chart.csv", doc.chart_csv);
  out.write("importance.csv", doc.importance_csv);
  std::cout << doc.table_text;
  out.manifest("compare", c, {{"split", c.seed}, {"resample", c.seed}, {"model", c.seed}}, {c.input});
}

// ---------------------------------------------------------------------------

inline const char* kCommands[] = {"ingest", "featurize", "split", "resample", "train",
                                  "evaluate", "importance", "compare", "synth"};

/// Returns the process exit code: 0 success, 1 pipeline error, 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& err = std::cerr) {
  CLI::App app{"scamlens: Bitcoin scam-detection pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SCAMLENS_VERSION);

  std::string config_path;
  RunConfig flags;
  std::vector<std::pair<std::string, CLI::Option*>> given;
  auto add = [&](CLI::App* sub, const std::string& flag, auto& field, const std::string& help) {
    CLI::Option* opt = sub->add_option(flag, field, help);
    given.emplace_back(flag, opt);
    return opt;
  };

  std::unordered_map<std::string, CLI::App*> subs;
  for (const char* name : kCommands) {
    CLI::App* sub = app.add_subcommand(name);
    subs[name] = sub;
    sub->add_option("--config", config_path, "JSON config or a previous manifest");
    add(sub, "--out", flags.out, "output directory");
    add(sub, "--seed", flags.seed, "random seed");
  }
  subs["synth"]->description("generate a synthetic Gaussian feature table");
  subs["ingest"]->description("resolve labeled addresses into transaction histories");
  subs["featurize"]->description("extract the 17 address features");
  subs["split"]->description("stratified train/test split");
  subs["resample"]->description("rebalance classes of a feature table");
  subs["train"]->description("train one classifier");
  subs["evaluate"]->description("score a trained model on a feature table");
  subs["importance"]->description("Gini-decrease feature importance");
  subs["compare"]->description("classifier x resampler grid report");

  for (const char* name : {"featurize", "split", "resample", "train", "evaluate", "importance", "compare"}) {
    add(subs[name], "--input", flags.input, "input file");
  }
  add(subs["ingest"], "--labels", flags.labels, "label CSV (address,label)");
  add(subs["ingest"], "--fixtures", flags.fixtures, "directory of <address>.json reports");
  add(subs["ingest"], "--http", flags.http, "report endpoint host:port/prefix/");
  for (const char* name : {"split", "compare"}) add(subs[name], "--ratio", flags.ratio, "train fraction");
  for (const char* name : {"resample", "train", "evaluate", "compare"}) {
    add(subs[name], "--resample", flags.resample, "none|ros|smote|adasyn|smote-enn|smote-tomek|tomek");
  }
  for (const char* name : {"resample", "train", "compare"}) add(subs[name], "--k", flags.k, "neighbours for SMOTE/ADASYN");
  add(subs["train"], "--model", flags.model, "alstm|lstm|rf|et|gb");
  for (const char* name : {"train", "compare"}) {
    add(subs[name], "--epochs", flags.epochs, "neural training epochs");
    add(subs[name], "--hidden", flags.hidden, "LSTM hidden size");
    add(subs[name], "--trees", flags.n_trees, "trees per forest");
    add(subs[name], "--stages", flags.n_stages, "boosting stages");
  }
  add(subs["evaluate"], "--checkpoint", flags.checkpoint, "model.json from train");
  add(subs["evaluate"], "--test", flags.test, "table to evaluate (defaults to --input)");
  add(subs["importance"], "--model", flags.importance_model, "rf|et");
  add(subs["importance"], "--trees", flags.n_trees, "trees per forest");
  add(subs["compare"], "--classifiers", flags.classifiers, "subset of alstm,lstm,rf,et,gb")->delimiter(',');
  add(subs["compare"], "--resamplers", flags.resamplers, "subset of resampler names")->delimiter(',');
  add(subs["synth"], "--n", flags.n, "row count");
  add(subs["synth"], "--separation", flags.separation, "distance between class means in sigmas");
  add(subs["synth"], "--informative", flags.informative, "number of informative columns");
  add(subs["synth"], "--dims", flags.dims, "number of columns");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    std::cout << SCAMLENS_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  const auto chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  auto log = detail::make_logger();
  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = config_from_json(nlohmann::json::parse(detail::read_file(config_path)));
    // flags override the config file
    const nlohmann::json flag_values = to_json(flags);
    nlohmann::json merged = to_json(cfg);
    static const std::unordered_map<std::string, std::string> key_for = {
        {"--out", "out"},         {"--seed", "seed"},         {"--input", "input"},
        {"--labels", "labels"},   {"--fixtures", "fixtures"}, {"--http", "http"},
        {"--ratio", "ratio"},     {"--resample", "resample"}, {"--k", "k"},
        {"--model", "model"},     {"--epochs", "epochs"},     {"--hidden", "hidden"},
        {"--trees", "n_trees"},   {"--stages", "n_stages"},   {"--checkpoint", "checkpoint"},
        {"--test", "test"},       {"--classifiers", "classifiers"}, {"--resamplers", "resamplers"},
        {"--n", "n"},             {"--separation", "separation"},   {"--informative", "informative"},
        {"--dims", "dims"}};
    for (const auto& [flag, opt] : given) {
      if (opt->count() == 0 || !chosen->get_option_no_throw(flag) || chosen->get_option_no_throw(flag) != opt) continue;
      std::string key = key_for.at(flag);
      if (command == "importance" && flag == "--model") key = "importance_model";
      merged[key] = flag_values[key];
    }
    cfg = config_from_json(merged);

    if (command == "synth") cmd_synth(cfg, *log);
    else if (command == "ingest") cmd_ingest(cfg, *log);
    else if (command == "featurize") cmd_featurize(cfg, *log);
    else if (command == "split") cmd_split(cfg, *log);
    else if (command == "resample") cmd_resample(cfg, *log);
    else if (command == "train") cmd_train(cfg, *log);
    else if (command == "evaluate") cmd_evaluate(cfg, *log);
    else if (command == "importance") cmd_importance(cfg, *log);
    else if (command == "compare") cmd_compare(cfg, *log);
    return 0;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n\n" << chosen->help();
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    err << "error [cli/BadInput]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace scamlens::cli
