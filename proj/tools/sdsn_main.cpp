// Command-line front end: train, eval, gradcheck, sparseness, synth, bench.
//
// Exit codes are a stable contract:
//   0 success, 2 configuration error, 3 data/model error,
//   4 diverged training, 5 failed gradient check.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "sdsn/data_io.hpp"
#include "sdsn/errors.hpp"
#include "sdsn/gradcheck.hpp"
#include "sdsn/kernels.hpp"
#include "sdsn/metrics.hpp"
#include "sdsn/snnm.hpp"
#include "sdsn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDiverged = 4;
constexpr int kExitGradcheck = 5;

int exit_code_for(const sdsn::Error& e) {
  switch (e.code()) {
    case sdsn::ErrorCode::InvalidConfig:
    case sdsn::ErrorCode::NonDivisible:
      return kExitConfig;
    case sdsn::ErrorCode::DivergedTraining:
      return kExitDiverged;
    case sdsn::ErrorCode::KinkAvoidanceFailed:
      return kExitGradcheck;
    default:
      return kExitData;
  }
}

// Everything a run can configure. Flat `key = value` config file with `#`
// comments; command-line flags override file values.
struct RunConfig {
  sdsn::HyperParams hp;
  std::string data;
  std::string labels;
  std::string model;
  std::string out;
  sdsn::FeatureFormat format = sdsn::FeatureFormat::Csv;
  std::size_t repeats = 5;
  // synth keys
  std::size_t classes = 5;
  std::size_t dim = 20;
  std::size_t per_class = 100;
  double separation = 2.5;
  double noise_sd = 1.5;
};

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    sdsn::raise(sdsn::ErrorCode::InvalidConfig,
                "config key '" + key + "': bad number '" + value + "'");
  }
}

std::size_t parse_count(const std::string& value, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size() || v < 0) throw std::invalid_argument(value);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    sdsn::raise(sdsn::ErrorCode::InvalidConfig,
                "config key '" + key + "': bad count '" + value + "'");
  }
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value,
                        std::size_t line) {
  if (key == "epsilon") cfg.hp.epsilon = parse_double(value, key);
  else if (key == "alpha") cfg.hp.alpha = parse_double(value, key);
  else if (key == "beta") cfg.hp.beta = parse_double(value, key);
  else if (key == "groups") cfg.hp.groups = parse_count(value, key);
  else if (key == "epochs") cfg.hp.epochs = parse_count(value, key);
  else if (key == "layers") cfg.hp.layers = parse_count(value, key);
  else if (key == "hidden") cfg.hp.hidden = parse_count(value, key);
  else if (key == "activation") cfg.hp.activation = sdsn::activation_from_string(value);
  else if (key == "variant") cfg.hp.grad_variant = sdsn::variant_from_string(value);
  else if (key == "penalty") cfg.hp.penalty = sdsn::penalty_from_string(value);
  else if (key == "seed") cfg.hp.seed = parse_count(value, key);
  else if (key == "data") cfg.data = value;
  else if (key == "labels") cfg.labels = value;
  else if (key == "model") cfg.model = value;
  else if (key == "out") cfg.out = value;
  else if (key == "format") cfg.format = sdsn::format_from_string(value);
  else if (key == "repeats") cfg.repeats = parse_count(value, key);
  else if (key == "classes") cfg.classes = parse_count(value, key);
  else if (key == "dim") cfg.dim = parse_count(value, key);
  else if (key == "per_class") cfg.per_class = parse_count(value, key);
  else if (key == "separation") cfg.separation = parse_double(value, key);
  else if (key == "noise_sd") cfg.noise_sd = parse_double(value, key);
  else
    sdsn::raise(sdsn::ErrorCode::InvalidConfig,
                "unknown config key '" + key + "' at line " + std::to_string(line));
}

void load_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in)
    sdsn::raise(sdsn::ErrorCode::InvalidConfig, "cannot open config " + path.string());
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      sdsn::raise(sdsn::ErrorCode::InvalidConfig,
                  "config line " + std::to_string(line_no) + " is not 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      sdsn::raise(sdsn::ErrorCode::InvalidConfig,
                  "config line " + std::to_string(line_no) + " is missing a key or value");
    apply_config_entry(cfg, key, value, line_no);
  }
}

// Flag values land in optionals; only explicitly set flags override the file.
struct Overrides {
  std::optional<double> epsilon, alpha, beta, separation, noise_sd;
  std::optional<std::size_t> groups, epochs, layers, hidden, seed, repeats, classes, dim,
      per_class;
  std::optional<std::string> activation, variant, penalty, data, labels, model, out, format;

  void apply(RunConfig& cfg) const {
    if (epsilon) cfg.hp.epsilon = *epsilon;
    if (alpha) cfg.hp.alpha = *alpha;
    if (beta) cfg.hp.beta = *beta;
    if (groups) cfg.hp.groups = *groups;
    if (epochs) cfg.hp.epochs = *epochs;
    if (layers) cfg.hp.layers = *layers;
    if (hidden) cfg.hp.hidden = *hidden;
    if (activation) cfg.hp.activation = sdsn::activation_from_string(*activation);
    if (variant) cfg.hp.grad_variant = sdsn::variant_from_string(*variant);
    if (penalty) cfg.hp.penalty = sdsn::penalty_from_string(*penalty);
    if (seed) cfg.hp.seed = *seed;
    if (data) cfg.data = *data;
    if (labels) cfg.labels = *labels;
    if (model) cfg.model = *model;
    if (out) cfg.out = *out;
    if (format) cfg.format = sdsn::format_from_string(*format);
    if (repeats) cfg.repeats = *repeats;
    if (classes) cfg.classes = *classes;
    if (dim) cfg.dim = *dim;
    if (per_class) cfg.per_class = *per_class;
    if (separation) cfg.separation = *separation;
    if (noise_sd) cfg.noise_sd = *noise_sd;
  }
};

RunConfig resolve_config(const std::optional<std::string>& config_path,
                         const Overrides& overrides) {
  RunConfig cfg;
  if (config_path) load_config_file(cfg, *config_path);
  overrides.apply(cfg);
  return cfg;
}

void require_path(const std::string& value, const char* what) {
  if (value.empty())
    sdsn::raise(sdsn::ErrorCode::InvalidConfig,
                std::string("missing required ") + what + " path");
}

void ensure_parent_dir(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string default_out_prefix(const std::string& model_path) {
  fs::path p(model_path);
  p.replace_extension("");
  return p.string();
}

sdsn::DatasetBundle load_bundle(const RunConfig& cfg) {
  require_path(cfg.data, "--data");
  require_path(cfg.labels, "--labels");
  sdsn::DatasetBundle bundle;
  bundle.features = sdsn::load_features(cfg.data, cfg.format);
  bundle.labels = sdsn::load_labels(cfg.labels);
  if (bundle.features.cols() != bundle.labels.size())
    sdsn::raise(sdsn::ErrorCode::DimMismatch,
                "feature file has " + std::to_string(bundle.features.cols()) +
                    " examples but label file has " + std::to_string(bundle.labels.size()));
  int top = 0;
  for (int l : bundle.labels) top = std::max(top, l);
  bundle.class_count = static_cast<std::size_t>(top) + 1;
  bundle.provenance = cfg.data;
  return bundle;
}

json hyperparams_json(const sdsn::HyperParams& hp) {
  return json{{"epsilon", hp.epsilon},
              {"alpha", hp.alpha},
              {"beta", hp.beta},
              {"groups", hp.groups},
              {"epochs", hp.epochs},
              {"layers", hp.layers},
              {"hidden", hp.hidden},
              {"activation", sdsn::to_string(hp.activation)},
              {"variant", sdsn::to_string(hp.grad_variant)},
              {"penalty", sdsn::to_string(hp.penalty)},
              {"seed", hp.seed}};
}

void write_json(const fs::path& path, const json& doc) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) sdsn::raise(sdsn::ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

void write_text_report(const fs::path& path, const sdsn::TrainReport& report) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) sdsn::raise(sdsn::ErrorCode::IoError, "cannot write " + path.string());
  out << "command: train\n";
  out << "seed: " << report.seed << '\n';
  out << "epsilon: " << report.hp.epsilon << '\n';
  out << "alpha: " << report.hp.alpha << '\n';
  out << "beta: " << report.hp.beta << '\n';
  out << "groups: " << report.hp.groups << '\n';
  out << "epochs: " << report.hp.epochs << '\n';
  out << "layers: " << report.hp.layers << '\n';
  out << "hidden: " << report.hp.hidden << '\n';
  out << "activation: " << sdsn::to_string(report.hp.activation) << '\n';
  out << "variant: " << sdsn::to_string(report.hp.grad_variant) << '\n';
  out << "penalty: " << sdsn::to_string(report.hp.penalty) << '\n';
  for (std::size_t k = 0; k < report.layers.size(); ++k) {
    const sdsn::ModuleReport& layer = report.layers[k];
    out << "layer " << k + 1 << " initial_objective: " << layer.initial_objective << '\n';
    out << "layer " << k + 1 << " objectives:";
    for (double v : layer.epoch_objectives) out << ' ' << v;
    out << '\n';
    out << "layer " << k + 1 << " train_accuracy: " << layer.train_accuracy << '\n';
    out << "layer " << k + 1 << " seconds: " << layer.seconds << '\n';
  }
}

void write_confusion_csv(const fs::path& path, const sdsn::ConfusionMatrix& cm) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) sdsn::raise(sdsn::ErrorCode::IoError, "cannot write " + path.string());
  for (std::size_t r = 0; r < cm.class_count; ++r) {
    for (std::size_t c = 0; c < cm.class_count; ++c) {
      out << cm.at(r, c);
      if (c + 1 < cm.class_count) out << ',';
    }
    out << '\n';
  }
}

void write_hsm_csv(const fs::path& path, const std::vector<double>& per_layer) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) sdsn::raise(sdsn::ErrorCode::IoError, "cannot write " + path.string());
  out << "layer,mean_hsm\n";
  for (std::size_t k = 0; k < per_layer.size(); ++k)
    out << k + 1 << ',' << per_layer[k] << '\n';
}

int cmd_train(const RunConfig& cfg) {
  cfg.hp.validate();
  require_path(cfg.model, "--model");
  const sdsn::DatasetBundle bundle = load_bundle(cfg);
  const sdsn::LabelMatrix targets = sdsn::one_hot_encode(bundle.labels, bundle.class_count);

  const sdsn::TrainResult result =
      sdsn::train_stack(bundle.features, targets, cfg.hp, cfg.hp.seed);

  ensure_parent_dir(cfg.model);
  sdsn::save_model(cfg.model, result.model);

  const std::string prefix = cfg.out.empty() ? default_out_prefix(cfg.model) : cfg.out;
  write_text_report(prefix + ".report.txt", result.report);

  json metrics{{"schema_version", 1},
               {"command", "train"},
               {"seed", result.report.seed},
               {"data", cfg.data},
               {"model", cfg.model},
               {"hyperparams", hyperparams_json(cfg.hp)},
               {"layers", json::array()}};
  for (const sdsn::ModuleReport& layer : result.report.layers)
    metrics["layers"].push_back(json{{"initial_objective", layer.initial_objective},
                                     {"epoch_objectives", layer.epoch_objectives},
                                     {"train_accuracy", layer.train_accuracy},
                                     {"seconds", layer.seconds}});
  write_json(prefix + ".metrics.json", metrics);

  std::cout << "trained " << result.model.modules.size() << " layers on "
            << bundle.features.cols() << " examples (" << bundle.features.rows()
            << " features, " << bundle.class_count << " classes)\n";
  for (std::size_t k = 0; k < result.report.layers.size(); ++k)
    std::cout << "layer " << k + 1
              << " train_accuracy = " << result.report.layers[k].train_accuracy << '\n';
  std::cout << "model written to " << cfg.model << '\n';
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg) {
  require_path(cfg.model, "--model");
  const sdsn::StackModel model = sdsn::load_model(cfg.model);
  const sdsn::DatasetBundle bundle = load_bundle(cfg);
  if (bundle.class_count > model.class_count)
    sdsn::raise(sdsn::ErrorCode::LabelOutOfRange,
                "labels name " + std::to_string(bundle.class_count) +
                    " classes but the model has " + std::to_string(model.class_count));

  const std::vector<int> predicted = sdsn::predict(model, bundle.features);
  const double acc = sdsn::accuracy(predicted, bundle.labels);
  const sdsn::ConfusionMatrix cm =
      sdsn::confusion(predicted, bundle.labels, model.class_count);

  std::vector<double> hsm(model.layer_count());
  for (std::size_t k = 1; k <= model.layer_count(); ++k)
    hsm[k - 1] = sdsn::mean_hidden_sparseness(model, bundle.features, k);

  const std::string prefix = cfg.out.empty() ? default_out_prefix(cfg.model) : cfg.out;
  write_confusion_csv(prefix + ".confusion.csv", cm);
  write_hsm_csv(prefix + ".hsm.csv", hsm);

  std::cout << "accuracy = " << acc << '\n';
  for (std::size_t k = 0; k < hsm.size(); ++k)
    std::cout << "layer " << k + 1 << " mean_hsm = " << hsm[k] << '\n';
  std::cout << "confusion matrix written to " << prefix + ".confusion.csv" << '\n';
  return kExitOk;
}

int cmd_sparseness(const RunConfig& cfg) {
  require_path(cfg.model, "--model");
  require_path(cfg.data, "--data");
  const sdsn::StackModel model = sdsn::load_model(cfg.model);
  const sdsn::Matrix features = sdsn::load_features(cfg.data, cfg.format);

  std::vector<double> hsm(model.layer_count());
  std::cout << "layer,mean_hsm\n";
  for (std::size_t k = 1; k <= model.layer_count(); ++k) {
    hsm[k - 1] = sdsn::mean_hidden_sparseness(model, features, k);
    std::cout << k << ',' << hsm[k - 1] << '\n';
  }
  if (!cfg.out.empty()) write_hsm_csv(cfg.out + ".hsm.csv", hsm);
  return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
  require_path(cfg.out, "--out");
  const sdsn::DatasetBundle bundle = sdsn::synth_blobs(
      cfg.classes, cfg.dim, cfg.per_class, cfg.separation, cfg.noise_sd, cfg.hp.seed);

  const std::string ext = cfg.format == sdsn::FeatureFormat::Csv ? ".features.csv"
                                                                 : ".features.bin";
  ensure_parent_dir(cfg.out + ext);
  sdsn::save_features(cfg.out + ext, bundle.features, cfg.format);
  sdsn::save_labels(cfg.out + ".labels.txt", bundle.labels);

  std::cout << bundle.provenance << '\n';
  std::cout << "features written to " << cfg.out + ext << '\n';
  std::cout << "labels written to " << cfg.out + ".labels.txt" << '\n';
  return kExitOk;
}

int cmd_bench(const RunConfig& cfg, bool parallel) {
  require_path(cfg.model, "--model");
  require_path(cfg.data, "--data");
  const sdsn::StackModel model = sdsn::load_model(cfg.model);
  const sdsn::Matrix features = sdsn::load_features(cfg.data, cfg.format);

  const double ms = sdsn::time_inference(model, features, cfg.repeats, parallel);
  std::cout << "model: input_dim=" << model.input_dim
            << " hidden=" << (model.modules.empty() ? 0 : model.modules.front().hidden_units())
            << " classes=" << model.class_count << " layers=" << model.layer_count() << '\n';
  std::cout << "examples = " << features.cols() << ", repeats = " << cfg.repeats
            << ", mode = " << (parallel ? "parallel" : "serial") << '\n';
  std::cout << "per_example_ms = " << ms << '\n';
  return kExitOk;
}

int cmd_gradcheck(const sdsn::GradCheckConfig& cfg) {
  const sdsn::GradCheckReport report = sdsn::run_gradcheck(cfg);
  const double threshold = sdsn::gradcheck_threshold(cfg.variant);
  std::cout << "variant = " << sdsn::to_string(report.variant)
            << ", activation = " << sdsn::to_string(report.activation) << '\n';
  std::cout << "dims: D=" << cfg.input_dim << " L=" << cfg.hidden << " N=" << cfg.examples
            << " C=" << cfg.classes << " G=" << cfg.groups << ", beta = " << cfg.beta
            << ", step = " << report.step << '\n';
  std::cout << "max_rel_error = " << report.max_rel_error << " at W(" << report.worst_row
            << ',' << report.worst_col << ")\n";
  std::cout << "mean_rel_error = " << report.mean_rel_error << '\n';
  std::cout << "frobenius_rel_error = " << report.frobenius_rel_error << '\n';
  if (report.resamples > 0) std::cout << "kink resamples = " << report.resamples << '\n';
  std::cout << "threshold = " << threshold << " -> "
            << (report.max_rel_error < threshold ? "pass" : "FAIL") << '\n';
  return report.max_rel_error < threshold ? kExitOk : kExitGradcheck;
}

}  // namespace

int main(int argc, char** argv) {
  sdsn::kernels::init_threads_from_env();

  CLI::App app{"sparse deep stacking network trainer and evaluation harness"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  Overrides ov;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    cmd->add_option("--data", ov.data, "feature file path");
    cmd->add_option("--labels", ov.labels, "label file path");
    cmd->add_option("--model", ov.model, "model file path");
    cmd->add_option("--out", ov.out, "output path prefix");
    cmd->add_option("--format", ov.format, "feature file format: csv or bin");
    cmd->add_option("--seed", ov.seed, "RNG seed");
  };
  auto add_hyper = [&](CLI::App* cmd) {
    cmd->add_option("--epsilon", ov.epsilon, "learning rate");
    cmd->add_option("--alpha", ov.alpha, "ridge weight");
    cmd->add_option("--beta", ov.beta, "sparsity weight");
    cmd->add_option("--groups", ov.groups, "hidden unit groups");
    cmd->add_option("--epochs", ov.epochs, "training epochs per layer");
    cmd->add_option("--layers", ov.layers, "stacked layers");
    cmd->add_option("--hidden", ov.hidden, "hidden units per layer");
    cmd->add_option("--activation", ov.activation, "sigmoid or relu");
    cmd->add_option("--variant", ov.variant, "lower-weight gradient: f1 or f2");
    cmd->add_option("--penalty", ov.penalty, "sparsity penalty: mixed or l1");
  };

  CLI::App* train = app.add_subcommand("train", "train a stacked model");
  add_common(train);
  add_hyper(train);

  CLI::App* eval = app.add_subcommand("eval", "evaluate a model on labeled data");
  add_common(eval);

  CLI::App* gradcheck = app.add_subcommand(
      "gradcheck", "check analytic gradients against finite differences");
  sdsn::GradCheckConfig gc;
  std::string gc_variant = "f1", gc_activation = "sigmoid";
  gradcheck->add_option("--variant", gc_variant, "f1 or f2");
  gradcheck->add_option("--activation", gc_activation, "sigmoid or relu");
  gradcheck->add_option("--input-dim", gc.input_dim, "feature dimension D");
  gradcheck->add_option("--hidden", gc.hidden, "hidden units L");
  gradcheck->add_option("--examples", gc.examples, "example count N");
  gradcheck->add_option("--classes", gc.classes, "class count C");
  gradcheck->add_option("--groups", gc.groups, "hidden unit groups G");
  gradcheck->add_option("--beta", gc.beta, "sparsity weight");
  gradcheck->add_option("--step", gc.step, "finite-difference step");
  gradcheck->add_option("--seed", gc.seed, "RNG seed");
  gradcheck
      ->add_flag("--corrupt", gc.corrupt,
                 "perturb one gradient term; the check must then fail (test hook)")
      ->group("");  // hidden from --help

  CLI::App* sparseness =
      app.add_subcommand("sparseness", "per-layer mean Hoyer sparseness of a model");
  add_common(sparseness);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic blob dataset");
  add_common(synth);
  synth->add_option("--classes", ov.classes, "number of classes");
  synth->add_option("--dim", ov.dim, "feature dimension");
  synth->add_option("--per-class", ov.per_class, "examples per class");
  synth->add_option("--separation", ov.separation, "cluster mean separation");
  synth->add_option("--noise", ov.noise_sd, "isotropic noise standard deviation");

  CLI::App* bench = app.add_subcommand("bench", "time the forward pass per example");
  add_common(bench);
  bench->add_option("--repeats", ov.repeats, "timing repetitions (median reported)");
  bool bench_parallel = false;
  bench->add_flag("--parallel", bench_parallel, "time the multi-threaded forward pass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*train) return cmd_train(resolve_config(config_path, ov));
    if (*eval) return cmd_eval(resolve_config(config_path, ov));
    if (*sparseness) return cmd_sparseness(resolve_config(config_path, ov));
    if (*synth) return cmd_synth(resolve_config(config_path, ov));
    if (*bench) return cmd_bench(resolve_config(config_path, ov), bench_parallel);
    if (*gradcheck) {
      gc.variant = sdsn::variant_from_string(gc_variant);
      gc.activation = sdsn::activation_from_string(gc_activation);
      return cmd_gradcheck(gc);
    }
  } catch (const sdsn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}
