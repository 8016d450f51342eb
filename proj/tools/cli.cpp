#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "cola/classifier.hpp"
#include "cola/io.hpp"
#include "cola/report.hpp"
#include "cola/synth.hpp"
#include "cola/trainer.hpp"

namespace cola::cli {

namespace {

struct Options {
  std::string features;
  std::string prototypes;
  std::string report;
  std::string checkpoint;
  std::string config_path;
  std::string out_dir;
  std::string base_new;
  bool dry_run = false;
  bool no_shuffle = false;
  bool timing = false;
  int verbose = 0;
  bool quiet = false;

  std::optional<double> tau, tg, q, lr, momentum, weight_decay, alpha, beta, gamma;
  std::optional<std::size_t> epochs, batch_size, cau_depth, hidden_dim;
  std::optional<std::uint32_t> seed;
  std::optional<std::string> infer_mode, confidence;

  std::optional<std::size_t> classes, dim, n_per_class;
  std::optional<double> spread, noise, shift, rotation_gain, translation_gain;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON file with config keys; flags override it");
  cmd->add_option("--report", o.report, "write the JSON report here (default: stdout)");
  cmd->add_flag("--dry-run", o.dry_run, "validate inputs, print the resolved config, and stop");
  cmd->add_flag("-v,--verbose", o.verbose, "more logging (repeatable)");
  cmd->add_flag("--quiet", o.quiet, "only log warnings and errors");
}

void add_inputs(CLI::App* cmd, Options& o, bool need_labels_hint) {
  cmd->add_option("--features", o.features,
                  need_labels_hint ? "target feature file (must carry labels)" : "target feature file")
      ->required();
  cmd->add_option("--prototypes", o.prototypes, "class prototype file")->required();
  cmd->add_option("--tau", o.tau, "softmax temperature");
}

void add_cbpl(CLI::App* cmd, Options& o) {
  cmd->add_option("--tg", o.tg, "global confidence threshold T_g");
  cmd->add_option("--q", o.q, "per-class retention ratio Q");
  cmd->add_option("--confidence", o.confidence, "confidence used by the filter: probability | max-logit");
}

void add_training(CLI::App* cmd, Options& o) {
  cmd->add_option("--epochs", o.epochs);
  cmd->add_option("--batch-size", o.batch_size);
  cmd->add_option("--lr", o.lr, "peak learning rate of the cosine schedule (required)");
  cmd->add_option("--momentum", o.momentum);
  cmd->add_option("--weight-decay", o.weight_decay);
  cmd->add_option("--alpha", o.alpha, "fusion weight of the raw feature");
  cmd->add_option("--beta", o.beta, "fusion weight of the adapter output");
  cmd->add_option("--gamma", o.gamma, "fusion weight of the CAU output");
  cmd->add_option("--cau-depth", o.cau_depth, "linear layers in the CAU MLP (2-4)");
  cmd->add_option("--hidden-dim", o.hidden_dim, "bottleneck width (default ceil(d/4))");
  cmd->add_option("--infer-mode", o.infer_mode, "batch | frozen-prototype");
  cmd->add_option("--seed", o.seed);
  cmd->add_flag("--no-shuffle", o.no_shuffle, "keep D' in index order every epoch");
  cmd->add_option("--checkpoint", o.checkpoint, "write the trained module here");
  cmd->add_option("--base-new", o.base_new,
                  "also run base-to-new: first-half | parity | accuracy-ranked | swapped-<scheme>");
  cmd->add_flag("--timing", o.timing, "include per-epoch wall-clock seconds in the report");
}

TrainConfig resolve_train_config(const Options& o) {
  TrainConfig c;
  if (!o.config_path.empty()) {
    const Bytes raw = read_file(o.config_path);
    Json j;
    try {
      j = Json::parse(raw.begin(), raw.end());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kConfig, "cannot parse config '" + o.config_path + "': " + e.what());
    }
    c = train_config_from_json(j, c);
  }
  if (o.tau) c.tau = *o.tau;
  if (o.tg) c.cbpl.global_threshold = *o.tg;
  if (o.q) c.cbpl.retention_ratio = *o.q;
  if (o.confidence) c.cbpl.source = parse_confidence_source(*o.confidence);
  if (o.epochs) c.epochs = *o.epochs;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.lr) c.eta_max = *o.lr;
  if (o.momentum) c.momentum = *o.momentum;
  if (o.weight_decay) c.weight_decay = *o.weight_decay;
  if (o.alpha) c.fusion.alpha = *o.alpha;
  if (o.beta) c.fusion.beta = *o.beta;
  if (o.gamma) c.fusion.gamma = *o.gamma;
  if (o.cau_depth) c.cau_depth = *o.cau_depth;
  if (o.hidden_dim) c.hidden_dim = *o.hidden_dim;
  if (o.infer_mode) c.infer_mode = parse_mean_mode(*o.infer_mode);
  if (o.seed) c.seed = *o.seed;
  if (o.no_shuffle) c.shuffle = false;
  return c;
}

struct Inputs {
  FeatureSet target;
  ClassPrototypes prototypes;
};

Inputs load_inputs(const Options& o) {
  FeatureSet target = read_features(o.features);
  ClassPrototypes protos = read_prototypes(o.prototypes);
  if (target.features.cols() != protos.dim()) {
    throw Error(ErrorKind::kConfig, "feature dimension " + std::to_string(target.features.cols()) +
                                        " does not match prototype dimension " + std::to_string(protos.dim()));
  }
  if (target.labels) {
    for (std::size_t label : *target.labels) {
      if (label >= protos.num_classes()) {
        throw Error(ErrorKind::kConfig, "feature file label " + std::to_string(label) + " exceeds class count " +
                                            std::to_string(protos.num_classes()));
      }
    }
  }
  return {std::move(target), std::move(protos)};
}

InputSummary summarize(const Inputs& in) {
  return {in.target.features.rows(), in.target.features.cols(), in.prototypes.class_names(),
          in.target.labels.has_value()};
}

void emit(const AdaptationReport& report, const Options& o, std::ostream& out) {
  const std::string text = emit_report(report);
  if (o.report.empty()) {
    out << text;
    return;
  }
  write_file(o.report, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void print_dry_run(const std::string& command, const Json& config, const Options& o, std::ostream& out) {
  Json j;
  j["command"] = command;
  j["config"] = config;
  Json paths;
  if (!o.features.empty()) paths["features"] = o.features;
  if (!o.prototypes.empty()) paths["prototypes"] = o.prototypes;
  if (!o.checkpoint.empty()) paths["checkpoint"] = o.checkpoint;
  if (!o.out_dir.empty()) paths["out_dir"] = o.out_dir;
  if (!o.report.empty()) paths["report"] = o.report;
  j["paths"] = paths.is_null() ? Json::object() : paths;
  out << j.dump(2) << "\n";
}

Json cbpl_echo(const TrainConfig& c) {
  Json j;
  j["tau"] = c.tau;
  j["tg"] = c.cbpl.global_threshold;
  j["q"] = c.cbpl.retention_ratio;
  j["confidence"] = confidence_source_name(c.cbpl.source);
  return j;
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig s;
  if (o.classes) s.classes = *o.classes;
  if (o.dim) s.dim = *o.dim;
  if (o.n_per_class) s.n_per_class = *o.n_per_class;
  if (o.spread) s.prototype_spread = *o.spread;
  if (o.noise) s.intra_class_noise = *o.noise;
  if (o.shift) s.domain_shift = *o.shift;
  if (o.rotation_gain) s.rotation_gain = *o.rotation_gain;
  if (o.translation_gain) s.translation_gain = *o.translation_gain;
  if (o.seed) s.seed = *o.seed;
  s.validate();
  if (o.dry_run) {
    print_dry_run("synth", to_json(s), o, out);
    return kOk;
  }
  const SyntheticData data = generate_synthetic(s);
  const std::filesystem::path dir(o.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create '" + dir.string() + "': " + ec.message());
  write_features(dir / "features.bin", data.target);
  write_prototypes(dir / "prototypes.bin", data.prototypes);

  AdaptationReport report;
  report.command = "synth";
  report.config = to_json(s);
  report.inputs = InputSummary{data.target.features.rows(), data.target.features.cols(),
                               data.prototypes.class_names(), true};
  emit(report, o, out);
  return kOk;
}

int cmd_zeroshot(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_train_config(o);
  if (!(c.tau > 0.0)) throw Error(ErrorKind::kConfig, "temperature must be positive");
  const Inputs in = load_inputs(o);
  Json echo;
  echo["tau"] = c.tau;
  if (o.dry_run) {
    print_dry_run("zeroshot", echo, o, out);
    return kOk;
  }
  const auto preds = classify(in.target.features, in.prototypes, c.tau);
  AdaptationReport report;
  report.command = "zeroshot";
  report.config = echo;
  report.inputs = summarize(in);
  if (in.target.labels) report.zero_shot = evaluate(preds, *in.target.labels, in.prototypes.num_classes());
  emit(report, o, out);
  return kOk;
}

int cmd_pseudolabel(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_train_config(o);
  c.cbpl.validate();
  if (!(c.tau > 0.0)) throw Error(ErrorKind::kConfig, "temperature must be positive");
  const Inputs in = load_inputs(o);
  if (o.dry_run) {
    print_dry_run("pseudolabel", cbpl_echo(c), o, out);
    return kOk;
  }
  const std::vector<std::size_t>* truth = in.target.labels ? &*in.target.labels : nullptr;
  PreparedData data = prepare_data(in.target.features, in.prototypes, c, truth);

  AdaptationReport report;
  report.command = "pseudolabel";
  report.config = cbpl_echo(c);
  report.inputs = summarize(in);
  if (truth) report.zero_shot = evaluate(data.predictions, *truth, in.prototypes.num_classes());
  report.pseudo_labels = PseudoLabelSummary{c.cbpl.source, in.target.features.rows(), std::move(data.filtered),
                                            std::move(data.histogram), data.pseudo_label_accuracy};
  emit(report, o, out);
  return kOk;
}

int cmd_adapt(const Options& o, std::ostream& out) {
  const TrainConfig c = resolve_train_config(o);
  c.validate();
  std::optional<SplitScheme> scheme;
  if (!o.base_new.empty()) scheme = parse_split_scheme(o.base_new);
  const Inputs in = load_inputs(o);
  if (scheme && !in.target.labels) {
    throw Error(ErrorKind::kConfig, "base-to-new evaluation needs a feature file with labels");
  }
  if (o.dry_run) {
    print_dry_run("adapt", to_json(c), o, out);
    return kOk;
  }

  const std::vector<std::size_t>* truth = in.target.labels ? &*in.target.labels : nullptr;
  AdaptResult result = adapt(in.target.features, in.prototypes, c, truth);
  if (!o.checkpoint.empty()) write_checkpoint(o.checkpoint, result.params);

  AdaptationReport report;
  report.command = "adapt";
  report.config = to_json(c);
  report.inputs = summarize(in);
  report.include_timing = o.timing;
  if (truth) {
    const std::size_t classes = in.prototypes.num_classes();
    report.zero_shot = evaluate(result.data.predictions, *truth, classes);
    report.adapted = evaluate(
        infer_batched(result.params, in.target.features, in.prototypes, c.tau, c.infer_mode, c.batch_size), *truth,
        classes);
  }
  report.pseudo_labels =
      PseudoLabelSummary{c.cbpl.source, in.target.features.rows(), std::move(result.data.filtered),
                         std::move(result.data.histogram), result.data.pseudo_label_accuracy};
  report.trace = std::move(result.trace);
  if (scheme) report.base_to_new = run_base_to_new(in.target.features, *truth, in.prototypes, c, *scheme);
  emit(report, o, out);
  return kOk;
}

/// Shared by eval and infer.
int cmd_apply(const Options& o, std::ostream& out, bool require_labels) {
  const std::string command = require_labels ? "eval" : "infer";
  TrainConfig c = resolve_train_config(o);
  if (!(c.tau > 0.0)) throw Error(ErrorKind::kConfig, "temperature must be positive");
  if (c.batch_size == 0) throw Error(ErrorKind::kConfig, "batch size must be at least 1");
  const CamParameters<float> params = read_checkpoint(o.checkpoint);
  const Inputs in = load_inputs(o);
  const MeanMode mode = o.infer_mode ? parse_mean_mode(*o.infer_mode) : params.mode;
  if (params.dim() != in.prototypes.dim()) {
    throw Error(ErrorKind::kConfig, "checkpoint dimension " + std::to_string(params.dim()) +
                                        " does not match prototype dimension " + std::to_string(in.prototypes.dim()));
  }
  if (mode == MeanMode::kFrozenPrototype && !params.frozen_mean) {
    throw Error(ErrorKind::kConfig, "frozen-prototype inference requested but the checkpoint stores no mean");
  }
  if (require_labels && !in.target.labels) {
    throw Error(ErrorKind::kConfig, "eval needs a feature file with labels");
  }
  Json echo;
  echo["tau"] = c.tau;
  echo["batch_size"] = c.batch_size;
  echo["infer_mode"] = mean_mode_name(mode);
  if (o.dry_run) {
    print_dry_run(command, echo, o, out);
    return kOk;
  }

  auto preds = infer_batched(params, in.target.features, in.prototypes, c.tau, mode, c.batch_size);
  AdaptationReport report;
  report.command = command;
  report.config = echo;
  report.inputs = summarize(in);
  if (in.target.labels) {
    const std::size_t classes = in.prototypes.num_classes();
    report.zero_shot = evaluate(classify(in.target.features, in.prototypes, c.tau), *in.target.labels, classes);
    report.adapted = evaluate(preds, *in.target.labels, classes);
  }
  if (!require_labels) report.predictions = std::move(preds);
  emit(report, o, out);
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo: return kIo;
    case ErrorKind::kFormat: return kFormat;
    case ErrorKind::kConfig:
    case ErrorKind::kParameter:
    case ErrorKind::kRange: return kUsage;
    case ErrorKind::kAdaptationImpossible:
    case ErrorKind::kDivergence:
    case ErrorKind::kGeneration: return kAdaptation;
    default: return kInternal;
  }
}

std::string one_line(std::string s) {
  for (char& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Test-time adaptation of embedding classifiers with pseudo-label filtering and a context-aware module",
               "cola"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every subcommand");

  auto* synth = app.add_subcommand("synth", "generate the synthetic domain-shift benchmark");
  add_common(synth, o);
  synth->add_option("--out-dir", o.out_dir, "directory for features.bin and prototypes.bin")->required();
  synth->add_option("--seed", o.seed);
  synth->add_option("--classes", o.classes);
  synth->add_option("--dim", o.dim);
  synth->add_option("--n-per-class", o.n_per_class);
  synth->add_option("--spread", o.spread, "prototype spread (max pairwise cosine is 1 - spread)");
  synth->add_option("--noise", o.noise, "expected norm of the intra-class noise");
  synth->add_option("--shift", o.shift, "domain shift magnitude");
  synth->add_option("--rotation-gain", o.rotation_gain, "radians of rotation per unit shift");
  synth->add_option("--translation-gain", o.translation_gain, "translation length per unit shift");

  auto* zeroshot = app.add_subcommand("zeroshot", "classify against prototypes without adaptation");
  add_common(zeroshot, o);
  add_inputs(zeroshot, o, false);

  auto* pseudolabel = app.add_subcommand("pseudolabel", "zero-shot predictions filtered by class-balanced thresholds");
  add_common(pseudolabel, o);
  add_inputs(pseudolabel, o, false);
  add_cbpl(pseudolabel, o);

  auto* adapt_cmd = app.add_subcommand("adapt", "pseudo-label, then train the context-aware module");
  add_common(adapt_cmd, o);
  add_inputs(adapt_cmd, o, false);
  add_cbpl(adapt_cmd, o);
  add_training(adapt_cmd, o);

  auto* eval_cmd = app.add_subcommand("eval", "score a trained checkpoint against labelled features");
  auto* infer_cmd = app.add_subcommand("infer", "predict with a trained checkpoint");
  for (auto* cmd : {eval_cmd, infer_cmd}) {
    add_common(cmd, o);
    add_inputs(cmd, o, cmd == eval_cmd);
    cmd->add_option("--checkpoint", o.checkpoint, "trained module")->required();
    cmd->add_option("--infer-mode", o.infer_mode, "batch | frozen-prototype (default: as stored)");
    cmd->add_option("--batch-size", o.batch_size, "rows per inference batch");
  }

  std::vector<const char*> argv{"cola"};
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: usage_error: " << one_line(e.what()) << "\n";
    return kUsage;
  }

  auto logger = std::make_shared<spdlog::logger>("cola", std::make_shared<spdlog::sinks::stderr_sink_st>());
  logger->set_pattern("[%l] %v");
  logger->set_level(o.quiet ? spdlog::level::warn : o.verbose > 0 ? spdlog::level::debug : spdlog::level::info);
  const auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  struct Restore {
    std::shared_ptr<spdlog::logger> logger;
    ~Restore() { spdlog::set_default_logger(logger); }
  } restore{previous};

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (zeroshot->parsed()) return cmd_zeroshot(o, out);
    if (pseudolabel->parsed()) return cmd_pseudolabel(o, out);
    if (adapt_cmd->parsed()) return cmd_adapt(o, out);
    if (eval_cmd->parsed()) return cmd_apply(o, out, true);
    if (infer_cmd->parsed()) return cmd_apply(o, out, false);
  } catch (const Error& e) {
    err << "error: " << error_kind_name(e.kind()) << ": " << one_line(e.what()) << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal_error: " << one_line(e.what()) << "\n";
    return kInternal;
  }
  err << "error: usage_error: no subcommand\n";
  return kUsage;
}

}  // namespace cola::cli
