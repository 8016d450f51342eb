#include "cola/report.hpp"

#include <set>

namespace cola {

std::string_view confidence_source_name(ConfidenceSource source) noexcept {
  return source == ConfidenceSource::kProbability ? "probability" : "max-logit";
}

ConfidenceSource parse_confidence_source(std::string_view text) {
  if (text == "probability") return ConfidenceSource::kProbability;
  if (text == "max-logit") return ConfidenceSource::kMaxLogit;
  throw Error(ErrorKind::kConfig, "unknown confidence source '" + std::string(text) + "'");
}

Json to_json(const TrainConfig& c) {
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr"] = c.eta_max ? Json(*c.eta_max) : Json(nullptr);
  j["momentum"] = c.momentum;
  j["weight_decay"] = c.weight_decay;
  j["tau"] = c.tau;
  j["tg"] = c.cbpl.global_threshold;
  j["q"] = c.cbpl.retention_ratio;
  j["confidence"] = confidence_source_name(c.cbpl.source);
  j["alpha"] = c.fusion.alpha;
  j["beta"] = c.fusion.beta;
  j["gamma"] = c.fusion.gamma;
  j["cau_depth"] = c.cau_depth;
  j["hidden_dim"] = c.hidden_dim;
  j["seed"] = c.seed;
  j["shuffle"] = c.shuffle;
  j["normalize_output"] = c.normalize_output;
  j["infer_mode"] = mean_mode_name(c.infer_mode);
  return j;
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, "config file must hold a JSON object");
  static const std::set<std::string> known = {
      "epochs", "batch_size", "lr",         "momentum",  "weight_decay", "tau",  "tg",
      "q",      "confidence", "alpha",      "beta",      "gamma",        "cau_depth",
      "hidden_dim", "seed",   "shuffle",    "normalize_output", "infer_mode"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorKind::kConfig, "unknown config key '" + key + "'");
  }
  try {
    if (j.contains("epochs")) c.epochs = j["epochs"].get<std::size_t>();
    if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
    if (j.contains("lr") && !j["lr"].is_null()) c.eta_max = j["lr"].get<double>();
    if (j.contains("momentum")) c.momentum = j["momentum"].get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("tau")) c.tau = j["tau"].get<double>();
    if (j.contains("tg")) c.cbpl.global_threshold = j["tg"].get<double>();
    if (j.contains("q")) c.cbpl.retention_ratio = j["q"].get<double>();
    if (j.contains("confidence")) c.cbpl.source = parse_confidence_source(j["confidence"].get<std::string>());
    if (j.contains("alpha")) c.fusion.alpha = j["alpha"].get<double>();
    if (j.contains("beta")) c.fusion.beta = j["beta"].get<double>();
    if (j.contains("gamma")) c.fusion.gamma = j["gamma"].get<double>();
    if (j.contains("cau_depth")) c.cau_depth = j["cau_depth"].get<std::size_t>();
    if (j.contains("hidden_dim")) c.hidden_dim = j["hidden_dim"].get<std::size_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint32_t>();
    if (j.contains("shuffle")) c.shuffle = j["shuffle"].get<bool>();
    if (j.contains("normalize_output")) c.normalize_output = j["normalize_output"].get<bool>();
    if (j.contains("infer_mode")) c.infer_mode = parse_mean_mode(j["infer_mode"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("bad config value: ") + e.what());
  }
  return c;
}

Json to_json(const SynthConfig& c) {
  Json j;
  j["classes"] = c.classes;
  j["dim"] = c.dim;
  j["n_per_class"] = c.n_per_class;
  j["prototype_spread"] = c.prototype_spread;
  j["intra_class_noise"] = c.intra_class_noise;
  j["domain_shift"] = c.domain_shift;
  j["rotation_gain"] = c.rotation_gain;
  j["translation_gain"] = c.translation_gain;
  j["seed"] = c.seed;
  return j;
}

Json to_json(const EvalResult& r) {
  Json j;
  j["average_accuracy"] = r.average;
  j["overall_sample_accuracy"] = r.overall;
  j["per_class_accuracy"] = r.per_class_accuracy;
  j["n_per_class"] = r.n_per_class;
  return j;
}

Json to_json(const ThresholdSet& t) {
  Json arr = Json::array();
  for (const auto& v : t.thresholds) arr.push_back(v ? Json(*v) : Json(nullptr));
  return arr;
}

Json to_json(const TrainingTrace& trace, bool include_timing) {
  Json j;
  j["first_batch_loss"] = trace.first_batch_loss ? Json(*trace.first_batch_loss) : Json(nullptr);
  Json epochs = Json::array();
  for (const auto& e : trace.epochs) {
    Json row;
    row["epoch"] = e.epoch;
    row["learning_rate"] = e.learning_rate;
    row["mean_loss"] = e.mean_loss;
    row["train_accuracy"] = e.train_accuracy ? Json(*e.train_accuracy) : Json(nullptr);
    if (include_timing) row["wall_seconds"] = e.wall_seconds;
    epochs.push_back(std::move(row));
  }
  j["epochs"] = std::move(epochs);
  return j;
}

Json to_json(const BaseNewResult& r) {
  Json j;
  j["base_accuracy"] = r.base_accuracy;
  j["new_accuracy"] = r.new_accuracy;
  j["harmonic_mean"] = r.harmonic_mean;
  return j;
}

Json to_json(const BaseNewReport& r) {
  Json j;
  j["scheme"] = split_scheme_name(r.scheme);
  j["base_classes"] = r.split.base;
  j["new_classes"] = r.split.novel;
  j["zero_shot"] = to_json(r.zero_shot);
  j["adapted"] = to_json(r.adapted);
  return j;
}

Json to_json(const AdaptationReport& r) {
  Json j;
  j["schema"] = kReportSchema;
  j["command"] = r.command;
  j["config"] = r.config;
  if (r.inputs) {
    Json in;
    in["samples"] = r.inputs->samples;
    in["dim"] = r.inputs->dim;
    in["classes"] = r.inputs->class_names.size();
    in["class_names"] = r.inputs->class_names;
    in["has_labels"] = r.inputs->has_labels;
    j["inputs"] = std::move(in);
  }
  if (r.pseudo_labels) {
    const auto& p = *r.pseudo_labels;
    Json pl;
    pl["confidence_source"] = confidence_source_name(p.source);
    pl["total"] = p.total;
    pl["retained"] = p.filtered.size();
    pl["thresholds"] = to_json(p.filtered.threshold_set);
    pl["histogram"] = p.histogram;
    pl["empty_classes"] = p.filtered.threshold_set.empty_classes();
    pl["pseudo_label_accuracy"] = p.pseudo_label_accuracy ? Json(*p.pseudo_label_accuracy) : Json(nullptr);
    j["pseudo_labels"] = std::move(pl);
  }
  if (r.trace) j["trace"] = to_json(*r.trace, r.include_timing);
  if (r.zero_shot) j["zero_shot"] = to_json(*r.zero_shot);
  if (r.adapted) j["adapted"] = to_json(*r.adapted);
  if (r.base_to_new) j["base_to_new"] = to_json(*r.base_to_new);
  if (r.predictions) {
    Json preds = Json::array();
    for (const auto& p : *r.predictions) {
      Json row;
      row["label"] = p.label;
      row["confidence"] = p.confidence;
      preds.push_back(std::move(row));
    }
    j["predictions"] = std::move(preds);
  }
  return j;
}

std::string emit_report(const AdaptationReport& report) { return to_json(report).dump(2) + "\n"; }

}  // namespace cola
