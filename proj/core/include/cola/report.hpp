#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cola/cbpl.hpp"
#include "cola/metrics.hpp"
#include "cola/synth.hpp"
#include "cola/trainer.hpp"

namespace cola {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "cola.adaptation_report/1";

struct InputSummary {
  std::size_t samples = 0;
  std::size_t dim = 0;
  std::vector<std::string> class_names;
  bool has_labels = false;
};

struct PseudoLabelSummary {
  ConfidenceSource source = ConfidenceSource::kProbability;
  std::size_t total = 0;
  FilteredDataset filtered;
  std::vector<std::size_t> histogram;
  std::optional<double> pseudo_label_accuracy;
};

/// Everything a CLI run reports. Absent sections are omitted from the JSON.
struct AdaptationReport {
  std::string command;
  Json config = Json::object();
  std::optional<InputSummary> inputs;
  std::optional<PseudoLabelSummary> pseudo_labels;
  std::optional<TrainingTrace> trace;
  std::optional<EvalResult> zero_shot;
  std::optional<EvalResult> adapted;
  std::optional<BaseNewReport> base_to_new;
  std::optional<std::vector<Prediction>> predictions;
  /// Per-epoch wall-clock times break byte-for-byte reproducibility, so they
  /// are only written on request.
  bool include_timing = false;
};

std::string_view confidence_source_name(ConfidenceSource source) noexcept;
ConfidenceSource parse_confidence_source(std::string_view text);

Json to_json(const TrainConfig& config);
/// Overlays the keys present in `j` onto `base`; unknown keys are a config error.
TrainConfig train_config_from_json(const Json& j, TrainConfig base);
Json to_json(const SynthConfig& config);
Json to_json(const EvalResult& result);
Json to_json(const ThresholdSet& thresholds);
Json to_json(const TrainingTrace& trace, bool include_timing);
Json to_json(const BaseNewResult& result);
Json to_json(const BaseNewReport& report);
Json to_json(const AdaptationReport& report);

/// Two-space indented JSON with a trailing newline; key order is fixed.
std::string emit_report(const AdaptationReport& report);

}  // namespace cola
