#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "cola/cam.hpp"
#include "cola/cbpl.hpp"
#include "cola/classifier.hpp"
#include "cola/metrics.hpp"

namespace cola {

/// Suggested peak learning rate for desk-scale runs. Not a published value;
/// callers must still set TrainConfig::eta_max explicitly.
inline constexpr double kSuggestedEtaMax = 1e-3;

struct TrainConfig {
  std::size_t epochs = 15;
  std::size_t batch_size = 128;
  /// Peak learning rate of the cosine schedule. Required.
  std::optional<double> eta_max;
  double momentum = 0.9;
  double weight_decay = 1e-6;
  double tau = kDefaultTemperature;
  CbplConfig cbpl;
  FusionCoefficients fusion;
  std::size_t cau_depth = 2;
  /// 0 selects ceil(d / 4).
  std::size_t hidden_dim = 0;
  std::uint32_t seed = 0;
  bool shuffle = true;
  bool normalize_output = true;
  MeanMode infer_mode = MeanMode::kBatch;

  void validate() const;
  CamConfig cam_config(std::size_t dim) const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  /// Sample-weighted mean cross-entropy over the epoch's batches.
  double mean_loss = 0.0;
  /// Fraction of D' whose in-training prediction matched the ground truth.
  std::optional<double> train_accuracy;
  double wall_seconds = 0.0;
};

struct TrainingTrace {
  std::vector<EpochRecord> epochs;
  /// Loss of the very first batch, before any update.
  std::optional<double> first_batch_loss;
};

struct PreparedData {
  std::vector<Prediction> predictions;
  FilteredDataset filtered;
  std::vector<std::size_t> histogram;
  /// Fraction of D' whose pseudo-label equals the ground truth.
  std::optional<double> pseudo_label_accuracy;
};

struct AdaptResult {
  CamParameters<float> params;
  TrainingTrace trace;
  PreparedData data;
};

/// Raised when the mean epoch loss stops being finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, CamParameters<float> last_good)
      : Error(ErrorKind::kDivergence, message), last_good_(std::move(last_good)) {}
  const CamParameters<float>& last_good() const noexcept { return last_good_; }

 private:
  CamParameters<float> last_good_;
};

/// Stage 1: zero-shot predictions, then class-balanced filtering.
PreparedData prepare_data(const Matrix& features, const ClassPrototypes& protos, const TrainConfig& config,
                          const std::vector<std::size_t>* truth = nullptr);

/// Stage 2: trains a fresh CAM on the filtered pseudo-labels. Prototypes and
/// features are only read. The returned parameters carry the mean of
/// `features` for frozen-prototype inference and `config.infer_mode`.
AdaptResult adapt(const Matrix& features, const ClassPrototypes& protos, const TrainConfig& config,
                  const std::vector<std::size_t>* truth = nullptr);

/// Treats `features` as one batch.
std::vector<Prediction> infer(const CamParameters<float>& params, const Matrix& features,
                              const ClassPrototypes& protos, double tau, MeanMode mode);

/// Splits `features` into consecutive chunks of `batch_size` rows (0 means one
/// chunk) and concatenates the per-chunk predictions.
std::vector<Prediction> infer_batched(const CamParameters<float>& params, const Matrix& features,
                                      const ClassPrototypes& protos, double tau, MeanMode mode,
                                      std::size_t batch_size);

struct BaseNewReport {
  SplitScheme scheme = SplitScheme::kFirstHalf;
  ClassSplit split;
  BaseNewResult zero_shot;
  BaseNewResult adapted;
};

/// Trains on the samples whose ground truth falls in the base classes (using
/// zero-shot pseudo-labels over base prototypes only), then scores base and
/// novel samples against their own prototype subsets. Accuracies are per-class
/// averages.
BaseNewReport run_base_to_new(const Matrix& features, const std::vector<std::size_t>& truth,
                              const ClassPrototypes& protos, const TrainConfig& config, SplitScheme scheme);

}  // namespace cola
