#include "cola/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include <spdlog/spdlog.h>

#include "cola/optim.hpp"

namespace cola {

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorKind::kConfig, "batch size must be at least 1");
  if (!eta_max) throw Error(ErrorKind::kConfig, "peak learning rate (eta_max / --lr) is required");
  if (!(*eta_max > 0.0)) throw Error(ErrorKind::kConfig, "peak learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorKind::kConfig, "momentum must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) throw Error(ErrorKind::kConfig, "weight decay must be nonnegative");
  if (!(tau > 0.0)) throw Error(ErrorKind::kConfig, "temperature must be positive");
  if (cau_depth < 2 || cau_depth > 4) throw Error(ErrorKind::kConfig, "CAU depth must be between 2 and 4");
  if (!(fusion.alpha >= 0.0 && fusion.beta >= 0.0 && fusion.gamma >= 0.0)) {
    throw Error(ErrorKind::kConfig, "fusion coefficients must be nonnegative");
  }
  try {
    cbpl.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, e.what());
  }
}

CamConfig TrainConfig::cam_config(std::size_t dim) const {
  CamConfig c;
  c.dim = dim;
  c.hidden_dim = hidden_dim;
  c.cau_depth = cau_depth;
  c.fusion = fusion;
  c.normalize_output = normalize_output;
  return c;
}

PreparedData prepare_data(const Matrix& features, const ClassPrototypes& protos, const TrainConfig& config,
                          const std::vector<std::size_t>* truth) {
  require_shape(features.cols() == protos.dim(), "feature dimension " + std::to_string(features.cols()) +
                                                     " != prototype dimension " + std::to_string(protos.dim()));
  if (features.rows() == 0) {
    throw Error(ErrorKind::kAdaptationImpossible, "no target features to pseudo-label");
  }
  PreparedData data;
  data.predictions = classify(features, protos, config.tau);
  data.filtered = cbpl_filter(data.predictions, config.cbpl);
  data.histogram = class_histogram(data.filtered, protos.num_classes());

  if (data.filtered.empty()) {
    throw Error(ErrorKind::kAdaptationImpossible,
                "pseudo-label filter retained no samples out of " + std::to_string(features.rows()));
  }
  for (std::size_t k : data.filtered.threshold_set.empty_classes()) {
    spdlog::warn("class {} ('{}') never wins the zero-shot argmax and is absent from the training set", k,
                 protos.class_names()[k]);
  }
  if (truth != nullptr) {
    require_shape(truth->size() == features.rows(), "ground-truth length does not match feature rows");
    std::size_t hits = 0;
    for (std::size_t p = 0; p < data.filtered.size(); ++p) {
      hits += data.filtered.labels[p] == (*truth)[data.filtered.indices[p]] ? 1 : 0;
    }
    data.pseudo_label_accuracy = static_cast<double>(hits) / static_cast<double>(data.filtered.size());
  }
  spdlog::info("pseudo-labels: kept {} of {} samples", data.filtered.size(), features.rows());
  for (std::size_t k = 0; k < protos.num_classes(); ++k) {
    const auto& t = data.filtered.threshold_set.thresholds[k];
    spdlog::debug("  class {:>3}: kept {:>6}  threshold {}", k, data.histogram[k],
                  t ? std::to_string(*t) : std::string("empty"));
  }
  return data;
}

AdaptResult adapt(const Matrix& features, const ClassPrototypes& protos, const TrainConfig& config,
                  const std::vector<std::size_t>* truth) {
  config.validate();
  AdaptResult result;
  result.data = prepare_data(features, protos, config, truth);
  const FilteredDataset& ds = result.data.filtered;

  Rng rng(config.seed);
  ContextAwareModule<float> cam(CamParameters<float>::initialize(config.cam_config(features.cols()), rng));

  std::vector<std::size_t> order = ds.indices;
  std::vector<std::size_t> pseudo(features.rows(), 0);
  for (std::size_t p = 0; p < ds.size(); ++p) pseudo[ds.indices[p]] = ds.labels[p];

  const float inv_tau = 1.0f / static_cast<float>(config.tau);
  const float tau = static_cast<float>(config.tau);
  const Matrix& prototypes = protos.embeddings();

  if (config.epochs > 0) {
    SgdState<float> sgd(*config.eta_max, config.momentum, config.weight_decay, config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      const auto started = std::chrono::steady_clock::now();
      CamParameters<float> last_good = cam.params();
      sgd.set_epoch(epoch);
      if (config.shuffle) rng.shuffle(std::span<std::size_t>(order));

      double loss_sum = 0.0;
      std::size_t train_hits = 0;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        const std::span<const std::size_t> idx(order.data() + start, stop - start);
        const Matrix batch = features.gather_rows(idx);
        std::vector<std::size_t> targets(idx.size());
        for (std::size_t i = 0; i < idx.size(); ++i) targets[i] = pseudo[idx[i]];

        const Matrix fused = cam.forward(batch);
        Matrix logits = matmul_transpose_b(fused, prototypes);
        for (float& v : logits.values()) v /= tau;
        auto ce = softmax_cross_entropy(logits, targets);
        if (!result.trace.first_batch_loss) result.trace.first_batch_loss = ce.loss;
        loss_sum += static_cast<double>(ce.loss) * static_cast<double>(idx.size());

        if (truth != nullptr) {
          for (std::size_t i = 0; i < idx.size(); ++i) {
            auto row = logits.row(i);
            const auto best = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
            train_hits += best == (*truth)[idx[i]] ? 1 : 0;
          }
        }

        for (float& v : ce.grad_logits.values()) v *= inv_tau;
        cam.backward(matmul(ce.grad_logits, prototypes));
        const auto params = cam.params().parameters();
        sgd.step(params);
      }

      EpochRecord rec;
      rec.epoch = epoch;
      rec.learning_rate = sgd.learning_rate();
      rec.mean_loss = loss_sum / static_cast<double>(order.size());
      if (truth != nullptr) rec.train_accuracy = static_cast<double>(train_hits) / static_cast<double>(order.size());
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (!std::isfinite(rec.mean_loss)) {
        throw DivergenceError("mean loss became non-finite in epoch " + std::to_string(epoch), std::move(last_good));
      }
      // Non-finite rows normalize to zero, so the loss alone can stay finite
      // (log C) after the weights have blown up.
      for (const auto& ref : cam.params().parameters()) {
        for (float v : ref.value) {
          if (!std::isfinite(v)) {
            throw DivergenceError("parameters became non-finite in epoch " + std::to_string(epoch),
                                  std::move(last_good));
          }
        }
      }
      spdlog::debug("epoch {:>3}  lr {:.6g}  loss {:.6f}", epoch, rec.learning_rate, rec.mean_loss);
      result.trace.epochs.push_back(rec);
    }
  }

  result.params = std::move(cam.params());
  result.params.zero_grad();
  result.params.frozen_mean = batch_mean_forward(features);
  result.params.mode = config.infer_mode;
  return result;
}

std::vector<Prediction> infer(const CamParameters<float>& params, const Matrix& features,
                              const ClassPrototypes& protos, double tau, MeanMode mode) {
  require_shape(params.dim() == protos.dim(), "checkpoint dimension does not match prototypes");
  const ContextAwareModule<float> cam(params);
  return classify(cam.evaluate(features, mode), protos, tau);
}

std::vector<Prediction> infer_batched(const CamParameters<float>& params, const Matrix& features,
                                      const ClassPrototypes& protos, double tau, MeanMode mode,
                                      std::size_t batch_size) {
  if (batch_size == 0) batch_size = std::max<std::size_t>(features.rows(), 1);
  std::vector<Prediction> out;
  out.reserve(features.rows());
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < features.rows(); start += batch_size) {
    const std::size_t stop = std::min(features.rows(), start + batch_size);
    idx.resize(stop - start);
    std::iota(idx.begin(), idx.end(), start);
    auto chunk = infer(params, features.gather_rows(idx), protos, tau, mode);
    std::move(chunk.begin(), chunk.end(), std::back_inserter(out));
  }
  return out;
}

namespace {

struct SplitData {
  Matrix features;
  std::vector<std::size_t> truth;
};

SplitData select_classes(const Matrix& features, const std::vector<std::size_t>& truth,
                         const std::vector<std::size_t>& classes, std::size_t num_classes) {
  std::vector<std::size_t> local(num_classes, num_classes);
  for (std::size_t p = 0; p < classes.size(); ++p) local[classes[p]] = p;
  std::vector<std::size_t> rows;
  SplitData out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (local[truth[i]] == num_classes) continue;
    rows.push_back(i);
    out.truth.push_back(local[truth[i]]);
  }
  out.features = features.gather_rows(rows);
  return out;
}

double split_accuracy(const std::vector<Prediction>& preds, const SplitData& data, std::size_t classes) {
  return evaluate(preds, data.truth, classes).average;
}

}  // namespace

BaseNewReport run_base_to_new(const Matrix& features, const std::vector<std::size_t>& truth,
                              const ClassPrototypes& protos, const TrainConfig& config, SplitScheme scheme) {
  require_shape(truth.size() == features.rows(), "ground-truth length does not match feature rows");
  const std::size_t num_classes = protos.num_classes();
  const EvalResult zero_shot_all = evaluate(classify(features, protos, config.tau), truth, num_classes);

  BaseNewReport report;
  report.scheme = scheme;
  report.split = base_to_new_split(num_classes, scheme, &zero_shot_all);
  const ClassPrototypes base_protos = protos.subset(report.split.base);
  const ClassPrototypes novel_protos = protos.subset(report.split.novel);
  const SplitData base = select_classes(features, truth, report.split.base, num_classes);
  const SplitData novel = select_classes(features, truth, report.split.novel, num_classes);
  if (base.truth.empty() || novel.truth.empty()) {
    throw Error(ErrorKind::kAdaptationImpossible, "base or novel split has no samples");
  }

  const std::size_t nb = report.split.base.size();
  const std::size_t nn = report.split.novel.size();
  report.zero_shot.base_accuracy = split_accuracy(classify(base.features, base_protos, config.tau), base, nb);
  report.zero_shot.new_accuracy = split_accuracy(classify(novel.features, novel_protos, config.tau), novel, nn);
  report.zero_shot.harmonic_mean = harmonic_mean(report.zero_shot.base_accuracy, report.zero_shot.new_accuracy);

  const AdaptResult trained = adapt(base.features, base_protos, config);
  report.adapted.base_accuracy = split_accuracy(
      infer_batched(trained.params, base.features, base_protos, config.tau, config.infer_mode, config.batch_size),
      base, nb);
  report.adapted.new_accuracy = split_accuracy(
      infer_batched(trained.params, novel.features, novel_protos, config.tau, config.infer_mode, config.batch_size),
      novel, nn);
  report.adapted.harmonic_mean = harmonic_mean(report.adapted.base_accuracy, report.adapted.new_accuracy);
  return report;
}

}  // namespace cola
