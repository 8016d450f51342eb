#include "cola/classifier.hpp"

#include <cmath>
#include <set>

namespace cola {

ClassPrototypes::ClassPrototypes(std::vector<std::string> class_names, Matrix embeddings, double norm_tolerance)
    : names_(std::move(class_names)), embeddings_(std::move(embeddings)) {
  if (names_.size() < 2) throw Error(ErrorKind::kParameter, "need at least two classes");
  if (names_.size() != embeddings_.rows()) {
    throw Error(ErrorKind::kShape, std::to_string(names_.size()) + " class names for " +
                                       std::to_string(embeddings_.rows()) + " prototype rows");
  }
  std::set<std::string> seen;
  for (const auto& name : names_) {
    if (!seen.insert(name).second) throw Error(ErrorKind::kParameter, "duplicate class name '" + name + "'");
  }
  for (std::size_t k = 0; k < embeddings_.rows(); ++k) {
    auto r = embeddings_.row(k);
    double sq = 0.0;
    for (float v : r) sq += static_cast<double>(v) * v;
    const double norm = std::sqrt(sq);
    if (!(std::abs(norm - 1.0) <= norm_tolerance)) {
      throw Error(ErrorKind::kParameter,
                  "prototype row " + std::to_string(k) + " has norm " + std::to_string(norm) + ", expected 1");
    }
  }
}

ClassPrototypes ClassPrototypes::subset(const std::vector<std::size_t>& classes) const {
  std::vector<std::string> names;
  names.reserve(classes.size());
  for (std::size_t k : classes) {
    if (k >= names_.size()) throw Error(ErrorKind::kIndex, "class index " + std::to_string(k) + " out of range");
    names.push_back(names_[k]);
  }
  return ClassPrototypes(std::move(names), embeddings_.gather_rows(classes), 1e-4);
}

RowNormalized<float> normalize_rows(const Matrix& m) { return normalize_rows_forward(m); }

BasicMatrix<double> cosine_logits(const Matrix& features, const ClassPrototypes& protos) {
  require_shape(features.cols() == protos.dim(), "feature dimension " + std::to_string(features.cols()) +
                                                     " != prototype dimension " + std::to_string(protos.dim()));
  const auto unit = normalize_rows_forward(features.cast<double>());
  return matmul_transpose_b(unit.output, protos.embeddings().cast<double>());
}

std::vector<Prediction> classify(const Matrix& features, const ClassPrototypes& protos, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::kParameter, "temperature must be positive");
  const BasicMatrix<double> logits = cosine_logits(features, protos);
  std::vector<Prediction> out(features.rows());
  std::vector<double> scaled(protos.num_classes());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto row = logits.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    for (std::size_t j = 0; j < row.size(); ++j) scaled[j] = row[j] / tau;
    Prediction& p = out[i];
    p.probabilities = softmax<double>(scaled);
    p.label = best;
    p.confidence = p.probabilities[best];
    p.max_logit = row[best];
  }
  return out;
}

std::vector<std::size_t> labels_of(const std::vector<Prediction>& preds) {
  std::vector<std::size_t> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(p.label);
  return out;
}

}  // namespace cola
