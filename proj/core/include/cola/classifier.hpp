#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cola/layers.hpp"
#include "cola/matrix.hpp"

namespace cola {

inline constexpr double kDefaultTemperature = 0.01;

/// Text-side class embeddings: one unit-norm row per class name.
class ClassPrototypes {
 public:
  /// Requires C >= 2, unique names, and every row unit-norm within `norm_tolerance`.
  ClassPrototypes(std::vector<std::string> class_names, Matrix embeddings, double norm_tolerance = 1e-5);

  std::size_t num_classes() const noexcept { return names_.size(); }
  std::size_t dim() const noexcept { return embeddings_.cols(); }
  const std::vector<std::string>& class_names() const noexcept { return names_; }
  const Matrix& embeddings() const noexcept { return embeddings_; }

  /// Prompt text the embedding row stands for.
  static std::string prompt_for(const std::string& class_name) { return "a photo of a " + class_name; }

  /// Prototypes restricted to `classes`, in the given order.
  ClassPrototypes subset(const std::vector<std::size_t>& classes) const;

  friend bool operator==(const ClassPrototypes&, const ClassPrototypes&) = default;

 private:
  std::vector<std::string> names_;
  Matrix embeddings_;
};

struct Prediction {
  std::size_t label = 0;
  /// Max softmax probability.
  double confidence = 0.0;
  /// Max raw cosine similarity (before temperature).
  double max_logit = 0.0;
  std::vector<double> probabilities;
};

/// Unit-L2 rows; rows with norm below 1e-12 stay zero and are listed.
RowNormalized<float> normalize_rows(const Matrix& m);

/// Cosine logits f_hat . v_j for every row, evaluated in double.
BasicMatrix<double> cosine_logits(const Matrix& features, const ClassPrototypes& protos);

/// Temperature softmax over cosine similarities; argmax ties go to the lowest index.
std::vector<Prediction> classify(const Matrix& features, const ClassPrototypes& protos,
                                 double tau = kDefaultTemperature);

std::vector<std::size_t> labels_of(const std::vector<Prediction>& preds);

}  // namespace cola
