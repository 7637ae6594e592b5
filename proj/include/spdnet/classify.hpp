#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spdnet/linalg.hpp"

namespace spdnet {

// Samples are rows of a feature matrix throughout this module.

struct SvmOptions {
  double C = 1.0;
  double tol = 0.1;
  int max_iter = 1000;
  std::uint64_t seed = 1;
  bool standardize = false;
};

// Per-dimension affine map x -> (x - mean) / scale.
struct Standardizer {
  Vector mean;
  Vector scale;
  static Standardizer fit(const Matrix& features);
  Matrix apply(const Matrix& features) const;
  Vector apply(const Vector& feature) const;
};

struct BinarySvmResult {
  Vector weights;
  int passes = 0;
  std::vector<double> dual_objective;  // after every full pass, minimization form
};

/// L2-regularized squared-hinge SVM without bias, solved in the dual by
/// coordinate descent over a seeded random permutation each pass. Stops when
/// the spread of the projected gradient over a pass falls to `tol`.
/// `labels` are +1/-1.
BinarySvmResult svm_train_binary(const Matrix& features, const std::vector<int>& labels,
                                 double C, double tol, std::uint64_t seed, int max_iter = 1000);

/// 0.5 |w|^2 + C sum max(0, 1 - y w.x)^2
double svm_primal_objective(const Vector& w, const Matrix& features,
                            const std::vector<int>& labels, double C);

struct SvmModel {
  Matrix weights;  // num_classes x dim, row k scores class k + 1
  double C = 1.0;
  double tol = 0.1;
  std::optional<Standardizer> standardizer;

  int num_classes() const { return static_cast<int>(weights.rows()); }
  int dim() const { return static_cast<int>(weights.cols()); }
};

/// One-vs-rest over classes 1..num_classes (labels are 1-based). Throws
/// InvalidInput when fewer than two distinct classes are present.
SvmModel svm_train(const Matrix& features, const std::vector<int>& labels, int num_classes,
                   const SvmOptions& opts = {});

Vector svm_decision_values(const SvmModel& model, const Vector& feature);
/// argmax of the decision values, lowest class on ties; 1-based.
int svm_predict(const SvmModel& model, const Vector& feature);

struct EvalReport {
  double accuracy = 0.0;     // percent
  Eigen::MatrixXi confusion;  // row = true class, column = predicted
  std::vector<double> per_class_accuracy;  // percent; NaN for classes absent from the test set
  int total = 0;
};

EvalReport evaluate(const SvmModel& model, const Matrix& features, const std::vector<int>& labels);
EvalReport evaluate_predictions(const std::vector<int>& predicted, const std::vector<int>& labels,
                                int num_classes);

/// Gesture names for 14 classes, name plus finger mode for 28 classes, and
/// "class_k" otherwise.
std::vector<std::string> class_names(int num_classes);

void write_confusion_csv(std::ostream& os, const EvalReport& r,
                         const std::vector<std::string>& names);
void write_report_csv(std::ostream& os, const EvalReport& r, const std::vector<std::string>& names);
/// Row-normalized percentages as an aligned text table.
void print_confusion_table(std::ostream& os, const EvalReport& r,
                           const std::vector<std::string>& names);

void save_svm_model(const std::string& path, const SvmModel& model);
SvmModel load_svm_model(const std::string& path);

struct FeatureSet {
  Matrix features;  // rows
  std::vector<int> label_14;
  std::vector<int> label_28;
  std::vector<int> labels(int num_classes) const {
    return num_classes == 28 ? label_28 : label_14;
  }
};

void save_features(const std::string& path, const FeatureSet& fs);
FeatureSet load_features(const std::string& path);

}  // namespace spdnet
