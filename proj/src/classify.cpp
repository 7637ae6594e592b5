#include "spdnet/classify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

#include "spdnet/binary_io.hpp"
#include "spdnet/csv.hpp"
#include "spdnet/errors.hpp"

namespace spdnet {

Standardizer Standardizer::fit(const Matrix& features) {
  if (features.rows() < 1) throw InvalidInput("Standardizer: no samples");
  Standardizer s;
  s.mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - s.mean.transpose();
  s.scale = (centered.array().square().colwise().mean().sqrt()).transpose();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (!(s.scale(i) > 0.0)) s.scale(i) = 1.0;
  return s;
}

Matrix Standardizer::apply(const Matrix& features) const {
  return ((features.rowwise() - mean.transpose()).array().rowwise() /
          scale.transpose().array())
      .matrix();
}

Vector Standardizer::apply(const Vector& feature) const {
  return ((feature - mean).array() / scale.array()).matrix();
}

namespace {

double dual_objective(const Vector& w, const Vector& alpha, double diag) {
  return 0.5 * w.squaredNorm() + 0.5 * diag * alpha.squaredNorm() - alpha.sum();
}

}  // namespace

BinarySvmResult svm_train_binary(const Matrix& features, const std::vector<int>& labels,
                                 double C, double tol, std::uint64_t seed, int max_iter) {
  const Eigen::Index n = features.rows();
  if (n < 1) throw InvalidInput("svm_train_binary: no samples");
  if (static_cast<Eigen::Index>(labels.size()) != n)
    throw InvalidInput("svm_train_binary: label count does not match samples");
  if (!(C > 0.0) || !(tol > 0.0)) throw InvalidInput("svm_train_binary: C and tol must be positive");
  for (int y : labels)
    if (y != 1 && y != -1) throw InvalidInput("svm_train_binary: labels must be +1 or -1");

  const double diag = 0.5 / C;
  Vector qd(n);
  for (Eigen::Index i = 0; i < n; ++i) qd(i) = diag + features.row(i).squaredNorm();

  BinarySvmResult res;
  res.weights = Vector::Zero(features.cols());
  Vector alpha = Vector::Zero(n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);

  for (int pass = 0; pass < max_iter; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (Eigen::Index i : order) {
      const double yi = labels[static_cast<std::size_t>(i)];
      const double g = yi * features.row(i).dot(res.weights) - 1.0 + diag * alpha(i);
      const double pg = alpha(i) == 0.0 ? std::min(g, 0.0) : g;
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) > 1e-12) {
        const double old = alpha(i);
        alpha(i) = std::max(old - g / qd(i), 0.0);
        res.weights.noalias() += (alpha(i) - old) * yi * features.row(i).transpose();
      }
    }
    res.passes = pass + 1;
    res.dual_objective.push_back(dual_objective(res.weights, alpha, diag));
    if (pg_max - pg_min <= tol) break;
  }
  return res;
}

double svm_primal_objective(const Vector& w, const Matrix& features,
                            const std::vector<int>& labels, double C) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double margin = 1.0 - labels[static_cast<std::size_t>(i)] * features.row(i).dot(w);
    if (margin > 0.0) loss += margin * margin;
  }
  return 0.5 * w.squaredNorm() + C * loss;
}

SvmModel svm_train(const Matrix& features, const std::vector<int>& labels, int num_classes,
                   const SvmOptions& opts) {
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw InvalidInput("svm_train: label count does not match samples");
  std::set<int> present(labels.begin(), labels.end());
  for (int l : present)
    if (l < 1 || l > num_classes)
      throw InvalidInput("svm_train: label " + std::to_string(l) + " outside [1, " +
                         std::to_string(num_classes) + "]");
  if (present.size() < 2) throw InvalidInput("svm_train: need at least two classes");

  SvmModel model;
  model.C = opts.C;
  model.tol = opts.tol;
  Matrix x = features;
  if (opts.standardize) {
    model.standardizer = Standardizer::fit(features);
    x = model.standardizer->apply(features);
  }
  model.weights = Matrix::Zero(num_classes, features.cols());
  for (int k = 1; k <= num_classes; ++k) {
    std::vector<int> y(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == k ? 1 : -1;
    model.weights.row(k - 1) =
        svm_train_binary(x, y, opts.C, opts.tol, opts.seed + static_cast<std::uint64_t>(k),
                         opts.max_iter)
            .weights.transpose();
  }
  return model;
}

Vector svm_decision_values(const SvmModel& model, const Vector& feature) {
  if (feature.size() != model.dim())
    throw InvalidInput("svm_predict: feature has dimension " + std::to_string(feature.size()) +
                       ", model expects " + std::to_string(model.dim()));
  if (model.standardizer) return model.weights * model.standardizer->apply(feature);
  return model.weights * feature;
}

int svm_predict(const SvmModel& model, const Vector& feature) {
  const Vector scores = svm_decision_values(model, feature);
  int best = 0;
  for (int k = 1; k < scores.size(); ++k)
    if (scores(k) > scores(best)) best = k;
  return best + 1;
}

EvalReport evaluate_predictions(const std::vector<int>& predicted, const std::vector<int>& labels,
                                int num_classes) {
  if (labels.empty()) throw InvalidInput("evaluate: empty test set");
  if (predicted.size() != labels.size()) throw InvalidInput("evaluate: size mismatch");
  EvalReport r;
  r.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 1 || labels[i] > num_classes || predicted[i] < 1 || predicted[i] > num_classes)
      throw InvalidInput("evaluate: label out of range");
    ++r.confusion(labels[i] - 1, predicted[i] - 1);
  }
  r.total = static_cast<int>(labels.size());
  r.accuracy = 100.0 * r.confusion.trace() / r.total;
  for (int k = 0; k < num_classes; ++k) {
    const int row = r.confusion.row(k).sum();
    r.per_class_accuracy.push_back(row == 0 ? std::numeric_limits<double>::quiet_NaN()
                                            : 100.0 * r.confusion(k, k) / row);
  }
  return r;
}

EvalReport evaluate(const SvmModel& model, const Matrix& features, const std::vector<int>& labels) {
  std::vector<int> pred;
  pred.reserve(labels.size());
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    pred.push_back(svm_predict(model, features.row(i).transpose()));
  return evaluate_predictions(pred, labels, model.num_classes());
}

std::vector<std::string> class_names(int num_classes) {
  static const std::vector<std::string> gestures = {
      "Grab",    "Tap",     "Expand",  "Pinch",   "Rot-CW",  "Rot-CCW", "Swipe-R",
      "Swipe-L", "Swipe-U", "Swipe-D", "Swipe-X", "Swipe-V", "Swipe-+", "Shake"};
  std::vector<std::string> out;
  if (num_classes == 14) return gestures;
  if (num_classes == 28) {
    for (const auto& g : gestures) {
      out.push_back(g + " (one finger)");
      out.push_back(g + " (whole hand)");
    }
    return out;
  }
  for (int k = 1; k <= num_classes; ++k) out.push_back("class_" + std::to_string(k));
  return out;
}

void write_confusion_csv(std::ostream& os, const EvalReport& r,
                         const std::vector<std::string>& names) {
  const auto n = r.confusion.rows();
  os << "true\\predicted";
  for (Eigen::Index j = 0; j < n; ++j) os << ',' << csv_field(names.at(static_cast<std::size_t>(j)));
  os << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    os << csv_field(names.at(static_cast<std::size_t>(i)));
    for (Eigen::Index j = 0; j < n; ++j) os << ',' << r.confusion(i, j);
    os << '\n';
  }
}

void write_report_csv(std::ostream& os, const EvalReport& r, const std::vector<std::string>& names) {
  os << "class,support,correct,accuracy\n";
  for (Eigen::Index k = 0; k < r.confusion.rows(); ++k) {
    os << csv_field(names.at(static_cast<std::size_t>(k))) << ',' << r.confusion.row(k).sum()
       << ',' << r.confusion(k, k) << ',';
    const double a = r.per_class_accuracy[static_cast<std::size_t>(k)];
    if (!std::isnan(a)) os << std::fixed << std::setprecision(4) << a << std::defaultfloat;
    os << '\n';
  }
  os << "overall," << r.total << ',' << r.confusion.trace() << ',' << std::fixed
     << std::setprecision(4) << r.accuracy << std::defaultfloat << '\n';
}

void print_confusion_table(std::ostream& os, const EvalReport& r,
                           const std::vector<std::string>& names) {
  const auto n = r.confusion.rows();
  std::size_t w = 8;
  for (Eigen::Index k = 0; k < n; ++k) w = std::max(w, names.at(static_cast<std::size_t>(k)).size());
  os << std::setw(static_cast<int>(w)) << "" << " |";
  for (Eigen::Index j = 0; j < n; ++j) os << std::setw(7) << (j + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < n; ++i) {
    os << std::setw(static_cast<int>(w)) << names.at(static_cast<std::size_t>(i)) << " |";
    const int row = r.confusion.row(i).sum();
    for (Eigen::Index j = 0; j < n; ++j) {
      if (row == 0) {
        os << std::setw(7) << "-";
      } else {
        os << std::setw(7) << std::fixed << std::setprecision(1)
           << 100.0 * r.confusion(i, j) / row << std::defaultfloat;
      }
    }
    os << '\n';
  }
  os << "accuracy: " << std::fixed << std::setprecision(2) << r.accuracy << "% (" << r.confusion.trace()
     << "/" << r.total << ")" << std::defaultfloat << '\n';
}

void save_svm_model(const std::string& path, const SvmModel& model) {
  using namespace binio;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open model file for writing: " + path);
  write_magic(os, "SPSV");
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(model.num_classes()));
  write_u32(os, static_cast<std::uint32_t>(model.dim()));
  write_f64(os, model.C);
  write_f64(os, model.tol);
  write_u32(os, model.standardizer ? 1u : 0u);
  write_matrix(os, model.weights);
  if (model.standardizer) {
    write_matrix(os, model.standardizer->mean.transpose());
    write_matrix(os, model.standardizer->scale.transpose());
  }
  if (!os) throw Error("save_svm_model: write failed");
}

SvmModel load_svm_model(const std::string& path) {
  using namespace binio;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open model file: " + path);
  expect_magic(is, "SPSV", path);
  if (read_u32(is, path) != 1) throw ParseError(path, 0, "unsupported model version");
  SvmModel m;
  const auto k = read_u32(is, path);
  const auto d = read_u32(is, path);
  m.C = read_f64(is, path);
  m.tol = read_f64(is, path);
  const bool has_std = read_u32(is, path) != 0;
  m.weights = read_matrix(is, k, d, path);
  if (has_std) {
    Standardizer s;
    s.mean = read_matrix(is, 1, d, path).transpose();
    s.scale = read_matrix(is, 1, d, path).transpose();
    m.standardizer = std::move(s);
  }
  return m;
}

void save_features(const std::string& path, const FeatureSet& fs) {
  using namespace binio;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot open features file for writing: " + path);
  write_magic(os, "SPFT");
  write_u32(os, 1);
  write_u32(os, static_cast<std::uint32_t>(fs.features.rows()));
  write_u32(os, static_cast<std::uint32_t>(fs.features.cols()));
  for (Eigen::Index i = 0; i < fs.features.rows(); ++i) {
    write_u32(os, static_cast<std::uint32_t>(fs.label_14[static_cast<std::size_t>(i)]));
    write_u32(os, static_cast<std::uint32_t>(fs.label_28[static_cast<std::size_t>(i)]));
    for (Eigen::Index j = 0; j < fs.features.cols(); ++j) write_f64(os, fs.features(i, j));
  }
  if (!os) throw Error("save_features: write failed");
}

FeatureSet load_features(const std::string& path) {
  using namespace binio;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open features file: " + path);
  expect_magic(is, "SPFT", path);
  if (read_u32(is, path) != 1) throw ParseError(path, 0, "unsupported features version");
  const auto n = read_u32(is, path);
  const auto d = read_u32(is, path);
  FeatureSet fs;
  fs.features.resize(n, d);
  for (std::uint32_t i = 0; i < n; ++i) {
    fs.label_14.push_back(static_cast<int>(read_u32(is, path)));
    fs.label_28.push_back(static_cast<int>(read_u32(is, path)));
    for (std::uint32_t j = 0; j < d; ++j) fs.features(i, j) = read_f64(is, path);
  }
  return fs;
}

}  // namespace spdnet
