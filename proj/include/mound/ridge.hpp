#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mound/errors.hpp"
#include "mound/features.hpp"

namespace mound {

// The normal-equation system has no unique solution (only possible when
// lambda is 0 and the design matrix is rank-deficient).
class SingularSystemError : public DataError {
public:
  explicit SingularSystemError(const std::string& what) : DataError(what) {}
};

struct RidgeOptions {
  double lambda = 10.0;
  bool intercept = false;   // unpenalized when enabled
  bool standardize = false; // z-score features; folded into the model
};

struct FeatureScaling {
  std::vector<double> mean;
  std::vector<double> stddev; // population std; constant features get 1
};

struct RidgeModel {
  std::vector<double> weights; // one per feature
  double intercept = 0.0;
  bool has_intercept = false;
  double lambda = 0.0;
  std::optional<FeatureScaling> scaling;

  std::size_t dim() const { return weights.size(); }
};

// Closed-form ridge fit: W = (X^T X + lambda I)^(-1) X^T y, solved by
// Cholesky. With an intercept the ones column is appended and excluded from
// the penalty. X is row-major, N x M; every row must have the same M >= 1,
// N >= 1, lambda >= 0.
RidgeModel fit_ridge(const std::vector<std::vector<double>>& X,
                     const std::vector<double>& y, const RidgeOptions& options);

// Penalized least-squares objective and its gradient for the no-intercept
// form: L(w) = sum_i (y_i - x_i . w)^2 + lambda * |w|^2. The gradient backs
// the finite-difference checks and iterative reference minimizers in the
// test suite.
double ridge_loss(const std::vector<std::vector<double>>& X,
                  const std::vector<double>& y, double lambda,
                  std::span<const double> w);
std::vector<double> ridge_loss_gradient(const std::vector<std::vector<double>>& X,
                                        const std::vector<double>& y, double lambda,
                                        std::span<const double> w);

// Raw affine prediction (scaling applied if the model carries it).
double predict_raw(const RidgeModel& model, std::span<const double> features);

struct CountPrediction {
  std::string block_id;
  double raw = 0.0;
  long long count = 0; // max(raw, 0) rounded half-up
};

CountPrediction predict_count(const RidgeModel& model, const BlockFeatureVector& f);

// Line-oriented text model file; doubles round-trip bit-exactly.
void save_model(const RidgeModel& model, const std::filesystem::path& path);
RidgeModel load_model(const std::filesystem::path& path);

} // namespace mound
