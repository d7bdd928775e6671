#include "mound/ridge.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mound {
namespace {

void check_design(const std::vector<std::vector<double>>& X,
                  const std::vector<double>& y, double lambda) {
  if (X.empty()) throw ValidationError("ridge fit needs at least one sample");
  if (X.size() != y.size())
    throw ValidationError("design matrix and target length differ");
  const std::size_t m = X.front().size();
  if (m == 0) throw ValidationError("ridge fit needs at least one feature");
  for (const auto& row : X)
    if (row.size() != m)
      throw ValidationError("design matrix rows have inconsistent width");
  if (lambda < 0.0) throw ValidationError("lambda must be >= 0");
}

// In-place Cholesky solve of A x = b for symmetric positive definite A
// (lower triangle used). Throws SingularSystemError when a pivot collapses.
std::vector<double> cholesky_solve(std::vector<std::vector<double>> A,
                                   std::vector<double> b) {
  const std::size_t n = A.size();
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(A[i][i]));
  const double tol = 1e-12 * std::max(max_diag, 1e-300);
  for (std::size_t j = 0; j < n; ++j) {
    double d = A[j][j];
    for (std::size_t k = 0; k < j; ++k) d -= A[j][k] * A[j][k];
    if (!(d > tol))
      throw SingularSystemError(
          "normal equations are singular; fit with lambda > 0 or drop dependent "
          "features");
    A[j][j] = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = A[i][j];
      for (std::size_t k = 0; k < j; ++k) s -= A[i][k] * A[j][k];
      A[i][j] = s / A[j][j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) { // forward: L z = b
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= A[i][k] * b[k];
    b[i] = s / A[i][i];
  }
  for (std::size_t ii = n; ii-- > 0;) { // backward: L^T x = z
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= A[k][ii] * b[k];
    b[ii] = s / A[ii][ii];
  }
  return b;
}

std::string format_shortest(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

double parse_model_double(const std::string& tok, const std::string& path) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [p, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || p != end)
    throw DataError("malformed model file " + path + ": bad number '" + tok + "'");
  return v;
}

} // namespace

RidgeModel fit_ridge(const std::vector<std::vector<double>>& X,
                     const std::vector<double>& y, const RidgeOptions& options) {
  check_design(X, y, options.lambda);
  const std::size_t n = X.size();
  const std::size_t m = X.front().size();

  RidgeModel model;
  model.lambda = options.lambda;
  model.has_intercept = options.intercept;

  // Standardization is folded into a copy of the design matrix and kept in
  // the model so prediction sees the same coordinates as the fit.
  std::vector<std::vector<double>> Z = X;
  if (options.standardize) {
    FeatureScaling scaling;
    scaling.mean.assign(m, 0.0);
    scaling.stddev.assign(m, 0.0);
    for (const auto& row : Z)
      for (std::size_t j = 0; j < m; ++j) scaling.mean[j] += row[j];
    for (std::size_t j = 0; j < m; ++j) scaling.mean[j] /= static_cast<double>(n);
    for (const auto& row : Z)
      for (std::size_t j = 0; j < m; ++j) {
        const double d = row[j] - scaling.mean[j];
        scaling.stddev[j] += d * d;
      }
    for (std::size_t j = 0; j < m; ++j) {
      scaling.stddev[j] = std::sqrt(scaling.stddev[j] / static_cast<double>(n));
      if (scaling.stddev[j] == 0.0) scaling.stddev[j] = 1.0;
    }
    for (auto& row : Z)
      for (std::size_t j = 0; j < m; ++j)
        row[j] = (row[j] - scaling.mean[j]) / scaling.stddev[j];
    model.scaling = std::move(scaling);
  }

  const std::size_t p = options.intercept ? m + 1 : m;
  std::vector<std::vector<double>> A(p, std::vector<double>(p, 0.0));
  std::vector<double> b(p, 0.0);
  auto value_at = [&](std::size_t i, std::size_t j) {
    return j < m ? Z[i][j] : 1.0; // ones column for the intercept
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const double xij = value_at(i, j);
      b[j] += xij * y[i];
      for (std::size_t k = j; k < p; ++k) A[j][k] += xij * value_at(i, k);
    }
  }
  for (std::size_t j = 0; j < p; ++j)
    for (std::size_t k = 0; k < j; ++k) A[j][k] = A[k][j];
  for (std::size_t j = 0; j < m; ++j) A[j][j] += options.lambda; // intercept unpenalized

  auto w = cholesky_solve(std::move(A), std::move(b));
  if (options.intercept) {
    model.intercept = w.back();
    w.pop_back();
  }
  model.weights = std::move(w);
  return model;
}

double ridge_loss(const std::vector<std::vector<double>>& X,
                  const std::vector<double>& y, double lambda,
                  std::span<const double> w) {
  check_design(X, y, lambda);
  if (w.size() != X.front().size())
    throw ValidationError("weight vector width does not match design matrix");
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    double pred = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) pred += X[i][j] * w[j];
    const double r = y[i] - pred;
    loss += r * r;
  }
  for (double wj : w) loss += lambda * wj * wj;
  return loss;
}

std::vector<double> ridge_loss_gradient(const std::vector<std::vector<double>>& X,
                                        const std::vector<double>& y, double lambda,
                                        std::span<const double> w) {
  check_design(X, y, lambda);
  if (w.size() != X.front().size())
    throw ValidationError("weight vector width does not match design matrix");
  std::vector<double> grad(w.size(), 0.0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    double pred = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) pred += X[i][j] * w[j];
    const double r = y[i] - pred;
    for (std::size_t j = 0; j < w.size(); ++j) grad[j] -= 2.0 * r * X[i][j];
  }
  for (std::size_t j = 0; j < w.size(); ++j) grad[j] += 2.0 * lambda * w[j];
  return grad;
}

double predict_raw(const RidgeModel& model, std::span<const double> features) {
  if (features.size() != model.dim())
    throw ValidationError("feature vector width " + std::to_string(features.size()) +
                          " does not match model width " +
                          std::to_string(model.dim()));
  double acc = model.has_intercept ? model.intercept : 0.0;
  for (std::size_t j = 0; j < model.dim(); ++j) {
    double v = features[j];
    if (model.scaling)
      v = (v - model.scaling->mean[j]) / model.scaling->stddev[j];
    acc += model.weights[j] * v;
  }
  return acc;
}

CountPrediction predict_count(const RidgeModel& model, const BlockFeatureVector& f) {
  const auto values = f.values();
  CountPrediction out;
  out.block_id = f.block_id;
  out.raw = predict_raw(model, values);
  out.count = std::llround(std::max(out.raw, 0.0));
  return out;
}

void save_model(const RidgeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path.string());
  out << "ridge-model v1\n";
  out << "dim " << model.dim() << '\n';
  out << "lambda " << format_shortest(model.lambda) << '\n';
  out << "intercept "
      << (model.has_intercept ? format_shortest(model.intercept) : std::string("none"))
      << '\n';
  out << "weights";
  for (double w : model.weights) out << ' ' << format_shortest(w);
  out << '\n';
  if (model.scaling) {
    out << "scale_mean";
    for (double v : model.scaling->mean) out << ' ' << format_shortest(v);
    out << "\nscale_std";
    for (double v : model.scaling->stddev) out << ' ' << format_shortest(v);
    out << '\n';
  }
}

RidgeModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file: " + path.string());
  const std::string pathstr = path.string();
  std::string line;
  if (!std::getline(in, line) || line != "ridge-model v1")
    throw DataError("malformed model file " + pathstr + ": bad magic line");

  RidgeModel model;
  std::size_t dim = 0;
  bool have_weights = false;
  std::vector<double> mean, stddev;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    std::vector<std::string> toks;
    for (std::string t; ss >> t;) toks.push_back(t);
    if (key == "dim" && toks.size() == 1) {
      dim = static_cast<std::size_t>(parse_model_double(toks[0], pathstr));
    } else if (key == "lambda" && toks.size() == 1) {
      model.lambda = parse_model_double(toks[0], pathstr);
    } else if (key == "intercept" && toks.size() == 1) {
      if (toks[0] == "none") {
        model.has_intercept = false;
      } else {
        model.has_intercept = true;
        model.intercept = parse_model_double(toks[0], pathstr);
      }
    } else if (key == "weights") {
      for (const auto& t : toks) model.weights.push_back(parse_model_double(t, pathstr));
      have_weights = true;
    } else if (key == "scale_mean") {
      for (const auto& t : toks) mean.push_back(parse_model_double(t, pathstr));
    } else if (key == "scale_std") {
      for (const auto& t : toks) stddev.push_back(parse_model_double(t, pathstr));
    } else {
      throw DataError("malformed model file " + pathstr + ": bad line '" + line + "'");
    }
  }
  if (!have_weights || model.weights.size() != dim || dim == 0)
    throw DataError("malformed model file " + pathstr + ": missing or mismatched weights");
  if (!mean.empty() || !stddev.empty()) {
    if (mean.size() != dim || stddev.size() != dim)
      throw DataError("malformed model file " + pathstr + ": bad scaling width");
    model.scaling = FeatureScaling{std::move(mean), std::move(stddev)};
  }
  return model;
}

} // namespace mound
