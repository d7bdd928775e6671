#include "mound/crossval.hpp"

#include "mound/errors.hpp"
#include "mound/metrics.hpp"

namespace mound {

CrossValidationResult kfold_cross_validate(std::size_t n_blocks,
                                           const FoldScorer& scorer) {
  if (n_blocks < 2)
    throw ValidationError("cross-validation requires at least 2 blocks");
  if (!scorer) throw ValidationError("cross-validation requires a fold scorer");
  CrossValidationResult result;
  result.folds.reserve(n_blocks);
  std::vector<std::size_t> train;
  train.reserve(n_blocks - 1);
  for (std::size_t test = 0; test < n_blocks; ++test) {
    train.clear();
    for (std::size_t i = 0; i < n_blocks; ++i)
      if (i != test) train.push_back(i);
    result.folds.push_back({test, scorer(train, test)});
    result.average += result.folds.back().score;
  }
  result.average /= static_cast<double>(n_blocks);
  return result;
}

std::vector<CountPrediction>
loocv_regressor(const std::vector<BlockFeatureVector>& rows,
                const RidgeOptions& options) {
  if (rows.size() < 3)
    throw ValidationError("leave-one-out regression requires at least 3 blocks");
  for (const auto& row : rows) {
    row.values(); // throws on incomplete vectors
    if (!row.gt_count)
      throw ValidationError("block '" + row.block_id +
                            "': gt_count is required for leave-one-out training");
  }
  std::vector<CountPrediction> predictions;
  predictions.reserve(rows.size());
  for (std::size_t test = 0; test < rows.size(); ++test) {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    X.reserve(rows.size() - 1);
    y.reserve(rows.size() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == test) continue;
      const auto values = rows[i].values();
      X.emplace_back(values.begin(), values.end());
      y.push_back(*rows[i].gt_count);
    }
    const auto model = fit_ridge(X, y, options);
    predictions.push_back(predict_count(model, rows[test]));
  }
  return predictions;
}

LoocvReport evaluate_loocv(const std::vector<BlockFeatureVector>& rows,
                           const RidgeOptions& options) {
  const auto predictions = loocv_regressor(rows, options);
  LoocvReport report;
  report.rows.reserve(rows.size());
  double gt_total = 0.0, det_total = 0.0, corr_total = 0.0;
  std::vector<double> det_rps, corr_rps;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    LoocvBlockRow row;
    row.block_id = rows[i].block_id;
    row.gt = *rows[i].gt_count;
    row.det_count = rows[i].det_count;
    row.corr_count = predictions[i].count;
    row.det_rp = relative_precision(row.det_count, row.gt);
    row.corr_rp = relative_precision(static_cast<double>(row.corr_count), row.gt);
    gt_total += row.gt;
    det_total += row.det_count;
    corr_total += static_cast<double>(row.corr_count);
    det_rps.push_back(row.det_rp);
    corr_rps.push_back(row.corr_rp);
    report.mean_det_rp += row.det_rp;
    report.mean_corr_rp += row.corr_rp;
    report.rows.push_back(std::move(row));
  }
  const auto n = static_cast<double>(rows.size());
  report.mean_det_rp /= n;
  report.mean_corr_rp /= n;
  report.overall_det_rp = relative_precision(det_total, gt_total);
  report.overall_corr_rp = relative_precision(corr_total, gt_total);
  try {
    report.det_vs_corr = paired_t_test(det_rps, corr_rps);
  } catch (const ValidationError&) {
    // zero-variance differences: significance is simply not reportable
  }
  return report;
}

} // namespace mound
