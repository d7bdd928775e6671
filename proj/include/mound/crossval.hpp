#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mound/features.hpp"
#include "mound/ridge.hpp"
#include "mound/stats.hpp"

namespace mound {

struct FoldOutcome {
  std::size_t test_index = 0;
  double score = 0.0;
};

struct CrossValidationResult {
  std::vector<FoldOutcome> folds;
  double average = 0.0;
};

// Called once per fold with the training indices (every block except
// test_index, in ascending order) and the held-out block.
using FoldScorer =
    std::function<double(std::span<const std::size_t> train_indices,
                         std::size_t test_index)>;

// Leave-one-block-out cross-validation: k folds over k blocks, fold i tests
// block i and trains on the rest. Requires n_blocks >= 2.
CrossValidationResult kfold_cross_validate(std::size_t n_blocks,
                                           const FoldScorer& scorer);

// Leave-one-out protocol for the count regressor: for each block, fit on the
// other blocks' feature vectors and predict the held-out one. Every row must
// carry gt_count and ft_density; requires at least 3 rows. Predictions come
// back in input order.
std::vector<CountPrediction>
loocv_regressor(const std::vector<BlockFeatureVector>& rows,
                const RidgeOptions& options);

struct LoocvBlockRow {
  std::string block_id;
  double gt = 0.0;
  double det_count = 0.0;
  double det_rp = 0.0; // fraction, not percent
  long long corr_count = 0;
  double corr_rp = 0.0;
};

struct LoocvReport {
  std::vector<LoocvBlockRow> rows;
  double mean_det_rp = 0.0;
  double mean_corr_rp = 0.0;
  double overall_det_rp = 0.0; // from summed counts
  double overall_corr_rp = 0.0;
  std::optional<TTestResult> det_vs_corr; // paired on per-block RPs
};

// Full leave-one-out evaluation: detection-only counts against corrected
// predictions, per-block and aggregate RP, plus the paired significance
// test (absent when the per-block differences have zero variance).
LoocvReport evaluate_loocv(const std::vector<BlockFeatureVector>& rows,
                           const RidgeOptions& options);

} // namespace mound
