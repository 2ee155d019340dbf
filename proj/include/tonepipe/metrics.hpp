#pragma once

#include <Eigen/Dense>

namespace tonepipe {

// Ground truth y (binary) and scores f, one row per sample, one column per
// label. Scores may be arbitrary reals for lrap; eval_loss expects
// probabilities.
struct EvalBatch {
    Eigen::MatrixXd y;
    Eigen::MatrixXd f;
};

// Label Ranking Average Precision. For each sample with at least one and
// fewer than all positive labels:
//
//   score_i = (1/|positives_i|) * sum over true labels j of |L_ij| / rank_ij
//
// where rank_ij counts labels scored >= f_ij and |L_ij| counts *true* labels
// scored >= f_ij (ties compare with >=). Samples with zero or all-positive
// ground truth score 1.0. Returns the mean over samples, in [0, 1].
double lrap(const EvalBatch& batch);

// Mean binary cross-entropy over samples x labels; probabilities are clamped
// to [1e-12, 1 - 1e-12] before the logs. A score outside [0, 1] is an error.
double eval_loss(const EvalBatch& batch);

}  // namespace tonepipe
