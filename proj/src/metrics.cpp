#include "tonepipe/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace tonepipe {

namespace {

void validate_shapes(const EvalBatch& batch) {
    if (batch.y.rows() != batch.f.rows() || batch.y.cols() != batch.f.cols())
        throw std::runtime_error("eval batch shape mismatch");
    if (batch.y.rows() < 1) throw std::runtime_error("eval batch needs at least one sample");
    for (Eigen::Index i = 0; i < batch.y.size(); ++i) {
        const double v = batch.y(i);
        if (v != 0.0 && v != 1.0)
            throw std::runtime_error("ground-truth matrix must be binary");
        if (!std::isfinite(batch.f(i)))
            throw std::runtime_error("scores must be finite");
    }
}

}  // namespace

double lrap(const EvalBatch& batch) {
    validate_shapes(batch);
    const auto n_samples = batch.y.rows();
    const auto n_labels = batch.y.cols();

    double total = 0.0;
    for (Eigen::Index i = 0; i < n_samples; ++i) {
        const auto positives = static_cast<Eigen::Index>(batch.y.row(i).sum());
        if (positives == 0 || positives == n_labels) {
            total += 1.0;
            continue;
        }
        double sample = 0.0;
        for (Eigen::Index j = 0; j < n_labels; ++j) {
            if (batch.y(i, j) != 1.0) continue;
            const double fj = batch.f(i, j);
            int rank = 0, true_at_or_above = 0;
            for (Eigen::Index k = 0; k < n_labels; ++k) {
                if (batch.f(i, k) >= fj) {
                    ++rank;
                    if (batch.y(i, k) == 1.0) ++true_at_or_above;
                }
            }
            sample += static_cast<double>(true_at_or_above) / static_cast<double>(rank);
        }
        total += sample / static_cast<double>(positives);
    }
    return total / static_cast<double>(n_samples);
}

double eval_loss(const EvalBatch& batch) {
    validate_shapes(batch);
    constexpr double kClamp = 1e-12;

    double total = 0.0;
    for (Eigen::Index i = 0; i < batch.f.size(); ++i) {
        const double raw = batch.f(i);
        if (raw < 0.0 || raw > 1.0)
            throw std::runtime_error("eval_loss scores must be probabilities in [0, 1]");
        const double p = std::min(1.0 - kClamp, std::max(kClamp, raw));
        const double y = batch.y(i);
        total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    }
    return total / static_cast<double>(batch.f.size());
}

}  // namespace tonepipe
