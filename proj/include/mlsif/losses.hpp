#ifndef MLSIF_LOSSES_HPP
#define MLSIF_LOSSES_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "mlsif/errors.hpp"
#include "mlsif/stats.hpp"

namespace mlsif {

// A loss value split into its MSE-flavoured and SIV-flavoured parts, with the
// gradient taken with respect to the predictions the loss actually saw.
struct LossBreakdown {
    double mse_part = 0.0;
    double siv_part = 0.0;
    double total = 0.0;
    std::vector<double> grad;
    // Set when a squared-error term had empty support and contributed 0.
    bool empty_support_warning = false;
};

// Hyperparameters of one training run.
struct TrainConfig {
    double alpha = 0.98;        // weight of the SIV part in the mixture
    double lambda = 0.9;        // weight of dropped-originally-observed errors
    double gamma = 0.2;         // fraction of known values dropped per step
    std::size_t epochs = 30;    // E
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;

    void validate() const {
        if (alpha < 0.0 || alpha > 1.0) throw InvalidInput("alpha must be in [0,1]");
        if (lambda < 0.0 || lambda > 1.0) throw InvalidInput("lambda must be in [0,1]");
        if (gamma < 0.0 || gamma > 1.0) throw InvalidInput("gamma must be in [0,1]");
        if (epochs < 1) throw InvalidInput("epochs must be >= 1");
        if (!(learning_rate > 0.0)) throw InvalidInput("learning rate must be > 0");
    }
};

namespace detail {

// Mean squared error over a support subset, gradient 2(p-x)/count scattered
// into a full-length gradient vector.
inline void add_mean_squared_term(std::span<const double> predicted_full,
                                  std::span<const std::size_t> positions,
                                  std::span<const double> truth, double weight,
                                  double& loss_out, std::vector<double>& grad_out) {
    const double count = static_cast<double>(positions.size());
    double s = 0.0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const double d = predicted_full[positions[k]] - truth[k];
        s += d * d;
        grad_out[positions[k]] += weight * 2.0 * d / count;
    }
    loss_out += weight * s / count;
}

} // namespace detail

// Squared error restricted to observed positions, mean-reduced; the gradient
// covers the full prediction vector with zeros away from the support.
inline LossBreakdown regression_loss(std::span<const double> predicted_full,
                                     std::span<const std::size_t> observed_positions,
                                     std::span<const double> observed_values) {
    if (observed_positions.empty())
        throw InvalidInput("regression loss: no observed positions");
    if (observed_positions.size() != observed_values.size())
        throw InvalidInput("regression loss: positions/values size mismatch");
    LossBreakdown out;
    out.grad.assign(predicted_full.size(), 0.0);
    detail::add_mean_squared_term(predicted_full, observed_positions, observed_values,
                                  1.0, out.mse_part, out.grad);
    out.total = out.mse_part;
    return out;
}

// Remaining-observed term plus dropped term, each mean-reduced over its own
// support; dropped_positions must be a subset of observed_positions. An empty
// support contributes zero and raises the warning flag.
inline LossBreakdown rdis_loss(std::span<const double> predicted_full,
                               std::span<const std::size_t> observed_positions,
                               std::span<const double> observed_values,
                               std::span<const std::size_t> dropped_positions) {
    if (observed_positions.size() != observed_values.size())
        throw InvalidInput("rdis loss: positions/values size mismatch");
    std::vector<bool> is_dropped(predicted_full.size(), false);
    for (std::size_t p : dropped_positions) {
        if (p >= predicted_full.size()) throw InvalidInput("rdis loss: dropped position out of range");
        is_dropped[p] = true;
    }
    std::vector<std::size_t> rem_pos, drop_pos;
    std::vector<double> rem_val, drop_val;
    for (std::size_t k = 0; k < observed_positions.size(); ++k) {
        if (is_dropped[observed_positions[k]]) {
            drop_pos.push_back(observed_positions[k]);
            drop_val.push_back(observed_values[k]);
        } else {
            rem_pos.push_back(observed_positions[k]);
            rem_val.push_back(observed_values[k]);
        }
    }
    if (drop_pos.size() != dropped_positions.size())
        throw InvalidInput("rdis loss: dropped positions must be a subset of observed");

    LossBreakdown out;
    out.grad.assign(predicted_full.size(), 0.0);
    if (rem_pos.empty())
        out.empty_support_warning = true;
    else
        detail::add_mean_squared_term(predicted_full, rem_pos, rem_val, 1.0,
                                      out.mse_part, out.grad);
    if (drop_pos.empty())
        out.empty_support_warning = true;
    else
        detail::add_mean_squared_term(predicted_full, drop_pos, drop_val, 1.0,
                                      out.mse_part, out.grad);
    out.total = out.mse_part;
    return out;
}

// Mean squared error on dropped positions only; predictions are given at
// exactly those positions.
inline LossBreakdown nonregression_loss(std::span<const double> dropped_truth,
                                        std::span<const double> predicted_at_dropped) {
    if (dropped_truth.empty()) throw InvalidInput("non-regression loss: empty dropped set");
    if (dropped_truth.size() != predicted_at_dropped.size())
        throw InvalidInput("non-regression loss: size mismatch");
    LossBreakdown out;
    out.grad.assign(dropped_truth.size(), 0.0);
    const double count = static_cast<double>(dropped_truth.size());
    for (std::size_t k = 0; k < dropped_truth.size(); ++k) {
        const double d = predicted_at_dropped[k] - dropped_truth[k];
        out.mse_part += d * d;
        out.grad[k] = 2.0 * d / count;
    }
    out.mse_part /= count;
    out.total = out.mse_part;
    return out;
}

// lambda * MSE(dropped-originally-observed) + (1-lambda) * MSE(dropped-
// previously-imputed). The gradient runs over [obs group ++ imp group] in
// that order; an empty group contributes zero.
inline LossBreakdown weighted_mse_loss(std::span<const double> dropped_obs_truth,
                                       std::span<const double> dropped_imp_truth,
                                       std::span<const double> pred_at_dropped_obs,
                                       std::span<const double> pred_at_dropped_imp,
                                       double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw InvalidInput("lambda must be in [0,1]");
    if (dropped_obs_truth.size() != pred_at_dropped_obs.size() ||
        dropped_imp_truth.size() != pred_at_dropped_imp.size())
        throw InvalidInput("weighted mse: group size mismatch");
    if (dropped_obs_truth.empty() && dropped_imp_truth.empty())
        throw InvalidInput("weighted mse: both groups empty");

    LossBreakdown out;
    out.grad.assign(dropped_obs_truth.size() + dropped_imp_truth.size(), 0.0);
    if (!dropped_obs_truth.empty()) {
        const double count = static_cast<double>(dropped_obs_truth.size());
        double s = 0.0;
        for (std::size_t k = 0; k < dropped_obs_truth.size(); ++k) {
            const double d = pred_at_dropped_obs[k] - dropped_obs_truth[k];
            s += d * d;
            out.grad[k] = lambda * 2.0 * d / count;
        }
        out.mse_part += lambda * s / count;
    }
    if (!dropped_imp_truth.empty()) {
        const std::size_t base = dropped_obs_truth.size();
        const double count = static_cast<double>(dropped_imp_truth.size());
        double s = 0.0;
        for (std::size_t k = 0; k < dropped_imp_truth.size(); ++k) {
            const double d = pred_at_dropped_imp[k] - dropped_imp_truth[k];
            s += d * d;
            out.grad[base + k] = (1.0 - lambda) * 2.0 * d / count;
        }
        out.mse_part += (1.0 - lambda) * s / count;
    }
    out.total = out.mse_part;
    return out;
}

// SIV between a target multiset and a completed multiset in which the entries
// listed in predicted_positions are model outputs. The gradient (one entry per
// predicted position) goes through mu, sigma and the rooted moments of the
// completed multiset in closed form:
//   d mu/dy    = 1/n
//   d sigma/dy = z/n
//   d g3/dy    = 3/(n sigma) (z^2 - 1 - g3 z),  S = cbrt(g3)
//   d g4/dy    = 4/(n sigma) (z^3 - g4 z - g3), K = g4^(1/4)
// with z the standardized value. Below the degenerate sigma the moment terms
// have zero gradient, matching the index convention. The same clamp applies
// when the TARGET is degenerate: its S = K = 0 are convention fillers, and
// chasing them is hopeless anyway (K >= 1 whenever sigma > 0) with a gradient
// that grows like 1/sigma as the completed multiset flattens.
inline LossBreakdown siv_loss(std::span<const double> target,
                              std::span<const double> completed,
                              std::span<const std::size_t> predicted_positions) {
    if (target.empty() || completed.empty())
        throw InvalidInput("siv loss: empty multiset");
    for (std::size_t p : predicted_positions)
        if (p >= completed.size()) throw InvalidInput("siv loss: predicted position out of range");

    const StatIndexes ti = compute_indexes(target);
    const StatIndexes ci = compute_indexes(completed);

    const double dmu = ci.mu - ti.mu;
    const double dsg = ci.sigma - ti.sigma;
    const double dsk = ci.skew_root - ti.skew_root;
    const double dku = ci.kurt_root - ti.kurt_root;

    LossBreakdown out;
    out.siv_part = dmu * dmu + dsg * dsg + dsk * dsk + dku * dku;
    out.total = out.siv_part;
    out.grad.assign(predicted_positions.size(), 0.0);

    const double n = static_cast<double>(completed.size());
    const bool completed_degenerate = ci.sigma < kDegenerateSigma;
    const bool moment_clamp = completed_degenerate || ti.sigma < kDegenerateSigma;

    // Recover the raw standardized moments behind the rooted indexes.
    const double g3 = ci.skew_root * ci.skew_root * ci.skew_root;
    const double g4 = ci.kurt_root * ci.kurt_root * ci.kurt_root * ci.kurt_root;
    // d cbrt(g3)/d g3 and d g4^(1/4)/d g4, guarded at the non-differentiable points.
    const double dS_dg3 =
        (!moment_clamp && std::abs(g3) > 0.0) ? 1.0 / (3.0 * std::cbrt(g3 * g3)) : 0.0;
    const double dK_dg4 =
        (!moment_clamp && g4 > 0.0) ? 0.25 / std::pow(g4, 0.75) : 0.0;

    for (std::size_t k = 0; k < predicted_positions.size(); ++k) {
        const double y = completed[predicted_positions[k]];
        double g = 2.0 * dmu / n; // mean term
        if (!completed_degenerate) {
            const double z = (y - ci.mu) / ci.sigma;
            g += 2.0 * dsg * z / n;
            const double dg3 = 3.0 / (n * ci.sigma) * (z * z - 1.0 - g3 * z);
            const double dg4 = 4.0 / (n * ci.sigma) * (z * z * z - g4 * z - g3);
            g += 2.0 * dsk * dS_dg3 * dg3;
            g += 2.0 * dku * dK_dg4 * dg4;
        }
        out.grad[k] = g;
    }
    return out;
}

// Convex combination (1-alpha) * mse_component + alpha * siv_component over a
// shared prediction vector.
inline LossBreakdown mixture_loss(const LossBreakdown& mse_component,
                                  const LossBreakdown& siv_component, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw InvalidInput("alpha must be in [0,1]");
    if (mse_component.grad.size() != siv_component.grad.size())
        throw InvalidInput("mixture loss: gradient lengths differ");
    LossBreakdown out;
    out.mse_part = mse_component.total;
    out.siv_part = siv_component.total;
    out.total = (1.0 - alpha) * out.mse_part + alpha * out.siv_part;
    out.grad.resize(mse_component.grad.size());
    for (std::size_t i = 0; i < out.grad.size(); ++i)
        out.grad[i] = (1.0 - alpha) * mse_component.grad[i] + alpha * siv_component.grad[i];
    out.empty_support_warning =
        mse_component.empty_support_warning || siv_component.empty_support_warning;
    return out;
}

} // namespace mlsif

#endif
