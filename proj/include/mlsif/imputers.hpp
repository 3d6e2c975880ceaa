#ifndef MLSIF_IMPUTERS_HPP
#define MLSIF_IMPUTERS_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mlsif/errors.hpp"
#include "mlsif/losses.hpp"
#include "mlsif/series.hpp"

namespace mlsif {

namespace detail {

// Deterministic helpers kept off std::*_distribution so draws are stable
// across standard library implementations.
inline double canonical_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t bounded_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

// k distinct elements drawn from pool, returned sorted.
inline std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool,
                                                           std::size_t k,
                                                           std::mt19937_64& rng) {
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + bounded_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Classical imputers. Each returns predictions at the segment's missing
// offsets, in increasing offset order; observed points are never touched.
// ---------------------------------------------------------------------------

inline std::vector<double> impute_mean(const SegmentView& segment) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < segment.length(); ++i) {
        if (segment.status(i).is_known()) {
            sum += segment.value(i);
            ++count;
        }
    }
    if (count == 0) throw CannotImpute("mean imputation: segment has no known values");
    const double mean = sum / static_cast<double>(count);
    return std::vector<double>(segment.missing_count(), mean);
}

// Linear interpolation between nearest known neighbours, constant
// extrapolation past the first/last known point.
inline std::vector<double> impute_linear(const SegmentView& segment) {
    const auto known = segment.known_offsets();
    if (known.empty()) throw CannotImpute("linear imputation: segment has no known values");
    std::vector<double> out;
    out.reserve(segment.missing_count());
    std::size_t right = 0; // index into known of first known offset > current gap
    for (std::size_t i = 0; i < segment.length(); ++i) {
        if (!segment.status(i).is_missing()) continue;
        while (right < known.size() && known[right] < i) ++right;
        if (right == 0) {
            out.push_back(segment.value(known.front()));
        } else if (right == known.size()) {
            out.push_back(segment.value(known.back()));
        } else {
            const std::size_t xl = known[right - 1], xr = known[right];
            const double yl = segment.value(xl), yr = segment.value(xr);
            const double w = static_cast<double>(i - xl) / static_cast<double>(xr - xl);
            out.push_back(yl + w * (yr - yl));
        }
    }
    return out;
}

namespace detail {

// Cubic spline interpolation with not-a-knot end conditions, which makes the
// spline reproduce cubic polynomials exactly (the behaviour of the usual
// spline-interpolation baselines). Out-of-range queries evaluate the boundary
// segment's cubic.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t m = x_.size();
        if (m < 4 || y_.size() != m)
            throw InvalidInput("spline needs >= 4 knots");
        std::vector<double> h(m - 1);
        for (std::size_t i = 0; i + 1 < m; ++i) h[i] = x_[i + 1] - x_[i];

        // Solve for the knot second derivatives M_1..M_{m-2}; the end values
        // follow from third-derivative continuity at the second and
        // second-to-last knots (not-a-knot).
        const std::size_t q = m - 2;
        std::vector<double> a(q, 0.0), b(q, 0.0), c(q, 0.0), d(q, 0.0);
        for (std::size_t i = 1; i + 1 < m; ++i) {
            const std::size_t r = i - 1;
            a[r] = h[i - 1] / 6.0;
            b[r] = (h[i - 1] + h[i]) / 3.0;
            c[r] = h[i] / 6.0;
            d[r] = (y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1];
        }
        // M_0 = (1+h0/h1) M_1 - (h0/h1) M_2 folded into the first row.
        {
            const double r01 = h[0] / h[1];
            b[0] += a[0] * (1.0 + r01);
            c[0] -= a[0] * r01;
            a[0] = 0.0;
        }
        // Mirror substitution for M_{m-1} in the last row.
        {
            const double rnn = h[m - 2] / h[m - 3];
            b[q - 1] += c[q - 1] * (1.0 + rnn);
            a[q - 1] -= c[q - 1] * rnn;
            c[q - 1] = 0.0;
        }
        // Thomas algorithm.
        std::vector<double> mInterior(q);
        for (std::size_t i = 1; i < q; ++i) {
            const double w = a[i] / b[i - 1];
            b[i] -= w * c[i - 1];
            d[i] -= w * d[i - 1];
        }
        mInterior[q - 1] = d[q - 1] / b[q - 1];
        for (std::size_t i = q - 1; i-- > 0;)
            mInterior[i] = (d[i] - c[i] * mInterior[i + 1]) / b[i];

        m2_.assign(m, 0.0);
        for (std::size_t i = 0; i < q; ++i) m2_[i + 1] = mInterior[i];
        m2_[0] = m2_[1] + (h[0] / h[1]) * (m2_[1] - m2_[2]);
        m2_[m - 1] = m2_[m - 2] + (h[m - 2] / h[m - 3]) * (m2_[m - 2] - m2_[m - 3]);
    }

    double operator()(double x) const {
        const std::size_t m = x_.size();
        std::size_t i;
        if (x <= x_.front())
            i = 0;
        else if (x >= x_.back())
            i = m - 2;
        else
            i = static_cast<std::size_t>(
                    std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
        const double h = x_[i + 1] - x_[i];
        const double u = x_[i + 1] - x;
        const double v = x - x_[i];
        return m2_[i] * u * u * u / (6.0 * h) + m2_[i + 1] * v * v * v / (6.0 * h) +
               (y_[i] / h - m2_[i] * h / 6.0) * u + (y_[i + 1] / h - m2_[i + 1] * h / 6.0) * v;
    }

private:
    std::vector<double> x_, y_, m2_;
};

} // namespace detail

struct SplineResult {
    std::vector<double> values;
    bool linear_fallback = false; // fewer than 4 known points
};

inline SplineResult impute_spline(const SegmentView& segment) {
    const auto known = segment.known_offsets();
    if (known.empty()) throw CannotImpute("spline imputation: segment has no known values");
    if (known.size() < 4) return {impute_linear(segment), true};

    std::vector<double> kx, ky;
    kx.reserve(known.size());
    ky.reserve(known.size());
    for (std::size_t off : known) {
        kx.push_back(static_cast<double>(off));
        ky.push_back(segment.value(off));
    }
    detail::CubicSpline spline(std::move(kx), std::move(ky));
    SplineResult out;
    out.values.reserve(segment.missing_count());
    for (std::size_t off : segment.missing_offsets())
        out.values.push_back(spline(static_cast<double>(off)));
    return out;
}

// ---------------------------------------------------------------------------
// Trainable windowed model. Predictions are made one position at a time from
// the masked values of a fixed-radius neighbourhood inside the current
// sample, through a two-layer feedforward map. The parameters do not depend
// on the sample length, so a stage can always inherit the previous stage's
// model no matter how the split length grew — the inheritance trick the
// length-insensitive sequence models use.
// ---------------------------------------------------------------------------

class WindowModel {
public:
    WindowModel(std::size_t context, std::size_t hidden, std::uint64_t seed)
        : context_(context), hidden_(hidden) {
        if (context < 1) throw InvalidInput("window model: context radius must be >= 1");
        if (hidden < 1) throw InvalidInput("window model: hidden width must be >= 1");
        std::mt19937_64 rng(seed);
        const std::size_t in = input_width();
        w1_.resize(hidden_ * in);
        b1_.assign(hidden_, 0.0);
        w2_.assign(hidden_, 0.0);
        const double lim1 = std::sqrt(6.0 / static_cast<double>(in + hidden_));
        for (double& w : w1_) w = (2.0 * detail::canonical_unit(rng) - 1.0) * lim1;
        const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden_ + 1));
        for (double& w : w2_) w = (2.0 * detail::canonical_unit(rng) - 1.0) * lim2;
        // Unit-scale output-bias spread. Outputs clumped at one value sit on a
        // saddle of the distribution-matching loss (its spread gradient is
        // proportional to each point's own standardized deviation), so a
        // SIV-dominant mixture could never open the spread from a collapsed
        // start. Inputs are z-scored, which makes unit scale the natural width.
        b2_ = 2.0 * detail::canonical_unit(rng) - 1.0;
    }

    std::size_t context() const { return context_; }
    std::size_t hidden() const { return hidden_; }
    std::uint64_t steps_taken() const { return steps_; }

    // Neighbourhood features of one position: masked values and availability
    // bits over [offset-context, offset+context] (zeros outside the sample or
    // where unavailable; the centre value is never fed), plus the position's
    // normalized index in the sample.
    std::vector<double> build_input(const SegmentView& segment,
                                    const std::vector<bool>& available,
                                    std::size_t offset) const {
        const std::size_t span = 2 * context_ + 1;
        const std::size_t L = segment.length();
        std::vector<double> u(input_width(), 0.0);
        for (std::size_t k = 0; k < span; ++k) {
            const std::ptrdiff_t pos =
                static_cast<std::ptrdiff_t>(offset) + static_cast<std::ptrdiff_t>(k) -
                static_cast<std::ptrdiff_t>(context_);
            if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(L)) continue;
            const auto p = static_cast<std::size_t>(pos);
            if (p == offset || !available[p]) continue;
            u[k] = segment.value(p);
            u[span + k] = 1.0;
        }
        u[2 * span] =
            L > 1 ? static_cast<double>(offset) / static_cast<double>(L - 1) : 0.0;
        return u;
    }

    double forward_one(std::span<const double> input) const {
        const std::size_t in = input_width();
        double y = b2_;
        for (std::size_t j = 0; j < hidden_; ++j) {
            double s = b1_[j];
            const double* row = &w1_[j * in];
            for (std::size_t k = 0; k < in; ++k) s += row[k] * input[k];
            y += w2_[j] * std::tanh(s);
        }
        return y;
    }

    // Gradient accumulator for one sample's batched update.
    struct Gradients {
        std::vector<double> w1, b1, w2;
        double b2 = 0.0;
        explicit Gradients(const WindowModel& m)
            : w1(m.w1_.size(), 0.0), b1(m.hidden_, 0.0), w2(m.hidden_, 0.0) {}
    };

    // Backprop of one position's output gradient into the accumulator.
    void accumulate(std::span<const double> input, double output_grad, Gradients& g) const {
        const std::size_t in = input_width();
        for (std::size_t j = 0; j < hidden_; ++j) {
            double s = b1_[j];
            const double* row = &w1_[j * in];
            for (std::size_t k = 0; k < in; ++k) s += row[k] * input[k];
            const double h = std::tanh(s);
            g.w2[j] += output_grad * h;
            const double da = output_grad * w2_[j] * (1.0 - h * h);
            g.b1[j] += da;
            double* grow = &g.w1[j * in];
            for (std::size_t k = 0; k < in; ++k) grow[k] += da * input[k];
        }
        g.b2 += output_grad;
    }

    // One gradient-descent update, clipped at a global norm of 5.
    void apply_update(const Gradients& g, double learning_rate) {
        double sq = g.b2 * g.b2;
        for (double v : g.w1) sq += v * v;
        for (double v : g.b1) sq += v * v;
        for (double v : g.w2) sq += v * v;
        const double norm = std::sqrt(sq);
        const double step = norm > kClipNorm ? learning_rate * kClipNorm / norm : learning_rate;
        for (std::size_t i = 0; i < w1_.size(); ++i) w1_[i] -= step * g.w1[i];
        for (std::size_t j = 0; j < hidden_; ++j) {
            b1_[j] -= step * g.b1[j];
            w2_[j] -= step * g.w2[j];
        }
        b2_ -= step * g.b2;
        ++steps_;
    }

    bool parameters_finite() const {
        auto ok = [](const std::vector<double>& v) {
            for (double x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        return ok(w1_) && ok(b1_) && ok(w2_) && std::isfinite(b2_);
    }

    // Versioned flat text record; numbers use shortest round-trip formatting,
    // so save/load reproduces parameters bit-exactly.
    void save(std::ostream& os) const {
        os << "mlsif-window-model v2\n";
        os << context_ << ' ' << hidden_ << ' ' << steps_ << '\n';
        auto dump = [&os](std::span<const double> v) {
            char buf[64];
            for (double x : v) {
                auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
                os.write(buf, ptr - buf);
                os.put('\n');
            }
        };
        dump(w1_);
        dump(b1_);
        dump(w2_);
        dump(std::span<const double>(&b2_, 1));
    }

    static WindowModel load(std::istream& is) {
        std::string magic;
        std::getline(is, magic);
        if (magic != "mlsif-window-model v2")
            throw ParseError("window model file: unrecognized header");
        std::size_t context = 0, hidden = 0;
        std::uint64_t steps = 0;
        if (!(is >> context >> hidden >> steps) || context < 1 || hidden < 1)
            throw ParseError("window model file: bad dimensions");
        WindowModel m(context, hidden, 0);
        m.steps_ = steps;
        auto slurp = [&is](std::span<double> v) {
            std::string tok;
            for (double& x : v) {
                if (!(is >> tok)) throw ParseError("window model file: truncated parameters");
                const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), x);
                if (res.ec != std::errc{}) throw ParseError("window model file: bad number");
            }
        };
        slurp(m.w1_);
        slurp(m.b1_);
        slurp(m.w2_);
        slurp(std::span<double>(&m.b2_, 1));
        return m;
    }

    void save_file(const std::string& path) const {
        std::ofstream os(path);
        if (!os) throw Error("cannot open model file for writing: " + path);
        save(os);
    }
    static WindowModel load_file(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw Error("cannot open model file: " + path);
        return load(is);
    }

    static constexpr double kClipNorm = 5.0;

private:
    std::size_t input_width() const { return 2 * (2 * context_ + 1) + 1; }

    std::size_t context_;
    std::size_t hidden_;
    std::uint64_t steps_ = 0;
    std::vector<double> w1_, b1_, w2_;
    double b2_ = 0.0;
};

struct TrainStepResult {
    bool applied = false; // false: drop count rounded to zero, nothing happened
    LossBreakdown loss;
};

// One training step of the drop-and-reconstruct scheme: drop a share of the
// sample's known values, predict every hidden position from what remains, and
// descend the mixture of the split-weighted MSE and the SIV between the
// sample's known values and the completed window. One batched parameter
// update per sample.
inline TrainStepResult train_step(WindowModel& model, const SegmentView& sample,
                                  const TrainConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    const std::size_t L = sample.length();

    const auto known = sample.known_offsets();
    const std::size_t num_known = known.size();
    if (num_known == 0) return {};

    std::vector<std::size_t> dropped;
    if (cfg.gamma > 0.0) {
        const auto k = static_cast<std::size_t>(
            std::llround(static_cast<double>(num_known) * cfg.gamma));
        if (k == 0) return {}; // drop share rounds to nothing: skip
        dropped = detail::sample_without_replacement(known, k, rng);
    }

    std::vector<bool> available(L, false);
    for (std::size_t off : known) available[off] = true;
    for (std::size_t off : dropped) available[off] = false;

    // Forward pass at every hidden position (dropped or missing).
    std::vector<std::size_t> predicted_positions;
    for (std::size_t i = 0; i < L; ++i)
        if (!available[i]) predicted_positions.push_back(i);
    std::vector<std::vector<double>> inputs(predicted_positions.size());
    std::vector<double> y_full(L, 0.0);
    for (std::size_t k = 0; k < predicted_positions.size(); ++k) {
        inputs[k] = model.build_input(sample, available, predicted_positions[k]);
        y_full[predicted_positions[k]] = model.forward_one(inputs[k]);
    }

    // Split the dropped set by provenance.
    std::vector<std::size_t> drop_obs, drop_imp;
    for (std::size_t off : dropped)
        (sample.status(off).is_observed() ? drop_obs : drop_imp).push_back(off);

    // MSE component lifted onto the full window. A component with zero weight
    // in the mixture is skipped outright, so its recorded part stays 0.
    LossBreakdown mse_full;
    mse_full.grad.assign(L, 0.0);
    if (!dropped.empty() && cfg.alpha < 1.0) {
        std::vector<double> obs_truth, imp_truth, obs_pred, imp_pred;
        for (std::size_t off : drop_obs) {
            obs_truth.push_back(sample.value(off));
            obs_pred.push_back(y_full[off]);
        }
        for (std::size_t off : drop_imp) {
            imp_truth.push_back(sample.value(off));
            imp_pred.push_back(y_full[off]);
        }
        const LossBreakdown w =
            weighted_mse_loss(obs_truth, imp_truth, obs_pred, imp_pred, cfg.lambda);
        mse_full.mse_part = w.mse_part;
        mse_full.total = w.total;
        for (std::size_t k = 0; k < drop_obs.size(); ++k)
            mse_full.grad[drop_obs[k]] = w.grad[k];
        for (std::size_t k = 0; k < drop_imp.size(); ++k)
            mse_full.grad[drop_imp[k]] = w.grad[drop_obs.size() + k];
    }

    // SIV component: target is every known value of the sample; the completed
    // window keeps undropped known values and takes predictions elsewhere.
    std::vector<double> target;
    target.reserve(num_known);
    for (std::size_t off : known) target.push_back(sample.value(off));
    std::vector<double> completed(L);
    for (std::size_t i = 0; i < L; ++i)
        completed[i] = available[i] ? sample.value(i) : y_full[i];
    LossBreakdown siv_full;
    siv_full.grad.assign(L, 0.0);
    if (!predicted_positions.empty() && cfg.alpha > 0.0) {
        const LossBreakdown s = siv_loss(target, completed, predicted_positions);
        siv_full.siv_part = s.siv_part;
        siv_full.total = s.total;
        for (std::size_t k = 0; k < predicted_positions.size(); ++k)
            siv_full.grad[predicted_positions[k]] = s.grad[k];
    }

    LossBreakdown mixed = mixture_loss(mse_full, siv_full, cfg.alpha);
    if (!std::isfinite(mixed.total))
        throw StageFailure("training produced a non-finite loss");

    WindowModel::Gradients grads(model);
    for (std::size_t k = 0; k < predicted_positions.size(); ++k)
        model.accumulate(inputs[k], mixed.grad[predicted_positions[k]], grads);
    model.apply_update(grads, cfg.learning_rate);
    return {true, std::move(mixed)};
}

// Deterministic forward pass; returns predictions at the segment's missing
// offsets only. Works for any segment length.
inline std::vector<double> impute_model(const WindowModel& model, const SegmentView& segment) {
    const auto gaps = segment.missing_offsets();
    if (gaps.empty()) return {};
    std::vector<bool> available(segment.length(), false);
    for (std::size_t off : segment.known_offsets()) available[off] = true;
    std::vector<double> out;
    out.reserve(gaps.size());
    for (std::size_t off : gaps)
        out.push_back(model.forward_one(model.build_input(segment, available, off)));
    return out;
}

// ---------------------------------------------------------------------------
// Imputer selection shared by the framework and the experiment drivers.
// ---------------------------------------------------------------------------

enum class ImputerKind { Mean, Linear, Spline, WindowModel };

struct ImputerSpec {
    ImputerKind kind = ImputerKind::WindowModel;
    std::size_t hidden = 64;  // WindowModel only
    std::size_t context = 12; // WindowModel neighbourhood radius
    TrainConfig train;

    void validate() const {
        if (kind == ImputerKind::WindowModel) {
            if (hidden < 1) throw InvalidInput("window model hidden width must be >= 1");
            if (context < 1) throw InvalidInput("window model context radius must be >= 1");
            train.validate();
        }
    }
    bool trainable() const { return kind == ImputerKind::WindowModel; }
};

inline const char* to_string(ImputerKind k) {
    switch (k) {
    case ImputerKind::Mean: return "mean";
    case ImputerKind::Linear: return "linear";
    case ImputerKind::Spline: return "spline";
    case ImputerKind::WindowModel: return "window-model";
    }
    return "?";
}

inline ImputerKind imputer_kind_from_string(const std::string& s) {
    if (s == "mean") return ImputerKind::Mean;
    if (s == "linear") return ImputerKind::Linear;
    if (s == "spline") return ImputerKind::Spline;
    if (s == "window-model" || s == "model") return ImputerKind::WindowModel;
    throw InvalidInput("unknown imputer kind: " + s);
}

} // namespace mlsif

#endif
