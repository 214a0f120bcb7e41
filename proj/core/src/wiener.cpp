#include "snswf/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "snswf/errors.hpp"

namespace snswf {

std::vector<double> correlate(std::span<const double> x, std::span<const double> y, std::size_t max_lag) {
    if (x.size() != y.size()) throw ArgumentError("correlate needs equal-length series");
    const std::size_t n = x.size();
    if (max_lag >= n) throw ArgumentError("max_lag must be below the series length");

    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    std::vector<double> r(max_lag + 1, 0.0);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double acc = 0.0;
        for (std::size_t t = k; t < n; ++t) acc += (x[t] - mx) * (y[t - k] - my);
        r[k] = acc / static_cast<double>(n);
    }
    return r;
}

CorrelationSet::CorrelationSet(std::size_t n_refs, std::size_t taps) : n_refs_(n_refs), taps_(taps) {
    if (n_refs == 0) throw ArgumentError("at least one reference is required");
    if (taps == 0) throw ArgumentError("filter length must be >= 1");
    auto_.assign(n_refs * n_refs * (2 * taps - 1), 0.0);
    cross_.assign(n_refs * taps, 0.0);
}

namespace {
std::size_t auto_index(std::size_t n_refs, std::size_t taps, std::size_t i, std::size_t j,
                       std::ptrdiff_t lag) {
    const auto span = static_cast<std::ptrdiff_t>(taps) - 1;
    if (i >= n_refs || j >= n_refs || lag < -span || lag > span)
        throw ArgumentError("correlation index out of range");
    return (i * n_refs + j) * (2 * taps - 1) + static_cast<std::size_t>(lag + span);
}
} // namespace

double CorrelationSet::autocorr(std::size_t i, std::size_t j, std::ptrdiff_t lag) const {
    return auto_[auto_index(n_refs_, taps_, i, j, lag)];
}

void CorrelationSet::set_autocorr(std::size_t i, std::size_t j, std::ptrdiff_t lag, double value) {
    auto_[auto_index(n_refs_, taps_, i, j, lag)] = value;
}

double CorrelationSet::crosscorr(std::size_t i, std::size_t lag) const {
    if (i >= n_refs_ || lag >= taps_) throw ArgumentError("correlation index out of range");
    return cross_[i * taps_ + lag];
}

void CorrelationSet::set_crosscorr(std::size_t i, std::size_t lag, double value) {
    if (i >= n_refs_ || lag >= taps_) throw ArgumentError("correlation index out of range");
    cross_[i * taps_ + lag] = value;
}

double CorrelationSet::max_zero_lag_power() const {
    double best = 0.0;
    for (std::size_t i = 0; i < n_refs_; ++i) best = std::max(best, autocorr(i, i, 0));
    return best;
}

CorrelationSet estimate_correlations(std::span<const std::vector<double>> refs,
                                     std::span<const double> primary, std::size_t taps) {
    CorrelationSet corr(refs.size(), taps);
    const auto max_lag = taps - 1;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].size() != primary.size())
            throw ArgumentError("reference " + std::to_string(i) + " length differs from the primary input");
        const auto cross = correlate(primary, refs[i], max_lag);
        for (std::size_t k = 0; k < taps; ++k) corr.set_crosscorr(i, k, cross[k]);
        for (std::size_t j = i; j < refs.size(); ++j) {
            const auto fwd = correlate(refs[i], refs[j], max_lag);
            const auto bwd = i == j ? fwd : correlate(refs[j], refs[i], max_lag);
            for (std::size_t k = 0; k < taps; ++k) {
                const auto lag = static_cast<std::ptrdiff_t>(k);
                // r_ij(k) = r_ji(-k)
                corr.set_autocorr(i, j, lag, fwd[k]);
                corr.set_autocorr(j, i, -lag, fwd[k]);
                corr.set_autocorr(j, i, lag, bwd[k]);
                corr.set_autocorr(i, j, -lag, bwd[k]);
            }
        }
    }
    return corr;
}

NormalEquations assemble_normal_equations(const CorrelationSet& corr) {
    const auto m = corr.n_refs();
    const auto n = corr.taps();
    const auto dim = static_cast<Eigen::Index>(m * n);
    NormalEquations eq{Eigen::MatrixXd(dim, dim), Eigen::VectorXd(dim)};
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const auto row = static_cast<Eigen::Index>(i * n + k);
            eq.rhs(row) = corr.crosscorr(i, k);
            for (std::size_t j = 0; j < m; ++j) {
                for (std::size_t mm = 0; mm < n; ++mm) {
                    const auto lag = static_cast<std::ptrdiff_t>(mm) - static_cast<std::ptrdiff_t>(k);
                    eq.matrix(row, static_cast<Eigen::Index>(j * n + mm)) = corr.autocorr(i, j, lag);
                }
            }
        }
    }
    return eq;
}

WienerDesign solve_wiener(const CorrelationSet& corr, double lambda, double sample_rate_hz) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("regularization must be >= 0");
    auto eq = assemble_normal_equations(corr);
    if (!eq.matrix.allFinite() || !eq.rhs.allFinite())
        throw ArgumentError("correlation set contains non-finite values");
    eq.matrix.diagonal().array() += lambda;

    const Eigen::LLT<Eigen::MatrixXd> llt(eq.matrix);
    if (llt.info() != Eigen::Success)
        throw SingularSystemError("Wiener-Hopf matrix is not positive definite; increase the regularization");
    const Eigen::VectorXd h = llt.solve(eq.rhs);
    if (!h.allFinite())
        throw SingularSystemError("Wiener-Hopf solution is not finite; increase the regularization");

    WienerDesign design;
    design.regularization = lambda;
    const double rcond = llt.rcond();
    design.condition_estimate = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
    const auto n = corr.taps();
    for (std::size_t i = 0; i < corr.n_refs(); ++i) {
        FirFilter f;
        f.sample_rate_hz = sample_rate_hz;
        f.taps.assign(h.data() + i * n, h.data() + (i + 1) * n);
        design.filters.push_back(std::move(f));
    }
    return design;
}

std::vector<double> apply_fir(const FirFilter& filter, std::span<const double> x) {
    std::vector<double> y(x.size(), 0.0);
    const auto& h = filter.taps;
    for (std::size_t n = 0; n < x.size(); ++n) {
        double acc = 0.0;
        const std::size_t upto = std::min(h.size(), n + 1);
        for (std::size_t m = 0; m < upto; ++m) acc += h[m] * x[n - m];
        y[n] = acc;
    }
    return y;
}

std::vector<double> cancel(const WienerDesign& design, std::span<const std::vector<double>> refs,
                           std::span<const double> primary) {
    if (refs.size() != design.filters.size())
        throw ArgumentError("cancel: " + std::to_string(refs.size()) + " references for " +
                            std::to_string(design.filters.size()) + " filters");
    std::vector<double> e(primary.begin(), primary.end());
    for (std::size_t i = 0; i < refs.size(); ++i) {
        if (refs[i].size() != primary.size()) throw ArgumentError("cancel: reference length mismatch");
        const auto y = apply_fir(design.filters[i], refs[i]);
        for (std::size_t n = 0; n < e.size(); ++n) e[n] -= y[n];
    }
    return e;
}

} // namespace snswf
