#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace snswf {

/// Causal FIR filter; taps[m] is h(m).
struct FirFilter {
    std::vector<double> taps;
    double sample_rate_hz = 1.0;
};

/// Biased cross-correlation of the demeaned series,
/// r_xy(k) = 1/T * sum_{n=k}^{T-1} x(n) y(n-k) for k = 0..max_lag.
std::vector<double> correlate(std::span<const double> x, std::span<const double> y, std::size_t max_lag);

/// Correlation sequences feeding the multichannel Wiener-Hopf system.
class CorrelationSet {
public:
    CorrelationSet(std::size_t n_refs, std::size_t taps);

    std::size_t n_refs() const noexcept { return n_refs_; }
    std::size_t taps() const noexcept { return taps_; }

    /// r_{x_i x_j}(k) for |k| < taps.
    double autocorr(std::size_t i, std::size_t j, std::ptrdiff_t lag) const;
    void set_autocorr(std::size_t i, std::size_t j, std::ptrdiff_t lag, double value);

    /// r_{x_i d}(k) = E[d(n) x_i(n-k)] for 0 <= k < taps.
    double crosscorr(std::size_t i, std::size_t lag) const;
    void set_crosscorr(std::size_t i, std::size_t lag, double value);

    double max_zero_lag_power() const;

private:
    std::size_t n_refs_;
    std::size_t taps_;
    std::vector<double> auto_;  // [i][j][lag + taps - 1]
    std::vector<double> cross_; // [i][lag]
};

/// Estimates every correlation sequence from reference series and the primary input d.
CorrelationSet estimate_correlations(std::span<const std::vector<double>> refs,
                                     std::span<const double> primary, std::size_t taps);

struct WienerDesign {
    std::vector<FirFilter> filters; // one per reference
    double regularization = 0.0;
    double condition_estimate = 1.0;
};

/// Solves (R_xx + lambda I) H = R_xd, where R_xx holds Toeplitz blocks
/// R[(i,k),(j,m)] = r_{x_i x_j}(m - k), by Cholesky factorization.
/// Throws SingularSystemError when the matrix is not positive definite.
WienerDesign solve_wiener(const CorrelationSet& corr, double lambda, double sample_rate_hz = 1.0);

struct NormalEquations {
    Eigen::MatrixXd matrix; // (M*N) x (M*N), unknown (i, k) at row i*N + k
    Eigen::VectorXd rhs;
};

/// The dense normal matrix and right-hand side, without regularization.
NormalEquations assemble_normal_equations(const CorrelationSet& corr);

/// y(n) = sum_m h(m) x(n-m) with zero initial conditions; output length equals input length.
std::vector<double> apply_fir(const FirFilter& filter, std::span<const double> x);

/// e(n) = d(n) - sum_i (h_i * x_i)(n).
std::vector<double> cancel(const WienerDesign& design, std::span<const std::vector<double>> refs,
                           std::span<const double> primary);

// --- unit-circle theory ------------------------------------------------------

/// Two-path model of a reference channel: the signal reaches it through
/// signal_path (J) and the noise through noise_path (R).
struct TransferSpec {
    std::vector<double> freqs_hz;
    std::vector<std::complex<double>> signal_path;
    std::vector<std::complex<double>> noise_path;
    std::vector<double> signal_spectrum; // r_ss
    std::vector<double> noise_spectrum;  // r_nn

    void validate() const;
};

/// h = (r_ss conj(J) + r_nn conj(R)) / (r_ss |J|^2 + r_nn |R|^2) at each frequency.
std::vector<std::complex<double>> theory_transfer(const TransferSpec& spec);

/// Output-side residual spectra: r_ss |1 - J h|^2 and r_nn |1 - R h|^2.
struct OutputSpectra {
    std::vector<double> signal;
    std::vector<double> noise;
};
OutputSpectra theory_output_spectra(const TransferSpec& spec);

struct SnrDensities {
    std::vector<double> output;    // r_nn |R|^2 / (r_ss |J|^2)
    std::vector<double> reference; // r_ss |J|^2 / (r_nn |R|^2)
};
SnrDensities theory_snr_densities(const TransferSpec& spec);

} // namespace snswf
