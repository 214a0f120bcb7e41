#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace snswf {

using Matrix = Eigen::MatrixXd;

/// Lagged sample covariance of the row-demeaned data,
/// C(tau) = 1/(T-tau) * sum_t x(t+tau) x(t)^T, returned symmetrised.
Matrix sample_covariance(const Matrix& data, std::size_t lag_samples);

struct Whitening {
    Matrix whitened;           // n_sources x n_samples
    Matrix whitener;           // n_sources x n_channels
    double noise_variance = 0; // mean of the discarded eigenvalues, 0 if none discarded
    Eigen::VectorXd eigenvalues; // of C(0), descending
    Matrix eigenvectors;       // columns match `eigenvalues`
};

/// Whitening from the zero-lag covariance, keeping the n_sources principal
/// directions. Throws DegenerateWhiteningError when a retained eigenvalue is
/// within eig_rel_eps * lambda_max of the noise floor.
Whitening whiten(const Matrix& data, std::size_t n_sources, double eig_rel_eps = 1e-12);

struct JointDiagonalizerOptions {
    double tol = 1e-8;
    int max_sweeps = 100;
};

struct JointDiagonalization {
    Matrix rotation; // orthogonal U
    int sweeps = 0;
    bool converged = true;
};

/// Cyclic Jacobi joint diagonalization of symmetric matrices. A Givens
/// rotation is applied to pair (p, q) only when it lowers the off-diagonal
/// criterion by more than tol * sum_k ||M_k||_F^2; sweeping stops after a
/// sweep applies no rotation.
JointDiagonalization joint_diagonalize(std::span<const Matrix> matrices,
                                       const JointDiagonalizerOptions& options = {});

/// sum_k sum_{i != j} (U^T M_k U)_ij^2
double off_diagonal_criterion(std::span<const Matrix> matrices, const Matrix& rotation);

/// K equally spaced lags k * max_lag_s / K, k = 1..K.
std::vector<double> default_lags(std::size_t count = 10, double max_lag_s = 1.0);

struct SobiOptions {
    std::vector<double> lags_s;   // empty selects default_lags()
    std::size_t n_sources = 0;    // 0 keeps every channel
    JointDiagonalizerOptions diagonalizer;
};

struct SeparationResult {
    Matrix sources;   // n_sources x n_samples
    Matrix mixing;    // n_channels x n_sources
    Matrix unmixing;  // n_sources x n_channels
    Matrix whitener;  // n_sources x n_channels
    double noise_variance = 0.0;
    std::vector<double> lags_s;            // effective lags after rounding and deduplication
    std::vector<std::size_t> lag_samples;
    Eigen::VectorXd eigenvalues;
    int sweeps = 0;
    bool converged = true;

    std::size_t n_sources() const noexcept { return static_cast<std::size_t>(sources.rows()); }
};

/// Second-order blind identification. Components are ordered by descending
/// contribution to the channel variance, and each mixing column is signed so
/// that its largest-magnitude entry is positive.
SeparationResult sobi(const Matrix& data, double sample_rate_hz, const SobiOptions& options = {});

} // namespace snswf
