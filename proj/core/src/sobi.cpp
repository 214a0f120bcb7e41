#include "snswf/sobi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snswf/errors.hpp"

namespace snswf {

Matrix sample_covariance(const Matrix& data, std::size_t lag_samples) {
    const auto n_samples = static_cast<std::size_t>(data.cols());
    if (lag_samples >= n_samples)
        throw ArgumentError("lag " + std::to_string(lag_samples) + " must be below the sample count " +
                            std::to_string(n_samples));
    const Matrix centred = data.colwise() - data.rowwise().mean();
    const auto lag = static_cast<Eigen::Index>(lag_samples);
    const Eigen::Index span = centred.cols() - lag;
    Matrix cov = centred.middleCols(lag, span) * centred.leftCols(span).transpose();
    cov /= static_cast<double>(span);
    return 0.5 * (cov + cov.transpose());
}

Whitening whiten(const Matrix& data, std::size_t n_sources, double eig_rel_eps) {
    const auto n_channels = static_cast<std::size_t>(data.rows());
    if (n_sources < 1 || n_sources > n_channels)
        throw ArgumentError("n_sources must lie in [1, n_channels]");

    const Eigen::SelfAdjointEigenSolver<Matrix> eig(sample_covariance(data, 0));
    if (eig.info() != Eigen::Success) throw DegenerateWhiteningError("eigendecomposition of C(0) failed");

    // Eigen returns ascending order; flip to descending
    const Eigen::VectorXd values = eig.eigenvalues().reverse();
    const Matrix vectors = eig.eigenvectors().rowwise().reverse();

    Whitening w;
    w.eigenvalues = values;
    w.eigenvectors = vectors;
    const std::size_t discarded = n_channels - n_sources;
    w.noise_variance = discarded == 0
                           ? 0.0
                           : values.tail(static_cast<Eigen::Index>(discarded)).mean();

    const double lambda_max = values(0);
    const double floor = eig_rel_eps * std::max(lambda_max, 0.0);
    w.whitener.resize(static_cast<Eigen::Index>(n_sources), static_cast<Eigen::Index>(n_channels));
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n_sources); ++i) {
        const double excess = values(i) - w.noise_variance;
        if (!(excess > floor) || !(lambda_max > 0.0))
            throw DegenerateWhiteningError("eigenvalue " + std::to_string(i + 1) +
                                           " of C(0) is not above the noise floor; reduce n_sources");
        w.whitener.row(i) = vectors.col(i).transpose() / std::sqrt(excess);
    }
    w.whitened = w.whitener * data;
    return w;
}

namespace {

struct PairRotation {
    double cos = 1.0;
    double sin = 0.0;
    double reduction = 0.0; // decrease of the off-diagonal criterion
};

PairRotation best_rotation(std::span<const Matrix> ms, Eigen::Index p, Eigen::Index q) {
    double g00 = 0.0, g01 = 0.0, g11 = 0.0;
    for (const auto& m : ms) {
        const double a = m(p, p) - m(q, q);
        const double b = m(p, q) + m(q, p);
        g00 += a * a;
        g01 += a * b;
        g11 += b * b;
    }
    const double ton = g00 - g11;
    const double toff = 2.0 * g01;
    const double r = std::hypot(ton, toff);
    PairRotation rot;
    if (r == 0.0) return rot;
    const double theta = 0.5 * std::atan2(toff, ton + r);
    rot.cos = std::cos(theta);
    rot.sin = std::sin(theta);
    rot.reduction = ton >= 0.0 ? toff * toff / (4.0 * (r + ton)) : (r - ton) / 4.0;
    return rot;
}

void rotate(Matrix& m, Eigen::Index p, Eigen::Index q, double c, double s) {
    // m <- G^T m G with G = [c -s; s c] acting on (p, q)
    const Eigen::VectorXd rp = m.row(p);
    const Eigen::VectorXd rq = m.row(q);
    m.row(p) = c * rp + s * rq;
    m.row(q) = -s * rp + c * rq;
    const Eigen::VectorXd cp = m.col(p);
    const Eigen::VectorXd cq = m.col(q);
    m.col(p) = c * cp + s * cq;
    m.col(q) = -s * cp + c * cq;
}

} // namespace

JointDiagonalization joint_diagonalize(std::span<const Matrix> matrices,
                                       const JointDiagonalizerOptions& options) {
    if (matrices.empty()) throw ArgumentError("joint_diagonalize needs at least one matrix");
    if (!(options.tol > 0.0)) throw ArgumentError("tol must be positive");
    const Eigen::Index n = matrices.front().rows();
    std::vector<Matrix> work;
    work.reserve(matrices.size());
    double total_norm = 0.0;
    for (const auto& m : matrices) {
        if (m.rows() != n || m.cols() != n)
            throw ArgumentError("joint_diagonalize needs square matrices of equal size");
        work.emplace_back(0.5 * (m + m.transpose()));
        total_norm += work.back().squaredNorm();
    }

    JointDiagonalization result;
    result.rotation = Matrix::Identity(n, n);
    const double threshold = options.tol * total_norm;
    result.converged = false;
    while (result.sweeps < options.max_sweeps) {
        ++result.sweeps;
        bool rotated = false;
        for (Eigen::Index p = 0; p + 1 < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const auto rot = best_rotation(work, p, q);
                if (!(rot.reduction > threshold)) continue;
                rotated = true;
                for (auto& m : work) rotate(m, p, q, rot.cos, rot.sin);
                const Eigen::VectorXd up = result.rotation.col(p);
                const Eigen::VectorXd uq = result.rotation.col(q);
                result.rotation.col(p) = rot.cos * up + rot.sin * uq;
                result.rotation.col(q) = -rot.sin * up + rot.cos * uq;
            }
        }
        if (!rotated) {
            result.converged = true;
            break;
        }
    }
    return result;
}

double off_diagonal_criterion(std::span<const Matrix> matrices, const Matrix& rotation) {
    double off = 0.0;
    for (const auto& m : matrices) {
        const Matrix r = rotation.transpose() * m * rotation;
        off += r.squaredNorm() - r.diagonal().squaredNorm();
    }
    return off;
}

std::vector<double> default_lags(std::size_t count, double max_lag_s) {
    if (count == 0) throw ArgumentError("lag count must be >= 1");
    if (!(max_lag_s > 0.0)) throw ArgumentError("max lag must be positive");
    std::vector<double> lags(count);
    for (std::size_t k = 1; k <= count; ++k)
        lags[k - 1] = max_lag_s * static_cast<double>(k) / static_cast<double>(count);
    return lags;
}

SeparationResult sobi(const Matrix& data, double sample_rate_hz, const SobiOptions& options) {
    if (!(sample_rate_hz > 0.0)) throw ArgumentError("sample rate must be positive");
    const auto n_channels = static_cast<std::size_t>(data.rows());
    const auto n_samples = static_cast<std::size_t>(data.cols());
    if (n_channels == 0) throw ArgumentError("sobi needs at least one channel");
    const std::size_t n_sources = options.n_sources == 0 ? n_channels : options.n_sources;

    const auto requested = options.lags_s.empty() ? default_lags() : options.lags_s;
    std::vector<std::size_t> lags;
    for (double lag_s : requested) {
        const double rounded = std::round(lag_s * sample_rate_hz);
        if (!(rounded >= 1.0) || !(rounded < static_cast<double>(n_samples) / 4.0))
            throw ArgumentError("lag " + std::to_string(lag_s) +
                                " s must round to at least one sample and stay below n_samples/4");
        lags.push_back(static_cast<std::size_t>(rounded));
    }
    std::sort(lags.begin(), lags.end());
    lags.erase(std::unique(lags.begin(), lags.end()), lags.end());

    const auto w = whiten(data, n_sources);
    std::vector<Matrix> lagged;
    lagged.reserve(lags.size());
    for (auto lag : lags) lagged.push_back(sample_covariance(w.whitened, lag));
    const auto jd = joint_diagonalize(lagged, options.diagonalizer);

    const auto m = static_cast<Eigen::Index>(n_sources);
    const Matrix unmixing = jd.rotation.transpose() * w.whitener;
    // pseudoinverse of the whitener is exact: its rows are scaled orthonormal eigenvectors
    Matrix whitener_pinv = w.eigenvectors.leftCols(m);
    for (Eigen::Index i = 0; i < m; ++i)
        whitener_pinv.col(i) *= std::sqrt(w.eigenvalues(i) - w.noise_variance);
    const Matrix mixing = whitener_pinv * jd.rotation;
    const Matrix sources = unmixing * data;

    // every whitened source has near-unit variance, so rank by the variance it projects onto the channels
    std::vector<double> score(n_sources);
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::RowVectorXd centred = sources.row(k).array() - sources.row(k).mean();
        score[static_cast<std::size_t>(k)] =
            mixing.col(k).squaredNorm() * centred.squaredNorm() / static_cast<double>(n_samples);
    }
    std::vector<Eigen::Index> order(n_sources);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
    });

    SeparationResult out;
    out.sources.resize(m, data.cols());
    out.mixing.resize(data.rows(), m);
    out.unmixing.resize(m, data.rows());
    for (Eigen::Index k = 0; k < m; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        Eigen::Index peak = 0;
        mixing.col(src).cwiseAbs().maxCoeff(&peak);
        const double sign = mixing(peak, src) < 0.0 ? -1.0 : 1.0;
        out.sources.row(k) = sign * sources.row(src);
        out.mixing.col(k) = sign * mixing.col(src);
        out.unmixing.row(k) = sign * unmixing.row(src);
    }
    out.whitener = w.whitener;
    out.noise_variance = w.noise_variance;
    out.eigenvalues = w.eigenvalues;
    out.lag_samples = lags;
    for (auto lag : lags) out.lags_s.push_back(static_cast<double>(lag) / sample_rate_hz);
    out.sweeps = jd.sweeps;
    out.converged = jd.converged;
    return out;
}

} // namespace snswf
