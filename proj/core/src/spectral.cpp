#include "snswf/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "snswf/errors.hpp"

namespace snswf {

namespace {
constexpr double kBandSlack = 1e-9;
}

bool Band::contains(double f_cpm) const noexcept {
    return f_cpm >= lo_cpm - kBandSlack && f_cpm <= hi_cpm + kBandSlack;
}

ArModel burg_fit(std::span<const double> series, int order, double sample_rate_hz) {
    if (order < 1) throw ArgumentError("AR order must be >= 1");
    const std::size_t n = series.size();
    if (n < 2 * static_cast<std::size_t>(order) + 1)
        throw ArgumentError("AR order " + std::to_string(order) + " needs at least " +
                            std::to_string(2 * order + 1) + " samples, got " + std::to_string(n));

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> f(n), b(n);
    double power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = b[i] = series[i] - mean;
        power += f[i] * f[i];
    }
    power /= static_cast<double>(n);
    if (!(power > 0.0)) throw DegenerateInputError("AR fit of a constant series");

    const auto p = static_cast<std::size_t>(order);
    std::vector<double> a(p, 0.0);
    std::vector<double> prev(p, 0.0);
    for (std::size_t m = 0; m < p; ++m) {
        // forward error f[i] for i in [m+1, n), backward error b[i-1]
        double num = 0.0, den = 0.0;
        for (std::size_t i = m + 1; i < n; ++i) {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        const double k = den > 0.0 ? -2.0 * num / den : 0.0;

        prev = a;
        a[m] = k;
        for (std::size_t j = 0; j < m; ++j) a[j] = prev[j] + k * prev[m - 1 - j];

        for (std::size_t i = n - 1; i > m; --i) {
            const double fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + k * fi;
        }
        power *= (1.0 - k * k);
    }

    ArModel model;
    model.order = order;
    model.coeffs = std::move(a);
    model.noise_variance = std::max(power, 0.0);
    model.sample_rate_hz = sample_rate_hz;
    return model;
}

std::vector<double> cpm_grid(double max_cpm, double step_cpm) {
    if (!(step_cpm > 0.0) || !(max_cpm >= 0.0)) throw ArgumentError("bad frequency grid");
    const auto count = static_cast<std::size_t>(std::floor(max_cpm / step_cpm + 1e-9)) + 1;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i) grid[i] = static_cast<double>(i) * step_cpm;
    return grid;
}

std::vector<double> cpm_grid(const SpectralConfig& config, double sample_rate_hz) {
    const double nyquist_cpm = sample_rate_hz * 30.0;
    return cpm_grid(std::min(config.grid_max_cpm, nyquist_cpm), config.grid_step_cpm);
}

PsdEstimate ar_psd(const ArModel& model, std::span<const double> freqs_cpm) {
    if (!(model.sample_rate_hz > 0.0)) throw ArgumentError("model sample rate must be positive");
    const double nyquist_cpm = model.sample_rate_hz * 30.0;
    PsdEstimate out;
    out.model = model;
    out.freqs_cpm.assign(freqs_cpm.begin(), freqs_cpm.end());
    out.psd.resize(freqs_cpm.size());
    for (std::size_t i = 0; i < freqs_cpm.size(); ++i) {
        const double f = freqs_cpm[i];
        if (f < 0.0 || f > nyquist_cpm * (1.0 + 1e-12))
            throw ArgumentError("frequency " + std::to_string(f) + " cpm outside [0, Nyquist]");
        if (i > 0 && !(f > freqs_cpm[i - 1])) throw ArgumentError("frequency grid must ascend strictly");
        const double omega = 2.0 * std::numbers::pi * (f / 60.0) / model.sample_rate_hz;
        std::complex<double> denom = 1.0;
        for (std::size_t k = 0; k < model.coeffs.size(); ++k)
            denom += model.coeffs[k] * std::polar(1.0, -omega * static_cast<double>(k + 1));
        out.psd[i] = model.noise_variance / (model.sample_rate_hz * std::norm(denom));
    }
    return out;
}

void SpectralConfig::validate() const {
    if (ar_order < 1 || ar_order > kMaxOrder)
        throw ArgumentError("ar_order must lie in 1.." + std::to_string(kMaxOrder));
    if (!(grid_step_cpm > 0.0) || !std::isfinite(grid_step_cpm)) throw ArgumentError("grid_step_cpm must be positive");
    if (!(grid_max_cpm >= 0.0) || !std::isfinite(grid_max_cpm)) throw ArgumentError("grid_max_cpm must be >= 0");
}

PsdEstimate estimate_psd(std::span<const double> series, double sample_rate_hz,
                         const SpectralConfig& config) {
    config.validate();
    const auto model = burg_fit(series, config.ar_order, sample_rate_hz);
    const auto grid = cpm_grid(config, sample_rate_hz);
    return ar_psd(model, grid);
}

std::vector<SpectralPeak> find_peaks(const PsdEstimate& psd, Band band) {
    if (!(band.lo_cpm < band.hi_cpm)) throw ArgumentError("band needs lo < hi");
    const auto& f = psd.freqs_cpm;
    const auto& p = psd.psd;
    bool any = false;
    std::vector<SpectralPeak> peaks;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!band.contains(f[i])) continue;
        any = true;
        const bool above_left = i == 0 || p[i] > p[i - 1];
        const bool above_right = i + 1 == f.size() || p[i] > p[i + 1];
        if (f.size() > 1 && above_left && above_right && p[i] > 0.0) peaks.push_back({f[i], p[i]});
    }
    if (!any) throw ArgumentError("band does not intersect the frequency grid");
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const SpectralPeak& a, const SpectralPeak& b) { return a.psd_value > b.psd_value; });
    return peaks;
}

SpectralPeak band_peak(const PsdEstimate& psd, Band band) {
    auto peaks = find_peaks(psd, band);
    if (!peaks.empty()) return peaks.front();
    SpectralPeak best{0.0, -1.0};
    for (std::size_t i = 0; i < psd.freqs_cpm.size(); ++i) {
        if (band.contains(psd.freqs_cpm[i]) && psd.psd[i] > best.psd_value)
            best = {psd.freqs_cpm[i], psd.psd[i]};
    }
    return best;
}

double snr_db_from_peaks(double signal_psd, double noise_psd) {
    if (!(noise_psd > 0.0)) throw UndefinedSnrError("noise peak is zero; SNR undefined");
    if (!(signal_psd > 0.0)) throw UndefinedSnrError("signal peak is zero; SNR undefined");
    return 20.0 * std::log10(signal_psd / noise_psd);
}

SnrResult snr_db(const PsdEstimate& psd, Band signal_band, std::span<const Band> noise_bands) {
    SnrResult out;
    out.signal_peak = band_peak(psd, signal_band);
    bool have_noise = false;
    for (const auto& band : noise_bands) {
        const bool intersects = std::any_of(psd.freqs_cpm.begin(), psd.freqs_cpm.end(),
                                            [&](double f) { return band.contains(f); });
        if (!intersects || !(band.lo_cpm < band.hi_cpm)) continue;
        const auto peak = band_peak(psd, band);
        if (!have_noise || peak.psd_value > out.noise_peak.psd_value) out.noise_peak = peak;
        have_noise = true;
    }
    if (!have_noise) throw ArgumentError("no noise band intersects the frequency grid");
    out.snr_db = snr_db_from_peaks(out.signal_peak.psd_value, out.noise_peak.psd_value);
    return out;
}

} // namespace snswf
