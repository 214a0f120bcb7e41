#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace snswf {

/// AR(p) model in prediction-error form: e(n) = x(n) + sum_k a_k x(n-k).
struct ArModel {
    int order = 0;
    std::vector<double> coeffs; // a_1 .. a_p
    double noise_variance = 0.0;
    double sample_rate_hz = 1.0;
};

struct PsdEstimate {
    std::vector<double> freqs_cpm;
    std::vector<double> psd; // (input units)^2 / Hz
    ArModel model;
};

struct SpectralPeak {
    double freq_cpm = 0.0;
    double psd_value = 0.0;
};

/// Closed frequency interval in cycles per minute.
struct Band {
    double lo_cpm = 0.0;
    double hi_cpm = 0.0;

    bool contains(double f_cpm) const noexcept;
};

struct SpectralConfig {
    int ar_order = 30;
    double grid_max_cpm = 70.0;
    double grid_step_cpm = 0.1;

    static constexpr int kMaxOrder = 200;
    void validate() const;
};

/// Burg estimate of an AR(order) model from the demeaned series.
ArModel burg_fit(std::span<const double> series, int order, double sample_rate_hz);

/// 0, step, 2*step, ... up to max_cpm inclusive.
std::vector<double> cpm_grid(double max_cpm, double step_cpm);
/// The configured grid, clipped at the Nyquist frequency.
std::vector<double> cpm_grid(const SpectralConfig& config, double sample_rate_hz);

/// P(f) = sigma^2 / (fs * |1 + sum_k a_k exp(-i 2 pi f k / fs)|^2).
PsdEstimate ar_psd(const ArModel& model, std::span<const double> freqs_cpm);

/// burg_fit followed by ar_psd on the configured grid.
PsdEstimate estimate_psd(std::span<const double> series, double sample_rate_hz,
                         const SpectralConfig& config);

/// Strict local maxima (against grid neighbours) inside the band, tallest first.
std::vector<SpectralPeak> find_peaks(const PsdEstimate& psd, Band band);

/// Tallest local maximum in the band, or the band argmax when the band has none.
SpectralPeak band_peak(const PsdEstimate& psd, Band band);

struct SnrResult {
    double snr_db = 0.0;
    SpectralPeak signal_peak;
    SpectralPeak noise_peak;
};

/// 20 * log10(signal / noise) on peak power-density values.
double snr_db_from_peaks(double signal_psd, double noise_psd);

/// Peak-ratio SNR of a PSD: tallest signal-band peak against the tallest peak
/// across the noise bands. Noise bands that miss the grid are skipped.
SnrResult snr_db(const PsdEstimate& psd, Band signal_band, std::span<const Band> noise_bands);

} // namespace snswf
