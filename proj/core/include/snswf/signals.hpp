#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace snswf {

/// Channel-major sample storage: one contiguous row per channel.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class ChannelKind { signal_gradiometer, magnetometer, tensor_gradiometer, derived };

std::string_view to_string(ChannelKind kind) noexcept;
std::optional<ChannelKind> parse_channel_kind(std::string_view text) noexcept;

struct ChannelMeta {
    std::string name;
    ChannelKind kind = ChannelKind::derived;
    std::string units = "arb";
};

struct MultichannelRecord {
    double sample_rate_hz = 0.0;
    std::vector<ChannelMeta> channels;
    RowMatrix data; // n_channels x n_samples

    std::size_t n_channels() const noexcept { return static_cast<std::size_t>(data.rows()); }
    std::size_t n_samples() const noexcept { return static_cast<std::size_t>(data.cols()); }

    std::span<const double> channel(std::size_t index) const;
    std::vector<double> channel_copy(std::size_t index) const;

    std::optional<std::size_t> find(std::string_view name) const noexcept;
    /// Throws ArgumentError naming the missing channel.
    std::size_t index_of(std::string_view name) const;

    /// Checks every structural invariant; throws FormatError on violation.
    void validate() const;
};

/// Builds and validates a record from per-channel series of equal length.
MultichannelRecord make_record(double sample_rate_hz, std::vector<ChannelMeta> channels,
                               const std::vector<std::vector<double>>& series);

// --- file I/O -------------------------------------------------------------

/// Reads `time,<name>,...` CSV. `sample_rate_hz` is required only when the
/// first column is not named `time`; when both are present they must agree.
MultichannelRecord load_csv(const std::filesystem::path& path,
                            std::optional<double> sample_rate_hz = std::nullopt);
void save_csv(const MultichannelRecord& record, const std::filesystem::path& path);

/// Shortest decimal text with 17 significant digits (lossless for doubles).
std::string format_double(double value);

// --- preprocessing --------------------------------------------------------

MultichannelRecord demean(const MultichannelRecord& record);

/// Integer-factor decimation behind a Hamming-windowed-sinc anti-alias
/// low-pass (8*factor+1 taps, cutoff at 0.8 of the new Nyquist), applied
/// zero-phase with reflected edges.
MultichannelRecord decimate(const MultichannelRecord& record, std::size_t factor);

/// Taps of the anti-alias filter used by decimate(); unit DC gain.
std::vector<double> decimation_lowpass(std::size_t factor);

// --- synthetic data -------------------------------------------------------

struct NoiseLevels {
    double white_std = 0.0;
    double pink_std = 0.0;
};

/// Background noise levels per sensor kind. Magnetometer levels default to
/// ten times the gradiometer levels.
struct BackgroundModel {
    NoiseLevels signal_gradiometer{0.02, 0.05};
    NoiseLevels magnetometer{0.1, 1.0};
    NoiseLevels tensor_gradiometer{0.01, 0.1};
    double pink_exponent = 1.0;

    const NoiseLevels& levels(ChannelKind kind) const noexcept;
    void validate() const;
};

/// white_std * white + pink_std * pink, where pink has a power spectrum
/// proportional to f^-exponent and unit sample variance before scaling.
std::vector<double> synth_background(const NoiseLevels& levels, double pink_exponent,
                                     std::size_t n_samples, double sample_rate_hz,
                                     std::uint64_t seed);

std::vector<double> synth_background(const BackgroundModel& model, ChannelKind kind,
                                     std::size_t n_samples, double sample_rate_hz,
                                     std::uint64_t seed);

struct SimulationConfig {
    double f_signal_cpm = 3.0;
    double f_noise_cpm = 0.3;
    double signal_coupling = 0.1;
    double magnetometer_coupling = 1.0;
    double gradiometer_coupling = 0.1;
    /// Extra gain on the signal tone only, per reference kind. The default of 1
    /// injects the same x_s into every reference; other values give the signal
    /// a spatial signature distinct from the noise tone.
    double signal_leak_magnetometer = 1.0;
    double signal_leak_gradiometer = 1.0;
    double duration_s = 120.0;
    double sample_rate_hz = 20.0;
    BackgroundModel background;
    std::uint64_t seed = 0;

    std::size_t n_samples() const;
    void validate() const;
};

/// Two-tone scenario: one signal gradiometer channel `sg` followed by three
/// magnetometer references R1..R3 and five tensor-gradiometer references R4..R8.
MultichannelRecord synth_simulation(const SimulationConfig& config);

/// cos(2*pi*f_signal*t) + cos(2*pi*f_noise*t) sampled at the configured rate.
std::vector<double> simulation_tones(const SimulationConfig& config);

// --- unit conversion ------------------------------------------------------

constexpr double hz_to_cpm(double hz) noexcept { return hz * 60.0; }
constexpr double cpm_to_hz(double cpm) noexcept { return cpm / 60.0; }

} // namespace snswf
