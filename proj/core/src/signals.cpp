#include "snswf/signals.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>

#include <unsupported/Eigen/FFT>

#include "snswf/errors.hpp"

namespace snswf {

std::string_view to_string(ChannelKind kind) noexcept {
    switch (kind) {
    case ChannelKind::signal_gradiometer: return "signal_gradiometer";
    case ChannelKind::magnetometer: return "magnetometer";
    case ChannelKind::tensor_gradiometer: return "tensor_gradiometer";
    case ChannelKind::derived: return "derived";
    }
    return "derived";
}

std::optional<ChannelKind> parse_channel_kind(std::string_view text) noexcept {
    for (auto kind : {ChannelKind::signal_gradiometer, ChannelKind::magnetometer,
                      ChannelKind::tensor_gradiometer, ChannelKind::derived}) {
        if (to_string(kind) == text) return kind;
    }
    return std::nullopt;
}

std::span<const double> MultichannelRecord::channel(std::size_t index) const {
    if (index >= n_channels()) throw ArgumentError("channel index out of range");
    return {data.row(static_cast<Eigen::Index>(index)).data(), n_samples()};
}

std::vector<double> MultichannelRecord::channel_copy(std::size_t index) const {
    auto row = channel(index);
    return {row.begin(), row.end()};
}

std::optional<std::size_t> MultichannelRecord::find(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < channels.size(); ++i) {
        if (channels[i].name == name) return i;
    }
    return std::nullopt;
}

std::size_t MultichannelRecord::index_of(std::string_view name) const {
    if (auto idx = find(name)) return *idx;
    throw ArgumentError("no channel named '" + std::string(name) + "'");
}

void MultichannelRecord::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
        throw FormatError("sample rate must be positive and finite");
    if (channels.size() != n_channels())
        throw FormatError("channel metadata count does not match data rows");
    if (n_samples() < 2) throw FormatError("a record needs at least 2 samples");
    std::set<std::string_view> names;
    for (const auto& ch : channels) {
        if (ch.name.empty()) throw FormatError("channel names must be nonempty");
        if (!names.insert(ch.name).second)
            throw FormatError("duplicate channel name '" + ch.name + "'");
    }
    if (!data.allFinite()) throw FormatError("record contains non-finite samples");
}

MultichannelRecord make_record(double sample_rate_hz, std::vector<ChannelMeta> channels,
                               const std::vector<std::vector<double>>& series) {
    if (channels.size() != series.size())
        throw ArgumentError("channel metadata count does not match series count");
    const std::size_t n = series.empty() ? 0 : series.front().size();
    MultichannelRecord rec;
    rec.sample_rate_hz = sample_rate_hz;
    rec.channels = std::move(channels);
    rec.data.resize(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(n));
    for (std::size_t c = 0; c < series.size(); ++c) {
        if (series[c].size() != n) throw ArgumentError("series lengths differ");
        std::copy(series[c].begin(), series[c].end(),
                  rec.data.row(static_cast<Eigen::Index>(c)).data());
    }
    rec.validate();
    return rec;
}

MultichannelRecord demean(const MultichannelRecord& record) {
    MultichannelRecord out = record;
    for (Eigen::Index c = 0; c < out.data.rows(); ++c) {
        out.data.row(c).array() -= out.data.row(c).mean();
    }
    return out;
}

std::vector<double> decimation_lowpass(std::size_t factor) {
    if (factor == 0) throw ArgumentError("decimation factor must be >= 1");
    const std::size_t length = 8 * factor + 1;
    const double centre = static_cast<double>(4 * factor);
    // cutoff in cycles/sample: 0.8 * (0.5 / factor)
    const double fc = 0.4 / static_cast<double>(factor);
    std::vector<double> taps(length);
    double sum = 0.0;
    for (std::size_t k = 0; k < length; ++k) {
        const double m = static_cast<double>(k) - centre;
        const double arg = 2.0 * fc * m;
        const double sinc = m == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
        const double window = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                                     static_cast<double>(length - 1));
        taps[k] = 2.0 * fc * sinc * window;
        sum += taps[k];
    }
    for (auto& t : taps) t /= sum;
    return taps;
}

MultichannelRecord decimate(const MultichannelRecord& record, std::size_t factor) {
    if (factor == 0) throw ArgumentError("decimation factor must be >= 1");
    if (factor == 1) return record;
    const std::size_t n = record.n_samples();
    if (n < 8 * factor)
        throw ArgumentError("decimation by " + std::to_string(factor) + " needs at least " +
                            std::to_string(8 * factor) + " samples");

    const auto taps = decimation_lowpass(factor);
    const auto centre = static_cast<std::ptrdiff_t>(4 * factor);
    const auto last = static_cast<std::ptrdiff_t>(n) - 1;
    const auto reflect = [last](std::ptrdiff_t i) {
        if (i < 0) return -i;
        if (i > last) return 2 * last - i;
        return i;
    };

    const std::size_t n_out = n / factor;
    MultichannelRecord out;
    out.sample_rate_hz = record.sample_rate_hz / static_cast<double>(factor);
    out.channels = record.channels;
    out.data.resize(record.data.rows(), static_cast<Eigen::Index>(n_out));
    for (Eigen::Index c = 0; c < record.data.rows(); ++c) {
        const double* x = record.data.row(c).data();
        for (std::size_t j = 0; j < n_out; ++j) {
            const auto pos = static_cast<std::ptrdiff_t>(j * factor);
            double acc = 0.0;
            for (std::size_t k = 0; k < taps.size(); ++k) {
                acc += taps[k] * x[reflect(pos + static_cast<std::ptrdiff_t>(k) - centre)];
            }
            out.data(c, static_cast<Eigen::Index>(j)) = acc;
        }
    }
    return out;
}

const NoiseLevels& BackgroundModel::levels(ChannelKind kind) const noexcept {
    switch (kind) {
    case ChannelKind::magnetometer: return magnetometer;
    case ChannelKind::tensor_gradiometer: return tensor_gradiometer;
    case ChannelKind::signal_gradiometer:
    case ChannelKind::derived: break;
    }
    return signal_gradiometer;
}

void BackgroundModel::validate() const {
    for (const auto* lv : {&signal_gradiometer, &magnetometer, &tensor_gradiometer}) {
        if (!(lv->white_std >= 0.0) || !(lv->pink_std >= 0.0))
            throw ArgumentError("background std values must be >= 0");
    }
    if (!std::isfinite(pink_exponent)) throw ArgumentError("pink_exponent must be finite");
}

namespace {

std::vector<double> pink_series(std::size_t n, double exponent, std::mt19937_64& rng) {
    const std::size_t m = std::bit_ceil(std::max<std::size_t>(n, 2));
    std::normal_distribution<double> normal;
    std::vector<double> white(m);
    for (auto& v : white) v = normal(rng);

    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spectrum;
    fft.fwd(spectrum, white);
    spectrum[0] = 0.0;
    for (std::size_t k = 1; k <= m / 2; ++k) {
        // bin index stands in for frequency; the absolute scale is removed by normalisation
        const double gain = std::pow(static_cast<double>(k), -exponent / 2.0);
        spectrum[k] *= gain;
        if (k != m - k) spectrum[m - k] *= gain;
    }
    std::vector<double> shaped;
    fft.inv(shaped, spectrum);
    shaped.resize(n);

    double mean = 0.0;
    for (double v : shaped) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double& v : shaped) {
        v -= mean;
        var += v * v;
    }
    var /= static_cast<double>(n);
    const double scale = var > 0.0 ? 1.0 / std::sqrt(var) : 0.0;
    for (double& v : shaped) v *= scale;
    return shaped;
}

} // namespace

std::vector<double> synth_background(const NoiseLevels& levels, double pink_exponent,
                                     std::size_t n_samples, double sample_rate_hz,
                                     std::uint64_t seed) {
    if (n_samples < 2) throw ArgumentError("background needs at least 2 samples");
    if (!(sample_rate_hz > 0.0)) throw ArgumentError("sample rate must be positive");
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::mt19937_64 rng(seq);

    std::vector<double> out(n_samples, 0.0);
    // both streams are always drawn so that levels never shift the random sequence
    const auto pink = pink_series(n_samples, pink_exponent, rng);
    std::normal_distribution<double> normal;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const double w = normal(rng);
        out[i] = levels.white_std * w + levels.pink_std * pink[i];
    }
    return out;
}

std::vector<double> synth_background(const BackgroundModel& model, ChannelKind kind,
                                     std::size_t n_samples, double sample_rate_hz,
                                     std::uint64_t seed) {
    return synth_background(model.levels(kind), model.pink_exponent, n_samples, sample_rate_hz, seed);
}

std::size_t SimulationConfig::n_samples() const {
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

void SimulationConfig::validate() const {
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
        throw ArgumentError("sample_rate_hz must be positive");
    if (!(duration_s > 0.0) || !std::isfinite(duration_s) || duration_s * sample_rate_hz < 2.0)
        throw ArgumentError("duration_s * sample_rate_hz must be >= 2");
    for (double c : {signal_coupling, magnetometer_coupling, gradiometer_coupling, signal_leak_magnetometer,
                     signal_leak_gradiometer}) {
        if (!(c >= 0.0) || !std::isfinite(c)) throw ArgumentError("couplings must be >= 0");
    }
    const double nyquist_cpm = hz_to_cpm(sample_rate_hz / 2.0);
    if (!(f_signal_cpm >= 0.0) || f_signal_cpm >= nyquist_cpm)
        throw ArgumentError("f_signal_cpm must lie in [0, Nyquist)");
    if (!(f_noise_cpm >= 0.0) || f_noise_cpm >= nyquist_cpm)
        throw ArgumentError("f_noise_cpm must lie in [0, Nyquist)");
    background.validate();
}

std::vector<double> simulation_tones(const SimulationConfig& config) {
    const std::size_t n = config.n_samples();
    const double ws = 2.0 * std::numbers::pi * cpm_to_hz(config.f_signal_cpm);
    const double wn = 2.0 * std::numbers::pi * cpm_to_hz(config.f_noise_cpm);
    std::vector<double> tones(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / config.sample_rate_hz;
        tones[i] = std::cos(ws * t) + std::cos(wn * t);
    }
    return tones;
}

MultichannelRecord synth_simulation(const SimulationConfig& config) {
    config.validate();
    const std::size_t n = config.n_samples();
    const double ws = 2.0 * std::numbers::pi * cpm_to_hz(config.f_signal_cpm);
    const double wn = 2.0 * std::numbers::pi * cpm_to_hz(config.f_noise_cpm);

    std::vector<ChannelMeta> channels;
    channels.push_back({"sg", ChannelKind::signal_gradiometer, "pT"});
    for (int i = 1; i <= 3; ++i)
        channels.push_back({"R" + std::to_string(i), ChannelKind::magnetometer, "pT"});
    for (int i = 4; i <= 8; ++i)
        channels.push_back({"R" + std::to_string(i), ChannelKind::tensor_gradiometer, "pT"});

    std::vector<std::vector<double>> series;
    series.reserve(channels.size());
    for (std::size_t c = 0; c < channels.size(); ++c) {
        double coupling = config.gradiometer_coupling;
        double leak = config.signal_leak_gradiometer;
        if (channels[c].kind == ChannelKind::signal_gradiometer) {
            coupling = config.signal_coupling;
            leak = 1.0;
        } else if (channels[c].kind == ChannelKind::magnetometer) {
            coupling = config.magnetometer_coupling;
            leak = config.signal_leak_magnetometer;
        }
        // distinct, reproducible stream per channel
        const std::uint64_t channel_seed = config.seed * 1000003ULL + c + 1;
        auto bg = synth_background(config.background, channels[c].kind, n, config.sample_rate_hz,
                                   channel_seed);
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / config.sample_rate_hz;
            bg[i] += coupling * (leak * std::cos(ws * t) + std::cos(wn * t));
        }
        series.push_back(std::move(bg));
    }
    return make_record(config.sample_rate_hz, std::move(channels), series);
}

} // namespace snswf
