#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace snswf::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_double(std::string_view text) {
    text = trim(text);
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || text.empty())
        throw ConfigError("expected a number, got '" + std::string(text) + "'");
    return v;
}

template <typename T>
T to_integer(std::string_view text) {
    text = trim(text);
    T v{};
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || text.empty())
        throw ConfigError("expected a nonnegative integer, got '" + std::string(text) + "'");
    return v;
}

std::vector<std::string> split_list(std::string_view text) {
    std::vector<std::string> out;
    text = trim(text);
    if (text.empty()) return out;
    std::size_t start = 0;
    while (true) {
        const auto comma = text.find(',', start);
        const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos : comma - start));
        if (item.empty()) throw ConfigError("empty item in list '" + std::string(text) + "'");
        out.emplace_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ',';
        out += s;
    }
    return out;
}


// Builders for the common field shapes. `ref` returns the storage in a config.
template <typename Ref>
Field number(std::string key, std::string help, unsigned cmds, Ref ref) {
    return {std::move(key), std::move(help), "REAL", cmds,
            [ref](const RunConfig& c) { return shortest(ref(c)); },
            [ref](RunConfig& c, std::string_view v) { ref(c) = to_double(v); }};
}

template <typename T, typename Ref>
Field integer(std::string key, std::string help, unsigned cmds, Ref ref) {
    return {std::move(key), std::move(help), "INT", cmds,
            [ref](const RunConfig& c) { return std::to_string(ref(c)); },
            [ref](RunConfig& c, std::string_view v) { ref(c) = static_cast<T>(to_integer<T>(v)); }};
}

template <typename Ref>
Field text(std::string key, std::string help, unsigned cmds, Ref ref) {
    return {std::move(key), std::move(help), "TEXT", cmds,
            [ref](const RunConfig& c) { return ref(c); },
            [ref](RunConfig& c, std::string_view v) { ref(c) = std::string(trim(v)); }};
}

std::vector<Field> build_fields() {
    constexpr unsigned sim = kSimulate;
    constexpr unsigned analysis = kPsd | kDenoise;
    constexpr unsigned separation = kSobi | kDenoise;
    constexpr unsigned io = kSimulate | kSobi | kPsd | kDenoise;
    constexpr unsigned reader = kSobi | kPsd | kDenoise;

    std::vector<Field> f;
    f.push_back(text("input", "input record CSV", reader, [](auto& c) -> auto& { return c.input; }));
    f.push_back(text("out_dir", "output directory (created if missing)", io,
                     [](auto& c) -> auto& { return c.out_dir; }));
    f.push_back({"input_sample_rate_hz", "sample rate for CSVs without a time column (auto: from the file)", "REAL|auto", reader,
                 [](const RunConfig& c) { return c.input_sample_rate_hz ? shortest(*c.input_sample_rate_hz) : "auto"; },
                 [](RunConfig& c, std::string_view v) {
                     if (trim(v) == "auto") c.input_sample_rate_hz.reset();
                     else c.input_sample_rate_hz = to_double(v);
                 }});

    // simulation
    f.push_back(number("f_signal_cpm", "signal tone frequency (cpm)", sim,
                       [](auto& c) -> auto& { return c.simulation.f_signal_cpm; }));
    f.push_back(number("f_noise_cpm", "noise tone frequency (cpm)", sim,
                       [](auto& c) -> auto& { return c.simulation.f_noise_cpm; }));
    f.push_back(number("signal_coupling", "gain of the tones in the signal channel", sim,
                       [](auto& c) -> auto& { return c.simulation.signal_coupling; }));
    f.push_back(number("magnetometer_coupling", "gain of the tones in magnetometer references", sim,
                       [](auto& c) -> auto& { return c.simulation.magnetometer_coupling; }));
    f.push_back(number("gradiometer_coupling", "gain of the tones in gradiometer references", sim,
                       [](auto& c) -> auto& { return c.simulation.gradiometer_coupling; }));
    f.push_back(number("signal_leak_magnetometer", "extra gain of the signal tone in magnetometer references", sim,
                       [](auto& c) -> auto& { return c.simulation.signal_leak_magnetometer; }));
    f.push_back(number("signal_leak_gradiometer", "extra gain of the signal tone in gradiometer references", sim,
                       [](auto& c) -> auto& { return c.simulation.signal_leak_gradiometer; }));
    f.push_back(number("duration_s", "record length (s)", sim,
                       [](auto& c) -> auto& { return c.simulation.duration_s; }));
    f.push_back(number("sample_rate_hz", "simulated sample rate (Hz)", sim,
                       [](auto& c) -> auto& { return c.simulation.sample_rate_hz; }));
    f.push_back(integer<std::uint64_t>("seed", "random seed for the backgrounds", sim,
                                       [](auto& c) -> auto& { return c.simulation.seed; }));
    f.push_back(number("pink_exponent", "background spectral slope, power ~ f^-exponent", sim,
                       [](auto& c) -> auto& { return c.simulation.background.pink_exponent; }));
    f.push_back(number("sg_white_std", "signal channel white background std", sim,
                       [](auto& c) -> auto& { return c.simulation.background.signal_gradiometer.white_std; }));
    f.push_back(number("sg_pink_std", "signal channel pink background std", sim,
                       [](auto& c) -> auto& { return c.simulation.background.signal_gradiometer.pink_std; }));
    f.push_back(number("magnetometer_white_std", "magnetometer white background std", sim,
                       [](auto& c) -> auto& { return c.simulation.background.magnetometer.white_std; }));
    f.push_back(number("magnetometer_pink_std", "magnetometer pink background std", sim,
                       [](auto& c) -> auto& { return c.simulation.background.magnetometer.pink_std; }));
    f.push_back(number("gradiometer_white_std", "tensor gradiometer white background std", sim,
                       [](auto& c) -> auto& { return c.simulation.background.tensor_gradiometer.white_std; }));
    f.push_back(number("gradiometer_pink_std", "tensor gradiometer pink background std", sim,
                       [](auto& c) -> auto& { return c.simulation.background.tensor_gradiometer.pink_std; }));

    // channel selection
    f.push_back(text("channel", "channel (or sources.csv component) to analyse", kPsd,
                     [](auto& c) -> auto& { return c.channel; }));
    f.push_back(text("signal_channel", "signal channel name (empty: first channel)", kDenoise,
                     [](auto& c) -> auto& { return c.signal_channel; }));
    f.push_back({"references", "comma-separated reference channels (empty: all but the signal channel)", "NAMES", separation,
                 [](const RunConfig& c) { return join(c.references); },
                 [](RunConfig& c, std::string_view v) { c.references = split_list(v); }});
    f.push_back(text("method", "classic, snswf or both", kDenoise, [](auto& c) -> auto& { return c.method; }));

    // sobi
    f.push_back(integer<std::size_t>("n_lags", "number of covariance lags", separation,
                                     [](auto& c) -> auto& { return c.pipeline.sobi.n_lags; }));
    f.push_back(number("max_lag_s", "largest covariance lag (s)", separation,
                       [](auto& c) -> auto& { return c.pipeline.sobi.max_lag_s; }));
    f.push_back(number("jd_tol", "joint diagonalizer rotation threshold", separation,
                       [](auto& c) -> auto& { return c.pipeline.sobi.diagonalizer.tol; }));
    f.push_back(integer<int>("jd_max_sweeps", "joint diagonalizer sweep limit", separation,
                             [](auto& c) -> auto& { return c.pipeline.sobi.diagonalizer.max_sweeps; }));
    f.push_back(integer<std::size_t>("n_sources", "sources to keep (0: one per channel)", kSobi,
                                     [](auto& c) -> auto& { return c.n_sources; }));

    // spectral
    f.push_back(integer<int>("ar_order", "Burg AR model order (1-200)", analysis,
                             [](auto& c) -> auto& { return c.pipeline.spectral.ar_order; }));
    f.push_back(number("grid_max_cpm", "PSD grid upper edge (cpm, clipped at Nyquist)", analysis,
                       [](auto& c) -> auto& { return c.pipeline.spectral.grid_max_cpm; }));
    f.push_back(number("grid_step_cpm", "PSD grid spacing (cpm)", analysis,
                       [](auto& c) -> auto& { return c.pipeline.spectral.grid_step_cpm; }));

    // selection policy
    f.push_back({"signal_band", "signal band lo:hi (cpm)", "LO:HI", analysis,
                 [](const RunConfig& c) { return format_band(c.pipeline.policy.signal_band); },
                 [](RunConfig& c, std::string_view v) { c.pipeline.policy.signal_band = parse_band(v); }});
    f.push_back({"noise_bands", "comma-separated noise bands lo:hi (cpm, hi may be inf)", "LO:HI,...", analysis,
                 [](const RunConfig& c) {
                     std::vector<std::string> parts;
                     for (const auto& b : c.pipeline.policy.noise_bands) parts.push_back(format_band(b));
                     return join(parts);
                 },
                 [](RunConfig& c, std::string_view v) {
                     std::vector<Band> bands;
                     for (const auto& item : split_list(v)) bands.push_back(parse_band(item));
                     if (bands.empty()) throw ConfigError("at least one noise band is required");
                     c.pipeline.policy.noise_bands = std::move(bands);
                 }});
    f.push_back(number("high_freq_threshold_cpm", "noise peaks at or above this mark a high-frequency component",
                       kDenoise, [](auto& c) -> auto& { return c.pipeline.policy.high_freq_threshold_cpm; }));
    f.push_back(integer<std::size_t>("max_selected", "most components used as Wiener references", kDenoise,
                                     [](auto& c) -> auto& { return c.pipeline.policy.max_selected; }));
    f.push_back(number("snr_ceiling_db", "components above this SNR are signal-dominant", kDenoise,
                       [](auto& c) -> auto& { return c.pipeline.policy.snr_ceiling_db; }));

    // wiener
    f.push_back(integer<std::size_t>("taps", "FIR length per reference", kDenoise,
                                     [](auto& c) -> auto& { return c.pipeline.wiener.taps; }));
    f.push_back(number("regularization_rel", "ridge term relative to the largest reference power", kDenoise,
                       [](auto& c) -> auto& { return c.pipeline.wiener.regularization_rel; }));
    return f;
}

} // namespace

std::string shortest(double value) {
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return {buf, res.ptr};
}

Band parse_band(std::string_view text) {
    text = trim(text);
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ConfigError("band '" + std::string(text) + "' is not lo:hi");
    Band b{to_double(text.substr(0, colon)), to_double(text.substr(colon + 1))};
    if (!(b.lo_cpm >= 0.0) || !(b.lo_cpm < b.hi_cpm))
        throw ConfigError("band '" + std::string(text) + "' needs 0 <= lo < hi");
    return b;
}

std::string format_band(const Band& band) { return shortest(band.lo_cpm) + ":" + shortest(band.hi_cpm); }

const std::vector<Field>& fields() {
    static const std::vector<Field> all = build_fields();
    return all;
}

const Field* find_field(std::string_view key) {
    for (const auto& f : fields()) {
        if (f.key == key) return &f;
    }
    return nullptr;
}

std::string flag_name(std::string_view key) {
    std::string out(key);
    std::replace(out.begin(), out.end(), '_', '-');
    return out;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::map<std::string, std::size_t, std::less<>> seen;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto where = path.string() + ":" + std::to_string(number);
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
        const auto key = std::string(trim(view.substr(0, eq)));
        const auto* field = find_field(key);
        if (!field) throw ConfigError(where + ": unknown key '" + key + "'");
        if (auto [it, fresh] = seen.emplace(key, number); !fresh)
            throw ConfigError(where + ": key '" + key + "' repeats line " + std::to_string(it->second));
        try {
            field->set(config, view.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(where + ": " + key + ": " + e.what());
        }
    }
}

} // namespace snswf::cli
