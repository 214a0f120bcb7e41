#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "run_config.hpp"
#include "snswf/report.hpp"

namespace snswf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json peak_json(const SpectralPeak& p) { return {{"freq_cpm", number(p.freq_cpm)}, {"psd_value", number(p.psd_value)}}; }

void write_text(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << body;
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir = cfg.out_dir.empty() ? fs::path(".") : fs::path(cfg.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
    return dir;
}

// Rows are labelled; the header is `<corner>,<col names...>`.
void write_matrix(const fs::path& path, const std::string& corner, const std::vector<std::string>& rows,
                  const std::vector<std::string>& cols, const Matrix& m) {
    std::ostringstream s;
    s << corner;
    for (const auto& c : cols) s << ',' << c;
    s << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        s << rows[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.cols(); ++j) s << ',' << format_double(m(i, j));
        s << '\n';
    }
    write_text(path, s.str());
}

std::vector<std::string> source_names(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("s" + std::to_string(i));
    return names;
}

void write_sources(const fs::path& path, const SeparationResult& sep, double fs_hz) {
    MultichannelRecord rec;
    rec.sample_rate_hz = fs_hz;
    for (const auto& name : source_names(sep.n_sources())) rec.channels.push_back({name, ChannelKind::derived, "arb"});
    rec.data = sep.sources;
    save_csv(rec, path);
}

void write_series(const fs::path& path, const ChannelMeta& meta, const std::vector<double>& series, double fs_hz) {
    save_csv(make_record(fs_hz, {meta}, {series}), path);
}

void write_taps(const fs::path& path, const WienerDesign& design, const std::vector<std::string>& names) {
    std::ostringstream s;
    s << "lag";
    for (const auto& n : names) s << ',' << n;
    s << '\n';
    const std::size_t taps = design.filters.empty() ? 0 : design.filters.front().taps.size();
    for (std::size_t k = 0; k < taps; ++k) {
        s << k;
        for (const auto& f : design.filters) s << ',' << format_double(f.taps[k]);
        s << '\n';
    }
    write_text(path, s.str());
}

void write_psd(const fs::path& path, const PsdEstimate& psd) {
    std::ostringstream s;
    s << "freq_cpm,psd\n";
    for (std::size_t i = 0; i < psd.psd.size(); ++i)
        s << format_double(psd.freqs_cpm[i]) << ',' << format_double(psd.psd[i]) << '\n';
    write_text(path, s.str());
}

void write_component_psds(const fs::path& path, const std::vector<PsdEstimate>& psds) {
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < psds.size(); ++i) {
        if (!psds[i].psd.empty()) cols.push_back(i);
    }
    std::ostringstream s;
    s << "freq_cpm";
    for (auto c : cols) s << ",s" << c;
    s << '\n';
    if (!cols.empty()) {
        const auto& grid = psds[cols.front()].freqs_cpm;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            s << format_double(grid[k]);
            for (auto c : cols) s << ',' << format_double(psds[c].psd[k]);
            s << '\n';
        }
    }
    write_text(path, s.str());
}

MultichannelRecord load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("input: a record CSV is required");
    return load_csv(cfg.input, cfg.input_sample_rate_hz);
}

std::string fixed(double v, int digits = 2) {
    if (!std::isfinite(v)) return "nan";
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(digits);
    s << v;
    return s.str();
}

// --- commands ---------------------------------------------------------------

std::string cmd_simulate(const RunConfig& cfg) {
    cfg.simulation.validate();
    const auto dir = prepare_out_dir(cfg);
    const auto rec = synth_simulation(cfg.simulation);
    save_csv(rec, dir / "record.csv");

    const auto& s = cfg.simulation;
    json truth = {
        {"f_signal_cpm", s.f_signal_cpm},
        {"f_noise_cpm", s.f_noise_cpm},
        {"couplings",
         {{"signal", s.signal_coupling},
          {"magnetometer", s.magnetometer_coupling},
          {"gradiometer", s.gradiometer_coupling},
          {"signal_leak_magnetometer", s.signal_leak_magnetometer},
          {"signal_leak_gradiometer", s.signal_leak_gradiometer}}},
        {"background",
         {{"pink_exponent", s.background.pink_exponent},
          {"signal_gradiometer", {{"white_std", s.background.signal_gradiometer.white_std},
                                  {"pink_std", s.background.signal_gradiometer.pink_std}}},
          {"magnetometer", {{"white_std", s.background.magnetometer.white_std},
                            {"pink_std", s.background.magnetometer.pink_std}}},
          {"tensor_gradiometer", {{"white_std", s.background.tensor_gradiometer.white_std},
                                  {"pink_std", s.background.tensor_gradiometer.pink_std}}}}},
        {"duration_s", s.duration_s},
        {"sample_rate_hz", s.sample_rate_hz},
        {"n_samples", rec.n_samples()},
        {"seed", s.seed},
        {"signal_channel", rec.channels.front().name},
    };
    json channels = json::array();
    for (const auto& ch : rec.channels) channels.push_back({{"name", ch.name}, {"kind", to_string(ch.kind)}});
    truth["channels"] = channels;
    write_text(dir / "truth.json", truth.dump(2) + "\n");

    return "simulate: " + std::to_string(rec.n_channels()) + " channels x " + std::to_string(rec.n_samples()) +
           " samples -> " + (dir / "record.csv").string();
}

std::string cmd_sobi(const RunConfig& cfg) {
    const auto rec = load_input(cfg);
    const auto names = cfg.references.empty() ? [&] {
        std::vector<std::string> all;
        for (const auto& ch : rec.channels) all.push_back(ch.name);
        return all;
    }() : cfg.references;
    if (names.size() < 2) throw ConfigError("references: at least 2 channels are required");
    const auto centred = demean(rec);
    Matrix data(static_cast<Eigen::Index>(names.size()), static_cast<Eigen::Index>(rec.n_samples()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto row = centred.channel(rec.index_of(names[i]));
        data.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), data.cols());
    }

    SobiOptions opts;
    opts.lags_s = default_lags(cfg.pipeline.sobi.n_lags, cfg.pipeline.sobi.max_lag_s);
    opts.n_sources = cfg.n_sources;
    opts.diagonalizer = cfg.pipeline.sobi.diagonalizer;
    SeparationResult sep;
    try {
        sep = sobi(data, rec.sample_rate_hz, opts);
    } catch (const NumericalError& e) {
        throw StageError("sobi", e.what(), true);
    }

    const auto dir = prepare_out_dir(cfg);
    const auto sources = source_names(sep.n_sources());
    write_sources(dir / "sources.csv", sep, rec.sample_rate_hz);
    write_matrix(dir / "mixing.csv", "channel", names, sources, sep.mixing);
    write_matrix(dir / "unmixing.csv", "source", sources, names, sep.unmixing);
    write_matrix(dir / "whitener.csv", "source", sources, names, sep.whitener);

    json meta = {
        {"channels", names},
        {"n_sources", sep.n_sources()},
        {"sample_rate_hz", rec.sample_rate_hz},
        {"lags_s", sep.lags_s},
        {"lag_samples", sep.lag_samples},
        {"eigenvalues", std::vector<double>(sep.eigenvalues.data(), sep.eigenvalues.data() + sep.eigenvalues.size())},
        {"noise_variance", sep.noise_variance},
        {"sweeps", sep.sweeps},
        {"converged", sep.converged},
        {"config", {{"n_lags", cfg.pipeline.sobi.n_lags},
                    {"max_lag_s", cfg.pipeline.sobi.max_lag_s},
                    {"jd_tol", cfg.pipeline.sobi.diagonalizer.tol},
                    {"jd_max_sweeps", cfg.pipeline.sobi.diagonalizer.max_sweeps}}},
        {"artifacts", {{"sources", "sources.csv"},
                       {"mixing", "mixing.csv"},
                       {"unmixing", "unmixing.csv"},
                       {"whitener", "whitener.csv"}}},
    };
    write_text(dir / "sobi.json", meta.dump(2) + "\n");
    return "sobi: " + std::to_string(sep.n_sources()) + " sources, " + std::to_string(sep.sweeps) + " sweeps" +
           (sep.converged ? "" : " (not converged)") + " -> " + (dir / "sobi.json").string();
}

std::string cmd_psd(const RunConfig& cfg) {
    if (cfg.channel.empty()) throw ConfigError("channel: a channel name is required");
    cfg.pipeline.policy.validate();
    const auto rec = load_input(cfg);
    const auto series = rec.channel(rec.index_of(cfg.channel));
    const auto policy = cfg.pipeline.policy.resolved(rec.sample_rate_hz);

    PsdEstimate psd;
    json snr;
    std::vector<SpectralPeak> peaks;
    try {
        psd = estimate_psd(series, rec.sample_rate_hz, cfg.pipeline.spectral);
        peaks = find_peaks(psd, Band{psd.freqs_cpm.front(), psd.freqs_cpm.back()});
        try {
            const auto r = snr_db(psd, policy.signal_band, policy.noise_bands);
            snr = {{"snr_db", number(r.snr_db)}, {"signal_peak", peak_json(r.signal_peak)},
                   {"noise_peak", peak_json(r.noise_peak)}};
        } catch (const UndefinedSnrError& e) {
            snr = {{"snr_db", nullptr}, {"error", e.what()}};
        }
    } catch (const NumericalError& e) {
        throw StageError("psd", e.what(), true);
    }

    const auto dir = prepare_out_dir(cfg);
    write_psd(dir / "psd.csv", psd);
    json peak_list = json::array();
    for (const auto& p : peaks) peak_list.push_back(peak_json(p));
    json noise = json::array();
    for (const auto& b : policy.noise_bands) noise.push_back({b.lo_cpm, b.hi_cpm});
    json doc = {
        {"channel", cfg.channel},
        {"sample_rate_hz", rec.sample_rate_hz},
        {"ar_order", psd.model.order},
        {"ar_noise_variance", psd.model.noise_variance},
        {"peaks", peak_list},
        {"snr", snr},
        {"snr_convention", "20*log10(signal_peak_psd / noise_peak_psd)"},
        {"signal_band_cpm", {policy.signal_band.lo_cpm, policy.signal_band.hi_cpm}},
        {"noise_bands_cpm", noise},
        {"grid", {{"max_cpm", psd.freqs_cpm.back()}, {"step_cpm", cfg.pipeline.spectral.grid_step_cpm}}},
        {"artifacts", {{"psd", "psd.csv"}}},
    };
    write_text(dir / "psd.json", doc.dump(2) + "\n");
    const auto& s = snr["snr_db"];
    return "psd: " + cfg.channel + ", " + std::to_string(peaks.size()) + " peaks, SNR " +
           (s.is_number() ? fixed(s.get<double>()) + " dB" : std::string("undefined")) + " -> " +
           (dir / "psd.json").string();
}

std::string cmd_denoise(const RunConfig& cfg) {
    if (cfg.method != "classic" && cfg.method != "snswf" && cfg.method != "both")
        throw ConfigError("method: expected classic, snswf or both, got '" + cfg.method + "'");
    cfg.pipeline.policy.validate();
    const auto rec = load_input(cfg);
    const std::string signal = cfg.signal_channel.empty() ? rec.channels.front().name : cfg.signal_channel;
    const auto& signal_meta = rec.channels[rec.index_of(signal)];
    const auto refs = cfg.references.empty() ? default_references(rec, signal) : cfg.references;
    const double fs_hz = rec.sample_rate_hz;
    const auto dir = prepare_out_dir(cfg);

    ArtifactPaths artifacts;
    DenoiseReport report;
    if (cfg.method == "classic") {
        const auto classic = run_classic(rec, signal, refs, cfg.pipeline);
        report.classic_snr = classic.snr;
        report.classic_snr_db = classic.snr_db;
        report.classic_regularization = classic.design.regularization;
        report.classic_condition = classic.design.condition_estimate;
        try {
            const auto centred = demean(rec);
            report.raw_snr = measure_snr(centred.channel(rec.index_of(signal)), fs_hz, cfg.pipeline.policy,
                                         cfg.pipeline.spectral);
        } catch (const NumericalError& e) {
            throw StageError("raw_spectral", e.what(), true);
        }
        report.raw_snr_db = report.raw_snr.snr_db;
        report.sample_rate_hz = fs_hz;
        report.n_samples = rec.n_samples();
        report.signal_channel = signal;
        report.reference_channels = refs;
        report.config = cfg.pipeline;
        report.config.policy = cfg.pipeline.policy.resolved(fs_hz);
        write_series(dir / "denoised_classic.csv", signal_meta, classic.denoised, fs_hz);
        write_taps(dir / "taps_classic.csv", classic.design, refs);
        artifacts["denoised_classic"] = "denoised_classic.csv";
        artifacts["taps_classic"] = "taps_classic.csv";
    } else {
        const auto result = run_snswf(rec, signal, refs, cfg.pipeline);
        report = result.report;
        std::vector<std::string> selected;
        for (auto i : report.selected) selected.push_back("s" + std::to_string(i));
        const auto sources = source_names(result.separation.n_sources());

        write_series(dir / "denoised_snswf.csv", signal_meta, result.denoised, fs_hz);
        write_taps(dir / "taps_snswf.csv", result.design, selected);
        write_component_psds(dir / "component_psds.csv", result.component_psds);
        write_sources(dir / "sources.csv", result.separation, fs_hz);
        write_matrix(dir / "mixing.csv", "channel", refs, sources, result.separation.mixing);
        write_matrix(dir / "unmixing.csv", "source", sources, refs, result.separation.unmixing);
        artifacts["denoised_snswf"] = "denoised_snswf.csv";
        artifacts["taps_snswf"] = "taps_snswf.csv";
        artifacts["component_psds"] = "component_psds.csv";
        artifacts["sources"] = "sources.csv";
        artifacts["mixing"] = "mixing.csv";
        artifacts["unmixing"] = "unmixing.csv";
        if (cfg.method == "both") {
            write_series(dir / "denoised_classic.csv", signal_meta, result.classic.denoised, fs_hz);
            write_taps(dir / "taps_classic.csv", result.classic.design, refs);
            artifacts["denoised_classic"] = "denoised_classic.csv";
            artifacts["taps_classic"] = "taps_classic.csv";
        }
    }
    write_text(dir / "report.json", report_to_json(report, cfg.method, artifacts));

    std::string summary = "denoise: raw " + fixed(report.raw_snr_db) + " dB";
    if (cfg.method != "snswf") summary += ", classic " + fixed(report.classic_snr_db) + " dB";
    if (cfg.method != "classic") summary += ", snswf " + fixed(report.snswf_snr_db) + " dB";
    if (cfg.method == "both") summary += ", improvement " + fixed(report.improvement_db) + " dB";
    return summary + " -> " + (dir / "report.json").string();
}

struct Sub {
    CLI::App* app;
    Command command;
    std::string (*body)(const RunConfig&);
    std::string config_path;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
};

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const RunConfig defaults;
    CLI::App app{"Signal-noise separation Wiener filter: simulate, separate, analyse and denoise multichannel records."};
    app.name("snswf");
    app.require_subcommand(1);

    std::vector<std::unique_ptr<Sub>> subs;
    const auto add = [&](const char* name, const char* help, Command command, std::string (*body)(const RunConfig&)) {
        auto sub = std::make_unique<Sub>();
        sub->app = app.add_subcommand(name, help);
        sub->command = command;
        sub->body = body;
        sub->app->add_option("--config", sub->config_path, "flat key = value file; flags override it")
            ->type_name("FILE");
        for (const auto& f : fields()) {
            if (!(f.commands & command)) continue;
            auto* opt = sub->app->add_option("--" + flag_name(f.key), sub->values[f.key], f.help);
            opt->default_str(f.get(defaults))->type_name(f.type);
            sub->options[f.key] = opt;
        }
        subs.push_back(std::move(sub));
    };
    add("simulate", "Generate the two-tone scenario: record.csv and truth.json", kSimulate, cmd_simulate);
    add("sobi", "Separate reference channels: sources, mixing, unmixing and whitener CSVs plus sobi.json", kSobi,
        cmd_sobi);
    add("psd", "Burg AR spectrum of one channel: psd.csv and psd.json with peaks and SNR", kPsd, cmd_psd);
    add("denoise", "Classic and/or SNSWF Wiener cancellation: denoised CSVs, artifacts and report.json", kDenoise,
        cmd_denoise);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    for (const auto& sub : subs) {
        if (!sub->app->parsed()) continue;
        const char* stage = sub->app->get_name().c_str();
        try {
            RunConfig cfg;
            if (!sub->config_path.empty()) apply_config_file(cfg, sub->config_path);
            for (const auto& [key, opt] : sub->options) {
                if (opt->count() == 0) continue;
                try {
                    find_field(key)->set(cfg, sub->values[key]);
                } catch (const ConfigError& e) {
                    throw ConfigError("--" + flag_name(key) + ": " + e.what());
                }
            }
            out << sub->body(cfg) << '\n';
            return kExitOk;
        } catch (const StageError& e) {
            err << "snswf " << stage << ": " << e.what() << '\n';
            return e.numerical() ? kExitNumerical : kExitUsage;
        } catch (const NumericalError& e) {
            err << "snswf " << stage << ": stage '" << stage << "': " << e.what() << '\n';
            return kExitNumerical;
        } catch (const Error& e) {
            err << "snswf " << stage << ": " << e.what() << '\n';
            return kExitUsage;
        } catch (const std::exception& e) {
            err << "snswf " << stage << ": " << e.what() << '\n';
            return kExitNumerical;
        }
    }
    return kExitUsage;
}

} // namespace snswf::cli
