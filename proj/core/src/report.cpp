#include "snswf/report.hpp"

#include <cmath>

#include <json.hpp>

namespace snswf {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json band_json(const Band& b) { return json::array({number(b.lo_cpm), number(b.hi_cpm)}); }

json peak_json(const SpectralPeak& p) { return {{"freq_cpm", number(p.freq_cpm)}, {"psd_value", number(p.psd_value)}}; }

json snr_json(const SnrResult& s) {
    return {{"snr_db", number(s.snr_db)}, {"signal_peak", peak_json(s.signal_peak)}, {"noise_peak", peak_json(s.noise_peak)}};
}

json config_json(const PipelineConfig& c) {
    json noise = json::array();
    for (const auto& b : c.policy.noise_bands) noise.push_back(band_json(b));
    return {
        {"selection",
         {{"signal_band_cpm", band_json(c.policy.signal_band)},
          {"noise_bands_cpm", noise},
          {"high_freq_threshold_cpm", c.policy.high_freq_threshold_cpm},
          {"max_selected", c.policy.max_selected},
          {"snr_ceiling_db", c.policy.snr_ceiling_db}}},
        {"wiener", {{"taps", c.wiener.taps}, {"regularization_rel", c.wiener.regularization_rel}}},
        {"spectral",
         {{"ar_order", c.spectral.ar_order},
          {"grid_max_cpm", c.spectral.grid_max_cpm},
          {"grid_step_cpm", c.spectral.grid_step_cpm}}},
        {"sobi",
         {{"n_lags", c.sobi.n_lags},
          {"max_lag_s", c.sobi.max_lag_s},
          {"jd_tol", c.sobi.diagonalizer.tol},
          {"jd_max_sweeps", c.sobi.diagonalizer.max_sweeps}}},
    };
}

} // namespace

std::string config_to_json(const PipelineConfig& config) { return config_json(config).dump(2); }

std::string report_to_json(const DenoiseReport& r, const std::string& method, const ArtifactPaths& artifacts) {
    const bool snswf = method == "snswf" || method == "both";
    const bool classic = method == "classic" || method == "both";

    json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["method"] = method;
    doc["snr_convention"] = "20*log10(signal_peak_psd / noise_peak_psd)";
    doc["input"] = {{"sample_rate_hz", r.sample_rate_hz},
                    {"n_samples", r.n_samples},
                    {"signal_channel", r.signal_channel},
                    {"reference_channels", r.reference_channels}};
    doc["raw"] = snr_json(r.raw_snr);
    doc["raw_snr_db"] = number(r.raw_snr_db);
    if (classic) {
        doc["classic"] = snr_json(r.classic_snr);
        doc["classic"]["regularization"] = number(r.classic_regularization);
        doc["classic"]["condition_estimate"] = number(r.classic_condition);
        doc["classic_snr_db"] = number(r.classic_snr_db);
    }
    if (snswf) {
        doc["snswf"] = snr_json(r.snswf_snr);
        doc["snswf"]["regularization"] = number(r.snswf_regularization);
        doc["snswf"]["condition_estimate"] = number(r.snswf_condition);
        doc["snswf_snr_db"] = number(r.snswf_snr_db);
        json rows = json::array();
        for (const auto& a : r.assessments) {
            rows.push_back({{"component_index", a.component_index},
                            {"snr_db", a.snr_db ? number(*a.snr_db) : json(nullptr)},
                            {"main_noise_peak_cpm", number(a.main_noise_peak_cpm)},
                            {"main_noise_peak_value", number(a.main_noise_peak_value)},
                            {"signal_peak_cpm", number(a.signal_peak_cpm)},
                            {"signal_peak_value", number(a.signal_peak_value)},
                            {"dominant_peak_cpm", number(a.dominant_peak_cpm)},
                            {"selected", a.selected},
                            {"selection_reason", std::string(to_string(a.selection_reason))}});
        }
        doc["assessments"] = rows;
        doc["selected_components"] = r.selected;
        doc["warnings"] = {{"selection_signal_dominant", r.selection_warning},
                           {"sobi_not_converged", !r.sobi_converged}};
        doc["sobi_sweeps"] = r.sobi_sweeps;
    }
    if (snswf && classic) doc["improvement_db"] = number(r.improvement_db);
    doc["config"] = config_json(r.config);
    doc["artifacts"] = artifacts;
    return doc.dump(2) + "\n";
}

} // namespace snswf
