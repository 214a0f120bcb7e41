#include "snswf/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snswf {

void SelectionPolicy::validate() const {
    if (!(signal_band.lo_cpm < signal_band.hi_cpm)) throw ArgumentError("signal band needs lo < hi");
    if (noise_bands.empty()) throw ArgumentError("at least one noise band is required");
    for (const auto& b : noise_bands) {
        if (!(b.lo_cpm < b.hi_cpm)) throw ArgumentError("noise bands need lo < hi");
    }
    if (max_selected < 1) throw ArgumentError("max_selected must be >= 1");
    if (!std::isfinite(high_freq_threshold_cpm) || !std::isfinite(snr_ceiling_db))
        throw ArgumentError("selection thresholds must be finite");
}

SelectionPolicy SelectionPolicy::resolved(double sample_rate_hz) const {
    SelectionPolicy out = *this;
    const double nyquist_cpm = hz_to_cpm(sample_rate_hz / 2.0);
    for (auto& b : out.noise_bands) b.hi_cpm = std::min(b.hi_cpm, nyquist_cpm);
    return out;
}

std::string_view to_string(SelectionReason reason) noexcept {
    switch (reason) {
    case SelectionReason::lowest_snr: return "lowest_snr";
    case SelectionReason::high_frequency_noise: return "high_frequency_noise";
    case SelectionReason::not_selected: return "not_selected";
    }
    return "not_selected";
}

SnrResult measure_snr(std::span<const double> series, double sample_rate_hz,
                      const SelectionPolicy& policy, const SpectralConfig& spectral) {
    const auto psd = estimate_psd(series, sample_rate_hz, spectral);
    const auto p = policy.resolved(sample_rate_hz);
    return snr_db(psd, p.signal_band, p.noise_bands);
}

ReferenceSelection select_references(std::span<const ComponentAssessment> assessments,
                                     const SelectionPolicy& policy) {
    std::vector<const ComponentAssessment*> ranked;
    for (const auto& a : assessments) {
        if (a.snr_db) ranked.push_back(&a);
    }
    if (ranked.empty()) throw ArgumentError("no assessable component to select from");
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto* a, const auto* b) {
        if (*a->snr_db != *b->snr_db) return *a->snr_db < *b->snr_db;
        return a->component_index < b->component_index;
    });

    ReferenceSelection sel;
    const auto* lowest = ranked.front();
    sel.indices.push_back(lowest->component_index);
    for (const auto* a : ranked) {
        if (sel.indices.size() >= policy.max_selected) break;
        if (a == lowest) continue;
        if (a->main_noise_peak_cpm >= policy.high_freq_threshold_cpm && *a->snr_db <= policy.snr_ceiling_db)
            sel.indices.push_back(a->component_index);
    }

    const bool all_signal = std::all_of(ranked.begin(), ranked.end(),
                                        [&](const auto* a) { return *a->snr_db > policy.snr_ceiling_db; });
    sel.signal_dominant_warning = all_signal && policy.signal_band.contains(lowest->dominant_peak_cpm);
    return sel;
}

ComponentAnalysis assess_components(const SeparationResult& separation, double sample_rate_hz,
                                    const SelectionPolicy& policy, const SpectralConfig& spectral) {
    if (separation.n_sources() == 0) throw ArgumentError("separation has no sources");
    policy.validate();
    const auto p = policy.resolved(sample_rate_hz);
    const auto grid = cpm_grid(spectral, sample_rate_hz);

    ComponentAnalysis out;
    for (std::size_t k = 0; k < separation.n_sources(); ++k) {
        ComponentAssessment a;
        a.component_index = k;
        const Eigen::VectorXd row = separation.sources.row(static_cast<Eigen::Index>(k));
        PsdEstimate psd;
        try {
            const auto model = burg_fit(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())),
                                        spectral.ar_order, sample_rate_hz);
            psd = ar_psd(model, grid);
            const auto snr = snr_db(psd, p.signal_band, p.noise_bands);
            a.snr_db = snr.snr_db;
            a.main_noise_peak_cpm = snr.noise_peak.freq_cpm;
            a.main_noise_peak_value = snr.noise_peak.psd_value;
            a.signal_peak_cpm = snr.signal_peak.freq_cpm;
            a.signal_peak_value = snr.signal_peak.psd_value;
            const auto top = std::max_element(psd.psd.begin(), psd.psd.end());
            a.dominant_peak_cpm = psd.freqs_cpm[static_cast<std::size_t>(top - psd.psd.begin())];
        } catch (const NumericalError&) {
            a.snr_db.reset();
        }
        out.assessments.push_back(a);
        out.psds.push_back(std::move(psd));
    }

    out.selection = select_references(out.assessments, policy);
    for (std::size_t rank = 0; rank < out.selection.indices.size(); ++rank) {
        auto& a = out.assessments[out.selection.indices[rank]];
        a.selected = true;
        a.selection_reason = rank == 0 ? SelectionReason::lowest_snr : SelectionReason::high_frequency_noise;
    }
    return out;
}

namespace {

template <typename F>
auto run_stage(const char* stage, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const NumericalError& e) {
        throw StageError(stage, e.what(), true);
    } catch (const Error& e) {
        throw StageError(stage, e.what(), false);
    }
}

struct Inputs {
    MultichannelRecord record; // demeaned
    std::vector<double> primary;
    std::vector<std::vector<double>> refs;
};

Inputs gather_inputs(const MultichannelRecord& record, std::string_view signal_channel,
                     std::span<const std::string> reference_channels) {
    record.validate();
    if (reference_channels.size() < 2) throw ArgumentError("at least 2 reference channels are required");
    const auto sig = record.index_of(signal_channel);
    Inputs in{demean(record), {}, {}};
    in.primary = in.record.channel_copy(sig);
    for (const auto& name : reference_channels) {
        const auto idx = record.index_of(name);
        if (idx == sig) throw ArgumentError("signal channel '" + name + "' cannot also be a reference");
        in.refs.push_back(in.record.channel_copy(idx));
    }
    return in;
}

WienerDesign design_filter(std::span<const std::vector<double>> refs, std::span<const double> primary,
                           double sample_rate_hz, const WienerConfig& cfg) {
    if (cfg.taps < 1 || cfg.taps >= primary.size()) throw ArgumentError("filter length out of range");
    if (!(cfg.regularization_rel >= 0.0)) throw ArgumentError("regularization must be >= 0");
    const auto corr = estimate_correlations(refs, primary, cfg.taps);
    return solve_wiener(corr, cfg.regularization_rel * corr.max_zero_lag_power(), sample_rate_hz);
}

ClassicResult classic_from_inputs(const Inputs& in, const PipelineConfig& config) {
    ClassicResult out;
    out.design = run_stage("classic_wiener", [&] {
        return design_filter(in.refs, in.primary, in.record.sample_rate_hz, config.wiener);
    });
    out.denoised = cancel(out.design, in.refs, in.primary);
    run_stage("classic_spectral", [&] {
        const auto p = config.policy.resolved(in.record.sample_rate_hz);
        out.psd = estimate_psd(out.denoised, in.record.sample_rate_hz, config.spectral);
        out.snr = snr_db(out.psd, p.signal_band, p.noise_bands);
        return 0;
    });
    out.snr_db = out.snr.snr_db;
    return out;
}

} // namespace

std::vector<std::string> default_references(const MultichannelRecord& record, std::string_view signal_channel) {
    std::vector<std::string> refs;
    for (const auto& ch : record.channels) {
        if (ch.name != signal_channel) refs.push_back(ch.name);
    }
    return refs;
}

ClassicResult run_classic(const MultichannelRecord& record, std::string_view signal_channel,
                          std::span<const std::string> reference_channels, const PipelineConfig& config) {
    config.policy.validate();
    config.spectral.validate();
    const auto in = gather_inputs(record, signal_channel, reference_channels);
    return classic_from_inputs(in, config);
}

SnswfResult run_snswf(const MultichannelRecord& record, std::string_view signal_channel,
                      std::span<const std::string> reference_channels, const PipelineConfig& config) {
    config.policy.validate();
    config.spectral.validate();
    const auto in = gather_inputs(record, signal_channel, reference_channels);
    const double fs = in.record.sample_rate_hz;

    SnswfResult out;
    out.separation = run_stage("sobi", [&] {
        Matrix refs(static_cast<Eigen::Index>(in.refs.size()), static_cast<Eigen::Index>(in.primary.size()));
        for (std::size_t i = 0; i < in.refs.size(); ++i)
            refs.row(static_cast<Eigen::Index>(i)) =
                Eigen::Map<const Eigen::RowVectorXd>(in.refs[i].data(), refs.cols());
        SobiOptions opts;
        opts.lags_s = default_lags(config.sobi.n_lags, config.sobi.max_lag_s);
        opts.diagonalizer = config.sobi.diagonalizer;
        return sobi(refs, fs, opts);
    });

    auto analysis = run_stage("assess", [&] {
        return assess_components(out.separation, fs, config.policy, config.spectral);
    });
    out.component_psds = std::move(analysis.psds);

    std::vector<std::vector<double>> selected;
    for (auto idx : analysis.selection.indices) {
        const Eigen::RowVectorXd row = out.separation.sources.row(static_cast<Eigen::Index>(idx));
        selected.emplace_back(row.data(), row.data() + row.size());
    }
    out.design = run_stage("snswf_wiener", [&] { return design_filter(selected, in.primary, fs, config.wiener); });
    out.denoised = cancel(out.design, selected, in.primary);

    auto& rep = out.report;
    run_stage("snswf_spectral", [&] {
        const auto p = config.policy.resolved(fs);
        out.raw_psd = estimate_psd(in.primary, fs, config.spectral);
        rep.raw_snr = snr_db(out.raw_psd, p.signal_band, p.noise_bands);
        out.snswf_psd = estimate_psd(out.denoised, fs, config.spectral);
        rep.snswf_snr = snr_db(out.snswf_psd, p.signal_band, p.noise_bands);
        return 0;
    });
    out.classic = classic_from_inputs(in, config);

    rep.raw_snr_db = rep.raw_snr.snr_db;
    rep.snswf_snr_db = rep.snswf_snr.snr_db;
    rep.classic_snr = out.classic.snr;
    rep.classic_snr_db = out.classic.snr_db;
    rep.improvement_db = rep.snswf_snr_db - rep.classic_snr_db;
    rep.assessments = std::move(analysis.assessments);
    rep.selected = analysis.selection.indices;
    rep.selection_warning = analysis.selection.signal_dominant_warning;
    rep.sobi_converged = out.separation.converged;
    rep.sobi_sweeps = out.separation.sweeps;
    rep.classic_regularization = out.classic.design.regularization;
    rep.snswf_regularization = out.design.regularization;
    rep.classic_condition = out.classic.design.condition_estimate;
    rep.snswf_condition = out.design.condition_estimate;
    rep.sample_rate_hz = fs;
    rep.n_samples = in.primary.size();
    rep.signal_channel = std::string(signal_channel);
    rep.reference_channels.assign(reference_channels.begin(), reference_channels.end());
    rep.config = config;
    rep.config.policy = config.policy.resolved(fs);
    return out;
}

} // namespace snswf
