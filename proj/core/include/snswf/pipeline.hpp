#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snswf/errors.hpp"
#include "snswf/signals.hpp"
#include "snswf/sobi.hpp"
#include "snswf/spectral.hpp"
#include "snswf/wiener.hpp"

namespace snswf {

/// Bands and thresholds for judging separated components. A noise band whose
/// upper edge is +infinity extends to the Nyquist frequency.
struct SelectionPolicy {
    Band signal_band{2.5, 3.5};
    std::vector<Band> noise_bands{{0.05, 2.5}, {3.5, std::numeric_limits<double>::infinity()}};
    double high_freq_threshold_cpm = 30.0;
    std::size_t max_selected = 2;
    double snr_ceiling_db = 0.0;

    void validate() const;
    /// Copy with infinite band edges replaced by the Nyquist frequency in cpm.
    SelectionPolicy resolved(double sample_rate_hz) const;
};

enum class SelectionReason { lowest_snr, high_frequency_noise, not_selected };
std::string_view to_string(SelectionReason reason) noexcept;

struct ComponentAssessment {
    std::size_t component_index = 0;
    std::optional<double> snr_db; // empty for degenerate components
    double main_noise_peak_cpm = 0.0;
    double main_noise_peak_value = 0.0;
    double signal_peak_cpm = 0.0;
    double signal_peak_value = 0.0;
    double dominant_peak_cpm = 0.0; // grid argmax of the whole PSD
    bool selected = false;
    SelectionReason selection_reason = SelectionReason::not_selected;
};

struct ReferenceSelection {
    std::vector<std::size_t> indices; // in selection order
    bool signal_dominant_warning = false;
};

struct ComponentAnalysis {
    std::vector<ComponentAssessment> assessments;
    std::vector<PsdEstimate> psds; // empty PSD for degenerate components
    ReferenceSelection selection;
};

/// AR-PSD and peak-ratio SNR of every separated component, with the
/// selection flags of select_references() applied.
ComponentAnalysis assess_components(const SeparationResult& separation, double sample_rate_hz,
                                    const SelectionPolicy& policy, const SpectralConfig& spectral);

/// (a) the lowest-SNR component; (b) components whose main noise peak sits at or
/// above the high-frequency threshold with SNR at or below the ceiling, lowest SNR
/// first, until max_selected. Ties go to the lower index.
ReferenceSelection select_references(std::span<const ComponentAssessment> assessments,
                                     const SelectionPolicy& policy);

struct WienerConfig {
    std::size_t taps = 40;
    /// lambda = regularization_rel * max_i r_{x_i x_i}(0)
    double regularization_rel = 1e-6;
};

struct SobiConfig {
    std::size_t n_lags = 10;
    double max_lag_s = 1.0;
    JointDiagonalizerOptions diagonalizer;
};

struct PipelineConfig {
    SelectionPolicy policy;
    WienerConfig wiener;
    SpectralConfig spectral;
    SobiConfig sobi;
};

/// A failure inside a named pipeline stage.
class StageError : public Error {
public:
    StageError(std::string stage, const std::string& message, bool numerical)
        : Error("stage '" + stage + "': " + message), stage_(std::move(stage)), numerical_(numerical) {}

    const std::string& stage() const noexcept { return stage_; }
    bool numerical() const noexcept { return numerical_; }

private:
    std::string stage_;
    bool numerical_;
};

/// Peak-ratio SNR of a series under the shared spectral configuration.
SnrResult measure_snr(std::span<const double> series, double sample_rate_hz,
                      const SelectionPolicy& policy, const SpectralConfig& spectral);

struct ClassicResult {
    std::vector<double> denoised;
    double snr_db = 0.0;
    SnrResult snr;
    WienerDesign design;
    PsdEstimate psd;
};

/// Wiener cancellation driven directly by the raw reference channels.
ClassicResult run_classic(const MultichannelRecord& record, std::string_view signal_channel,
                          std::span<const std::string> reference_channels, const PipelineConfig& config);

struct DenoiseReport {
    double raw_snr_db = 0.0;
    double classic_snr_db = 0.0;
    double snswf_snr_db = 0.0;
    double improvement_db = 0.0; // snswf - classic
    SnrResult raw_snr;
    SnrResult classic_snr;
    SnrResult snswf_snr;
    std::vector<ComponentAssessment> assessments;
    std::vector<std::size_t> selected;
    bool selection_warning = false;
    bool sobi_converged = true;
    int sobi_sweeps = 0;
    double classic_regularization = 0.0;
    double snswf_regularization = 0.0;
    double classic_condition = 0.0;
    double snswf_condition = 0.0;
    double sample_rate_hz = 0.0;
    std::size_t n_samples = 0;
    std::string signal_channel;
    std::vector<std::string> reference_channels;
    PipelineConfig config; // resolved
};

struct SnswfResult {
    std::vector<double> denoised;
    DenoiseReport report;
    SeparationResult separation;
    std::vector<PsdEstimate> component_psds;
    WienerDesign design;
    ClassicResult classic;
    PsdEstimate raw_psd;
    PsdEstimate snswf_psd;
};

/// demean -> SOBI on the references -> component assessment and selection ->
/// Wiener cancellation of the signal channel from the selected components,
/// reported against the classic filter on the same record.
SnswfResult run_snswf(const MultichannelRecord& record, std::string_view signal_channel,
                      std::span<const std::string> reference_channels, const PipelineConfig& config);

/// Every channel except the signal channel, in record order.
std::vector<std::string> default_references(const MultichannelRecord& record, std::string_view signal_channel);

} // namespace snswf
