#pragma once

#include <map>
#include <string>

#include "snswf/pipeline.hpp"

namespace snswf {

inline constexpr const char* kReportSchemaVersion = "1.0";

/// Relative paths of files emitted next to a report, keyed by artifact role.
using ArtifactPaths = std::map<std::string, std::string>;

/// Serialises a report as one JSON document (keys sorted, 2-space indent).
/// `method` is "snswf", "classic" or "both"; fields that the method did not
/// compute are omitted.
std::string report_to_json(const DenoiseReport& report, const std::string& method,
                           const ArtifactPaths& artifacts);

/// The resolved pipeline configuration as a JSON object string.
std::string config_to_json(const PipelineConfig& config);

} // namespace snswf
