#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "ats/calibration.hpp"
#include "ats/scaling.hpp"
#include "json.hpp"

namespace ats {

inline constexpr const char* kToolName = "ats";
inline constexpr const char* kToolVersion = "1.0.0";

/// Identification written at the top of every output file.
struct OutputStamp {
  std::string config_hash;

  /// "# ats <version> config=<hash>"
  std::string csv_line() const;
  nlohmann::json meta() const;
};

nlohmann::json to_json(const ConditionReport& r);
nlohmann::json to_json(const SliceFit& s);
nlohmann::json to_json(const CalibrationResult& r);
nlohmann::json to_json(const ScalingFit& f);
nlohmann::json to_json(const RescaledPoint& p);
nlohmann::json to_json(const ScalingAnalysis& a);
nlohmann::json to_json(const MomentTermStructure& m);

/// Inverse of to_json(CalibrationResult) for the fields needed downstream
/// (family, alpha, slices and their covariances). Throws InputError.
CalibrationResult calibration_from_json(const nlohmann::json& j);

/// Deterministic JSON text (sorted keys, 2-space indent, trailing newline).
std::string dump(const nlohmann::json& j);

/// ln theta, ln k_hat, ln eta_hat with their standard errors.
void write_scaling_points(std::ostream& out, std::span<const RescaledPoint> points,
                          const OutputStamp& stamp);
/// Fitted lines of both scaling laws on a log-spaced theta grid spanning the data.
void write_scaling_lines(std::ostream& out, const ScalingAnalysis& a,
                         std::span<const RescaledPoint> points, const OutputStamp& stamp);
void write_moments(std::ostream& out, const MomentTermStructure& m, const OutputStamp& stamp);

}  // namespace ats
