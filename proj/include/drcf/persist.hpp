#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "drcf/eval.hpp"

namespace drcf {

/// Text model format, version 1:
///
///     DRCF 1
///     H <d> <h> <k_max> <users> <items> <lambda> <global_mean>
///     U <users>
///     <one raw user ID per line>
///     I <items>
///     <one raw item ID per line>
///     T <name> <rows> <cols>        (once per tensor, in layout order)
///     <rows lines of cols space-separated values>
///
/// Reals use 17 significant digits, so doubles survive bit-exactly.
inline constexpr int model_format_version = 1;

void save(const TrainedModel& model, const std::filesystem::path& path);
void write_model(const TrainedModel& model, std::ostream& out);
std::string to_string(const TrainedModel& model);

/// Throws VersionError, ShapeError or NonFiniteError for the matching defect,
/// IoError if the file cannot be opened.
TrainedModel load(const std::filesystem::path& path);
TrainedModel read_model(std::istream& in);

}  // namespace drcf
