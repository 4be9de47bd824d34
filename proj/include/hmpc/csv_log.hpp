#pragma once

#include <string>

#include "hmpc/sim_harness.hpp"

namespace hmpc {

// Stable column order, 9-decimal fixed notation, LF line endings.
// Dead-zone impedance samples are written as "nan".
std::string csv_header();
std::string to_csv(const SimLog& log);
void write_csv(const SimLog& log, const std::string& path);

// Metadata sidecar: scenario name/hash, observer design, library version.
std::string metadata_text(const SimLog& log);
void write_metadata(const SimLog& log, const std::string& path);

inline constexpr const char* kVersion = "1.0.0";

}  // namespace hmpc
