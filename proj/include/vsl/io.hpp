#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "vsl/evolve.hpp"
#include "vsl/gap.hpp"
#include "vsl/harness.hpp"
#include "vsl/lagrangian.hpp"

namespace vsl {

/// Shortest decimal that round-trips to the same double.
std::string format_double(double v);

/// Header row plus one row per record; fixed column order.
std::string diagnostics_csv(std::span<const DiagnosticsRecord> records);
std::string gaps_csv(std::span<const GapRecord> records);
/// One row per seed per snapshot.
std::string tracers_csv(std::span<const TracerEnsemble> snapshots);
std::string sweep_csv(std::span<const SweepResult> results);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

enum class FieldId : std::uint32_t { OmegaL = 1, SmallScaleVelocity = 2 };

/// Binary field file: 8-byte magic, u32 version, u32 N, f64 L, f64 time, u32 field id, u32 reserved,
/// then N*N row-major doubles. Little-endian throughout.
struct FieldFile {
    FieldId id = FieldId::OmegaL;
    double time = 0.0;
    ScalarField field;
};

void write_field(const std::filesystem::path& path, const ScalarField& field, double time, FieldId id);
FieldFile read_field(const std::filesystem::path& path);

nlohmann::json ladder_json(const ParameterLadder& ladder);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Flat key = value file; '#' starts a comment. Throws Usage on malformed lines or duplicate keys.
std::map<std::string, std::string> parse_config(const std::string& text);

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string content_hash(const std::string& text);

}  // namespace vsl
