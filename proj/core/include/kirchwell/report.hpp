#pragma once

#include "kirchwell/constants.hpp"
#include "kirchwell/continuation.hpp"
#include "kirchwell/solvers.hpp"

#include <filesystem>
#include <string>

// vendored single-header json
#include "json.hpp"

namespace kw {

inline constexpr const char* kSchemaVersion = "kirchwell/1";

using Json = nlohmann::ordered_json;

/// Every artifact embeds the resolved configuration and the schema tag so a
/// run can be reproduced from its own output.
Json report_header(const ProblemSpec& spec, uint64_t seed);

Json constants_to_json(const ConstantsReport& rep);
Json solve_result_to_json(const SolveResult& res);
Json census_to_json(const CensusResult& res);
Json geometry_to_json(const GeometryReport& rep);
Json validation_to_json(const ValidationReport& rep);

std::string mu_scan_csv(const MuScan& scan, const ProblemSpec& spec, uint64_t seed);
std::string diagram_csv(const Diagram& diagram, const ProblemSpec& spec, uint64_t seed);
std::string branch_csv(const Branch& branch, double a, const ProblemSpec& spec, uint64_t seed);

/// Scatter of lambda vs the mu-norm with folds marked.
std::string diagram_svg(const Diagram& diagram);

/// Flat little-endian binary of the interior nodal values plus a json sidecar
/// (grid spec, energy, residual, classification).
void write_solution(const std::filesystem::path& prefix, const Problem& problem,
                    const SolveResult& res, uint64_t seed);

void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace kw
