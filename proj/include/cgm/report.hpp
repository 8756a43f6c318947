#pragma once

// Machine-readable analysis reports (JSON) and convergence-table fitting.

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cgm/congruence.hpp"
#include "cgm/reconstruct.hpp"

namespace cgm {

using Json = nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr const char* kToolVersion = "0.1.0";

struct AnalysisConfig {
    std::string family;
    int n = 0;  // 0 = family default
    int nu = 64, nv = 64;
    int fd_order = 2;
    ClassifyOptions classify;
};

struct AnalysisOutput {
    Json report;
    bool checks_pass = false;
    // kept alive for follow-up stages (roundtrip, export)
    LiftedChart chart;
    CongruenceField F;
    OperatorField n_u, n_v;
    CxOperatorField n10;
    OperatorField tau;
    ResidualReport residuals;
    std::optional<RankClassification> classification;
    std::string classify_error;
};

/// chart -> congruence -> residuals -> classification; the JSON carries metadata,
/// residual summaries, the rank histogram and hypothesis-check results.
AnalysisOutput run_analysis(const AnalysisConfig& cfg);

struct RoundtripOutput {
    Json report;
    bool ok = false;
    std::optional<ReconstructionResult> result;
    RoundtripSummary summary;
};

/// Adds reconstruction and round-trip fidelity to an analysis.
RoundtripOutput run_roundtrip(AnalysisOutput& analysis);

/// Least-squares slope of log(residual) against log(h); entries at or below the
/// noise floor are dropped; returns 0 when fewer than two usable points remain.
double fit_slope(const std::vector<double>& h, const std::vector<double>& residual,
                 double floor = 1e-13);

/// Convergence table over a list of grid sizes, with fitted slopes.
Json convergence_table(const AnalysisConfig& base, const std::vector<int>& grids);

/// Write OBJ meshes for the chart surface, the recovered surface and (rank 1) the
/// dual. n = 3 only; vertices are unit 4-vectors written as `v x y z w`.
/// Returns the list of files written.
std::vector<std::string> export_meshes(const AnalysisOutput& analysis,
                                       const RoundtripOutput& roundtrip,
                                       const std::string& prefix);

}  // namespace cgm
