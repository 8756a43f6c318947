#pragma once

// Recovery of the immersion from the congruence alone: pointwise rank of
// U = N_Z V-perp + tau V-perp, and per rank branch the real null line(s) in V that
// reproduce the congruence. Consumes only (pi_V, N, tau) - never the chart - so
// the round trip is a genuine inverse problem.

#include <cstdint>
#include <optional>
#include <string>

#include "cgm/congruence.hpp"

namespace cgm {

struct ClassifyOptions {
    double tol_rank = 0.03;      // relative singular-value cut for rank counting
    double guard = 10.0;         // ratios within this factor of the cut are indeterminate
    double rank0_abs = 1e-8;     // absolute generator scale below which rank is 0
    double hypothesis_tol = 1e-2;  // grid-max bound for strong conformality / eq (7)
    bool check_hypotheses = true;
};

struct RankClassification {
    Field<std::int8_t> rank;      // 0, 1, 2 (masked points carry reasons)
    Field<CMat> basisU;           // d x rank orthonormal generators of U
    Field<double> sv_ratio;       // second/first singular value of the generator stack
    Field<double> isotropy;       // normalized bilinear Gram residual of basisU
    int count(int r) const;
    int masked_count() const;
};

/// Pointwise singular-value classification of the stacked generators
/// {N_Z nu_i, tau nu_i}. Verifies the reconstruction hypotheses first (strong
/// conformality, eq (7), set A empty) and throws HypothesisViolation naming the
/// failed one at its worst point.
RankClassification classify_rank_U(const CongruenceField& F, const CxOperatorField& n10,
                                   const OperatorField& tau, const ClassifyOptions& opts = {});

enum class Branch : std::uint8_t { none = 0, rank2_unique, rank1_dual_pair, rank0_constant };

const char* branch_name(Branch b);

struct ReconstructionResult {
    Field<Branch> branch;
    Field<RVec> line1;            // unit representative; the unique line (rank 2) or first of the pair
    Field<RVec> line2;            // second line of the dual pair (rank 1 only)
    Field<double> d01_stability;  // measured D^{0,1}-stability residual of U
    Field<double> prop5_check;    // ||N10 W|| residual for W = f + U (rank 1)
    bool infinitely_many = false; // rank-0 branch flag
    RMat constant_V;              // rank-0: the constant projector
    std::vector<RVec> witness_lines;  // rank-0: two sample null lines in V
};

/// Rank-2 branch: f = U cap conj(U), a unique real null line.
ReconstructionResult reconstruct_rank2(const CongruenceField& F, const RankClassification& cls,
                                       const CxOperatorField& n10, const OperatorField& tau);

/// Rank-1 branch: tau must vanish (checked); U is recomputed as N_Z V-perp alone;
/// the two null lines of (U + conj U)-perp cap V, ordered deterministically.
ReconstructionResult reconstruct_rank1(const CongruenceField& F, const RankClassification& cls,
                                       const CxOperatorField& n10, const OperatorField& tau,
                                       double tau_small_tol = 0.05);

/// Rank-0 branch: verifies V is constant and returns witness null lines.
ReconstructionResult reconstruct_rank0(const CongruenceField& F, const RankClassification& cls,
                                       double constancy_tol = 1e-8);

/// Dispatch on the dominant rank of the classification.
ReconstructionResult reconstruct(const CongruenceField& F, const RankClassification& cls,
                                 const CxOperatorField& n10, const OperatorField& tau);

struct RoundtripSummary {
    Branch branch = Branch::none;
    ScalarSummary error;          // projective distance of the recovered line to span sigma
    ScalarSummary dual_error;     // distance of the other line to the dual oracle (when known)
    bool dual_available = false;
};

/// Projective distance of the recovered line field to the generating lift; the
/// rank-1 branch takes the minimum over the pair and labels the other line dual.
RoundtripSummary roundtrip_error(const LiftedChart& chart, const CongruenceField& F,
                                 const ReconstructionResult& result, Field<double>* per_point = nullptr);

/// Immersion check of a recovered projective line field via derivatives of its
/// sign-invariant rank-1 projector; near zero for constant (non-immersing) lines.
Field<double> line_field_immersion(const CongruenceField& F, const Field<RVec>& line);

}  // namespace cgm
