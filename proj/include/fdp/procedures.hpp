// End-to-end decision procedures: the AS/TDC FDR threshold, FDP bounding at
// a chosen threshold, FDP control via the interpolated bands, and label
// assignment for multi-decoy competition.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fdp/bands.hpp"

namespace fdp {

struct AsResult {
    std::int64_t k_as = 0;
    std::int64_t n_discoveries = 0;  // T at k_as
};

// k_AS = max{ k : (D_k + 1)/T_k * B <= alpha } or 0; T_k = 0 fails the
// condition. Labels are assumed ordered by nonincreasing winning score.
AsResult as_threshold(const CompetitionSequence& seq, const BandParams& params);

struct DecisionReport {
    std::int64_t k_threshold = 0;
    std::int64_t n_discoveries = 0;
    double q_bound = 0.0;      // interpolated
    double q_bound_raw = 0.0;  // non-interpolated, for diagnostics
    BandKind kind = BandKind::KR;
    std::int64_t d_max_used = 0;
};

// Upper prediction bound on the FDP among target wins in the top tau scores,
// with d_max from dmax_for_fdr (SB/UB; KR needs none).
DecisionReport tdc_bound(const CompetitionSequence& seq, std::int64_t tau,
                         const BandParams& params, BandKind kind,
                         const TableSet* tables,
                         UbMode mode = UbMode::deterministic,
                         Rng* rng = nullptr);

// k0 = max{ i : L_i = 1, Qbar_i <= alpha } or 0, with d_max = dmax_for_fdp
// for SB/UB.
DecisionReport fdp_control_threshold(const CompetitionSequence& seq,
                                     const BandParams& params, BandKind kind,
                                     const TableSet* tables,
                                     UbMode mode = UbMode::deterministic,
                                     Rng* rng = nullptr);

enum class MultiMethod { max, mirror };
enum class TiePolicy { random, discard };

inline const char* to_string(MultiMethod m) {
    return m == MultiMethod::max ? "max" : "mirror";
}

struct MultiDecoyInput {
    double target_score;
    std::vector<double> decoy_scores;
    MultiMethod method = MultiMethod::max;
    TiePolicy tie_policy = TiePolicy::random;
};

struct LabeledScore {
    double w;
    std::int8_t label;
};

// Rank p-value of the target among the d+1 scores, counting ties against the
// target; the label follows from p vs (c, lambda) with c = lambda = 1/(d+1)
// for max and 1/2 for mirror (d = 1 only). Ties are rank-randomized or the
// hypothesis is discarded, per policy.
LabeledScore assign_label_multi(double target, std::span<const double> decoys,
                                MultiMethod method, TiePolicy policy, Rng& rng);
LabeledScore assign_label_multi(const MultiDecoyInput& input, Rng& rng);

}  // namespace fdp
