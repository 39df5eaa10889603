// Upper prediction bands on the true-null target-win process and their
// conversion to bounds on the number and proportion of false discoveries
// over a competition sequence. Three band kinds: the closed-form KR band,
// the standardized band (SB) and the uniform band (UB); the latter two draw
// their quantiles from Monte-Carlo calibrated tables.

#pragma once

#include <cstdint>
#include <vector>

#include "fdp/dist.hpp"
#include "fdp/errors.hpp"
#include "fdp/kinds.hpp"
#include "fdp/mcquant.hpp"
#include "fdp/rng.hpp"

namespace fdp {

struct BandParams {
    double c = 0.5;       // target-win threshold
    double lambda = 0.5;  // decoy-win threshold, c <= lambda < 1
    std::int64_t m = 0;   // hypothesis count
    double alpha = 0.05;  // FDR / FDP level
    double gamma = 0.05;  // confidence complement
    std::int64_t d_max = 0;

    double B() const { return c / (1.0 - lambda); }
    double R() const { return (1.0 - lambda) / (c + 1.0 - lambda); }
    void validate() const;
};

struct ScoredEntry {
    double score;
    std::int8_t label;  // +1 target win, -1 decoy win, 0 discarded
    std::uint32_t tag;  // caller-owned payload, preserved through sorting
};

// Sorts by nonincreasing score; runs of equal scores are permuted uniformly
// at random so that ordering carries no information beyond the score.
void sort_scored(std::vector<ScoredEntry>& entries, Rng& rng);

struct CompetitionSequence {
    std::vector<std::int8_t> labels;
    std::vector<double> scores;  // empty when only labels were supplied
    std::vector<std::int64_t> t_prefix;  // T_i, index i-1
    std::vector<std::int64_t> d_prefix;  // D_i, index i-1

    static CompetitionSequence from_labels(const std::vector<int>& labels);
    static CompetitionSequence from_entries(const std::vector<ScoredEntry>& sorted);

    std::int64_t m() const { return static_cast<std::int64_t>(labels.size()); }
    // 1-based prefix counts; k = 0 gives 0.
    std::int64_t targets_at(std::int64_t k) const {
        return k <= 0 ? 0 : t_prefix[static_cast<std::size_t>(k - 1)];
    }
    std::int64_t decoys_at(std::int64_t k) const {
        return k <= 0 ? 0 : d_prefix[static_cast<std::size_t>(k - 1)];
    }
    std::int64_t total_targets() const { return targets_at(m()); }
    std::int64_t total_decoys() const { return decoys_at(m()); }
};

// Stand-in for an unbounded band value; large enough to force the trivial
// bound downstream without overflowing int64 arithmetic.
inline constexpr std::int64_t xi_unbounded =
    std::int64_t{1} << 60;

struct XiBand {
    BandKind kind;
    // xi[d] for d in [0, d_max]; index 0 is meaningful for KR only.
    std::vector<std::int64_t> xi;
    std::int64_t d_max() const { return static_cast<std::int64_t>(xi.size()) - 1; }
};

// C(gamma, B) = -log(gamma) / log(1 + (1 - gamma^B)/B).
double kr_constant(double gamma, double B);

XiBand xi_kr(const BandParams& params);            // floor(C (1 + B d))
XiBand xi_sb(const BandParams& params, double z);  // floor(z sqrt(B(1+B)d) + B d)
XiBand xi_ub(const BandParams& params, double u);  // NB(d,R) quantile at 1-u

// Band of the given kind with quantiles resolved from the tables. KR needs
// no table; SB/UB raise coverage_error when the row is missing.
XiBand make_band(const BandParams& params, BandKind kind, const TableSet* tables,
                 UbMode mode = UbMode::deterministic, Rng* rng = nullptr);

struct FdpBounds {
    std::vector<std::int64_t> vbar;
    std::vector<std::int64_t> gbar;
    std::vector<double> qbar_raw;
    std::vector<double> qbar;
};

FdpBounds vbar_from_xi(const CompetitionSequence& seq, const XiBand& band);
void interpolate(const CompetitionSequence& seq, FdpBounds& bounds);

// vbar_from_xi + interpolate in one call.
FdpBounds compute_bounds(const CompetitionSequence& seq, const XiBand& band);

// d_c = floor(alpha (m+1) / (alpha + B)); never exceeded by D at the AS
// threshold plus one.
std::int64_t dmax_for_fdr(const BandParams& params);

// Largest d0 with xi_{d0} (built with d_max = d0) <= alpha (m - d0 + 1);
// 0 when none. The scan uses the conservative (deterministic) quantile.
std::int64_t dmax_for_fdp(const BandParams& params, BandKind kind,
                          const TableSet* tables);

namespace detail {

// Floor with a small nudge absorbing floating-point noise in values that are
// integers in exact arithmetic.
std::int64_t floor_tol(double x);

}  // namespace detail

}  // namespace fdp
