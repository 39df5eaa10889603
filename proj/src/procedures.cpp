#include "fdp/procedures.hpp"

#include <algorithm>
#include <cmath>

namespace fdp {

AsResult as_threshold(const CompetitionSequence& seq, const BandParams& params) {
    params.validate();
    const double B = params.B();
    AsResult res;
    for (std::int64_t k = 1; k <= seq.m(); ++k) {
        const std::int64_t t = seq.targets_at(k);
        if (t == 0) continue;
        const double ratio =
            static_cast<double>(seq.decoys_at(k) + 1) / static_cast<double>(t) * B;
        if (ratio <= params.alpha) {
            res.k_as = k;
            res.n_discoveries = t;
        }
    }
    return res;
}

namespace {

DecisionReport report_at(const CompetitionSequence& seq, std::int64_t k,
                         const FdpBounds& bounds, BandKind kind,
                         std::int64_t d_max_used) {
    DecisionReport rep;
    rep.kind = kind;
    rep.d_max_used = d_max_used;
    rep.k_threshold = k;
    if (k == 0) return rep;
    rep.n_discoveries = seq.targets_at(k);
    if (rep.n_discoveries == 0) return rep;
    rep.q_bound = bounds.qbar[static_cast<std::size_t>(k - 1)];
    rep.q_bound_raw = bounds.qbar_raw[static_cast<std::size_t>(k - 1)];
    return rep;
}

}  // namespace

DecisionReport tdc_bound(const CompetitionSequence& seq, std::int64_t tau,
                         const BandParams& params, BandKind kind,
                         const TableSet* tables, UbMode mode, Rng* rng) {
    params.validate();
    if (tau < 0 || tau > seq.m())
        throw param_error("tdc_bound: tau outside [0, m]");
    if (tau == 0)
        return DecisionReport{0, 0, 0.0, 0.0, kind, 0};
    BandParams p = params;
    p.m = seq.m();
    p.d_max = kind == BandKind::KR ? seq.total_decoys() : dmax_for_fdr(p);
    const XiBand band = make_band(p, kind, tables, mode, rng);
    const FdpBounds bounds = compute_bounds(seq, band);
    return report_at(seq, tau, bounds, kind, p.d_max);
}

DecisionReport fdp_control_threshold(const CompetitionSequence& seq,
                                     const BandParams& params, BandKind kind,
                                     const TableSet* tables, UbMode mode,
                                     Rng* rng) {
    params.validate();
    BandParams p = params;
    p.m = seq.m();
    p.d_max = kind == BandKind::KR ? seq.total_decoys()
                                   : dmax_for_fdp(p, kind, tables);
    const XiBand band = make_band(p, kind, tables, mode, rng);
    const FdpBounds bounds = compute_bounds(seq, band);
    std::int64_t k0 = 0;
    for (std::int64_t i = 1; i <= seq.m(); ++i) {
        if (seq.labels[static_cast<std::size_t>(i - 1)] == 1 &&
            bounds.qbar[static_cast<std::size_t>(i - 1)] <= params.alpha)
            k0 = i;
    }
    return report_at(seq, k0, bounds, kind, p.d_max);
}

LabeledScore assign_label_multi(double target, std::span<const double> decoys,
                                MultiMethod method, TiePolicy policy, Rng& rng) {
    const std::int64_t d = static_cast<std::int64_t>(decoys.size());
    if (d < 1) throw param_error("assign_label_multi: need at least one decoy");
    if (method == MultiMethod::mirror && d != 1)
        throw param_error("assign_label_multi: mirror supports a single decoy "
                          "only (winning-score assignment for d > 1 is out of "
                          "scope)");
    const double c = method == MultiMethod::max
                         ? 1.0 / static_cast<double>(d + 1)
                         : 0.5;
    const double lambda = c;

    std::int64_t n_greater = 0, n_equal = 0;
    double w = target;
    for (double z : decoys) {
        if (z > target) ++n_greater;
        else if (z == target) ++n_equal;
        w = std::max(w, z);
    }

    LabeledScore out{w, 0};
    if (n_equal > 0 && policy == TiePolicy::discard) return out;  // label 0

    std::int64_t tie_rank = n_equal;  // conservative: count ties against the target
    if (n_equal > 0 && policy == TiePolicy::random)
        tie_rank = static_cast<std::int64_t>(
            rng.below(static_cast<std::uint64_t>(n_equal + 1)));
    const double p = static_cast<double>(1 + n_greater + tie_rank) /
                     static_cast<double>(d + 1);

    if (p <= c) out.label = 1;
    else if (p > lambda) out.label = -1;
    return out;
}

LabeledScore assign_label_multi(const MultiDecoyInput& input, Rng& rng) {
    return assign_label_multi(input.target_score, input.decoy_scores,
                              input.method, input.tie_policy, rng);
}

}  // namespace fdp
