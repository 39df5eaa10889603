#include "fdp/bands.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fdp {

void BandParams::validate() const {
    if (!(c > 0.0) || !(c <= lambda) || !(lambda < 1.0))
        throw param_error("BandParams: need 0 < c <= lambda < 1");
    if (!(alpha > 0.0) || !(alpha < 1.0))
        throw param_error("BandParams: alpha must lie in (0,1)");
    if (!(gamma > 0.0) || !(gamma < 1.0))
        throw param_error("BandParams: gamma must lie in (0,1)");
    if (m < 0) throw param_error("BandParams: m must be >= 0");
    if (d_max < 0 || d_max > m)
        throw param_error("BandParams: d_max must lie in [0, m]");
}

namespace detail {

std::int64_t floor_tol(double x) {
    const double nudged = x + 1e-9 + 1e-12 * std::fabs(x);
    const double f = std::floor(nudged);
    if (f >= static_cast<double>(xi_unbounded)) return xi_unbounded;
    // Band values and index bounds are counts; a negative band value carries
    // no information beyond 0.
    if (f < 0.0) return 0;
    return static_cast<std::int64_t>(f);
}

}  // namespace detail

void sort_scored(std::vector<ScoredEntry>& entries, Rng& rng) {
    std::vector<std::size_t> idx(entries.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (entries[a].score != entries[b].score)
            return entries[a].score > entries[b].score;
        return a < b;
    });
    // Uniformly permute each run of equal scores.
    std::size_t lo = 0;
    while (lo < idx.size()) {
        std::size_t hi = lo + 1;
        while (hi < idx.size() &&
               entries[idx[hi]].score == entries[idx[lo]].score)
            ++hi;
        for (std::size_t i = hi - 1; i > lo; --i) {
            const std::size_t j = lo + static_cast<std::size_t>(rng.below(i - lo + 1));
            std::swap(idx[i], idx[j]);
        }
        lo = hi;
    }
    std::vector<ScoredEntry> sorted;
    sorted.reserve(entries.size());
    for (std::size_t i : idx) sorted.push_back(entries[i]);
    entries = std::move(sorted);
}

namespace {

void fill_tallies(CompetitionSequence& seq) {
    const std::size_t m = seq.labels.size();
    seq.t_prefix.resize(m);
    seq.d_prefix.resize(m);
    std::int64_t t = 0, d = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (seq.labels[i] == 1) ++t;
        else if (seq.labels[i] == -1) ++d;
        seq.t_prefix[i] = t;
        seq.d_prefix[i] = d;
    }
}

}  // namespace

CompetitionSequence CompetitionSequence::from_labels(const std::vector<int>& labels) {
    CompetitionSequence seq;
    seq.labels.reserve(labels.size());
    for (int v : labels) {
        if (v != 1 && v != -1 && v != 0)
            throw param_error("label must be one of {1,-1,0}, got " +
                              std::to_string(v));
        seq.labels.push_back(static_cast<std::int8_t>(v));
    }
    fill_tallies(seq);
    return seq;
}

CompetitionSequence CompetitionSequence::from_entries(
    const std::vector<ScoredEntry>& sorted) {
    CompetitionSequence seq;
    seq.labels.reserve(sorted.size());
    seq.scores.reserve(sorted.size());
    for (const ScoredEntry& e : sorted) {
        if (e.label != 1 && e.label != -1 && e.label != 0)
            throw param_error("label must be one of {1,-1,0}");
        seq.labels.push_back(e.label);
        seq.scores.push_back(e.score);
    }
    for (std::size_t i = 1; i < seq.scores.size(); ++i)
        if (seq.scores[i] > seq.scores[i - 1])
            throw param_error("scores must be nonincreasing");
    fill_tallies(seq);
    return seq;
}

double kr_constant(double gamma, double B) {
    return -std::log(gamma) / std::log1p((1.0 - std::pow(gamma, B)) / B);
}

XiBand xi_kr(const BandParams& params) {
    params.validate();
    const double C = kr_constant(params.gamma, params.B());
    XiBand band{BandKind::KR, {}};
    band.xi.reserve(static_cast<std::size_t>(params.d_max) + 1);
    for (std::int64_t d = 0; d <= params.d_max; ++d)
        band.xi.push_back(detail::floor_tol(
            C * (1.0 + params.B() * static_cast<double>(d))));
    return band;
}

XiBand xi_sb(const BandParams& params, double z) {
    params.validate();
    const double B = params.B();
    XiBand band{BandKind::SB, {0}};
    band.xi.reserve(static_cast<std::size_t>(params.d_max) + 1);
    for (std::int64_t d = 1; d <= params.d_max; ++d) {
        const double dd = static_cast<double>(d);
        band.xi.push_back(detail::floor_tol(
            z * std::sqrt(B * (1.0 + B) * dd) + B * dd));
    }
    return band;
}

XiBand xi_ub(const BandParams& params, double u) {
    params.validate();
    const double R = params.R();
    XiBand band{BandKind::UB, {0}};
    band.xi.reserve(static_cast<std::size_t>(params.d_max) + 1);
    for (std::int64_t d = 1; d <= params.d_max; ++d) {
        std::int64_t xi;
        if (u <= 0.0) {
            xi = xi_unbounded;  // degenerate table row: no information
        } else if (u >= 1.0) {
            xi = 0;
        } else {
            xi = nb_quantile(NegBinSpec{d, R}, 1.0 - u);
        }
        band.xi.push_back(xi);
    }
    return band;
}

XiBand make_band(const BandParams& params, BandKind kind, const TableSet* tables,
                 UbMode mode, Rng* rng) {
    if (kind == BandKind::KR) return xi_kr(params);
    if (params.d_max == 0) return XiBand{kind, {0}};
    if (tables == nullptr)
        throw missing_row_error(to_string(kind), params.gamma, params.d_max,
                                params.R());
    const QuantileTable& table =
        tables->require(kind, params.gamma, params.d_max, params.R());
    if (kind == BandKind::SB)
        return xi_sb(params, lookup_sb_z(table, params.gamma, params.d_max));
    return xi_ub(params, lookup_ub_u(table, params.gamma, params.d_max, mode, rng));
}

FdpBounds vbar_from_xi(const CompetitionSequence& seq, const XiBand& band) {
    FdpBounds bounds;
    const std::int64_t m = seq.m();
    const std::int64_t d_max = band.d_max();
    bounds.vbar.resize(static_cast<std::size_t>(m));
    for (std::int64_t i = 1; i <= m; ++i) {
        const std::int8_t label = seq.labels[static_cast<std::size_t>(i - 1)];
        const std::int64_t di = seq.decoys_at(i);
        const std::int64_t ti = seq.targets_at(i);
        std::int64_t v;
        if (band.kind == BandKind::KR) {
            // The KR band bounds V_i directly at d = D_i, whatever the label.
            v = di <= d_max ? band.xi[static_cast<std::size_t>(di)] : ti;
        } else if (label == -1 && di >= 1 && di <= d_max) {
            v = band.xi[static_cast<std::size_t>(di)];
        } else if (label == 1 && di + 1 <= d_max) {
            v = band.xi[static_cast<std::size_t>(di + 1)];
        } else {
            v = ti;
        }
        bounds.vbar[static_cast<std::size_t>(i - 1)] = v;
    }
    return bounds;
}

void interpolate(const CompetitionSequence& seq, FdpBounds& bounds) {
    const std::int64_t m = seq.m();
    bounds.gbar.resize(static_cast<std::size_t>(m));
    bounds.qbar_raw.resize(static_cast<std::size_t>(m));
    bounds.qbar.resize(static_cast<std::size_t>(m));
    std::int64_t g = 0;
    for (std::int64_t i = 1; i <= m; ++i) {
        const std::size_t ix = static_cast<std::size_t>(i - 1);
        const std::int64_t ti = seq.targets_at(i);
        g = std::max(g, ti - bounds.vbar[ix]);
        bounds.gbar[ix] = g;
        const double denom = static_cast<double>(std::max<std::int64_t>(ti, 1));
        bounds.qbar_raw[ix] =
            std::min(1.0, static_cast<double>(bounds.vbar[ix]) / denom);
        bounds.qbar[ix] =
            std::min(1.0, static_cast<double>(ti - g) / denom);
    }
}

FdpBounds compute_bounds(const CompetitionSequence& seq, const XiBand& band) {
    FdpBounds bounds = vbar_from_xi(seq, band);
    interpolate(seq, bounds);
    return bounds;
}

std::int64_t dmax_for_fdr(const BandParams& params) {
    params.validate();
    const double d_c = params.alpha * static_cast<double>(params.m + 1) /
                       (params.alpha + params.B());
    return std::max<std::int64_t>(0, detail::floor_tol(d_c));
}

namespace {

// Band value xi_{d0} of a band built with d_max = d0, as a scalar.
std::int64_t self_xi(const BandParams& params, BandKind kind,
                     const TableSet* tables, std::int64_t d0) {
    switch (kind) {
        case BandKind::KR:
            return detail::floor_tol(
                kr_constant(params.gamma, params.B()) *
                (1.0 + params.B() * static_cast<double>(d0)));
        case BandKind::SB: {
            const QuantileTable& t =
                tables->require(BandKind::SB, params.gamma, d0, params.R());
            const double z = lookup_sb_z(t, params.gamma, d0);
            const double dd = static_cast<double>(d0);
            return detail::floor_tol(
                z * std::sqrt(params.B() * (1.0 + params.B()) * dd) +
                params.B() * dd);
        }
        case BandKind::UB: {
            const QuantileTable& t =
                tables->require(BandKind::UB, params.gamma, d0, params.R());
            const double u =
                lookup_ub_u(t, params.gamma, d0, UbMode::deterministic);
            if (u <= 0.0) return xi_unbounded;
            if (u >= 1.0) return 0;
            return nb_quantile(NegBinSpec{d0, params.R()}, 1.0 - u);
        }
    }
    throw param_error("self_xi: bad kind");
}

}  // namespace

std::int64_t dmax_for_fdp(const BandParams& params, BandKind kind,
                          const TableSet* tables) {
    params.validate();
    if (params.m == 0) return 0;
    std::int64_t hi = params.m;
    if (kind != BandKind::SB && kind != BandKind::UB) {
        // KR is available at every d.
    } else {
        if (tables == nullptr)
            throw missing_row_error(to_string(kind), params.gamma, params.m,
                                    params.R());
        const QuantileTable& t =
            tables->require(kind, params.gamma, 1, params.R());
        hi = std::min(hi, t.d_ceiling);
    }
    for (std::int64_t d0 = hi; d0 >= 1; --d0) {
        const std::int64_t xi = self_xi(params, kind, tables, d0);
        const double bound =
            params.alpha * static_cast<double>(params.m - d0 + 1);
        if (static_cast<double>(xi) <= bound) {
            if (d0 == hi && hi < params.m)
                throw coverage_error(
                    "d_max scan for " + std::string(to_string(kind)) +
                    " still satisfied at the table ceiling " +
                    std::to_string(hi) + " < m=" + std::to_string(params.m) +
                    "; calibrate a larger table");
            return d0;
        }
    }
    return 0;
}

}  // namespace fdp
