#include "fdp/mcquant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fdp {

void SimConfig::validate() const {
    if (n_paths < 1) throw param_error("SimConfig: n_paths must be >= 1");
    if (d_ceiling < 1) throw param_error("SimConfig: d_ceiling must be >= 1");
    if (!(R > 0.0) || !(R < 1.0))
        throw param_error("SimConfig: R must lie in (0,1)");
    if (gammas.empty()) throw param_error("SimConfig: gammas must be nonempty");
    for (double g : gammas) {
        if (!(g > 0.0) || !(g < 1.0))
            throw param_error("SimConfig: gamma must lie in (0,1), got " +
                              std::to_string(g));
    }
    for (std::size_t i = 0; i < gammas.size(); ++i)
        for (std::size_t j = i + 1; j < gammas.size(); ++j)
            if (gammas[i] == gammas[j])
                throw param_error("SimConfig: duplicate gamma " +
                                  std::to_string(gammas[i]));
}

std::optional<PathState::DecoyWin> PathState::step(bool decoy_win) {
    std::optional<DecoyWin> out;
    if (decoy_win) {
        // State still excludes this trial: trials = i_d - 1 and
        // decoy_wins = d - 1, so binom_cdf = P(Bin(i_d - 1, R) <= d-1)
        // = P(NB(d, R) >= U_d).
        DecoyWin w;
        w.d = decoy_wins + 1;
        w.u = target_wins;
        const double dd = static_cast<double>(w.d);
        w.std_val = (static_cast<double>(w.u) - B * dd) /
                    std::sqrt(B * (1.0 + B) * dd);
        w.unif_val = binom_cdf;
        w.new_max_std = (w.d == 1) || (w.std_val > max_std);
        if (w.new_max_std) max_std = w.std_val;
        w.new_min_unif = w.unif_val < min_unif;
        if (w.new_min_unif) min_unif = w.unif_val;
        out = w;
    }
    // Fold the trial into the binomial state: first n -> n+1 at fixed k,
    // then k -> k+1 if this trial was a decoy win.
    const double n_new = static_cast<double>(trials + 1);
    const double k_cur = static_cast<double>(decoy_wins);
    binom_cdf = std::max(0.0, binom_cdf - R * binom_pmf);
    binom_pmf *= (1.0 - R) * n_new / (n_new - k_cur);
    ++trials;
    if (decoy_win) {
        binom_pmf *= (R / (1.0 - R)) * (n_new - k_cur) / (k_cur + 1.0);
        binom_cdf = std::min(1.0, binom_cdf + binom_pmf);
        ++decoy_wins;
    } else {
        ++target_wins;
    }
    return out;
}

namespace {

// Fenwick tree over value ranks supporting point updates, prefix sums and
// k-th smallest selection.
class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}

    void add(std::size_t rank, std::int64_t delta) {
        for (std::size_t i = rank + 1; i < tree_.size(); i += i & (~i + 1))
            tree_[i] += delta;
    }

    std::int64_t prefix(std::size_t rank) const {  // count of values <= rank
        std::int64_t s = 0;
        for (std::size_t i = rank + 1; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

    std::int64_t count_at(std::size_t rank) const {
        return prefix(rank) - (rank == 0 ? 0 : prefix(rank - 1));
    }

    // Smallest rank whose prefix sum reaches k (k >= 1).
    std::size_t select(std::int64_t k) const {
        std::size_t pos = 0;
        std::size_t mask = 1;
        while ((mask << 1) < tree_.size()) mask <<= 1;
        std::int64_t remaining = k;
        for (; mask > 0; mask >>= 1) {
            const std::size_t next = pos + mask;
            if (next < tree_.size() && tree_[next] < remaining) {
                remaining -= tree_[next];
                pos = next;
            }
        }
        return pos;  // 0-based rank
    }

private:
    std::vector<std::int64_t> tree_;
};

struct Record {
    std::int32_t d;
    std::int32_t path;
    double value;
};

std::size_t rank_of(const std::vector<double>& values, double v) {
    return static_cast<std::size_t>(
        std::lower_bound(values.begin(), values.end(), v) - values.begin());
}

// Count threshold for "mass <= gamma": the largest integer c with
// c/N <= gamma, robust to the product rounding.
std::int64_t gamma_count(double gamma, std::int64_t n) {
    return static_cast<std::int64_t>(
        std::floor(gamma * static_cast<double>(n) + 1e-6));
}

// Rank of the empirical 1-gamma quantile, ceil((1-gamma) N), in [1, N].
std::int64_t sb_rank(double gamma, std::int64_t n) {
    const double t = (1.0 - gamma) * static_cast<double>(n);
    auto k = static_cast<std::int64_t>(std::ceil(t - 1e-6));
    return std::clamp<std::int64_t>(k, 1, n);
}

}  // namespace

std::pair<QuantileTable, QuantileTable> build_tables(const SimConfig& cfg) {
    cfg.validate();
    const std::int64_t n = cfg.n_paths;
    const std::int64_t d0 = cfg.d_ceiling;

    std::vector<Record> recs_sb, recs_ub;
    for (std::int64_t j = 0; j < n; ++j) {
        Rng rng = Rng::for_stream(cfg.seed, static_cast<std::uint64_t>(j));
        PathState st(cfg.R);
        while (st.decoy_wins < d0) {
            auto e = st.step(rng.bernoulli(cfg.R));
            if (!e) continue;
            if (e->new_max_std)
                recs_sb.push_back({static_cast<std::int32_t>(e->d),
                                   static_cast<std::int32_t>(j), e->std_val});
            if (e->new_min_unif)
                recs_ub.push_back({static_cast<std::int32_t>(e->d),
                                   static_cast<std::int32_t>(j), e->unif_val});
        }
    }

    QuantileTable sb, ub;
    sb.kind = BandKind::SB;
    ub.kind = BandKind::UB;
    for (QuantileTable* t : {&sb, &ub}) {
        t->R = cfg.R;
        t->seed = cfg.seed;
        t->n_paths = n;
        t->d_ceiling = d0;
        t->gammas = cfg.gammas;
    }
    const std::size_t ng = cfg.gammas.size();
    sb.sb_rows.assign(ng, std::vector<SbRow>(static_cast<std::size_t>(d0)));
    ub.ub_rows.assign(ng, std::vector<UbRow>(static_cast<std::size_t>(d0)));

    // Sweep d = 1..d0, maintaining the cross-path multiset of cumulative
    // extrema in a Fenwick tree keyed by value rank.
    auto bucket_by_d = [d0](std::vector<Record>& recs) {
        std::vector<std::vector<Record>> buckets(static_cast<std::size_t>(d0) + 1);
        for (const Record& r : recs) buckets[static_cast<std::size_t>(r.d)].push_back(r);
        recs.clear();
        recs.shrink_to_fit();
        return buckets;
    };

    {  // SB: per-d order statistic at rank ceil((1-gamma) N).
        std::vector<double> values;
        values.reserve(recs_sb.size());
        for (const Record& r : recs_sb) values.push_back(r.value);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        auto buckets = bucket_by_d(recs_sb);
        Fenwick fen(values.size());
        std::vector<std::int64_t> cur(static_cast<std::size_t>(n), -1);
        for (std::int64_t d = 1; d <= d0; ++d) {
            for (const Record& r : buckets[static_cast<std::size_t>(d)]) {
                const auto rk = static_cast<std::int64_t>(rank_of(values, r.value));
                auto& c = cur[static_cast<std::size_t>(r.path)];
                if (c >= 0) fen.add(static_cast<std::size_t>(c), -1);
                fen.add(static_cast<std::size_t>(rk), +1);
                c = rk;
            }
            for (std::size_t gi = 0; gi < ng; ++gi) {
                const std::int64_t k = sb_rank(cfg.gammas[gi], n);
                sb.sb_rows[gi][static_cast<std::size_t>(d - 1)].z =
                    values[fen.select(k)];
            }
        }
    }

    {  // UB: per-d straddling pair around the gamma quantile of the minima.
        std::vector<double> values;
        values.reserve(recs_ub.size() + 1);
        for (const Record& r : recs_ub) values.push_back(r.value);
        values.push_back(1.0);  // initial cumulative minimum
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        auto buckets = bucket_by_d(recs_ub);
        Fenwick fen(values.size());
        const auto rank_one = static_cast<std::int64_t>(rank_of(values, 1.0));
        fen.add(static_cast<std::size_t>(rank_one), n);
        std::vector<std::int64_t> cur(static_cast<std::size_t>(n), rank_one);
        for (std::int64_t d = 1; d <= d0; ++d) {
            for (const Record& r : buckets[static_cast<std::size_t>(d)]) {
                const auto rk = static_cast<std::int64_t>(rank_of(values, r.value));
                auto& c = cur[static_cast<std::size_t>(r.path)];
                fen.add(static_cast<std::size_t>(c), -1);
                fen.add(static_cast<std::size_t>(rk), +1);
                c = rk;
            }
            for (std::size_t gi = 0; gi < ng; ++gi) {
                UbRow row;
                const std::int64_t thr = gamma_count(cfg.gammas[gi], n);
                bool degenerate = thr == 0;
                std::size_t sigma_rank = 0;
                if (!degenerate) {
                    const std::size_t rx = fen.select(thr);
                    const std::int64_t cx = fen.prefix(rx);
                    if (cx == thr) {
                        row.rho = values[rx];
                        row.r = static_cast<double>(cx) / static_cast<double>(n);
                        sigma_rank = fen.select(thr + 1);
                    } else {
                        const std::int64_t c_prev = cx - fen.count_at(rx);
                        if (c_prev == 0) {
                            degenerate = true;
                        } else {
                            row.rho = values[fen.select(c_prev)];
                            row.r = static_cast<double>(c_prev) /
                                    static_cast<double>(n);
                            sigma_rank = rx;
                        }
                    }
                }
                if (degenerate) {
                    row.rho = 0.0;
                    row.r = 0.0;
                    sigma_rank = fen.select(1);
                }
                row.sigma = values[sigma_rank];
                row.s = static_cast<double>(fen.prefix(sigma_rank)) /
                        static_cast<double>(n);
                ub.ub_rows[gi][static_cast<std::size_t>(d - 1)] = row;
            }
        }
    }

    return {std::move(sb), std::move(ub)};
}

int QuantileTable::gamma_index(double gamma) const {
    for (std::size_t i = 0; i < gammas.size(); ++i)
        if (std::fabs(gammas[i] - gamma) <= 1e-9) return static_cast<int>(i);
    return -1;
}

void QuantileTable::require_R(double expected_R) const {
    if (std::fabs(R - expected_R) > 1e-9)
        throw coverage_error("quantile table calibrated for R=" +
                             std::to_string(R) + " but analysis requires R=" +
                             std::to_string(expected_R));
}

void QuantileTable::validate() const {
    if (kind == BandKind::KR)
        throw param_error("QuantileTable: kind must be SB or UB");
    if (!(R > 0.0) || !(R < 1.0))
        throw param_error("QuantileTable: R must lie in (0,1)");
    if (d_ceiling < 1) throw param_error("QuantileTable: empty table");
    const auto ng = gammas.size();
    const auto nd = static_cast<std::size_t>(d_ceiling);
    for (double g : gammas)
        if (!(g > 0.0) || !(g < 1.0))
            throw param_error("QuantileTable: gamma outside (0,1)");
    if (kind == BandKind::SB) {
        if (sb_rows.size() != ng || !ub_rows.empty())
            throw param_error("QuantileTable: SB row shape mismatch");
        for (const auto& per_gamma : sb_rows) {
            if (per_gamma.size() != nd)
                throw param_error("QuantileTable: SB row count mismatch");
            for (const SbRow& r : per_gamma)
                if (!std::isfinite(r.z))
                    throw param_error("QuantileTable: non-finite z");
        }
    } else {
        if (ub_rows.size() != ng || !sb_rows.empty())
            throw param_error("QuantileTable: UB row shape mismatch");
        for (std::size_t gi = 0; gi < ng; ++gi) {
            if (ub_rows[gi].size() != nd)
                throw param_error("QuantileTable: UB row count mismatch");
            for (const UbRow& r : ub_rows[gi]) {
                if (!(r.rho < r.sigma) || r.r < 0.0 || r.s > 1.0 ||
                    r.r > gammas[gi] + 1e-9 || r.s <= gammas[gi] - 1e-9)
                    throw param_error("QuantileTable: UB row violates rho<sigma, r<=gamma<s");
            }
        }
    }
}

double lookup_sb_z(const QuantileTable& table, double gamma, std::int64_t d_max) {
    if (table.kind != BandKind::SB)
        throw param_error("lookup_sb_z: table kind is not SB");
    const int gi = table.gamma_index(gamma);
    if (gi < 0 || d_max < 1 || d_max > table.d_ceiling)
        throw missing_row_error("SB", gamma, d_max, table.R);
    return table.sb_rows[static_cast<std::size_t>(gi)]
                        [static_cast<std::size_t>(d_max - 1)].z;
}

double lookup_ub_u(const QuantileTable& table, double gamma, std::int64_t d_max,
                   UbMode mode, Rng* rng) {
    if (table.kind != BandKind::UB)
        throw param_error("lookup_ub_u: table kind is not UB");
    const int gi = table.gamma_index(gamma);
    if (gi < 0 || d_max < 1 || d_max > table.d_ceiling)
        throw missing_row_error("UB", gamma, d_max, table.R);
    const UbRow& row = table.ub_rows[static_cast<std::size_t>(gi)]
                                    [static_cast<std::size_t>(d_max - 1)];
    if (mode == UbMode::deterministic) return row.rho;
    if (rng == nullptr)
        throw param_error("lookup_ub_u: randomized mode requires an rng");
    // Mixture weight chosen so that w*r + (1-w)*s = gamma.
    const double w = (row.s - gamma) / (row.s - row.r);
    return rng->uniform() < w ? row.rho : row.sigma;
}

const QuantileTable& TableSet::require(BandKind kind, double gamma,
                                       std::int64_t d_max, double R) const {
    const std::optional<QuantileTable>* slot = nullptr;
    if (kind == BandKind::SB) slot = &sb;
    else if (kind == BandKind::UB) slot = &ub;
    else throw param_error("TableSet::require: KR needs no table");
    if (!slot->has_value())
        throw missing_row_error(to_string(kind), gamma, d_max, R);
    (*slot)->require_R(R);
    return **slot;
}

}  // namespace fdp
