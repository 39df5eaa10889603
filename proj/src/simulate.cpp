#include "fdp/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace fdp {

void MixtureConfig::validate() const {
    if (m < 1) throw param_error("MixtureConfig: m must be >= 1");
    if (!(pi0 >= 0.0) || !(pi0 <= 1.0))
        throw param_error("MixtureConfig: pi0 must lie in [0,1]");
    if (n_decoys < 1) throw param_error("MixtureConfig: n_decoys must be >= 1");
    if (!(nu > 0.0)) throw param_error("MixtureConfig: nu must be > 0");
}

std::int64_t Dataset::n_nulls() const {
    std::int64_t n = 0;
    for (std::uint8_t f : is_null) n += f;
    return n;
}

Dataset gen_dataset(const MixtureConfig& cfg) {
    cfg.validate();
    Rng rng = Rng::for_stream(cfg.seed, 0x64617461ULL);
    Dataset data;
    data.n_decoys = cfg.n_decoys;
    data.targets.resize(static_cast<std::size_t>(cfg.m));
    data.decoys.resize(static_cast<std::size_t>(cfg.m * cfg.n_decoys));
    data.is_null.resize(static_cast<std::size_t>(cfg.m));
    const auto n_null = static_cast<std::int64_t>(
        std::floor(cfg.pi0 * static_cast<double>(cfg.m)));
    for (std::int64_t i = 0; i < cfg.m; ++i) {
        const bool null_hyp = i < n_null;
        double mu = 0.0, sigma = 1.0, rho = cfg.rho;
        if (!cfg.calibrated) {
            mu = rng.normal();
            sigma = 1.0 + rng.exponential(1.0);
            rho = 1.0 + rng.exponential(cfg.nu);
        }
        data.is_null[static_cast<std::size_t>(i)] = null_hyp ? 1 : 0;
        data.targets[static_cast<std::size_t>(i)] =
            mu + (null_hyp ? 0.0 : rho) + sigma * rng.normal();
        for (int j = 0; j < cfg.n_decoys; ++j)
            data.decoys[static_cast<std::size_t>(i * cfg.n_decoys + j)] =
                mu + sigma * rng.normal();
    }
    return data;
}

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

ExperimentSummary run_experiment(const MixtureConfig& cfg,
                                 const std::vector<double>& alphas,
                                 double gamma,
                                 const std::vector<BandKind>& kinds,
                                 int n_reps, MultiMethod method,
                                 const TableSet* tables, UbMode mode) {
    cfg.validate();
    if (n_reps < 1) throw param_error("run_experiment: n_reps must be >= 1");
    if (alphas.empty()) throw param_error("run_experiment: no alpha levels");
    const double c = method == MultiMethod::max
                         ? 1.0 / static_cast<double>(cfg.n_decoys + 1)
                         : 0.5;

    struct PerRep {
        double fdp = 0.0, discoveries = 0.0, power = 0.0;
        std::map<BandKind, std::pair<double, double>> q;  // (interp, raw)
    };
    std::vector<std::vector<PerRep>> results(
        alphas.size(), std::vector<PerRep>(static_cast<std::size_t>(n_reps)));

    // Bands depend on the rep only through (kind, d_max); cache them.
    std::map<std::pair<BandKind, std::int64_t>, XiBand> band_cache;

    for (int rep = 0; rep < n_reps; ++rep) {
        MixtureConfig rep_cfg = cfg;
        rep_cfg.seed = Rng::for_stream(cfg.seed, static_cast<std::uint64_t>(rep))
                           .next_u64();
        const Dataset data = gen_dataset(rep_cfg);
        Rng rng = Rng::for_stream(rep_cfg.seed, 0x636f6d70ULL);

        std::vector<ScoredEntry> entries;
        entries.reserve(static_cast<std::size_t>(data.m()));
        for (std::int64_t i = 0; i < data.m(); ++i) {
            const LabeledScore ls =
                assign_label_multi(data.targets[static_cast<std::size_t>(i)],
                                   data.decoys_of(i), method,
                                   TiePolicy::random, rng);
            entries.push_back({ls.w, ls.label, static_cast<std::uint32_t>(i)});
        }
        sort_scored(entries, rng);
        const CompetitionSequence seq = CompetitionSequence::from_entries(entries);

        // Prefix counts of true-null and false-null target wins in sorted order.
        const std::int64_t m = seq.m();
        std::vector<std::int64_t> v_prefix(static_cast<std::size_t>(m));
        std::vector<std::int64_t> tp_prefix(static_cast<std::size_t>(m));
        std::int64_t v = 0, tp = 0;
        for (std::int64_t i = 0; i < m; ++i) {
            if (entries[static_cast<std::size_t>(i)].label == 1) {
                if (data.is_null[entries[static_cast<std::size_t>(i)].tag]) ++v;
                else ++tp;
            }
            v_prefix[static_cast<std::size_t>(i)] = v;
            tp_prefix[static_cast<std::size_t>(i)] = tp;
        }
        const std::int64_t n_false = data.m() - data.n_nulls();

        for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
            BandParams params;
            params.c = c;
            params.lambda = c;
            params.m = m;
            params.alpha = alphas[ai];
            params.gamma = gamma;
            const AsResult as = as_threshold(seq, params);
            PerRep& out = results[ai][static_cast<std::size_t>(rep)];
            const std::int64_t t = as.n_discoveries;
            const std::int64_t vk =
                as.k_as == 0 ? 0 : v_prefix[static_cast<std::size_t>(as.k_as - 1)];
            const std::int64_t tpk =
                as.k_as == 0 ? 0 : tp_prefix[static_cast<std::size_t>(as.k_as - 1)];
            out.discoveries = static_cast<double>(t);
            out.fdp = t == 0 ? 0.0
                             : static_cast<double>(vk) / static_cast<double>(t);
            out.power = n_false == 0 ? 0.0
                                     : static_cast<double>(tpk) /
                                           static_cast<double>(n_false);
            for (BandKind kind : kinds) {
                BandParams p = params;
                p.d_max = kind == BandKind::KR ? seq.total_decoys()
                                               : dmax_for_fdr(p);
                XiBand* band = nullptr;
                if (kind == BandKind::KR || mode == UbMode::deterministic) {
                    auto [it, inserted] =
                        band_cache.try_emplace({kind, p.d_max});
                    if (inserted) it->second = make_band(p, kind, tables, mode);
                    band = &it->second;
                }
                XiBand fresh;
                if (band == nullptr) {
                    fresh = make_band(p, kind, tables, mode, &rng);
                    band = &fresh;
                }
                const FdpBounds bounds = compute_bounds(seq, *band);
                double q = 0.0, q_raw = 0.0;
                if (as.k_as > 0 && t > 0) {
                    q = bounds.qbar[static_cast<std::size_t>(as.k_as - 1)];
                    q_raw = bounds.qbar_raw[static_cast<std::size_t>(as.k_as - 1)];
                }
                out.q[kind] = {q, q_raw};
            }
        }
    }

    ExperimentSummary summary;
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        AlphaSummary row;
        row.alpha = alphas[ai];
        std::vector<double> fdp, disc, power;
        for (const PerRep& r : results[ai]) {
            fdp.push_back(r.fdp);
            disc.push_back(r.discoveries);
            power.push_back(r.power);
        }
        row.median_fdp = median(std::move(fdp));
        row.median_discoveries = median(std::move(disc));
        row.median_power = median(std::move(power));
        for (BandKind kind : kinds) {
            KindStats ks;
            std::vector<double> q, q_raw, gain;
            for (const PerRep& r : results[ai]) {
                const auto& [qi, qr] = r.q.at(kind);
                q.push_back(qi);
                q_raw.push_back(qr);
                gain.push_back(qr - qi);
            }
            ks.median_qbar = median(std::move(q));
            ks.median_qbar_raw = median(std::move(q_raw));
            ks.median_gain = median(std::move(gain));
            row.per_kind.emplace_back(kind, ks);
        }
        summary.rows.push_back(std::move(row));
    }
    return summary;
}

namespace {

void csv_row(std::ostream& out, double alpha, const std::string& kind,
             const std::string& stat, double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    char abuf[64];
    std::snprintf(abuf, sizeof(abuf), "%.17g", alpha);
    out << abuf << ',' << kind << ',' << stat << ',' << buf << '\n';
}

}  // namespace

void ExperimentSummary::write_csv(std::ostream& out,
                                  const std::string& comment) const {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "alpha,kind,statistic,value\n";
    for (const AlphaSummary& row : rows) {
        csv_row(out, row.alpha, "as", "median_fdp", row.median_fdp);
        csv_row(out, row.alpha, "as", "median_discoveries",
                row.median_discoveries);
        csv_row(out, row.alpha, "as", "median_power", row.median_power);
        for (const auto& [kind, ks] : row.per_kind) {
            std::string k = to_string(kind);
            std::transform(k.begin(), k.end(), k.begin(),
                           [](unsigned char ch) { return std::tolower(ch); });
            csv_row(out, row.alpha, k, "median_qbar", ks.median_qbar);
            csv_row(out, row.alpha, k, "median_qbar_raw", ks.median_qbar_raw);
            csv_row(out, row.alpha, k, "median_interp_gain", ks.median_gain);
        }
    }
}

}  // namespace fdp
