// fdpbands: competition-based FDR control with simultaneous upper prediction
// bounds on the false discovery proportion.
//
// Subcommands: bounds, control, tables, compare, simulate.
// Exit codes: 0 success, 2 parse/validation error, 3 quantile-table coverage
// error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fdp/bands.hpp"
#include "fdp/mcquant.hpp"
#include "fdp/procedures.hpp"
#include "fdp/simulate.hpp"

using nlohmann::json;

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Input parsing: tab- or comma-separated, optional header. One `label`
// column, a `score,label` pair, or `target,decoy1..decoyd` in multi-decoy
// mode.

std::vector<std::string> split_fields(const std::string& line) {
    const char delim = line.find('\t') != std::string::npos ? '\t' : ',';
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == delim) {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    for (std::string& f : out) {
        while (!f.empty() && (f.front() == ' ')) f.erase(f.begin());
        while (!f.empty() && (f.back() == ' ')) f.pop_back();
    }
    return out;
}

bool parse_number(const std::string& s, double& out) {
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end != s.c_str() && *end == '\0' && !s.empty();
}

double parse_score(const std::string& s, const std::string& what) {
    double v;
    if (!parse_number(s, v) || !std::isfinite(v))
        throw fdp::param_error("bad " + what + " '" + s + "'");
    return v;
}

int parse_label(const std::string& s) {
    double v;
    if (!parse_number(s, v) || v != std::floor(v) ||
        (v != 1.0 && v != -1.0 && v != 0.0))
        throw fdp::param_error("bad label '" + s + "': expected 1, -1 or 0");
    return static_cast<int>(v);
}

struct InputData {
    std::vector<int> labels;          // label-only mode
    std::vector<double> scores;       // parallel to labels when present
    std::vector<double> targets;      // multi-decoy mode
    std::vector<double> decoys;       // m * n_decoys
    int n_decoys = 0;
    bool has_scores = false;

    std::int64_t m() const {
        return n_decoys > 0 ? static_cast<std::int64_t>(targets.size())
                            : static_cast<std::int64_t>(labels.size());
    }
    std::span<const double> decoys_of(std::int64_t i) const {
        return {decoys.data() + i * n_decoys, static_cast<std::size_t>(n_decoys)};
    }
};

InputData read_input(const std::string& path, int n_decoys) {
    std::ifstream in(path);
    if (!in) throw fdp::param_error("cannot read input file '" + path + "'");
    InputData data;
    data.n_decoys = n_decoys;

    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    std::vector<std::string> header;
    std::size_t arity = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (first) {
            first = false;
            bool numeric = true;
            for (const std::string& f : fields) {
                double v;
                numeric = numeric && parse_number(f, v);
            }
            if (!numeric) {
                header = fields;
                arity = fields.size();
                continue;
            }
            arity = fields.size();
        }
        if (fields.size() != arity)
            throw fdp::param_error("inconsistent column count in '" + path +
                                   "': expected " + std::to_string(arity) +
                                   ", got " + std::to_string(fields.size()));
        rows.push_back(std::move(fields));
    }

    auto column_of = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < header.size(); ++i) {
            std::string h = header[i];
            for (char& ch : h) ch = static_cast<char>(std::tolower(ch));
            if (h == name) return static_cast<int>(i);
        }
        return -1;
    };

    if (n_decoys > 0) {
        int target_col = 0;
        std::vector<int> decoy_cols;
        if (!header.empty()) {
            target_col = column_of("target");
            if (target_col < 0)
                throw fdp::param_error("input header lacks a 'target' column");
            for (int j = 1; j <= n_decoys; ++j) {
                const int col = column_of("decoy" + std::to_string(j));
                if (col < 0)
                    throw fdp::param_error("input header lacks column 'decoy" +
                                           std::to_string(j) + "'");
                decoy_cols.push_back(col);
            }
        } else {
            for (int j = 1; j <= n_decoys; ++j) decoy_cols.push_back(j);
        }
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) < n_decoys + 1)
                throw fdp::param_error("expected " + std::to_string(n_decoys + 1) +
                                       " columns per row");
            data.targets.push_back(parse_score(
                row[static_cast<std::size_t>(target_col)], "target score"));
            for (int col : decoy_cols)
                data.decoys.push_back(
                    parse_score(row[static_cast<std::size_t>(col)], "decoy score"));
        }
        return data;
    }

    int label_col = -1, score_col = -1;
    if (!header.empty()) {
        label_col = column_of("label");
        score_col = column_of("score");
        if (label_col < 0)
            throw fdp::param_error("input header lacks a 'label' column");
    }
    for (const auto& row : rows) {
        if (row.size() == 1 && header.empty()) {
            data.labels.push_back(parse_label(row[0]));
        } else if (row.size() >= 2 && header.empty()) {
            data.scores.push_back(parse_score(row[0], "score"));
            data.labels.push_back(parse_label(row[1]));
            data.has_scores = true;
        } else {
            data.labels.push_back(
                parse_label(row[static_cast<std::size_t>(label_col)]));
            if (score_col >= 0) {
                data.scores.push_back(parse_score(
                    row[static_cast<std::size_t>(score_col)], "score"));
                data.has_scores = true;
            }
        }
    }
    return data;
}

// ---------------------------------------------------------------------------
// Shared command state.

struct CommonOpts {
    double alpha = 0.05;
    double gamma = 0.05;
    double c = 0.5;
    double lambda = 0.5;
    std::string kind = "all";
    bool kr_only = false;
    std::string mode = "det";
    std::string table_path;
    std::optional<std::uint64_t> seed;
    int n_decoys = 0;
    std::string method = "max";
};

std::vector<fdp::BandKind> kinds_of(const CommonOpts& o) {
    if (o.kr_only || o.kind == "kr") return {fdp::BandKind::KR};
    if (o.kind == "sb") return {fdp::BandKind::SB};
    if (o.kind == "ub") return {fdp::BandKind::UB};
    if (o.kind == "all")
        return {fdp::BandKind::SB, fdp::BandKind::UB, fdp::BandKind::KR};
    throw fdp::param_error("--kind must be one of kr, sb, ub, all");
}

bool needs_tables(const std::vector<fdp::BandKind>& kinds) {
    for (fdp::BandKind k : kinds)
        if (k != fdp::BandKind::KR) return true;
    return false;
}

fdp::UbMode mode_of(const CommonOpts& o) {
    if (o.mode == "det") return fdp::UbMode::deterministic;
    if (o.mode == "rand") return fdp::UbMode::randomized;
    throw fdp::param_error("--mode must be det or rand");
}

std::string kind_key(fdp::BandKind k) {
    std::string key = fdp::to_string(k);
    for (char& ch : key) ch = static_cast<char>(std::tolower(ch));
    return key;
}

std::uint64_t resolve_seed(CommonOpts& o) {
    if (!o.seed) {
        std::random_device rd;
        o.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::fprintf(stderr, "seed drawn from entropy: %llu\n",
                     static_cast<unsigned long long>(*o.seed));
    }
    return *o.seed;
}

std::optional<fdp::TableSet> load_tables_if_needed(
    const CommonOpts& o, const std::vector<fdp::BandKind>& kinds,
    double gamma, std::int64_t d_max_hint, double R) {
    if (!needs_tables(kinds)) return std::nullopt;
    std::string path = o.table_path;
    if (path.empty()) {
        if (const char* env = std::getenv("FDP_BANDS_TABLE")) path = env;
    }
    if (path.empty())
        throw fdp::coverage_error(
            "no quantile table given (use --table or FDP_BANDS_TABLE); SB/UB "
            "need calibration covering gamma=" + std::to_string(gamma) +
            ", d_max=" + std::to_string(d_max_hint) +
            ", R=" + std::to_string(R));
    return fdp::load_tables(path);
}

void add_common_flags(CLI::App* cmd, CommonOpts& o, bool with_decoys = true) {
    cmd->add_option("--alpha", o.alpha, "FDR/FDP level in (0,1)");
    cmd->add_option("--gamma", o.gamma, "confidence complement in (0,1)");
    cmd->add_option("--c", o.c, "target-win threshold");
    cmd->add_option("--lambda", o.lambda, "decoy-win threshold");
    cmd->add_option("--kind", o.kind, "band kind: kr, sb, ub or all");
    cmd->add_flag("--kr-only", o.kr_only, "shorthand for --kind kr");
    cmd->add_option("--mode", o.mode, "UB quantile mode: det or rand");
    cmd->add_option("--table", o.table_path, "quantile table file");
    cmd->add_option("--seed", o.seed, "RNG seed (drawn from entropy if absent)");
    if (with_decoys) {
        cmd->add_option("--decoys", o.n_decoys,
                        "number of decoy score columns (multi-decoy mode)");
        cmd->add_option("--method", o.method,
                        "multi-decoy competition: max or mirror");
    }
}

fdp::MultiMethod method_of(const CommonOpts& o) {
    if (o.method == "max") return fdp::MultiMethod::max;
    if (o.method == "mirror") return fdp::MultiMethod::mirror;
    throw fdp::param_error("--method must be max or mirror");
}

// Builds the competition sequence from parsed input, handling all three
// input shapes. Multi-decoy mode overrides (c, lambda) from the method
// unless the user set them explicitly.
fdp::CompetitionSequence make_sequence(const InputData& data, CommonOpts& o,
                                       bool c_explicit, fdp::Rng& rng) {
    if (data.n_decoys > 0) {
        const fdp::MultiMethod method = method_of(o);
        if (!c_explicit) {
            o.c = method == fdp::MultiMethod::max
                      ? 1.0 / static_cast<double>(data.n_decoys + 1)
                      : 0.5;
            o.lambda = o.c;
        }
        std::vector<fdp::ScoredEntry> entries;
        entries.reserve(data.targets.size());
        for (std::int64_t i = 0; i < data.m(); ++i) {
            const fdp::LabeledScore ls = fdp::assign_label_multi(
                data.targets[static_cast<std::size_t>(i)], data.decoys_of(i),
                method, fdp::TiePolicy::random, rng);
            entries.push_back({ls.w, ls.label, static_cast<std::uint32_t>(i)});
        }
        fdp::sort_scored(entries, rng);
        return fdp::CompetitionSequence::from_entries(entries);
    }
    if (data.has_scores) {
        std::vector<fdp::ScoredEntry> entries;
        entries.reserve(data.labels.size());
        for (std::size_t i = 0; i < data.labels.size(); ++i)
            entries.push_back({data.scores[i],
                               static_cast<std::int8_t>(data.labels[i]),
                               static_cast<std::uint32_t>(i)});
        fdp::sort_scored(entries, rng);
        return fdp::CompetitionSequence::from_entries(entries);
    }
    return fdp::CompetitionSequence::from_labels(data.labels);
}

void validate_common(const CommonOpts& o) {
    if (!(o.alpha > 0.0) || !(o.alpha < 1.0))
        throw fdp::param_error("--alpha must lie in (0,1)");
    if (!(o.gamma > 0.0) || !(o.gamma < 1.0))
        throw fdp::param_error("--gamma must lie in (0,1)");
    if (o.n_decoys < 0) throw fdp::param_error("--decoys must be >= 0");
}

// ---------------------------------------------------------------------------
// Subcommand implementations.

int cmd_bounds_or_control(const std::string& input_path, CommonOpts& o,
                          bool c_explicit, bool control) {
    validate_common(o);
    const auto kinds = kinds_of(o);
    const std::uint64_t seed = resolve_seed(o);
    fdp::Rng rng(seed);
    const InputData data = read_input(input_path, o.n_decoys);
    const fdp::CompetitionSequence seq = make_sequence(data, o, c_explicit, rng);

    fdp::BandParams params;
    params.c = o.c;
    params.lambda = o.lambda;
    params.m = seq.m();
    params.alpha = o.alpha;
    params.gamma = o.gamma;
    params.validate();

    const auto tables = load_tables_if_needed(o, kinds, o.gamma,
                                              fdp::dmax_for_fdr(params),
                                              params.R());
    const fdp::TableSet* table_ptr = tables ? &*tables : nullptr;
    const fdp::UbMode mode = mode_of(o);

    json out;
    out["command"] = control ? "control" : "bounds";
    out["m"] = seq.m();
    out["alpha"] = o.alpha;
    out["gamma"] = o.gamma;
    out["c"] = o.c;
    out["lambda"] = o.lambda;
    out["seed"] = seed;
    if (!control) {
        const fdp::AsResult as = fdp::as_threshold(seq, params);
        out["k_as"] = as.k_as;
        out["discoveries"] = as.n_discoveries;
        json bounds = json::object();
        for (fdp::BandKind kind : kinds) {
            const fdp::DecisionReport rep = fdp::tdc_bound(
                seq, as.k_as, params, kind, table_ptr, mode, &rng);
            json entry;
            entry["q"] = rep.q_bound;
            entry["q_raw"] = rep.q_bound_raw;
            entry["d_max"] = rep.d_max_used;
            bounds[kind_key(kind)] = entry;
        }
        out["bounds"] = bounds;
    } else {
        json per = json::object();
        for (fdp::BandKind kind : kinds) {
            const fdp::DecisionReport rep = fdp::fdp_control_threshold(
                seq, params, kind, table_ptr, mode, &rng);
            json entry;
            entry["k0"] = rep.k_threshold;
            entry["discoveries"] = rep.n_discoveries;
            entry["q"] = rep.q_bound;
            entry["d_max"] = rep.d_max_used;
            per[kind_key(kind)] = entry;
        }
        out["control"] = per;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int cmd_tables(std::int64_t npaths, std::int64_t dceiling, double R,
               std::vector<double> gammas, CommonOpts& o, bool desk_scale,
               const std::string& out_path) {
    if (desk_scale) {
        if (npaths == 0) npaths = fdp::desk_scale_n_paths;
        if (dceiling == 0) dceiling = fdp::desk_scale_d_ceiling;
    }
    fdp::SimConfig cfg;
    cfg.n_paths = npaths == 0 ? fdp::full_scale_n_paths : npaths;
    cfg.d_ceiling = dceiling == 0 ? fdp::full_scale_d_ceiling : dceiling;
    cfg.R = R;
    if (!gammas.empty()) cfg.gammas = std::move(gammas);
    cfg.seed = resolve_seed(o);
    cfg.validate();

    auto [sb, ub] = fdp::build_tables(cfg);
    fdp::save_tables(out_path, {&sb, &ub});
    std::cout << "# fdp-bands-table v1 seed=" << cfg.seed
              << " npaths=" << cfg.n_paths << "\n";
    return 0;
}

int cmd_compare(CommonOpts& o, std::int64_t d_max, const std::string& out_path) {
    validate_common(o);
    if (d_max < 1) throw fdp::param_error("--dmax must be >= 1");
    const auto kinds = kinds_of(o);
    fdp::BandParams params;
    params.c = o.c;
    params.lambda = o.lambda;
    params.m = d_max;
    params.alpha = o.alpha;
    params.gamma = o.gamma;
    params.d_max = d_max;
    params.validate();

    const auto tables =
        load_tables_if_needed(o, kinds, o.gamma, d_max, params.R());
    const fdp::TableSet* table_ptr = tables ? &*tables : nullptr;
    const std::uint64_t seed = resolve_seed(o);
    fdp::Rng rng(seed);
    const fdp::UbMode mode = mode_of(o);

    std::vector<std::pair<fdp::BandKind, fdp::XiBand>> bands;
    for (fdp::BandKind kind : kinds)
        bands.emplace_back(kind,
                           fdp::make_band(params, kind, table_ptr, mode, &rng));

    std::ostringstream csv;
    csv << "d";
    for (const auto& [kind, band] : bands) csv << ",xi_" << kind_key(kind);
    csv << "\n";
    for (std::int64_t d = 1; d <= d_max; ++d) {
        csv << d;
        for (const auto& [kind, band] : bands)
            csv << ',' << band.xi[static_cast<std::size_t>(d)];
        csv << "\n";
    }
    if (out_path.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream out(out_path);
        if (!out) throw fdp::param_error("cannot write '" + out_path + "'");
        out << csv.str();
    }
    return 0;
}

int cmd_simulate(CommonOpts& o, std::int64_t m, double pi0, double rho,
                 double nu, bool uncalibrated, int reps,
                 std::vector<double> alphas, const std::string& out_path,
                 const std::string& dump_scores) {
    validate_common(o);
    if (o.n_decoys == 0) o.n_decoys = 1;
    const auto kinds = kinds_of(o);
    const std::uint64_t seed = resolve_seed(o);

    fdp::MixtureConfig cfg;
    cfg.m = m;
    cfg.pi0 = pi0;
    cfg.rho = rho;
    cfg.nu = nu;
    cfg.calibrated = !uncalibrated;
    cfg.n_decoys = o.n_decoys;
    cfg.seed = seed;
    cfg.validate();
    if (alphas.empty()) alphas = {0.01, 0.05, 0.1};
    for (double a : alphas)
        if (!(a > 0.0) || !(a < 1.0))
            throw fdp::param_error("--alphas values must lie in (0,1)");

    const fdp::MultiMethod method = method_of(o);
    const double c_used = method == fdp::MultiMethod::max
                              ? 1.0 / static_cast<double>(cfg.n_decoys + 1)
                              : 0.5;

    std::optional<fdp::TableSet> tables;
    if (needs_tables(kinds)) {
        fdp::BandParams probe;
        probe.c = c_used;
        probe.lambda = c_used;
        probe.m = cfg.m;
        probe.alpha = *std::max_element(alphas.begin(), alphas.end());
        probe.gamma = o.gamma;
        tables = load_tables_if_needed(o, kinds, o.gamma,
                                       fdp::dmax_for_fdr(probe), probe.R());
    }

    if (!dump_scores.empty()) {
        fdp::MixtureConfig first = cfg;
        first.seed = fdp::Rng::for_stream(cfg.seed, 0).next_u64();
        const fdp::Dataset data = fdp::gen_dataset(first);
        std::ofstream out(dump_scores);
        if (!out) throw fdp::param_error("cannot write '" + dump_scores + "'");
        out << "target";
        for (int j = 1; j <= cfg.n_decoys; ++j) out << ",decoy" << j;
        out << "\n";
        for (std::int64_t i = 0; i < data.m(); ++i) {
            out << g17(data.targets[static_cast<std::size_t>(i)]);
            for (double z : data.decoys_of(i)) out << ',' << g17(z);
            out << "\n";
        }
    }

    const fdp::ExperimentSummary summary = fdp::run_experiment(
        cfg, alphas, o.gamma, kinds, reps, method,
        tables ? &*tables : nullptr, mode_of(o));

    std::ostringstream comment;
    comment << "fdp-bands-simulate v1 seed=" << seed << " m=" << cfg.m
            << " pi0=" << g17(cfg.pi0) << " rho=" << g17(cfg.rho)
            << " calibrated=" << (cfg.calibrated ? 1 : 0)
            << " decoys=" << cfg.n_decoys << " method=" << fdp::to_string(method)
            << " reps=" << reps << " gamma=" << g17(o.gamma);
    if (out_path.empty()) {
        summary.write_csv(std::cout, comment.str());
    } else {
        std::ofstream out(out_path);
        if (!out) throw fdp::param_error("cannot write '" + out_path + "'");
        summary.write_csv(out, comment.str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Competition-based FDR control with simultaneous FDP bounds"};
    app.require_subcommand(1);

    CommonOpts o;

    std::string input_path;
    auto* bounds = app.add_subcommand(
        "bounds", "FDR threshold and FDP bound for a competition file");
    bounds->add_option("input", input_path, "input file")->required();
    add_common_flags(bounds, o);

    auto* control = app.add_subcommand(
        "control", "FDP-controlling rejection threshold for a competition file");
    control->add_option("input", input_path, "input file")->required();
    add_common_flags(control, o);

    std::int64_t npaths = 0, dceiling = 0;
    double table_R = 0.5;
    std::vector<double> gammas;
    bool desk_scale = false;
    std::string out_path;
    auto* tables = app.add_subcommand(
        "tables", "calibrate and write SB/UB quantile tables");
    tables->add_option("--npaths", npaths, "Monte-Carlo sample count");
    tables->add_option("--dceiling", dceiling, "largest calibrated d_max");
    tables->add_option("--R", table_R, "per-trial decoy-win probability");
    tables->add_option("--gammas", gammas, "confidence complements");
    tables->add_flag("--desk-scale", desk_scale,
                     "desk defaults (1e5 paths, d_max 1000) instead of "
                     "production (2e6 paths, d_max 50000)");
    tables->add_option("--out", out_path, "output table file")->required();
    tables->add_option("--seed", o.seed, "RNG seed");

    std::int64_t compare_dmax = 100;
    auto* compare = app.add_subcommand(
        "compare", "emit band values per decoy index for each kind");
    compare->add_option("--dmax", compare_dmax, "largest decoy index");
    compare->add_option("--out", out_path, "output CSV (stdout if absent)");
    add_common_flags(compare, o, /*with_decoys=*/false);

    std::int64_t sim_m = 500;
    double pi0 = 0.5, rho = 3.0, nu = 0.075;
    bool uncalibrated = false;
    int reps = 500;
    std::vector<double> alphas;
    std::string dump_scores;
    auto* simulate = app.add_subcommand(
        "simulate", "run the mixture-model experiment harness");
    simulate->add_option("--m", sim_m, "hypotheses per dataset");
    simulate->add_option("--pi0", pi0, "proportion of true nulls");
    simulate->add_option("--rho", rho, "calibrated separation");
    simulate->add_option("--nu", nu, "uncalibrated separation rate");
    simulate->add_flag("--uncalibrated", uncalibrated,
                       "per-hypothesis null distributions");
    simulate->add_option("--reps", reps, "replicate count");
    simulate->add_option("--alphas", alphas, "FDR levels");
    simulate->add_option("--out", out_path, "output CSV (stdout if absent)");
    simulate->add_option("--dump-scores", dump_scores,
                         "write the first replicate's scores to this file");
    add_common_flags(simulate, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (bounds->parsed() || control->parsed()) {
            const bool c_explicit =
                (bounds->parsed() ? bounds : control)->count("--c") > 0;
            return cmd_bounds_or_control(input_path, o, c_explicit,
                                         control->parsed());
        }
        if (tables->parsed())
            return cmd_tables(npaths, dceiling, table_R, std::move(gammas), o,
                              desk_scale, out_path);
        if (compare->parsed()) return cmd_compare(o, compare_dmax, out_path);
        if (simulate->parsed())
            return cmd_simulate(o, sim_m, pi0, rho, nu, uncalibrated, reps,
                                std::move(alphas), out_path, dump_scores);
        return 2;
    } catch (const fdp::coverage_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fdp::param_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fdp::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fdp::cap_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
