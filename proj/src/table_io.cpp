// Quantile table persistence. Format:
//   # fdp-bands-table v1 seed=<seed> npaths=<N>
//   kind,R,gamma,dmax,v1,v2,v3,v4
//   SB,<R>,<gamma>,<d>,<z>,,,
//   UB,<R>,<gamma>,<d>,<rho>,<sigma>,<r>,<s>
// Values carry 17 significant digits so that reloading reproduces the exact
// doubles.

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fdp/mcquant.hpp"

namespace fdp {

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw io_error("table file: bad " + what + " value '" + s + "'");
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& what) {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw io_error("table file: bad " + what + " value '" + s + "'");
    return v;
}

constexpr const char* kMagic = "# fdp-bands-table v1";
constexpr const char* kHeader = "kind,R,gamma,dmax,v1,v2,v3,v4";

}  // namespace

void save_tables(const std::string& path,
                 const std::vector<const QuantileTable*>& tables) {
    if (tables.empty()) throw param_error("save_tables: no tables given");
    for (const QuantileTable* t : tables) t->validate();
    for (const QuantileTable* t : tables) {
        if (t->seed != tables[0]->seed || t->n_paths != tables[0]->n_paths)
            throw param_error("save_tables: tables carry mixed provenance");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write table file '" + path + "'");
    out << kMagic << " seed=" << tables[0]->seed
        << " npaths=" << tables[0]->n_paths << "\n";
    out << kHeader << "\n";
    for (const QuantileTable* t : tables) {
        for (std::size_t gi = 0; gi < t->gammas.size(); ++gi) {
            for (std::int64_t d = 1; d <= t->d_ceiling; ++d) {
                out << to_string(t->kind) << ',' << g17(t->R) << ','
                    << g17(t->gammas[gi]) << ',' << d << ',';
                if (t->kind == BandKind::SB) {
                    const SbRow& r = t->sb_rows[gi][static_cast<std::size_t>(d - 1)];
                    out << g17(r.z) << ",,,";
                } else {
                    const UbRow& r = t->ub_rows[gi][static_cast<std::size_t>(d - 1)];
                    out << g17(r.rho) << ',' << g17(r.sigma) << ','
                        << g17(r.r) << ',' << g17(r.s);
                }
                out << "\n";
            }
        }
    }
    if (!out) throw io_error("failed writing table file '" + path + "'");
}

void save_table(const QuantileTable& table, const std::string& path) {
    save_tables(path, {&table});
}

TableSet load_tables(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read table file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw io_error("table file is empty");
    if (line.rfind(kMagic, 0) != 0)
        throw io_error("table file: unrecognized version line '" + line + "'");
    std::uint64_t seed = 0;
    long long npaths = 0;
    {
        const char* p = std::strstr(line.c_str(), "seed=");
        const char* q = std::strstr(line.c_str(), "npaths=");
        if (!p || !q ||
            std::sscanf(p, "seed=%" SCNu64, &seed) != 1 ||
            std::sscanf(q, "npaths=%lld", &npaths) != 1)
            throw io_error("table file: malformed provenance line");
    }
    if (!std::getline(in, line) || line != kHeader)
        throw io_error("table file: missing column header");

    struct RawRow {
        double gamma;
        std::int64_t d;
        SbRow sb;
        UbRow ub;
    };
    std::vector<RawRow> sb_raw, ub_raw;
    double sb_R = 0.0, ub_R = 0.0;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 8)
            throw io_error("table file line " + std::to_string(lineno) +
                           ": expected 8 fields, got " +
                           std::to_string(fields.size()));
        RawRow row;
        const double R = parse_double(fields[1], "R");
        row.gamma = parse_double(fields[2], "gamma");
        row.d = parse_int(fields[3], "dmax");
        if (fields[0] == "SB") {
            if (!fields[5].empty() || !fields[6].empty() || !fields[7].empty())
                throw io_error("table file line " + std::to_string(lineno) +
                               ": SB rows must leave v2-v4 empty");
            row.sb.z = parse_double(fields[4], "z");
            if (!sb_raw.empty() && R != sb_R)
                throw io_error("table file: inconsistent R across SB rows");
            sb_R = R;
            sb_raw.push_back(row);
        } else if (fields[0] == "UB") {
            row.ub.rho = parse_double(fields[4], "rho");
            row.ub.sigma = parse_double(fields[5], "sigma");
            row.ub.r = parse_double(fields[6], "r");
            row.ub.s = parse_double(fields[7], "s");
            if (!ub_raw.empty() && R != ub_R)
                throw io_error("table file: inconsistent R across UB rows");
            ub_R = R;
            ub_raw.push_back(row);
        } else {
            throw io_error("table file line " + std::to_string(lineno) +
                           ": unknown kind '" + fields[0] + "'");
        }
    }
    if (sb_raw.empty() && ub_raw.empty())
        throw io_error("table file contains no rows");

    auto assemble = [&](BandKind kind, double R,
                        const std::vector<RawRow>& raw) {
        QuantileTable t;
        t.kind = kind;
        t.R = R;
        t.seed = seed;
        t.n_paths = npaths;
        // Rows are written gamma-major with d ascending from 1; recover the
        // gamma list in order of first appearance and demand full coverage.
        for (const RawRow& r : raw) {
            bool known = false;
            for (double g : t.gammas) known = known || g == r.gamma;
            if (!known) t.gammas.push_back(r.gamma);
        }
        const std::size_t ng = t.gammas.size();
        if (raw.size() % ng != 0)
            throw io_error("table file: ragged rows for kind " +
                           std::string(to_string(kind)));
        t.d_ceiling = static_cast<std::int64_t>(raw.size() / ng);
        if (kind == BandKind::SB)
            t.sb_rows.assign(ng, std::vector<SbRow>(static_cast<std::size_t>(t.d_ceiling)));
        else
            t.ub_rows.assign(ng, std::vector<UbRow>(static_cast<std::size_t>(t.d_ceiling)));
        std::vector<std::int64_t> next_d(ng, 1);
        for (const RawRow& r : raw) {
            int gi = -1;
            for (std::size_t i = 0; i < ng; ++i)
                if (t.gammas[i] == r.gamma) gi = static_cast<int>(i);
            if (gi < 0 || r.d != next_d[static_cast<std::size_t>(gi)] ||
                r.d > t.d_ceiling)
                throw io_error("table file: rows out of order or incomplete");
            if (kind == BandKind::SB)
                t.sb_rows[static_cast<std::size_t>(gi)]
                         [static_cast<std::size_t>(r.d - 1)] = r.sb;
            else
                t.ub_rows[static_cast<std::size_t>(gi)]
                         [static_cast<std::size_t>(r.d - 1)] = r.ub;
            ++next_d[static_cast<std::size_t>(gi)];
        }
        for (std::int64_t nd : next_d)
            if (nd != t.d_ceiling + 1)
                throw io_error("table file: rows out of order or incomplete");
        try {
            t.validate();
        } catch (const param_error& e) {
            throw io_error(std::string("table file: ") + e.what());
        }
        return t;
    };

    TableSet set;
    if (!sb_raw.empty()) set.sb = assemble(BandKind::SB, sb_R, sb_raw);
    if (!ub_raw.empty()) set.ub = assemble(BandKind::UB, ub_R, ub_raw);
    return set;
}

QuantileTable load_table(const std::string& path) {
    TableSet set = load_tables(path);
    if (set.sb && set.ub)
        throw io_error("table file '" + path +
                       "' holds two kinds; use load_tables");
    if (set.sb) return *set.sb;
    return *set.ub;
}

}  // namespace fdp
