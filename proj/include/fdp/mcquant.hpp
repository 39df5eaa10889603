// Monte-Carlo calibration of the band quantiles: the 1-gamma quantile z of
// the running maximum of the standardized process, and the straddling pair
// (rho, sigma) around the gamma quantile of the running minimum of the
// survival-normalized process. One simulation pass serves every d_max up to
// the ceiling and every requested gamma simultaneously.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fdp/dist.hpp"
#include "fdp/errors.hpp"
#include "fdp/kinds.hpp"
#include "fdp/rng.hpp"

namespace fdp {

struct SimConfig {
    std::int64_t n_paths = 100'000;
    std::int64_t d_ceiling = 1'000;
    double R = 0.5;
    std::vector<double> gammas = {0.5, 0.2, 0.1, 0.05, 0.025, 0.01};
    std::uint64_t seed = 0;

    void validate() const;
};

// Production defaults; desk-scale work should pass smaller values.
inline constexpr std::int64_t full_scale_n_paths = 2'000'000;
inline constexpr std::int64_t full_scale_d_ceiling = 50'000;
inline constexpr std::int64_t desk_scale_n_paths = 100'000;
inline constexpr std::int64_t desk_scale_d_ceiling = 1'000;

struct SbRow {
    double z = 0.0;
    bool operator==(const SbRow&) const = default;
};

struct UbRow {
    double rho = 0.0;    // largest observed cumulative minimum with mass <= gamma
    double sigma = 0.0;  // next observed value above rho
    double r = 0.0;      // empirical mass at rho
    double s = 0.0;      // empirical mass at sigma
    // No observed value had mass <= gamma; rho = 0 stands in for "below all".
    bool degenerate() const { return rho == 0.0; }
    bool operator==(const UbRow&) const = default;
};

struct QuantileTable {
    BandKind kind = BandKind::SB;  // SB or UB only
    double R = 0.5;
    std::uint64_t seed = 0;
    std::int64_t n_paths = 0;
    std::int64_t d_ceiling = 0;
    std::vector<double> gammas;
    // rows indexed [gamma][d-1], d in [1, d_ceiling]; only the vector
    // matching `kind` is populated.
    std::vector<std::vector<SbRow>> sb_rows;
    std::vector<std::vector<UbRow>> ub_rows;

    bool operator==(const QuantileTable&) const = default;
    // Index of gamma within 1e-9, or -1.
    int gamma_index(double gamma) const;
    void require_R(double expected_R) const;
    void validate() const;
};

enum class UbMode { deterministic, randomized };

std::pair<QuantileTable, QuantileTable> build_tables(const SimConfig& cfg);

double lookup_sb_z(const QuantileTable& table, double gamma, std::int64_t d_max);
double lookup_ub_u(const QuantileTable& table, double gamma, std::int64_t d_max,
                   UbMode mode, Rng* rng = nullptr);

struct TableSet {
    std::optional<QuantileTable> sb;
    std::optional<QuantileTable> ub;
    const QuantileTable& require(BandKind kind, double gamma,
                                 std::int64_t d_max, double R) const;
};

// CSV persistence. A file may carry one kind or both; provenance (seed,
// n_paths) travels in the leading comment line.
void save_tables(const std::string& path,
                 const std::vector<const QuantileTable*>& tables);
void save_table(const QuantileTable& table, const std::string& path);
TableSet load_tables(const std::string& path);
QuantileTable load_table(const std::string& path);

// One in-progress Bernoulli(R) path. Feeding trials updates the trial count
// n, decoy-win count, target-win count U, and an incrementally maintained
// binomial CDF/PMF at (n, decoy wins), from which the survival-normalized
// value of U at each decoy win is read off in O(1).
struct PathState {
    double R;
    double B;
    std::int64_t trials = 0;
    std::int64_t decoy_wins = 0;
    std::int64_t target_wins = 0;
    double binom_cdf = 1.0;  // P(Bin(trials, R) <= decoy_wins)
    double binom_pmf = 1.0;  // P(Bin(trials, R) == decoy_wins)
    double max_std = 0.0;    // running max of standardized values, valid once decoy_wins >= 1
    double min_unif = 1.0;   // running min of survival-normalized values

    explicit PathState(double R_in)
        : R(R_in), B((1.0 - R_in) / R_in) {}

    struct DecoyWin {
        std::int64_t d;
        std::int64_t u;      // target wins before this decoy win
        double std_val;      // (u - B d) / sqrt(B (1+B) d)
        double unif_val;     // P(NB(d,R) >= u)
        bool new_max_std;
        bool new_min_unif;
    };

    // Returns the emitted values when the trial is a decoy win.
    std::optional<DecoyWin> step(bool decoy_win);
};

}  // namespace fdp
