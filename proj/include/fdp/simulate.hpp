// Normal-mixture data generation and the simulation harness that measures
// FDR control, FDP bounds and interpolation gains over many replicates.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdp/procedures.hpp"

namespace fdp {

struct MixtureConfig {
    std::int64_t m = 500;
    double pi0 = 0.5;        // proportion of true nulls
    bool calibrated = true;  // fixed N(0,1) nulls vs per-hypothesis (mu, sigma)
    double rho = 3.0;        // calibrated separation
    double nu = 0.075;       // uncalibrated separation rate
    int n_decoys = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Dataset {
    int n_decoys = 1;
    std::vector<double> targets;
    std::vector<double> decoys;  // m * n_decoys, row-major
    std::vector<std::uint8_t> is_null;

    std::int64_t m() const { return static_cast<std::int64_t>(targets.size()); }
    std::span<const double> decoys_of(std::int64_t i) const {
        return {decoys.data() + i * n_decoys, static_cast<std::size_t>(n_decoys)};
    }
    std::int64_t n_nulls() const;
};

// floor(pi0 * m) true nulls with target and decoys iid from the null; false
// nulls with the target shifted by rho_i. Deterministic given cfg.seed.
Dataset gen_dataset(const MixtureConfig& cfg);

struct KindStats {
    double median_qbar = 0.0;
    double median_qbar_raw = 0.0;
    double median_gain = 0.0;  // raw minus interpolated
};

struct AlphaSummary {
    double alpha = 0.0;
    double median_fdp = 0.0;
    double median_discoveries = 0.0;
    double median_power = 0.0;
    std::vector<std::pair<BandKind, KindStats>> per_kind;
};

struct ExperimentSummary {
    std::vector<AlphaSummary> rows;
    // One row per (alpha, kind, statistic).
    void write_csv(std::ostream& out, const std::string& comment) const;
};

ExperimentSummary run_experiment(const MixtureConfig& cfg,
                                 const std::vector<double>& alphas,
                                 double gamma,
                                 const std::vector<BandKind>& kinds,
                                 int n_reps, MultiMethod method,
                                 const TableSet* tables,
                                 UbMode mode = UbMode::deterministic);

double median(std::vector<double> values);

}  // namespace fdp
