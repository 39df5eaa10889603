// Exact negative binomial machinery on integer support: PMF, CDF, survival
// and quantile for NB(d, R), the count of target wins before the d-th decoy
// win when each trial is a decoy win with probability R.

#pragma once

#include <cstdint>
#include <vector>

#include "fdp/errors.hpp"

namespace fdp {

struct NegBinSpec {
    std::int64_t d;  // number of decoy-win failures, >= 1
    double R;        // per-trial decoy-win probability, in (0, 1)

    void validate() const;
    double B() const { return (1.0 - R) / R; }
    double mean() const { return B() * static_cast<double>(d); }
    double variance() const { return B() * (1.0 + B()) * static_cast<double>(d); }
};

// Scans beyond this k raise cap_error instead of saturating silently.
inline constexpr std::int64_t k_default_cap = 10'000'000;

namespace detail {

// Iterates pmf(k) via pmf(k+1) = pmf(k) * (k+d)/(k+1) * (1-R), switching to
// log space when R^d underflows a double.
class NbPmfStream {
public:
    explicit NbPmfStream(const NegBinSpec& spec);
    std::int64_t k() const { return k_; }
    double pmf() const { return pmf_; }
    void advance();

private:
    std::int64_t d_;
    double one_minus_R_;
    std::int64_t k_ = 0;
    double pmf_ = 0.0;
    double log_pmf_ = 0.0;
    bool log_regime_ = false;
};

}  // namespace detail

// pmf(k) = C(k+d-1, k) (1-R)^k R^d, evaluated in closed form via lgamma.
double nb_pmf(const NegBinSpec& spec, std::int64_t k);

// F(k) = sum_{j<=k} pmf(j); 0 for k < 0.
double nb_cdf(const NegBinSpec& spec, std::int64_t k,
              std::int64_t cap = k_default_cap);

// G(k) = P(NB(d,R) >= k) = 1 - F(k-1); G(0) = 1. Requires k >= 0.
double nb_survival(const NegBinSpec& spec, std::int64_t k,
                   std::int64_t cap = k_default_cap);

// min{ i : F(i) >= p } for p in (0, 1).
std::int64_t nb_quantile(const NegBinSpec& spec, double p,
                         std::int64_t cap = k_default_cap);

// Memoized cumulative table for repeated cdf/quantile evaluations at one
// (d, R). Not internally synchronized: share across threads only once no
// further extension can occur.
class NbCumulative {
public:
    explicit NbCumulative(NegBinSpec spec, std::int64_t cap = k_default_cap);
    const NegBinSpec& spec() const { return spec_; }
    double cdf(std::int64_t k);
    std::int64_t quantile(double p);

private:
    void extend_one();
    NegBinSpec spec_;
    std::int64_t cap_;
    detail::NbPmfStream stream_;
    std::vector<double> cum_;
};

}  // namespace fdp
