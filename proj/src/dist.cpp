#include "fdp/dist.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fdp {

void NegBinSpec::validate() const {
    if (!(R > 0.0) || !(R < 1.0))
        throw param_error("NegBinSpec: R must lie in (0,1), got " + std::to_string(R));
    if (d < 1)
        throw param_error("NegBinSpec: d must be >= 1, got " + std::to_string(d));
}

namespace detail {

NbPmfStream::NbPmfStream(const NegBinSpec& spec)
    : d_(spec.d), one_minus_R_(1.0 - spec.R) {
    spec.validate();
    const double log_p0 = static_cast<double>(d_) * std::log(spec.R);
    log_regime_ = log_p0 < -700.0;
    if (log_regime_) {
        log_pmf_ = log_p0;
        pmf_ = std::exp(log_p0);
    } else {
        pmf_ = std::pow(spec.R, static_cast<double>(d_));
    }
}

void NbPmfStream::advance() {
    const double ratio = static_cast<double>(k_ + d_) /
                         static_cast<double>(k_ + 1) * one_minus_R_;
    if (log_regime_) {
        log_pmf_ += std::log(ratio);
        if (log_pmf_ > -690.0) {
            // Back in representable territory; continue linearly from here.
            pmf_ = std::exp(log_pmf_);
            log_regime_ = false;
        } else {
            pmf_ = std::exp(log_pmf_);
        }
    } else {
        pmf_ *= ratio;
    }
    ++k_;
}

}  // namespace detail

double nb_pmf(const NegBinSpec& spec, std::int64_t k) {
    spec.validate();
    if (k < 0) throw param_error("nb_pmf: k must be >= 0");
    const double dk = static_cast<double>(k);
    const double dd = static_cast<double>(spec.d);
    const double log_pmf = std::lgamma(dk + dd) - std::lgamma(dd) -
                           std::lgamma(dk + 1.0) + dk * std::log1p(-spec.R) +
                           dd * std::log(spec.R);
    return std::min(1.0, std::exp(log_pmf));
}

double nb_cdf(const NegBinSpec& spec, std::int64_t k, std::int64_t cap) {
    spec.validate();
    if (k < 0) return 0.0;
    if (k > cap)
        throw cap_error("nb_cdf: k=" + std::to_string(k) +
                        " exceeds support cap " + std::to_string(cap));
    detail::NbPmfStream s(spec);
    double cum = s.pmf();
    while (s.k() < k) {
        s.advance();
        cum = std::min(1.0, cum + s.pmf());
    }
    return cum;
}

double nb_survival(const NegBinSpec& spec, std::int64_t k, std::int64_t cap) {
    spec.validate();
    if (k < 0) throw param_error("nb_survival: k must be >= 0");
    if (k == 0) return 1.0;
    return 1.0 - nb_cdf(spec, k - 1, cap);
}

std::int64_t nb_quantile(const NegBinSpec& spec, double p, std::int64_t cap) {
    spec.validate();
    if (!(p > 0.0) || !(p < 1.0))
        throw param_error("nb_quantile: p must lie in (0,1), got " + std::to_string(p));
    detail::NbPmfStream s(spec);
    double cum = s.pmf();
    while (cum < p) {
        if (s.k() >= cap)
            throw cap_error("nb_quantile: scan for p=" + std::to_string(p) +
                            " exceeded support cap " + std::to_string(cap));
        s.advance();
        cum = std::min(1.0, cum + s.pmf());
    }
    return s.k();
}

NbCumulative::NbCumulative(NegBinSpec spec, std::int64_t cap)
    : spec_(spec), cap_(cap), stream_(spec) {
    cum_.push_back(stream_.pmf());
}

void NbCumulative::extend_one() {
    stream_.advance();
    cum_.push_back(std::min(1.0, cum_.back() + stream_.pmf()));
}

double NbCumulative::cdf(std::int64_t k) {
    if (k < 0) return 0.0;
    if (k > cap_)
        throw cap_error("NbCumulative::cdf: k exceeds support cap");
    while (static_cast<std::int64_t>(cum_.size()) <= k) extend_one();
    return cum_[static_cast<std::size_t>(k)];
}

std::int64_t NbCumulative::quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw param_error("NbCumulative::quantile: p must lie in (0,1)");
    std::int64_t k = 0;
    while (cdf(k) < p) {
        if (k >= cap_)
            throw cap_error("NbCumulative::quantile: scan exceeded support cap");
        ++k;
    }
    return k;
}

coverage_error missing_row_error(const std::string& kind, double gamma,
                                 long long d_max, double R) {
    return coverage_error("no calibrated " + kind + " row for gamma=" +
                          std::to_string(gamma) + ", d_max=" +
                          std::to_string(d_max) + ", R=" + std::to_string(R));
}

}  // namespace fdp
