#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "markdev/error.hpp"

namespace markdev {

/// Standard normal CDF via erfc, absolute error below 1e-14.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// CDF of |X| for X ~ N(mu, sigma^2): Phi((y-mu)/s) + Phi((y+mu)/s) - 1.
/// Reduces to the half-normal CDF 2*Phi(y/s)-1 for mu = 0.
inline double folded_normal_cdf(double y, double mu, double sigma) {
    if (y < 0.0) throw ValidationError("negative argument");
    if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");
    return normal_cdf((y - mu) / sigma) + normal_cdf((y + mu) / sigma) - 1.0;
}

/// Independent normals X_i ~ N(mu_i, sigma_i^2) tested against mu_i = 0.
struct ToySpec1 {
    std::vector<double> mu;
    std::vector<double> sigma;
    double alpha = 0.05;

    void validate() const {
        if (mu.size() != sigma.size() || mu.empty())
            throw ValidationError("mu and sigma must have equal positive length");
        for (double s : sigma)
            if (!(s > 0.0)) throw ValidationError("all sigma must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    }
};

/// CDF of max_i w_i|X_i|: product of folded-normal CDFs. Unscaled uses
/// w_i = 1, scaled w_i = 1/sigma_i.
inline double toy1_cdf_max(double u, const ToySpec1& spec, bool scaled) {
    if (u < 0.0) return 0.0;
    double prod = 1.0;
    for (std::size_t i = 0; i < spec.mu.size(); ++i) {
        const double y = scaled ? u * spec.sigma[i] : u;
        prod *= folded_normal_cdf(y, spec.mu[i], spec.sigma[i]);
    }
    return prod;
}

namespace detail {

/// Bisection for F(c) = 1 - alpha on [0, hi]; F monotone non-decreasing.
template <typename F>
double critical_value(F&& cdf, double alpha, double hi) {
    double lo = 0.0;
    const double target = 1.0 - alpha;
    if (!(cdf(hi) >= target)) throw NumericalError("root bracket failure");
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Exact power of the deviation test max_i w_i|X_i| at level alpha.
inline double toy1_power(const ToySpec1& spec, bool scaled) {
    spec.validate();
    ToySpec1 null_spec = spec;
    std::fill(null_spec.mu.begin(), null_spec.mu.end(), 0.0);
    const double sigma_max = *std::max_element(spec.sigma.begin(), spec.sigma.end());
    const double mu_max =
        *std::max_element(spec.mu.begin(), spec.mu.end(), [](double a, double b) {
            return std::abs(a) < std::abs(b);
        });
    const double hi = scaled ? 20.0 + std::abs(mu_max) / sigma_max + 20.0
                             : 20.0 * sigma_max + std::abs(mu_max) + 20.0;
    const double c_crit = detail::critical_value(
        [&](double u) { return toy1_cdf_max(u, null_spec, scaled); }, spec.alpha, hi);
    return 1.0 - toy1_cdf_max(c_crit, spec, scaled);
}

/// Two-piece normal: equal-weight mixture of a normal truncated to
/// [mu, inf) with sd sigma_a and one truncated to (-inf, mu) with sd
/// sigma_b. The CDF is a plain normal CDF with side-dependent sd.
inline double toy2_cdf_x(double x, double mu, double sigma_a, double sigma_b) {
    if (!(sigma_a > 0.0) || !(sigma_b > 0.0))
        throw ValidationError("sigma must be positive");
    return x >= mu ? normal_cdf((x - mu) / sigma_a) : normal_cdf((x - mu) / sigma_b);
}

struct ToySpec2 {
    std::vector<double> mu;
    std::vector<double> sigma_a;  // upper-half sd
    std::vector<double> sigma_b;  // lower-half sd
    double alpha = 0.05;

    void validate() const {
        if (mu.size() != sigma_a.size() || mu.size() != sigma_b.size() || mu.empty())
            throw ValidationError("spec vectors must have equal positive length");
        for (std::size_t i = 0; i < mu.size(); ++i)
            if (!(sigma_a[i] > 0.0) || !(sigma_b[i] > 0.0))
                throw ValidationError("all sd must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0,1)");
    }
};

/// CDF of the deviation statistic for toy example 2. Unscaled:
/// max_i |X_i| with P(|X_i|<=u) = F_X(u) - F_X(-u). Scaled (directional):
/// Z_i = X_i/sigma_a if X_i >= 0 else X_i/sigma_b, so
/// P(Z_i<=u) = F_X(u*sigma_a) - F_X(-u*sigma_b).
inline double toy2_cdf_max(double u, const ToySpec2& spec, bool scaled) {
    if (u < 0.0) return 0.0;
    double prod = 1.0;
    for (std::size_t i = 0; i < spec.mu.size(); ++i) {
        const double up = scaled ? u * spec.sigma_a[i] : u;
        const double down = scaled ? u * spec.sigma_b[i] : u;
        const double p = toy2_cdf_x(up, spec.mu[i], spec.sigma_a[i], spec.sigma_b[i]) -
                         toy2_cdf_x(-down, spec.mu[i], spec.sigma_a[i], spec.sigma_b[i]);
        prod *= std::max(0.0, p);
    }
    return prod;
}

inline double toy2_power(const ToySpec2& spec, bool scaled) {
    spec.validate();
    ToySpec2 null_spec = spec;
    std::fill(null_spec.mu.begin(), null_spec.mu.end(), 0.0);
    double sd_max = 0.0;
    double mu_abs = 0.0;
    for (std::size_t i = 0; i < spec.mu.size(); ++i) {
        sd_max = std::max({sd_max, spec.sigma_a[i], spec.sigma_b[i]});
        mu_abs = std::max(mu_abs, std::abs(spec.mu[i]));
    }
    const double hi = scaled ? 20.0 + mu_abs / sd_max + 20.0 : 20.0 * sd_max + mu_abs + 20.0;
    const double c_crit = detail::critical_value(
        [&](double u) { return toy2_cdf_max(u, null_spec, scaled); }, spec.alpha, hi);
    return 1.0 - toy2_cdf_max(c_crit, spec, scaled);
}

}  // namespace markdev
