#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "markdev/error.hpp"
#include "markdev/gaussian_field.hpp"
#include "markdev/geometry.hpp"
#include "markdev/random.hpp"

namespace markdev {

enum class ModelFamily {
    SeqNIMPP,  // sequential neighbour-interaction marked point process
    ExpNIMCP,  // exponential intensity-marked Cox process, negative coupling
    ExpPIMCP,  // exponential intensity-marked Cox process, positive coupling
    GNIMCP,    // Gaussian noise intensity-marked Cox process
    GNCP,      // Gaussian noise Cox process (independent random field marks)
};

/// Parameterisation of one generative model. Only the fields used by the
/// chosen family are consulted.
struct ModelSpec {
    ModelFamily family = ModelFamily::SeqNIMPP;
    std::size_t n = 200;
    Window window{0.0, 100.0, 0.0, 100.0};

    // SeqNIMPP
    double mark_mean = 24.0;      // mu
    double mark_variance = 9.0;   // sigma^2
    double theta = 0.0;
    double interaction_radius = 6.0;  // R

    // Cox families
    double a = 0.0;
    double b = 0.0;
    double sigma_eps = 0.0;
    GaussianFieldSpec field{-4.4, 4.0, 0.5};

    /// Draw marks i.i.d. from the family's marginal mark law, independent of
    /// the point geometry. Gives the exact random-labelling null for any
    /// family, including those whose b=0 limit degenerates to constant marks.
    bool detach_marks = false;

    void validate() const {
        if (n < 1) throw ValidationError("point count must be positive");
        switch (family) {
            case ModelFamily::SeqNIMPP:
                if (theta < 0.0) throw ValidationError("unsupported attraction regime");
                if (!(interaction_radius > 0.0))
                    throw ValidationError("interaction radius must be positive");
                if (!(mark_mean > 0.0)) throw ValidationError("mark mean must be positive");
                if (mark_variance < 0.0) throw ValidationError("mark variance must be non-negative");
                break;
            case ModelFamily::ExpNIMCP:
            case ModelFamily::ExpPIMCP:
                if (a < 0.0 || b < 0.0 || !(a + b > 0.0))
                    throw ValidationError("exponential mark parameters require a,b >= 0, a+b > 0");
                break;
            case ModelFamily::GNIMCP:
            case ModelFamily::GNCP:
                if (!(a > 0.0)) throw ValidationError("mark scale a must be positive");
                if (sigma_eps < 0.0) throw ValidationError("noise sd must be non-negative");
                break;
        }
        field.validate();
    }
};

/// n i.i.d. points with density proportional to exp(field): a lattice cell
/// is chosen with probability proportional to exp(Z(cell)), then the point
/// is placed uniformly inside the cell.
inline std::vector<Point> simulate_lgcp_points(const FieldLattice& field, std::size_t n,
                                               const Window& window, std::mt19937_64& rng) {
    if (n < 1) throw ValidationError("point count must be positive");
    const std::size_t cells = field.values.size();
    double z_max = -std::numeric_limits<double>::infinity();
    for (double z : field.values) z_max = std::max(z_max, z);
    if (!std::isfinite(z_max)) throw NumericalError("degenerate intensity");

    std::vector<double> cumulative(cells);
    double total = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
        total += std::exp(field.values[i] - z_max);
        cumulative[i] = total;
    }
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("degenerate intensity");

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<Point> points;
    points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = unif(rng) * total;
        const auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
        const auto cell = static_cast<std::size_t>(it - cumulative.begin());
        const std::size_t ix = cell % field.nx;
        const std::size_t iy = cell / field.nx;
        double x = field.x0 + (static_cast<double>(ix) + unif(rng)) * field.cell;
        double y = field.y0 + (static_cast<double>(iy) + unif(rng)) * field.cell;
        x = std::clamp(x, window.x_min(), window.x_max());
        y = std::clamp(y, window.y_min(), window.y_max());
        points.push_back(Point{x, y});
    }
    return points;
}

namespace detail {

/// Gaussian truncated below at zero, sampled by rejection.
inline double truncated_normal(double mean, double sd, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(mean, sd);
    for (;;) {
        const double m = normal(rng);
        if (m >= 0.0) return m;
    }
}

inline double exp_mean_draw(double mean, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0 / mean);
    return expo(rng);
}

}  // namespace detail

/// Sequential placement with marks drawn first; each location is an exact
/// draw from its conditional density by rejection with acceptance
/// probability exp(-U_k).
inline MarkedPattern simulate_seqnimpp(const ModelSpec& spec, std::mt19937_64& rng) {
    spec.validate();
    const std::size_t n = spec.n;
    const double mu = spec.mark_mean;
    const double sd = std::sqrt(spec.mark_variance);
    const double R = spec.interaction_radius;
    const double influence_scale = (mu / R) * (mu / R);

    std::vector<double> marks(n);
    for (double& m : marks) m = detail::truncated_normal(mu, sd, rng);

    std::uniform_real_distribution<double> ux(spec.window.x_min(), spec.window.x_max());
    std::uniform_real_distribution<double> uy(spec.window.y_min(), spec.window.y_max());
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<Point> points;
    points.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        constexpr long kMaxProposals = 1000000;
        bool placed = false;
        for (long attempt = 0; attempt < kMaxProposals; ++attempt) {
            const Point z{ux(rng), uy(rng)};
            double energy = 0.0;
            bool singular = false;
            for (std::size_t i = 0; i < k; ++i) {
                const double d = std::hypot(points[i].x - z.x, points[i].y - z.y);
                if (d == 0.0) {
                    singular = true;  // 1/d blows up, acceptance probability 0
                    break;
                }
                if (d < R * marks[i] / mu)
                    energy += spec.theta * marks[i] * marks[k] / (influence_scale * d);
            }
            if (singular) continue;
            if (energy == 0.0 || unif(rng) < std::exp(-energy)) {
                points.push_back(z);
                placed = true;
                break;
            }
        }
        if (!placed)
            throw NumericalError("placement failure at point " + std::to_string(k + 1));
    }
    return MarkedPattern(std::move(points), std::move(marks), spec.window);
}

/// Exponential marks with conditional mean a + b/Lambda (negative variant)
/// or a + b*Lambda (positive variant), Lambda read at the nearest node.
inline std::vector<double> assign_marks_expimcp(const std::vector<Point>& points,
                                                const FieldLattice& field, double a, double b,
                                                bool positive_variant, std::mt19937_64& rng) {
    std::vector<double> marks;
    marks.reserve(points.size());
    for (const Point& p : points) {
        const double lambda = std::exp(field.nearest(p.x, p.y));
        double mean;
        if (positive_variant) {
            mean = a + b * lambda;
        } else {
            if (!(lambda > 0.0)) throw NumericalError("intensity underflow");
            mean = a + b / lambda;
        }
        if (!(mean > 0.0) || !std::isfinite(mean)) throw NumericalError("intensity underflow");
        marks.push_back(detail::exp_mean_draw(mean, rng));
    }
    return marks;
}

/// Lognormal conditional marks a*exp(b*(Z* - mu_Z)/(1+sigma_eps)) with
/// Z* = Z + eps read from the intensity field of the point simulation.
inline std::vector<double> assign_marks_gnimcp(const std::vector<Point>& points,
                                               const FieldLattice& field, double a, double b,
                                               double sigma_eps, double mu_z,
                                               std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, sigma_eps);
    std::vector<double> marks;
    marks.reserve(points.size());
    for (const Point& p : points) {
        const double z_star = field.nearest(p.x, p.y) + (sigma_eps > 0.0 ? noise(rng) : 0.0);
        marks.push_back(a * std::exp(b * (z_star - mu_z) / (1.0 + sigma_eps)));
    }
    return marks;
}

/// Marks from an independently simulated field lattice, same formula as
/// GNIMCP but with no coupling to the point-generating intensity.
inline std::vector<double> assign_marks_gncp(const std::vector<Point>& points,
                                             const FieldLattice& mark_field, double a, double b,
                                             double sigma_eps, double mu_z,
                                             std::mt19937_64& rng) {
    return assign_marks_gnimcp(points, mark_field, a, b, sigma_eps, mu_z, rng);
}

/// Simulator for one model spec; the field sampler's spectral setup is
/// computed once and reused across replicates.
class ModelSimulator {
public:
    explicit ModelSimulator(const ModelSpec& spec) : spec_(spec) {
        spec.validate();
        if (spec.family != ModelFamily::SeqNIMPP)
            sampler_.emplace(spec.field, spec.window);
    }

    const ModelSpec& spec() const { return spec_; }

    MarkedPattern simulate(std::uint64_t seed) const {
        std::mt19937_64 rng = make_rng(seed);
        return simulate(rng);
    }

    MarkedPattern simulate(std::mt19937_64& rng) const {
        if (spec_.family == ModelFamily::SeqNIMPP) {
            if (!spec_.detach_marks) return simulate_seqnimpp(spec_, rng);
            // detached null: theta=0 geometry with the same marginal marks
            ModelSpec null_spec = spec_;
            null_spec.theta = 0.0;
            null_spec.detach_marks = false;
            return simulate_seqnimpp(null_spec, rng);
        }

        const FieldLattice field = sampler_->sample(rng);
        std::vector<Point> points = simulate_lgcp_points(field, spec_.n, spec_.window, rng);
        std::vector<double> marks;
        if (spec_.detach_marks) {
            marks = detached_marks(points.size(), rng);
        } else {
            switch (spec_.family) {
                case ModelFamily::ExpNIMCP:
                    marks = assign_marks_expimcp(points, field, spec_.a, spec_.b, false, rng);
                    break;
                case ModelFamily::ExpPIMCP:
                    marks = assign_marks_expimcp(points, field, spec_.a, spec_.b, true, rng);
                    break;
                case ModelFamily::GNIMCP:
                    marks = assign_marks_gnimcp(points, field, spec_.a, spec_.b, spec_.sigma_eps,
                                                spec_.field.mean, rng);
                    break;
                case ModelFamily::GNCP: {
                    const FieldLattice mark_field = sampler_->sample(rng);
                    marks = assign_marks_gncp(points, mark_field, spec_.a, spec_.b,
                                              spec_.sigma_eps, spec_.field.mean, rng);
                    break;
                }
                default:
                    throw ValidationError("unknown model family");
            }
        }
        return MarkedPattern(std::move(points), std::move(marks), spec_.window);
    }

private:
    /// Marginal mark law of the family, independent of locations. For the GN
    /// families Z*(x)-mu_Z is N(0, 1+sigma_eps^2) marginally.
    std::vector<double> detached_marks(std::size_t count, std::mt19937_64& rng) const {
        std::vector<double> marks;
        marks.reserve(count);
        switch (spec_.family) {
            case ModelFamily::ExpNIMCP:
            case ModelFamily::ExpPIMCP:
                // b=0-equivalent: i.i.d. exponential with mean a
                if (!(spec_.a > 0.0))
                    throw ValidationError("detached exponential marks require a > 0");
                for (std::size_t i = 0; i < count; ++i)
                    marks.push_back(detail::exp_mean_draw(spec_.a, rng));
                break;
            case ModelFamily::GNIMCP:
            case ModelFamily::GNCP: {
                std::normal_distribution<double> normal(
                    0.0, std::sqrt(1.0 + spec_.sigma_eps * spec_.sigma_eps));
                for (std::size_t i = 0; i < count; ++i)
                    marks.push_back(spec_.a *
                                    std::exp(spec_.b * normal(rng) / (1.0 + spec_.sigma_eps)));
                break;
            }
            default:
                throw ValidationError("detached marks unsupported for this family");
        }
        return marks;
    }

    ModelSpec spec_;
    std::optional<GaussianFieldSampler> sampler_;
};

}  // namespace markdev
