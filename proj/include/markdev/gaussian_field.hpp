#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <random>
#include <vector>

#include "markdev/error.hpp"
#include "markdev/geometry.hpp"

namespace markdev {

namespace detail {

/// In-place iterative radix-2 FFT; n must be a power of two.
inline void fft_pow2(std::complex<double>* a, std::size_t n) {
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// 2D FFT of a row-major px x py array (px columns, py rows).
inline void fft2(std::vector<std::complex<double>>& a, std::size_t px, std::size_t py) {
    for (std::size_t row = 0; row < py; ++row) fft_pow2(a.data() + row * px, px);
    std::vector<std::complex<double>> col(py);
    for (std::size_t c = 0; c < px; ++c) {
        for (std::size_t row = 0; row < py; ++row) col[row] = a[row * px + c];
        fft_pow2(col.data(), py);
        for (std::size_t row = 0; row < py; ++row) a[row * px + c] = col[row];
    }
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace detail

/// Stationary Gaussian random field with exponential covariance
/// exp(-r/range) (unit marginal variance) on a regular lattice.
struct GaussianFieldSpec {
    double mean = 0.0;
    double range = 1.0;  // phi_Z
    double cell = 0.5;

    void validate() const {
        if (!(range > 0.0)) throw ValidationError("field range must be positive");
        if (!(cell > 0.0)) throw ValidationError("field cell size must be positive");
    }
};

/// Row-major lattice of field values at the cell centers of window_grid.
struct FieldLattice {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double cell = 0.0;
    double x0 = 0.0;  // window origin
    double y0 = 0.0;
    std::vector<double> values;

    double at(std::size_t ix, std::size_t iy) const { return values[iy * nx + ix]; }

    /// Value at the lattice node nearest to (x, y).
    double nearest(double x, double y) const {
        auto clamp_idx = [](double t, std::size_t n) {
            if (t < 0.0) return std::size_t{0};
            auto i = static_cast<std::size_t>(t);
            return i >= n ? n - 1 : i;
        };
        const std::size_t ix = clamp_idx((x - x0) / cell, nx);
        const std::size_t iy = clamp_idx((y - y0) / cell, ny);
        return at(ix, iy);
    }
};

/// Circulant-embedding sampler. The spectral setup is computed once per
/// (spec, window) and shared read-only by all draws.
class GaussianFieldSampler {
public:
    GaussianFieldSampler(const GaussianFieldSpec& spec, const Window& window)
        : spec_(spec), window_(window) {
        spec.validate();
        const double nxd = window.width() / spec.cell;
        const double nyd = window.height() / spec.cell;
        if (std::abs(nxd - std::round(nxd)) > 1e-9 || std::abs(nyd - std::round(nyd)) > 1e-9)
            throw ValidationError("cell size incompatible with window");
        nx_ = static_cast<std::size_t>(std::round(nxd));
        ny_ = static_cast<std::size_t>(std::round(nyd));
        // pad to at least twice each side, rounded up to a power of two
        px_ = detail::next_pow2(2 * nx_);
        py_ = detail::next_pow2(2 * ny_);
        build_spectrum();
    }

    /// Fraction of spectral mass clipped to restore non-negative
    /// definiteness of the embedding; above 1e-3 construction fails.
    double clipped_mass_fraction() const { return clipped_fraction_; }

    FieldLattice sample(std::mt19937_64& rng) const {
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<std::complex<double>> a(px_ * py_);
        for (std::size_t i = 0; i < a.size(); ++i)
            a[i] = amplitude_[i] * std::complex<double>(normal(rng), normal(rng));
        detail::fft2(a, px_, py_);

        FieldLattice lattice{nx_, ny_, spec_.cell, window_.x_min(), window_.y_min(), {}};
        lattice.values.resize(nx_ * ny_);
        for (std::size_t iy = 0; iy < ny_; ++iy)
            for (std::size_t ix = 0; ix < nx_; ++ix)
                lattice.values[iy * nx_ + ix] = a[iy * px_ + ix].real() + spec_.mean;
        return lattice;
    }

    std::size_t nx() const { return nx_; }
    std::size_t ny() const { return ny_; }

private:
    void build_spectrum() {
        // covariance on the padded torus
        std::vector<std::complex<double>> c(px_ * py_);
        for (std::size_t iy = 0; iy < py_; ++iy) {
            const double wy = static_cast<double>(std::min(iy, py_ - iy)) * spec_.cell;
            for (std::size_t ix = 0; ix < px_; ++ix) {
                const double wx = static_cast<double>(std::min(ix, px_ - ix)) * spec_.cell;
                const double d = std::hypot(wx, wy);
                c[iy * px_ + ix] = std::exp(-d / spec_.range);
            }
        }
        detail::fft2(c, px_, py_);

        double total = 0.0;
        double clipped = 0.0;
        amplitude_.resize(px_ * py_);
        const double norm = static_cast<double>(px_ * py_);
        for (std::size_t i = 0; i < c.size(); ++i) {
            const double lambda = c[i].real();
            total += std::abs(lambda);
            if (lambda < 0.0) {
                clipped += -lambda;
                amplitude_[i] = 0.0;
            } else {
                amplitude_[i] = std::sqrt(lambda / norm);
            }
        }
        clipped_fraction_ = total > 0.0 ? clipped / total : 0.0;
        if (clipped_fraction_ > 1e-3) throw NumericalError("embedding failure");
    }

    GaussianFieldSpec spec_;
    Window window_;
    std::size_t nx_, ny_, px_, py_;
    std::vector<double> amplitude_;  // sqrt(lambda / (px*py)), clipped at 0
    double clipped_fraction_ = 0.0;
};

}  // namespace markdev
