#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "markdev/error.hpp"

namespace markdev {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Rectangular observation window [x_min,x_max] x [y_min,y_max].
class Window {
public:
    Window(double x_min, double x_max, double y_min, double y_max)
        : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
        if (!(x_max > x_min) || !(y_max > y_min))
            throw ValidationError("window sides must have positive length");
    }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double y_min() const { return y_min_; }
    double y_max() const { return y_max_; }
    double width() const { return x_max_ - x_min_; }
    double height() const { return y_max_ - y_min_; }
    double area() const { return width() * height(); }

    /// Closed window: boundary points count as inside.
    bool contains(double x, double y) const {
        return x >= x_min_ && x <= x_max_ && y >= y_min_ && y <= y_max_;
    }
    bool contains(const Point& p) const { return contains(p.x, p.y); }

private:
    double x_min_, x_max_, y_min_, y_max_;
};

/// Arithmetic grid of distances r_min, r_min+step, ..., r_max.
class RGrid {
public:
    RGrid(double r_min, double r_max, double step)
        : r_min_(r_min), r_max_(r_max), step_(step) {
        if (r_min < 0.0 || r_max < r_min)
            throw ValidationError("r-grid bounds must satisfy 0 <= r_min <= r_max");
        if (!(step > 0.0))
            throw ValidationError("r-grid step must be positive");
        const double count = (r_max - r_min) / step;
        const double rounded = std::round(count);
        if (std::abs(count - rounded) > 1e-9)
            throw ValidationError("r-grid step does not divide the interval");
        size_ = static_cast<std::size_t>(rounded) + 1;
    }

    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }
    double step() const { return step_; }
    std::size_t size() const { return size_; }
    double value(std::size_t i) const { return r_min_ + static_cast<double>(i) * step_; }

    std::vector<double> values() const {
        std::vector<double> v(size_);
        for (std::size_t i = 0; i < size_; ++i) v[i] = value(i);
        return v;
    }

    bool operator==(const RGrid& o) const {
        return r_min_ == o.r_min_ && r_max_ == o.r_max_ && step_ == o.step_;
    }
    bool operator!=(const RGrid& o) const { return !(*this == o); }

    /// True when `sub` is an aligned sub-grid (same step, endpoints on this grid).
    bool contains_subgrid(const RGrid& sub) const {
        if (std::abs(sub.step() - step_) > 1e-12) return false;
        if (sub.r_min() < r_min_ - 1e-9 || sub.r_max() > r_max_ + 1e-9) return false;
        const double offset = (sub.r_min() - r_min_) / step_;
        return std::abs(offset - std::round(offset)) <= 1e-9;
    }

    /// Index of the grid point closest to r; r must lie on the grid.
    std::size_t index_of(double r) const {
        const double pos = (r - r_min_) / step_;
        const double rounded = std::round(pos);
        if (std::abs(pos - rounded) > 1e-9 || rounded < 0.0 ||
            static_cast<std::size_t>(rounded) >= size_)
            throw ValidationError("value not on the r-grid");
        return static_cast<std::size_t>(rounded);
    }

private:
    double r_min_, r_max_, step_;
    std::size_t size_;
};

/// A summary function tabulated on an r-grid.
struct FunctionEstimate {
    RGrid grid;
    std::vector<double> values;

    FunctionEstimate(RGrid g, std::vector<double> v)
        : grid(std::move(g)), values(std::move(v)) {
        if (values.size() != grid.size())
            throw ValidationError("function estimate length does not match grid");
        for (double x : values)
            if (!std::isfinite(x))
                throw ValidationError("function estimate contains non-finite value");
    }
};

/// Point locations with non-negative real marks in a rectangular window.
class MarkedPattern {
public:
    MarkedPattern(std::vector<Point> points, std::vector<double> marks, Window window)
        : points_(std::move(points)), marks_(std::move(marks)), window_(window) {
        if (points_.size() != marks_.size())
            throw ValidationError("points and marks must have equal length");
        for (const Point& p : points_)
            if (!window_.contains(p))
                throw ValidationError("point outside window");
        for (double m : marks_)
            if (!(m >= 0.0) || !std::isfinite(m))
                throw ValidationError("marks must be non-negative and finite");
        has_duplicates_ = detect_duplicates();
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Point>& points() const { return points_; }
    const std::vector<double>& marks() const { return marks_; }
    const Window& window() const { return window_; }
    /// Duplicate locations are accepted but flagged.
    bool has_duplicate_points() const { return has_duplicates_; }

    MarkedPattern with_marks(std::vector<double> marks) const {
        return MarkedPattern(points_, std::move(marks), window_);
    }

private:
    bool detect_duplicates() const {
        std::vector<std::pair<double, double>> xy;
        xy.reserve(points_.size());
        for (const Point& p : points_) xy.emplace_back(p.x, p.y);
        std::sort(xy.begin(), xy.end());
        return std::adjacent_find(xy.begin(), xy.end()) != xy.end();
    }

    std::vector<Point> points_;
    std::vector<double> marks_;
    Window window_;
    bool has_duplicates_ = false;
};

struct MarkSummary {
    double mean = 0.0;
    double variance = 0.0;  // unbiased, denominator n-1
};

/// Symmetric Euclidean distance matrix, stored dense row-major.
class DistanceMatrix {
public:
    explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    double& at(std::size_t i, std::size_t j) { return d_[i * n_ + j]; }

private:
    std::size_t n_;
    std::vector<double> d_;
};

inline DistanceMatrix pairwise_distances(const MarkedPattern& pattern) {
    const std::size_t n = pattern.size();
    if (n < 2) throw ValidationError("pattern too small");
    const auto& pts = pattern.points();
    DistanceMatrix d(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dist = std::hypot(pts[i].x - pts[j].x, pts[i].y - pts[j].y);
            d.at(i, j) = dist;
            d.at(j, i) = dist;
        }
    }
    return d;
}

inline MarkSummary mark_summary(const MarkedPattern& pattern) {
    const std::size_t n = pattern.size();
    if (n < 2) throw ValidationError("pattern too small");
    const auto& m = pattern.marks();
    double mean = 0.0;
    for (double v : m) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : m) ss += (v - mean) * (v - mean);
    return MarkSummary{mean, ss / static_cast<double>(n - 1)};
}

/// Regular lattice of cell centers covering the window, row-major from the
/// lower-left corner. The cell size must divide both window sides.
inline std::vector<Point> window_grid(const Window& window, double cell) {
    if (!(cell > 0.0)) throw ValidationError("cell size must be positive");
    const double nx_d = window.width() / cell;
    const double ny_d = window.height() / cell;
    const double nx_r = std::round(nx_d);
    const double ny_r = std::round(ny_d);
    if (std::abs(nx_d - nx_r) > 1e-9 || std::abs(ny_d - ny_r) > 1e-9)
        throw ValidationError("cell size incompatible with window");
    const auto nx = static_cast<std::size_t>(nx_r);
    const auto ny = static_cast<std::size_t>(ny_r);
    std::vector<Point> centers;
    centers.reserve(nx * ny);
    for (std::size_t iy = 0; iy < ny; ++iy)
        for (std::size_t ix = 0; ix < nx; ++ix)
            centers.push_back(Point{window.x_min() + (static_cast<double>(ix) + 0.5) * cell,
                                    window.y_min() + (static_cast<double>(iy) + 0.5) * cell});
    return centers;
}

}  // namespace markdev
