#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmc {

using Point = std::array<double, 2>;
using Vec2 = std::array<double, 2>;

enum class GridKind { interval, rectangle, radial };

inline std::string to_string(GridKind kind)
{
    switch (kind) {
    case GridKind::interval: return "interval";
    case GridKind::rectangle: return "rectangle";
    case GridKind::radial: return "radial";
    }
    return "unknown";
}

/// Measure of the unit ball in R^n.
inline double unit_ball_volume(int n)
{
    return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

/// Surface area of the unit sphere S^{n-1} in R^n.
inline double unit_sphere_area(int n)
{
    return n * unit_ball_volume(n);
}

/**
 * Input to build_grid. For radial grids lower[0]/upper[0] hold r_min/r_max
 * and `dimension` is the ambient dimension N of the ball or annulus.
 */
struct GridDescription {
    GridKind kind = GridKind::interval;
    Point lower{0.0, 0.0};
    Point upper{1.0, 1.0};
    std::array<std::size_t, 2> nodes{3, 1};
    int dimension = 2;
};

/**
 * A point where a full gradient vector is sampled. Component j of the
 * gradient is (u[to[j]] - u[from[j]]) / h_j. In one dimension a sample sits
 * on an edge; on rectangles every cell carries four corner samples, each
 * built from the two cell edges meeting at its anchor corner.
 */
struct GradientSample {
    std::array<std::size_t, 2> from{0, 0};
    std::array<std::size_t, 2> to{0, 0};
    std::size_t anchor = 0;
    Point position{0.0, 0.0};
};

/**
 * Uniform tensor grid (interval or rectangle) or radial segment. Immutable
 * once built; fields refer to it through a shared pointer.
 */
class Grid {
public:
    GridKind kind() const { return kind_; }
    int axes() const { return kind_ == GridKind::rectangle ? 2 : 1; }
    /// Ambient dimension: 1 for intervals, 2 for rectangles, N for radial grids.
    int dimension() const { return dimension_; }
    std::size_t extent(int axis) const { return nodes_[axis]; }
    double spacing(int axis = 0) const { return h_[axis]; }
    double lower(int axis = 0) const { return lower_[axis]; }
    double upper(int axis = 0) const { return upper_[axis]; }
    std::size_t node_count() const { return weights_.size(); }

    std::size_t index(std::size_t i, std::size_t j = 0) const { return j * nodes_[0] + i; }
    std::array<std::size_t, 2> multi_index(std::size_t node) const
    {
        return {node % nodes_[0], node / nodes_[0]};
    }
    double coordinate(std::size_t node, int axis = 0) const
    {
        auto const mi = multi_index(node);
        return lower_[axis] + static_cast<double>(mi[axis]) * h_[axis];
    }
    Point point(std::size_t node) const
    {
        return {coordinate(node, 0), axes() == 2 ? coordinate(node, 1) : 0.0};
    }

    std::span<const double> weights() const { return weights_; }
    double weight(std::size_t node) const { return weights_[node]; }
    double measure() const { return measure_; }

    bool is_boundary(std::size_t node) const { return boundary_flag_[node] != 0; }
    std::span<const std::size_t> boundary_nodes() const { return boundary_; }
    std::span<const std::size_t> interior_nodes() const { return interior_; }

    std::span<const GradientSample> samples() const { return samples_; }
    std::span<const double> sample_weights() const { return sample_weights_; }

    /// Outward unit normal at a boundary node (diagonal at rectangle corners).
    Vec2 outward_normal(std::size_t node) const
    {
        if (axes() == 1) {
            return {multi_index(node)[0] == 0 ? -1.0 : 1.0, 0.0};
        }
        auto const [i, j] = multi_index(node);
        Vec2 n{0.0, 0.0};
        if (i == 0) n[0] = -1.0;
        if (i + 1 == nodes_[0]) n[0] = 1.0;
        if (j == 0) n[1] = -1.0;
        if (j + 1 == nodes_[1]) n[1] = 1.0;
        double const len = std::hypot(n[0], n[1]);
        if (len > 0.0) {
            n[0] /= len;
            n[1] /= len;
        }
        return n;
    }

    std::string header() const
    {
        std::ostringstream os;
        os << std::setprecision(17);
        os << "# grid=" << to_string(kind_) << " n=" << nodes_[0];
        if (axes() == 2) os << 'x' << nodes_[1];
        os << " h=" << h_[0];
        if (axes() == 2) os << 'x' << h_[1];
        if (kind_ == GridKind::radial) os << " N=" << dimension_;
        return os.str();
    }

    friend std::shared_ptr<const Grid> build_grid(GridDescription const& desc);

private:
    Grid() = default;

    GridKind kind_ = GridKind::interval;
    int dimension_ = 1;
    std::array<std::size_t, 2> nodes_{1, 1};
    Point lower_{0.0, 0.0};
    Point upper_{0.0, 0.0};
    Vec2 h_{1.0, 1.0};
    double measure_ = 0.0;
    std::vector<double> weights_;
    std::vector<char> boundary_flag_;
    std::vector<std::size_t> boundary_;
    std::vector<std::size_t> interior_;
    std::vector<GradientSample> samples_;
    std::vector<double> sample_weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

namespace detail {

// b^n - a^n without cancellation, for integer n >= 1.
inline double power_difference(double b, double a, int n)
{
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += std::pow(b, j) * std::pow(a, n - 1 - j);
    return (b - a) * sum;
}

} // namespace detail

inline GridPtr build_grid(GridDescription const& desc)
{
    std::shared_ptr<Grid> g(new Grid());
    g->kind_ = desc.kind;
    int const axes = desc.kind == GridKind::rectangle ? 2 : 1;
    for (int a = 0; a < axes; ++a) {
        if (!(desc.upper[a] > desc.lower[a])) throw std::invalid_argument("build_grid: extent must be positive");
        if (desc.nodes[a] < 3) throw std::invalid_argument("build_grid: at least 3 nodes per axis are required");
        g->nodes_[a] = desc.nodes[a];
        g->lower_[a] = desc.lower[a];
        g->upper_[a] = desc.upper[a];
        g->h_[a] = (desc.upper[a] - desc.lower[a]) / static_cast<double>(desc.nodes[a] - 1);
    }
    if (axes == 1) g->nodes_[1] = 1;

    std::size_t const nx = g->nodes_[0];
    std::size_t const ny = g->nodes_[1];
    std::size_t const n = nx * ny;
    g->weights_.assign(n, 0.0);
    g->boundary_flag_.assign(n, 0);

    switch (desc.kind) {
    case GridKind::interval: {
        g->dimension_ = 1;
        double const h = g->h_[0];
        for (std::size_t i = 0; i < nx; ++i) g->weights_[i] = (i == 0 || i + 1 == nx) ? 0.5 * h : h;
        g->boundary_flag_[0] = g->boundary_flag_[nx - 1] = 1;
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            GradientSample s;
            s.from = {i, i};
            s.to = {i + 1, i + 1};
            s.anchor = i;
            s.position = {g->lower_[0] + (static_cast<double>(i) + 0.5) * h, 0.0};
            g->samples_.push_back(s);
            g->sample_weights_.push_back(h);
        }
        g->measure_ = desc.upper[0] - desc.lower[0];
        break;
    }
    case GridKind::rectangle: {
        g->dimension_ = 2;
        double const hx = g->h_[0];
        double const hy = g->h_[1];
        for (std::size_t j = 0; j < ny; ++j) {
            double const wy = (j == 0 || j + 1 == ny) ? 0.5 * hy : hy;
            for (std::size_t i = 0; i < nx; ++i) {
                double const wx = (i == 0 || i + 1 == nx) ? 0.5 * hx : hx;
                std::size_t const k = g->index(i, j);
                g->weights_[k] = wx * wy;
                if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) g->boundary_flag_[k] = 1;
            }
        }
        for (std::size_t j = 0; j + 1 < ny; ++j) {
            for (std::size_t i = 0; i + 1 < nx; ++i) {
                for (std::size_t cj = 0; cj < 2; ++cj) {
                    for (std::size_t ci = 0; ci < 2; ++ci) {
                        GradientSample s;
                        s.from = {g->index(i, j + cj), g->index(i + ci, j)};
                        s.to = {g->index(i + 1, j + cj), g->index(i + ci, j + 1)};
                        s.anchor = g->index(i + ci, j + cj);
                        s.position = {g->lower_[0] + (static_cast<double>(i) + 0.25 + 0.5 * ci) * hx,
                                      g->lower_[1] + (static_cast<double>(j) + 0.25 + 0.5 * cj) * hy};
                        g->samples_.push_back(s);
                        g->sample_weights_.push_back(0.25 * hx * hy);
                    }
                }
            }
        }
        g->measure_ = (desc.upper[0] - desc.lower[0]) * (desc.upper[1] - desc.lower[1]);
        break;
    }
    case GridKind::radial: {
        if (desc.dimension < 2) throw std::invalid_argument("build_grid: radial grids need dimension N >= 2");
        if (desc.lower[0] < 0.0) throw std::invalid_argument("build_grid: radial grids need r_min >= 0");
        int const dim = desc.dimension;
        g->dimension_ = dim;
        double const h = g->h_[0];
        double const area = unit_sphere_area(dim);
        auto r = [&](double i) { return desc.lower[0] + i * h; };
        // Node weights: exact volumes of the dual shells, so the sum is the
        // exact measure of the annulus or ball.
        for (std::size_t i = 0; i < nx; ++i) {
            double const a = i == 0 ? r(0.0) : r(static_cast<double>(i) - 0.5);
            double const b = i + 1 == nx ? r(static_cast<double>(i)) : r(static_cast<double>(i) + 0.5);
            g->weights_[i] = area * detail::power_difference(b, a, dim) / dim;
        }
        if (desc.lower[0] > 0.0) g->boundary_flag_[0] = 1;
        g->boundary_flag_[nx - 1] = 1;
        // Face weights chosen so that a constant radial flux has the exact
        // pointwise divergence (N-1)/r at every interior node.
        std::vector<double> face(nx - 1);
        face[0] = area * std::pow(r(0.5), dim - 1) * h;
        for (std::size_t i = 1; i + 1 < nx; ++i) {
            face[i] = face[i - 1] + h * g->weights_[i] * (dim - 1) / r(static_cast<double>(i));
        }
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            GradientSample s;
            s.from = {i, i};
            s.to = {i + 1, i + 1};
            s.anchor = i;
            s.position = {r(static_cast<double>(i) + 0.5), 0.0};
            g->samples_.push_back(s);
            g->sample_weights_.push_back(face[i]);
        }
        g->measure_ = area * detail::power_difference(desc.upper[0], desc.lower[0], dim) / dim;
        break;
    }
    }

    for (std::size_t k = 0; k < n; ++k) {
        (g->boundary_flag_[k] ? g->boundary_ : g->interior_).push_back(k);
    }
    return g;
}

/// Nodal values on a grid.
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(GridPtr grid, double value = 0.0)
        : grid_(std::move(grid)), values_(grid_->node_count(), value)
    {
    }
    ScalarField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values))
    {
        if (values_.size() != grid_->node_count()) throw std::invalid_argument("ScalarField: value count must equal node count");
        for (double v : values_) {
            if (!std::isfinite(v)) throw std::invalid_argument("ScalarField: values must be finite");
        }
    }
    template <class F>
    static ScalarField sample(GridPtr grid, F&& fn)
    {
        std::vector<double> v(grid->node_count());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = fn(grid->point(k));
        return ScalarField(std::move(grid), std::move(v));
    }

    Grid const& grid() const { return *grid_; }
    GridPtr const& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }
    double& operator[](std::size_t k) { return values_[k]; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& data() { return values_; }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// One gradient-sized vector per gradient sample (unused components are zero).
class VectorField {
public:
    VectorField() = default;
    explicit VectorField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->samples().size(), Vec2{0.0, 0.0}) {}
    VectorField(GridPtr grid, std::vector<Vec2> values) : grid_(std::move(grid)), values_(std::move(values))
    {
        if (values_.size() != grid_->samples().size()) throw std::invalid_argument("VectorField: one vector per sample required");
        for (auto const& v : values_) {
            if (!std::isfinite(v[0]) || !std::isfinite(v[1])) throw std::invalid_argument("VectorField: values must be finite");
        }
    }

    Grid const& grid() const { return *grid_; }
    GridPtr const& grid_ptr() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    Vec2 const& operator[](std::size_t s) const { return values_[s]; }
    Vec2& operator[](std::size_t s) { return values_[s]; }
    std::span<const Vec2> values() const { return values_; }

    double max_norm() const
    {
        double m = 0.0;
        for (auto const& v : values_) m = std::max(m, std::hypot(v[0], v[1]));
        return m;
    }

private:
    GridPtr grid_;
    std::vector<Vec2> values_;
};

struct BoundaryTrace {
    std::vector<std::size_t> nodes;
    std::vector<double> u_trace;
    std::vector<double> normal_flux;
};

/// Quadrature-weighted sum over all nodes.
inline double integrate(ScalarField const& v)
{
    auto const w = v.grid().weights();
    double sum = 0.0;
    double carry = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        double const y = w[k] * v[k] - carry;
        double const t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

namespace detail {

// Value at a boundary node extrapolated from up to three interior nodes along
// the inward direction (di, dj), quadratically when enough nodes exist.
inline double extrapolate_inward(ScalarField const& u, std::size_t node, int di, int dj)
{
    auto const& g = u.grid();
    auto const mi = g.multi_index(node);
    std::vector<double> vals;
    for (int step = 1; step <= 3; ++step) {
        long const i = static_cast<long>(mi[0]) + step * di;
        long const j = static_cast<long>(mi[1]) + step * dj;
        if (i < 0 || j < 0 || i >= static_cast<long>(g.extent(0)) || j >= static_cast<long>(g.extent(1))) break;
        std::size_t const k = g.index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
        if (g.is_boundary(k)) break;
        vals.push_back(u[k]);
    }
    switch (vals.size()) {
    case 0: return u[node];
    case 1: return vals[0];
    case 2: return 2.0 * vals[0] - vals[1];
    default: return 3.0 * vals[0] - 3.0 * vals[1] + vals[2];
    }
}

} // namespace detail

/**
 * Per boundary node: the trace of u (quadratic one-sided extrapolation from
 * the interior) and the normal component of z averaged over the samples
 * anchored at that node.
 */
inline BoundaryTrace boundary_trace(ScalarField const& u, VectorField const& z)
{
    auto const& g = u.grid();
    if (&g != &z.grid()) throw std::invalid_argument("boundary_trace: fields live on different grids");
    std::vector<double> flux_sum(g.node_count(), 0.0);
    std::vector<int> flux_count(g.node_count(), 0);
    auto const samples = g.samples();
    for (std::size_t s = 0; s < samples.size(); ++s) {
        std::size_t const a = samples[s].anchor;
        if (g.axes() == 1) {
            // In 1-D an edge touches two nodes; credit both ends.
            for (std::size_t node : {samples[s].from[0], samples[s].to[0]}) {
                if (!g.is_boundary(node)) continue;
                auto const nu = g.outward_normal(node);
                flux_sum[node] += z[s][0] * nu[0];
                ++flux_count[node];
            }
        } else if (g.is_boundary(a)) {
            auto const nu = g.outward_normal(a);
            flux_sum[a] += z[s][0] * nu[0] + z[s][1] * nu[1];
            ++flux_count[a];
        }
    }
    BoundaryTrace bt;
    for (std::size_t node : g.boundary_nodes()) {
        auto const nu = g.outward_normal(node);
        int const di = nu[0] > 0.0 ? -1 : (nu[0] < 0.0 ? 1 : 0);
        int const dj = nu[1] > 0.0 ? -1 : (nu[1] < 0.0 ? 1 : 0);
        bt.nodes.push_back(node);
        bt.u_trace.push_back(detail::extrapolate_inward(u, node, di, dj));
        bt.normal_flux.push_back(flux_count[node] > 0 ? flux_sum[node] / flux_count[node] : 0.0);
    }
    return bt;
}

/// CSV dump: grid header line, then `coord...,value` per node.
inline void write_field_csv(std::ostream& os, ScalarField const& f)
{
    auto const& g = f.grid();
    os << g.header() << '\n';
    os << std::setprecision(17);
    for (std::size_t k = 0; k < f.size(); ++k) {
        os << g.coordinate(k, 0);
        if (g.axes() == 2) os << ',' << g.coordinate(k, 1);
        os << ',' << f[k] << '\n';
    }
}

} // namespace pmc
