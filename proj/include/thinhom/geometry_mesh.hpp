// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thinhom/error.hpp"

namespace thinhom {

template <int Dim>
using Point = Eigen::Matrix<double, Dim, 1>;

/// Box-shaped physical setting: the layer Omega x (-eps, eps) and its reference cell.
struct Geometry {
    int d = 2;                              //!< spatial dimension of the layer
    std::vector<double> omega_extent{1.0};  //!< lengths of the box Omega in R^{d-1}
    double eps = 0.125;                     //!< thin half-width
    bool lateral_periodic = false;          //!< identify opposite lateral faces instead of walls

    int horizontal_dim() const { return d - 1; }

    void validate() const
    {
        if (d != 2 && d != 3)
            throw Error(Errc::invalid_geometry, "d must be 2 or 3, got " + std::to_string(d));
        if (static_cast<int>(omega_extent.size()) != d - 1)
            throw Error(Errc::invalid_geometry, "omega_extent needs d-1 entries");
        for (double l : omega_extent)
            if (!(l > 0.0))
                throw Error(Errc::invalid_geometry, "omega_extent entries must be positive");
        if (!(eps > 0.0))
            throw Error(Errc::invalid_geometry, "eps must be positive");
    }
};

enum class FaceKind { dirichlet, neumann, periodic };

enum class FacetTag { wall_bottom, wall_top, lateral_wall, natural, periodic_master, periodic_slave };

struct Face {
    FaceKind kind = FaceKind::neumann;
    FacetTag tag = FacetTag::natural;
};

template <int Dim>
struct BoundaryFacet {
    std::size_t element;
    int axis;
    int side;  // 0 = low face, 1 = high face
    FacetTag tag;
    Point<Dim> normal;
    double area;
};

/// Periodic identification of a vertex on a high face with its image on the low face.
struct PeriodicPair {
    std::size_t slave;
    std::size_t master;
    int axis;
};

template <int Dim>
struct Location {
    std::size_t element;
    std::array<int, Dim> cell;
    Point<Dim> local;  // reference coordinates in [0,1]^Dim
};

/// Tensor-product mesh of an axis-aligned box (intervals, quads or hexes).
/// Vertices are numbered lexicographically with axis 0 running fastest; local
/// vertex k of an element sits at offset bit_j(k) along axis j.
template <int Dim>
class StructuredMesh {
public:
    static constexpr int dim = Dim;
    static constexpr int vertices_per_element = 1 << Dim;
    using Axes = std::array<std::vector<double>, Dim>;
    using Faces = std::array<Face, 2 * Dim>;

    StructuredMesh(Axes axes, Faces faces) : axes_(std::move(axes)), faces_(faces)
    {
        for (int k = 0; k < Dim; ++k) {
            if (axes_[k].size() < 2)
                throw Error(Errc::invalid_resolution, "every axis needs at least one cell");
            for (std::size_t i = 1; i < axes_[k].size(); ++i)
                if (!(axes_[k][i] > axes_[k][i - 1]))
                    throw Error(Errc::invalid_geometry, "axis coordinates must increase strictly");
            if ((faces_[2 * k].kind == FaceKind::periodic) != (faces_[2 * k + 1].kind == FaceKind::periodic))
                throw Error(Errc::invalid_geometry, "periodicity must be set on both faces of an axis");
        }
        build_explicit();
    }

    const std::vector<double>& axis(int k) const { return axes_[k]; }
    int cells(int k) const { return static_cast<int>(axes_[k].size()) - 1; }
    int vertex_count(int k) const { return static_cast<int>(axes_[k].size()); }
    double lower(int k) const { return axes_[k].front(); }
    double upper(int k) const { return axes_[k].back(); }
    double extent(int k) const { return upper(k) - lower(k); }
    const Face& face(int k, int side) const { return faces_[2 * k + side]; }
    bool periodic(int k) const { return faces_[2 * k].kind == FaceKind::periodic; }

    std::size_t n_elements() const { return elements_.size(); }
    std::size_t n_vertices() const { return nodes_.size(); }
    const std::vector<Point<Dim>>& nodes() const { return nodes_; }
    const std::array<std::size_t, vertices_per_element>& element(std::size_t e) const { return elements_[e]; }
    const std::vector<PeriodicPair>& periodic_pairs() const { return periodic_pairs_; }
    const std::vector<BoundaryFacet<Dim>>& boundary_facets() const { return facets_; }

    std::array<int, Dim> element_index(std::size_t e) const
    {
        std::array<int, Dim> idx{};
        for (int k = 0; k < Dim; ++k) {
            idx[k] = static_cast<int>(e % cells(k));
            e /= cells(k);
        }
        return idx;
    }

    std::size_t element_id(const std::array<int, Dim>& idx) const
    {
        std::size_t id = 0;
        for (int k = Dim - 1; k >= 0; --k)
            id = id * cells(k) + idx[k];
        return id;
    }

    std::size_t vertex_id(const std::array<int, Dim>& idx) const
    {
        std::size_t id = 0;
        for (int k = Dim - 1; k >= 0; --k)
            id = id * vertex_count(k) + idx[k];
        return id;
    }

    Point<Dim> element_lower(std::size_t e) const
    {
        const auto idx = element_index(e);
        Point<Dim> p;
        for (int k = 0; k < Dim; ++k)
            p[k] = axes_[k][idx[k]];
        return p;
    }

    Point<Dim> element_size(std::size_t e) const
    {
        const auto idx = element_index(e);
        Point<Dim> h;
        for (int k = 0; k < Dim; ++k)
            h[k] = axes_[k][idx[k] + 1] - axes_[k][idx[k]];
        return h;
    }

    /// Determinant of the affine map from [0,1]^Dim onto element e.
    double jacobian(std::size_t e) const { return element_size(e).prod(); }

    double volume() const
    {
        double v = 1.0;
        for (int k = 0; k < Dim; ++k)
            v *= extent(k);
        return v;
    }

    /// Number of vertices left after periodic identification.
    std::size_t distinct_vertex_count() const
    {
        std::size_t n = 1;
        for (int k = 0; k < Dim; ++k)
            n *= static_cast<std::size_t>(periodic(k) ? cells(k) : vertex_count(k));
        return n;
    }

    /// Element containing x and the reference coordinates of x in it. Points
    /// on interior faces go to the higher element, except on the upper boundary.
    std::optional<Location<Dim>> locate(const Point<Dim>& x, double tol = 1e-12) const
    {
        Location<Dim> loc;
        for (int k = 0; k < Dim; ++k) {
            const auto& ax = axes_[k];
            const double slack = tol * std::max(1.0, extent(k));
            if (x[k] < ax.front() - slack || x[k] > ax.back() + slack)
                return std::nullopt;
            auto it = std::upper_bound(ax.begin(), ax.end(), x[k]);
            int c = static_cast<int>(it - ax.begin()) - 1;
            c = std::clamp(c, 0, cells(k) - 1);
            loc.cell[k] = c;
            loc.local[k] = std::clamp((x[k] - ax[c]) / (ax[c + 1] - ax[c]), 0.0, 1.0);
        }
        loc.element = element_id(loc.cell);
        return loc;
    }

    /// Sum of area-weighted outward normals over all geometric boundary facets.
    Point<Dim> normal_sum() const
    {
        Point<Dim> s = Point<Dim>::Zero();
        for (const auto& f : facets_)
            s += f.area * f.normal;
        return s;
    }

    double boundary_area() const
    {
        double a = 0.0;
        for (const auto& f : facets_)
            a += f.area;
        return a;
    }

    bool same_structure(const StructuredMesh& other) const
    {
        if (axes_ != other.axes_)
            return false;
        for (int i = 0; i < 2 * Dim; ++i)
            if (faces_[i].kind != other.faces_[i].kind)
                return false;
        return true;
    }

    /// Throws if one of the structural invariants is violated.
    void check_invariants() const
    {
        for (const auto& pr : periodic_pairs_) {
            const auto& s = nodes_[pr.slave];
            const auto& m = nodes_[pr.master];
            for (int k = 0; k < Dim; ++k) {
                if (k == pr.axis)
                    continue;
                if (std::abs(s[k] - m[k]) > 1e-12 * std::max(1.0, std::abs(s[k])))
                    throw Error(Errc::invalid_geometry, "periodic pair does not match in transverse coordinates");
            }
            if (std::abs(s[pr.axis] - upper(pr.axis)) > 1e-12 * extent(pr.axis)
                || std::abs(m[pr.axis] - lower(pr.axis)) > 1e-12 * extent(pr.axis))
                throw Error(Errc::invalid_geometry, "periodic pair is not on opposite faces");
        }
        for (std::size_t e = 0; e < n_elements(); ++e)
            if (!(jacobian(e) > 0.0))
                throw Error(Errc::invalid_geometry, "non-positive element Jacobian");
        if (normal_sum().norm() > 1e-10 * std::max(1.0, boundary_area()))
            throw Error(Errc::invalid_geometry, "boundary normals do not close");
    }

private:
    void build_explicit()
    {
        std::size_t nv = 1, ne = 1;
        for (int k = 0; k < Dim; ++k) {
            nv *= vertex_count(k);
            ne *= cells(k);
        }
        nodes_.resize(nv);
        for (std::size_t v = 0; v < nv; ++v) {
            std::size_t r = v;
            for (int k = 0; k < Dim; ++k) {
                nodes_[v][k] = axes_[k][r % vertex_count(k)];
                r /= vertex_count(k);
            }
        }
        elements_.resize(ne);
        for (std::size_t e = 0; e < ne; ++e) {
            const auto idx = element_index(e);
            for (int a = 0; a < vertices_per_element; ++a) {
                std::array<int, Dim> vi{};
                for (int k = 0; k < Dim; ++k)
                    vi[k] = idx[k] + ((a >> k) & 1);
                elements_[e][a] = vertex_id(vi);
            }
        }
        for (std::size_t v = 0; v < nv; ++v) {
            std::array<int, Dim> vi{};
            std::size_t r = v;
            for (int k = 0; k < Dim; ++k) {
                vi[k] = static_cast<int>(r % vertex_count(k));
                r /= vertex_count(k);
            }
            for (int k = 0; k < Dim; ++k) {
                if (!periodic(k) || vi[k] != cells(k))
                    continue;
                auto mi = vi;
                mi[k] = 0;
                periodic_pairs_.push_back({v, vertex_id(mi), k});
            }
        }
        for (int k = 0; k < Dim; ++k)
            for (int side = 0; side < 2; ++side) {
                const int fixed = side == 0 ? 0 : cells(k) - 1;
                for (std::size_t e = 0; e < ne; ++e) {
                    const auto idx = element_index(e);
                    if (idx[k] != fixed)
                        continue;
                    const Point<Dim> h = element_size(e);
                    double area = 1.0;
                    for (int j = 0; j < Dim; ++j)
                        if (j != k)
                            area *= h[j];
                    Point<Dim> n = Point<Dim>::Zero();
                    n[k] = side == 0 ? -1.0 : 1.0;
                    facets_.push_back({e, k, side, faces_[2 * k + side].tag, n, area});
                }
            }
    }

    Axes axes_;
    Faces faces_;
    std::vector<Point<Dim>> nodes_;
    std::vector<std::array<std::size_t, vertices_per_element>> elements_;
    std::vector<PeriodicPair> periodic_pairs_;
    std::vector<BoundaryFacet<Dim>> facets_;
};

inline std::vector<double> uniform_axis(double a, double b, int cells)
{
    std::vector<double> ax(cells + 1);
    for (int i = 0; i <= cells; ++i)
        ax[i] = a + (b - a) * static_cast<double>(i) / cells;
    ax.back() = b;
    return ax;
}

/// Uniform box mesh; faces given per axis as (low, high).
template <int Dim>
StructuredMesh<Dim> build_box_mesh(const Point<Dim>& lower, const Point<Dim>& upper,
                                   const std::array<int, Dim>& cells,
                                   const typename StructuredMesh<Dim>::Faces& faces)
{
    typename StructuredMesh<Dim>::Axes axes;
    for (int k = 0; k < Dim; ++k) {
        if (cells[k] < 1)
            throw Error(Errc::invalid_resolution, "cell count must be positive");
        axes[k] = uniform_axis(lower[k], upper[k], cells[k]);
    }
    return StructuredMesh<Dim>(std::move(axes), faces);
}

inline Face periodic_face(int side)
{
    return {FaceKind::periodic, side == 0 ? FacetTag::periodic_master : FacetTag::periodic_slave};
}

/// Reference cell [0,1]^{d-1} x [-1,1], periodic horizontally, walls at zeta = +-1.
template <int Dim>
StructuredMesh<Dim> build_cell_mesh(const Geometry& geometry, int nx, int nz)
{
    geometry.validate();
    if (geometry.d != Dim)
        throw Error(Errc::invalid_geometry, "geometry dimension does not match the mesh dimension");
    if (nx < 1)
        throw Error(Errc::invalid_resolution, "nx must be at least 1");
    if (nz < 2 || nz % 2 != 0)
        throw Error(Errc::invalid_resolution, "nz must be even and at least 2");
    typename StructuredMesh<Dim>::Axes axes;
    typename StructuredMesh<Dim>::Faces faces;
    for (int k = 0; k + 1 < Dim; ++k) {
        axes[k] = uniform_axis(0.0, 1.0, nx);
        faces[2 * k] = periodic_face(0);
        faces[2 * k + 1] = periodic_face(1);
    }
    axes[Dim - 1] = uniform_axis(-1.0, 1.0, nz);
    faces[2 * Dim - 2] = {FaceKind::dirichlet, FacetTag::wall_bottom};
    faces[2 * Dim - 1] = {FaceKind::dirichlet, FacetTag::wall_top};
    return StructuredMesh<Dim>(std::move(axes), faces);
}

/// Number of whole periods of length eps fitting in `length`, rounded.
inline int period_count(double length, double eps)
{
    const double ratio = length / eps;
    const int n = std::max(1, static_cast<int>(std::lround(ratio)));
    if (std::abs(ratio - n) > 1e-9 * ratio)
        std::clog << "warning: eps = " << eps << " does not divide extent " << length
                  << "; using " << n << " periods (extent " << n * eps << ")\n";
    return n;
}

/// Thin layer Omega x (-eps, eps) resolving each period with `elements_per_period` cells.
template <int Dim>
StructuredMesh<Dim> build_thin_mesh(const Geometry& geometry, int elements_per_period, int nz)
{
    geometry.validate();
    if (geometry.d != Dim)
        throw Error(Errc::invalid_geometry, "geometry dimension does not match the mesh dimension");
    const double min_extent = *std::min_element(geometry.omega_extent.begin(), geometry.omega_extent.end());
    if (geometry.eps >= min_extent)
        throw Error(Errc::thin_domain_violated, "eps must be smaller than every extent of Omega");
    if (elements_per_period < 2)
        throw Error(Errc::invalid_resolution, "elements_per_period must be at least 2");
    if (nz < 1)
        throw Error(Errc::invalid_resolution, "nz must be at least 1");
    typename StructuredMesh<Dim>::Axes axes;
    typename StructuredMesh<Dim>::Faces faces;
    for (int k = 0; k + 1 < Dim; ++k) {
        const int periods = period_count(geometry.omega_extent[k], geometry.eps);
        axes[k] = uniform_axis(0.0, periods * geometry.eps, periods * elements_per_period);
        if (geometry.lateral_periodic) {
            faces[2 * k] = periodic_face(0);
            faces[2 * k + 1] = periodic_face(1);
        } else {
            faces[2 * k] = faces[2 * k + 1] = {FaceKind::dirichlet, FacetTag::lateral_wall};
        }
    }
    axes[Dim - 1] = uniform_axis(-geometry.eps, geometry.eps, nz);
    faces[2 * Dim - 2] = {FaceKind::dirichlet, FacetTag::wall_bottom};
    faces[2 * Dim - 1] = {FaceKind::dirichlet, FacetTag::wall_top};
    return StructuredMesh<Dim>(std::move(axes), faces);
}

/// Mesh of Omega itself (dimension d-1) with natural boundary conditions.
template <int MDim>
StructuredMesh<MDim> build_macro_mesh(const Geometry& geometry, int n)
{
    geometry.validate();
    if (geometry.d - 1 != MDim)
        throw Error(Errc::invalid_geometry, "macro mesh dimension must be d-1");
    if (n < 1)
        throw Error(Errc::invalid_resolution, "macro mesh needs at least one element per direction");
    typename StructuredMesh<MDim>::Axes axes;
    typename StructuredMesh<MDim>::Faces faces;
    for (int k = 0; k < MDim; ++k) {
        axes[k] = uniform_axis(0.0, geometry.omega_extent[k], n);
        if (geometry.lateral_periodic) {
            faces[2 * k] = periodic_face(0);
            faces[2 * k + 1] = periodic_face(1);
        } else {
            faces[2 * k] = faces[2 * k + 1] = {FaceKind::neumann, FacetTag::natural};
        }
    }
    return StructuredMesh<MDim>(std::move(axes), faces);
}

} // namespace thinhom
