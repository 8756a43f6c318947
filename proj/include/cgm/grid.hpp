#pragma once

// Regular 2d grids of values (scalars, vectors, operators) with per-point validity
// masks and central finite-difference passes. Periodic axes wrap; non-periodic axes
// lose a stencil radius of points per derivative pass.

#include <cstdint>
#include <vector>

#include "cgm/errors.hpp"

namespace cgm {

enum class Mask : std::uint8_t {
    ok = 0,
    boundary,        // stencil ran off a non-periodic edge
    non_immersed,    // immersion residual below tolerance
    degenerate,      // Gram condition number beyond bound
    bad_signature,   // V fiber not (3,1)
    indeterminate,   // singular-value gap straddles the rank threshold
    not_line,        // intersection not 1-dimensional / realness failed
    inconsistent,    // pointwise data contradicts branch (e.g. rank > 2)
};

const char* mask_name(Mask m);

struct GridSpec {
    int nu = 0, nv = 0;
    double u0 = 0.0, v0 = 0.0;
    double hu = 0.0, hv = 0.0;
    bool periodic_u = false, periodic_v = false;

    double u(int i) const { return u0 + hu * i; }
    double v(int j) const { return v0 + hv * j; }
    int size() const { return nu * nv; }
    int idx(int i, int j) const { return i * nv + j; }
    bool operator==(const GridSpec&) const = default;
};

/// Build the grid over [u0,u1]x[v0,v1]: periodic axes exclude the duplicate
/// endpoint, non-periodic axes include both.
GridSpec make_grid(double u0, double u1, double v0, double v1, int nu, int nv, bool per_u,
                   bool per_v);

template <typename T>
struct Field {
    GridSpec grid;
    std::vector<T> values;
    std::vector<Mask> mask;

    Field() = default;
    explicit Field(const GridSpec& g) : grid(g), values(g.size()), mask(g.size(), Mask::ok) {}

    T& at(int i, int j) { return values[grid.idx(i, j)]; }
    const T& at(int i, int j) const { return values[grid.idx(i, j)]; }
    Mask& mask_at(int i, int j) { return mask[grid.idx(i, j)]; }
    Mask mask_at(int i, int j) const { return mask[grid.idx(i, j)]; }
    bool ok(int i, int j) const { return mask[grid.idx(i, j)] == Mask::ok; }

    template <typename F>
    void for_each_ok(F&& f) const {
        for (int i = 0; i < grid.nu; ++i)
            for (int j = 0; j < grid.nv; ++j)
                if (ok(i, j)) f(i, j, at(i, j));
    }
};

struct Stencil {
    int radius = 1;
    // weights for offsets -radius..+radius, already divided by h
    std::vector<double> weights;
};

/// Central first-derivative stencil of the given order (2, 4 or 6).
Stencil central_stencil(int order, double h);

int stencil_radius(int order);

/// Neighbor index along an axis; returns false when falling off a non-periodic edge.
bool grid_neighbor(const GridSpec& g, int axis, int i, int j, int offset, int& oi, int& oj);

/// Central finite difference of a field along axis 0 (u) or 1 (v). A point keeps
/// Mask::ok only if every stencil sample is ok; otherwise it inherits the first
/// bad sample's mask (boundary when off the edge).
template <typename T>
Field<T> fd_derivative(const Field<T>& f, int axis, int order) {
    const GridSpec& g = f.grid;
    const double h = axis == 0 ? g.hu : g.hv;
    if (h <= 0.0) throw ContractViolation("fd_derivative: empty axis");
    const Stencil st = central_stencil(order, h);
    Field<T> out(g);
    for (int i = 0; i < g.nu; ++i) {
        for (int j = 0; j < g.nv; ++j) {
            Mask worst = f.mask_at(i, j);
            bool off_edge = false;
            for (int o = -st.radius; o <= st.radius && worst == Mask::ok; ++o) {
                if (o == 0) continue;
                int oi, oj;
                if (!grid_neighbor(g, axis, i, j, o, oi, oj)) {
                    off_edge = true;
                    break;
                }
                if (f.mask_at(oi, oj) != Mask::ok) worst = f.mask_at(oi, oj);
            }
            if (off_edge || worst != Mask::ok) {
                out.mask_at(i, j) = off_edge ? Mask::boundary : worst;
                out.at(i, j) = f.at(i, j);  // placeholder, masked
                continue;
            }
            T acc = f.at(i, j) * st.weights[st.radius];  // center weight is 0
            for (int o = -st.radius; o <= st.radius; ++o) {
                if (o == 0) continue;
                int oi, oj;
                grid_neighbor(g, axis, i, j, o, oi, oj);
                acc += f.at(oi, oj) * st.weights[o + st.radius];
            }
            out.at(i, j) = acc;
        }
    }
    return out;
}

/// Pointwise combination of two fields; mask is the worse of the two.
template <typename A, typename B, typename F>
auto zip_fields(const Field<A>& a, const Field<B>& b, F&& f) {
    using R = decltype(f(a.values[0], b.values[0]));
    Field<R> out(a.grid);
    for (int k = 0; k < a.grid.size(); ++k) {
        out.mask[k] = a.mask[k] != Mask::ok ? a.mask[k] : b.mask[k];
        if (out.mask[k] == Mask::ok) out.values[k] = f(a.values[k], b.values[k]);
    }
    return out;
}

template <typename A, typename F>
auto map_field(const Field<A>& a, F&& f) {
    using R = decltype(f(a.values[0]));
    Field<R> out(a.grid);
    out.mask = a.mask;
    for (int k = 0; k < a.grid.size(); ++k)
        if (out.mask[k] == Mask::ok) out.values[k] = f(a.values[k]);
    return out;
}

struct ScalarSummary {
    double max = 0.0;
    double mean = 0.0;
    int count = 0;
};

ScalarSummary summarize(const Field<double>& f);

}  // namespace cgm
