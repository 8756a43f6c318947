#include "cgm/grid.hpp"

#include <algorithm>

namespace cgm {

const char* mask_name(Mask m) {
    switch (m) {
        case Mask::ok: return "ok";
        case Mask::boundary: return "boundary";
        case Mask::non_immersed: return "non_immersed";
        case Mask::degenerate: return "degenerate";
        case Mask::bad_signature: return "bad_signature";
        case Mask::indeterminate: return "indeterminate";
        case Mask::not_line: return "not_line";
        case Mask::inconsistent: return "inconsistent";
    }
    return "unknown";
}

GridSpec make_grid(double u0, double u1, double v0, double v1, int nu, int nv, bool per_u,
                   bool per_v) {
    if (nu < 8 || nv < 8) throw ContractViolation("make_grid: grids must be at least 8x8");
    GridSpec g;
    g.nu = nu;
    g.nv = nv;
    g.u0 = u0;
    g.v0 = v0;
    g.periodic_u = per_u;
    g.periodic_v = per_v;
    g.hu = per_u ? (u1 - u0) / nu : (u1 - u0) / (nu - 1);
    g.hv = per_v ? (v1 - v0) / nv : (v1 - v0) / (nv - 1);
    return g;
}

int stencil_radius(int order) {
    switch (order) {
        case 2: return 1;
        case 4: return 2;
        case 6: return 3;
    }
    throw ContractViolation("fd order must be 2, 4 or 6");
}

Stencil central_stencil(int order, double h) {
    Stencil st;
    st.radius = stencil_radius(order);
    st.weights.assign(2 * st.radius + 1, 0.0);
    auto w = [&](int off) -> double& { return st.weights[off + st.radius]; };
    switch (order) {
        case 2:
            w(1) = 0.5 / h;
            w(-1) = -0.5 / h;
            break;
        case 4:
            w(1) = 8.0 / (12.0 * h);
            w(-1) = -8.0 / (12.0 * h);
            w(2) = -1.0 / (12.0 * h);
            w(-2) = 1.0 / (12.0 * h);
            break;
        case 6:
            w(1) = 45.0 / (60.0 * h);
            w(-1) = -45.0 / (60.0 * h);
            w(2) = -9.0 / (60.0 * h);
            w(-2) = 9.0 / (60.0 * h);
            w(3) = 1.0 / (60.0 * h);
            w(-3) = -1.0 / (60.0 * h);
            break;
    }
    return st;
}

bool grid_neighbor(const GridSpec& g, int axis, int i, int j, int offset, int& oi, int& oj) {
    oi = i;
    oj = j;
    if (axis == 0) {
        oi = i + offset;
        if (g.periodic_u) {
            oi = ((oi % g.nu) + g.nu) % g.nu;
        } else if (oi < 0 || oi >= g.nu) {
            return false;
        }
    } else {
        oj = j + offset;
        if (g.periodic_v) {
            oj = ((oj % g.nv) + g.nv) % g.nv;
        } else if (oj < 0 || oj >= g.nv) {
            return false;
        }
    }
    return true;
}

ScalarSummary summarize(const Field<double>& f) {
    ScalarSummary s;
    double total = 0.0;
    f.for_each_ok([&](int, int, double v) {
        s.max = std::max(s.max, v);
        total += v;
        ++s.count;
    });
    s.mean = s.count > 0 ? total / s.count : 0.0;
    return s;
}

}  // namespace cgm
