#pragma once

// Built-in conformally parametrized surfaces in S^n with lightcone lifts
// sigma(u,v) and analytic 2-jets. These charts are the oracles for everything
// downstream.
//
// Catalog (lift sigma = (x, 1) for x in S^{n_ambient}, or the R^3 conformal
// embedding for minimal surfaces):
//   round_sphere  stereographic equatorial S^2 in S^3
//   clifford      x = (cos a, sin a, cos b, sin b)/sqrt(2),  a = sqrt(2) u, b = sqrt(2) v
//   torus:r=R     x = (r cos(u/r), r sin(u/r), R cos(v/R), R sin(v/R)), R = sqrt(1-r^2)
//   catenoid      minimal in R^3, isothermal (cosh v cos u, cosh v sin u, v)
//   enneper       minimal in R^3, standard cubic parametrization

#include <functional>
#include <map>
#include <string>

#include "cgm/grid.hpp"
#include "cgm/minkowski.hpp"

namespace cgm {

/// Lift value with first and second partials at one parameter point.
struct Jet2 {
    RVec sigma, su, sv, suu, suv, svv;
    RVec laplacian() const { return suu + svv; }
};

struct LiftedChart {
    std::string name;
    int n = 3;  // sphere dimension; ambient dim = n + 2
    GridSpec grid;
    std::function<RVec(double, double)> lift;
    std::function<Jet2(double, double)> jet;  // analytic jet; may be empty

    int ambient_dim() const { return n + 2; }
    bool has_analytic_jet() const { return static_cast<bool>(jet); }
};

/// Build a catalog chart. `family` is `name` or `name:key=value,...`
/// (e.g. "torus:r=0.6"). n_override >= the family's natural n pads the ambient
/// space with zero coordinates; 0 keeps the natural dimension.
LiftedChart make_chart(const std::string& family, int nu, int nv, int n_override = 0);

/// |(d_Z sigma, d_Z sigma)| normalized by the Euclidean jet scale; zero iff (u,v)
/// are conformal coordinates. Invariant under sigma -> lambda sigma.
double conformality_residual(const Jet2& jet);

/// Smallest singular value of [sigma_u; sigma_v] with the sigma direction
/// projected out, over the largest; zero at branch points / constant maps.
double immersion_residual(const Jet2& jet);

/// Pointwise Willmore dual of a rank-1 chart: the second null line of the
/// congruence fiber. Clifford family: antipodal lift (-x, 1). Minimal surfaces in
/// R^3: the constant lift of the point at infinity. Throws for families whose
/// congruence has no dual line (round_sphere: rank 0; generic torus: rank 2).
RVec dual_lift(const LiftedChart& chart, double u, double v);

/// Scalar gauge with a 2-jet, for lift rescaling tests.
struct ScalarJet2 {
    double val = 1, du = 0, dv = 0, duu = 0, duv = 0, dvv = 0;
};

/// Chart with lift replaced by lambda(u,v) * sigma(u,v) (same surface, new gauge).
LiftedChart gauge_rescaled(const LiftedChart& chart,
                           std::function<ScalarJet2(double, double)> lambda);

/// The standard rescaling used by the gauge-invariance checks:
/// lambda = 1 + sin(u+v)/2.
ScalarJet2 default_gauge(double u, double v);

/// Sample the lift over the chart grid.
Field<RVec> sample_lift(const LiftedChart& chart);

/// Jets by central finite differences of the sampled lift (used when no analytic
/// jet is available, and by the jet-convergence tests).
Field<Jet2> fd_jet_field(const LiftedChart& chart, int order);

Field<Jet2> analytic_jet_field(const LiftedChart& chart);

}  // namespace cgm
