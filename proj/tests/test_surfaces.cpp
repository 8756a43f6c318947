#include <doctest.h>

#include <cmath>

#include "cgm/report.hpp"
#include "cgm/surfaces.hpp"

using namespace cgm;

namespace {

const char* kFamilies[] = {"round_sphere", "clifford", "torus:r=0.6", "catenoid", "enneper"};

}  // namespace

TEST_CASE("chart values at the origin") {
    LiftedChart cl = make_chart("clifford", 16, 16);
    RVec expect(5);
    expect << 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0), 0, 1;
    CHECK((cl.lift(0, 0) - expect).norm() < 1e-15);

    LiftedChart rs = make_chart("round_sphere", 16, 16);
    RVec e2(5);
    e2 << 0, 0, 1, 0, 1;
    CHECK((rs.lift(0, 0) - e2).norm() < 1e-15);
}

TEST_CASE("torus at r = 1/sqrt(2) coincides with clifford") {
    const double r = 1.0 / std::sqrt(2.0);
    LiftedChart t = make_chart("torus:r=" + std::to_string(r), 16, 16);
    LiftedChart c = make_chart("clifford", 16, 16);
    for (double u : {0.0, 0.37, 1.2})
        for (double v : {0.0, -0.8, 2.1}) CHECK((t.lift(u, v) - c.lift(u, v)).norm() < 1e-12);
}

TEST_CASE("lightcone and conformality over the grid, all families") {
    for (const char* fam : kFamilies) {
        CAPTURE(fam);
        LiftedChart chart = make_chart(fam, 32, 32);
        Field<Jet2> jets = analytic_jet_field(chart);
        double lc = 0, conf = 0;
        jets.for_each_ok([&](int, int, const Jet2& j) {
            lc = std::max(lc, std::abs(inner(j.sigma, j.sigma)));
            conf = std::max(conf, conformality_residual(j));
        });
        CHECK(lc < 1e-12);
        CHECK(conf < 1e-10);
    }
}

TEST_CASE("f^{1,0} is rank-2 isotropic wherever the chart immerses") {
    for (const char* fam : kFamilies) {
        CAPTURE(fam);
        LiftedChart chart = make_chart(fam, 16, 16);
        Field<Jet2> jets = analytic_jet_field(chart);
        jets.for_each_ok([&](int, int, const Jet2& j) {
            if (immersion_residual(j) < 1e-6) return;
            CMat f10(chart.ambient_dim(), 2);
            f10.col(0) = j.sigma.cast<std::complex<double>>();
            f10.col(1) = 0.5 * (j.su.cast<std::complex<double>>() -
                                std::complex<double>(0, 1) * j.sv.cast<std::complex<double>>());
            ComplexSubspaceBasis b(f10);  // construction asserts rank 2
            CHECK(is_isotropic(b).residual < 1e-10);
        });
    }
}

TEST_CASE("f^{1,0} cap f^{0,1} recovers the lift line") {
    LiftedChart chart = make_chart("torus:r=0.6", 16, 16);
    const Jet2 j = chart.jet(0.4, 1.0);
    CMat f10(5, 2);
    f10.col(0) = j.sigma.cast<std::complex<double>>();
    f10.col(1) = 0.5 * (j.su.cast<std::complex<double>>() -
                        std::complex<double>(0, 1) * j.sv.cast<std::complex<double>>());
    ComplexSubspaceBasis b10(f10), b01(f10.conjugate());
    ComplexSubspaceBasis f = intersect(b10, b01);
    REQUIRE(f.dim() == 1);
    auto [line, realness] = real_representative(f.vector(0));
    CHECK(realness < 1e-10);
    CHECK(line_angle_sin(line, j.sigma) < 1e-10);
}

TEST_CASE("sheared clifford chart is far from conformal") {
    // x(u, v + 0.3 u): jet by the chain rule
    LiftedChart c = make_chart("clifford", 16, 16);
    const double slope = 0.3;
    double worst = 0.0;
    for (double u : {0.0, 0.5, 1.0}) {
        for (double v : {0.0, 0.7}) {
            Jet2 j = c.jet(u, v + slope * u);
            Jet2 sheared = j;
            sheared.su = j.su + slope * j.sv;
            sheared.suu = j.suu + 2 * slope * j.suv + slope * slope * j.svv;
            sheared.suv = j.suv + slope * j.svv;
            worst = std::max(worst, conformality_residual(sheared));
        }
    }
    CHECK(worst > 0.01);
}

TEST_CASE("immersion residual: clifford bounded below, constant chart zero") {
    LiftedChart c = make_chart("clifford", 16, 16);
    Field<Jet2> jets = analytic_jet_field(c);
    double lo = 1.0;
    jets.for_each_ok([&](int, int, const Jet2& j) { lo = std::min(lo, immersion_residual(j)); });
    CHECK(lo > 0.9);  // orthonormal frame: the two projected derivatives are balanced

    LiftedChart constant = c;
    RVec s0 = c.lift(0.1, 0.2);
    constant.lift = [s0](double, double) { return s0; };
    constant.jet = [s0](double, double) {
        Jet2 j;
        j.sigma = s0;
        j.su = j.sv = j.suu = j.suv = j.svv = RVec::Zero(s0.size());
        return j;
    };
    CHECK(immersion_residual(constant.jet(0.3, 0.4)) == 0.0);
}

TEST_CASE("enneper immerses on its domain") {
    LiftedChart e = make_chart("enneper", 32, 32);
    Field<Jet2> jets = analytic_jet_field(e);
    double lo = 1.0;
    jets.for_each_ok([&](int, int, const Jet2& j) { lo = std::min(lo, immersion_residual(j)); });
    CHECK(lo > 1e-3);
}

TEST_CASE("dual lift: clifford antipode") {
    LiftedChart c = make_chart("clifford", 16, 16);
    RVec d0 = dual_lift(c, 0, 0);
    RVec expect(5);
    expect << -1 / std::sqrt(2.0), 0, -1 / std::sqrt(2.0), 0, 1;
    CHECK(line_angle_sin(d0, expect) < 1e-14);
    for (double u : {0.0, 0.9}) {
        for (double v : {0.2, 1.4}) {
            RVec d = dual_lift(c, u, v);
            CHECK(std::abs(inner(d, d)) < 1e-12);              // on the lightcone
            CHECK(inner(d, c.lift(u, v)) == doctest::Approx(-2.0));  // fixed pairing with sigma
        }
    }
}

TEST_CASE("dual lift: minimal surfaces map to the point at infinity") {
    for (const char* fam : {"catenoid", "enneper"}) {
        LiftedChart m = make_chart(fam, 16, 16);
        RVec d = dual_lift(m, 0.3, 0.1);
        RVec expect = RVec::Zero(6);
        expect(4) = -1;
        expect(5) = 1;
        CHECK((d - expect).norm() < 1e-15);
        CHECK(std::abs(inner(d, d)) < 1e-15);
    }
}

TEST_CASE("dual lift unsupported for rank-0 and rank-2 families") {
    CHECK_THROWS_AS(dual_lift(make_chart("round_sphere", 16, 16), 0, 0), ContractViolation);
    CHECK_THROWS_AS(dual_lift(make_chart("torus:r=0.6", 16, 16), 0, 0), ContractViolation);
}

TEST_CASE("gauge rescaling preserves the lightcone, conformality and the fiber") {
    for (const char* fam : {"clifford", "torus:r=0.6", "catenoid"}) {
        CAPTURE(fam);
        LiftedChart chart = make_chart(fam, 16, 16);
        LiftedChart scaled = gauge_rescaled(chart, default_gauge);
        const RVec e = metric_diagonal(chart.ambient_dim());
        for (double u : {0.1, 1.3}) {
            for (double v : {0.0, 0.8}) {
                const Jet2 j = scaled.jet(u, v);
                CHECK(std::abs(inner(j.sigma, j.sigma)) < 1e-12);
                CHECK(conformality_residual(j) < 1e-10);
                // span{jet} unchanged: same metric projector
                auto fiber = [&](const Jet2& jj) {
                    RMat b(chart.ambient_dim(), 4);
                    b.col(0) = jj.sigma;
                    b.col(1) = jj.su;
                    b.col(2) = jj.sv;
                    b.col(3) = jj.laplacian();
                    return projector(SubspaceBasis(b));
                };
                CHECK((fiber(j) - fiber(chart.jet(u, v))).norm() < 1e-10);
            }
        }
    }
}

TEST_CASE("finite-difference jets converge to analytic jets at stencil order") {
    std::vector<double> hs, errs;
    for (int n : {16, 32, 64}) {
        LiftedChart chart = make_chart("torus:r=0.6", n, n);
        Field<Jet2> fd = fd_jet_field(chart, 2);
        Field<Jet2> an = analytic_jet_field(chart);
        double worst = 0.0;
        fd.for_each_ok([&](int i, int j, const Jet2& jj) {
            const Jet2& aj = an.at(i, j);
            worst = std::max({worst, (jj.su - aj.su).norm(), (jj.sv - aj.sv).norm(),
                              (jj.suu - aj.suu).norm(), (jj.suv - aj.suv).norm(),
                              (jj.svv - aj.svv).norm()});
        });
        hs.push_back(chart.grid.hu);
        errs.push_back(worst);
    }
    const double slope = fit_slope(hs, errs);
    CHECK(slope == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("ambient padding keeps the chart on the lightcone") {
    LiftedChart c = make_chart("clifford", 16, 16, 5);  // S^3 surface inside S^5
    CHECK(c.ambient_dim() == 7);
    const Jet2 j = c.jet(0.3, 0.4);
    CHECK(std::abs(inner(j.sigma, j.sigma)) < 1e-14);
    CHECK(conformality_residual(j) < 1e-12);
    CHECK_THROWS_AS(make_chart("catenoid", 16, 16, 3), ContractViolation);
}

TEST_CASE("unknown families and bad parameters are rejected") {
    CHECK_THROWS_AS(make_chart("klein_bottle", 16, 16), ContractViolation);
    CHECK_THROWS_AS(make_chart("torus", 16, 16), ContractViolation);
    CHECK_THROWS_AS(make_chart("torus:r=1.5", 16, 16), ContractViolation);
    CHECK_THROWS_AS(make_chart("torus:r=abc", 16, 16), ContractViolation);
    CHECK_THROWS_AS(make_chart("clifford", 4, 16), ContractViolation);
}
