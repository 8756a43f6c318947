#include "cgm/surfaces.hpp"

#include <cmath>
#include <sstream>

namespace cgm {

namespace {

std::map<std::string, double> parse_params(const std::string& family, std::string* name_out) {
    std::map<std::string, double> params;
    auto colon = family.find(':');
    *name_out = family.substr(0, colon);
    if (colon == std::string::npos) return params;
    std::stringstream ss(family.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw ContractViolation("make_chart: malformed parameter '" + item + "'");
        try {
            params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw ContractViolation("make_chart: bad numeric value in '" + item + "'");
        }
    }
    return params;
}

// jet for lifts sigma = (x, 0.., 1), x in S^{n_nat} placed in the leading slots
Jet2 sphere_lift_jet(int d, const Eigen::Vector4d& x, const Eigen::Vector4d& xu,
                     const Eigen::Vector4d& xv, const Eigen::Vector4d& xuu,
                     const Eigen::Vector4d& xuv, const Eigen::Vector4d& xvv) {
    Jet2 j;
    j.sigma = RVec::Zero(d);
    j.su = RVec::Zero(d);
    j.sv = RVec::Zero(d);
    j.suu = RVec::Zero(d);
    j.suv = RVec::Zero(d);
    j.svv = RVec::Zero(d);
    j.sigma.head<4>() = x;
    j.sigma(d - 1) = 1.0;
    j.su.head<4>() = xu;
    j.sv.head<4>() = xv;
    j.suu.head<4>() = xuu;
    j.suv.head<4>() = xuv;
    j.svv.head<4>() = xvv;
    return j;
}

Jet2 clifford_jet(int d, double u, double v) {
    const double s2 = std::sqrt(2.0);
    const double a = s2 * u, b = s2 * v;
    const double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b);
    return sphere_lift_jet(d, {ca / s2, sa / s2, cb / s2, sb / s2}, {-sa, ca, 0, 0},
                           {0, 0, -sb, cb}, {-s2 * ca, -s2 * sa, 0, 0}, {0, 0, 0, 0},
                           {0, 0, -s2 * cb, -s2 * sb});
}

Jet2 torus_jet(int d, double r, double u, double v) {
    const double R = std::sqrt(1.0 - r * r);
    const double al = u / r, be = v / R;
    const double ca = std::cos(al), sa = std::sin(al), cb = std::cos(be), sb = std::sin(be);
    return sphere_lift_jet(d, {r * ca, r * sa, R * cb, R * sb}, {-sa, ca, 0, 0}, {0, 0, -sb, cb},
                           {-ca / r, -sa / r, 0, 0}, {0, 0, 0, 0}, {0, 0, -cb / R, -sb / R});
}

Jet2 round_sphere_jet(int d, double u, double v) {
    const double w = 1.0 + u * u + v * v;
    const double q = 1.0 / w, q2 = q * q, q3 = q2 * q;
    Eigen::Vector4d x{2 * u * q, 2 * v * q, 2 * q - 1, 0};
    Eigen::Vector4d xu{2 * q - 4 * u * u * q2, -4 * u * v * q2, -4 * u * q2, 0};
    Eigen::Vector4d xv{-4 * u * v * q2, 2 * q - 4 * v * v * q2, -4 * v * q2, 0};
    Eigen::Vector4d xuu{-12 * u * q2 + 16 * u * u * u * q3, -4 * v * q2 + 16 * u * u * v * q3,
                        -4 * q2 + 16 * u * u * q3, 0};
    Eigen::Vector4d xuv{-4 * v * q2 + 16 * u * u * v * q3, -4 * u * q2 + 16 * u * v * v * q3,
                        16 * u * v * q3, 0};
    Eigen::Vector4d xvv{-4 * u * q2 + 16 * u * v * v * q3, -12 * v * q2 + 16 * v * v * v * q3,
                        -4 * q2 + 16 * v * v * q3, 0};
    return sphere_lift_jet(d, x, xu, xv, xuu, xuv, xvv);
}

// jet for lifts of conformal y: R^2 -> R^3 into the lightcone of R^{4,1} (d >= 6):
// sigma = (y, 0.., (1-|y|^2)/2, (1+|y|^2)/2)
struct YJet {
    Eigen::Vector3d y, yu, yv, yuu, yuv, yvv;
};

Jet2 r3_lift_jet(int d, const YJet& yj) {
    auto place = [&](const Eigen::Vector3d& y, double half_d_n2) {
        RVec s = RVec::Zero(d);
        s.head<3>() = y;
        s(d - 2) = -half_d_n2;
        s(d - 1) = half_d_n2;
        return s;
    };
    const double n2 = yj.y.squaredNorm();
    const double du = 2 * yj.y.dot(yj.yu);
    const double dv = 2 * yj.y.dot(yj.yv);
    const double duu = 2 * (yj.yu.squaredNorm() + yj.y.dot(yj.yuu));
    const double duv = 2 * (yj.yu.dot(yj.yv) + yj.y.dot(yj.yuv));
    const double dvv = 2 * (yj.yv.squaredNorm() + yj.y.dot(yj.yvv));
    Jet2 j;
    j.sigma = place(yj.y, 0.0);
    j.sigma(d - 2) = (1.0 - n2) / 2;
    j.sigma(d - 1) = (1.0 + n2) / 2;
    j.su = place(yj.yu, du / 2);
    j.sv = place(yj.yv, dv / 2);
    j.suu = place(yj.yuu, duu / 2);
    j.suv = place(yj.yuv, duv / 2);
    j.svv = place(yj.yvv, dvv / 2);
    return j;
}

YJet catenoid_y(double u, double v) {
    const double cu = std::cos(u), su = std::sin(u);
    const double ch = std::cosh(v), sh = std::sinh(v);
    YJet y;
    y.y = {ch * cu, ch * su, v};
    y.yu = {-ch * su, ch * cu, 0};
    y.yv = {sh * cu, sh * su, 1};
    y.yuu = {-ch * cu, -ch * su, 0};
    y.yuv = {-sh * su, sh * cu, 0};
    y.yvv = {ch * cu, ch * su, 0};
    return y;
}

YJet enneper_y(double u, double v) {
    YJet y;
    y.y = {u - u * u * u / 3 + u * v * v, -(v - v * v * v / 3 + v * u * u), u * u - v * v};
    y.yu = {1 - u * u + v * v, -2 * u * v, 2 * u};
    y.yv = {2 * u * v, -(1 - v * v + u * u), -2 * v};
    y.yuu = {-2 * u, -2 * v, 2};
    y.yuv = {2 * v, -2 * u, 0};
    y.yvv = {2 * u, 2 * v, -2};
    return y;
}

}  // namespace

LiftedChart make_chart(const std::string& family, int nu, int nv, int n_override) {
    std::string name;
    auto params = parse_params(family, &name);
    LiftedChart chart;
    chart.name = name;

    auto check_n = [&](int natural) {
        if (n_override == 0) return natural;
        if (n_override < natural)
            throw ContractViolation("make_chart: n must be >= " + std::to_string(natural) +
                                    " for family " + name);
        return n_override;
    };

    if (name == "clifford") {
        chart.n = check_n(3);
        const int d = chart.n + 2;
        const double p = std::sqrt(2.0) * M_PI;
        chart.grid = make_grid(0, p, 0, p, nu, nv, true, true);
        chart.jet = [d](double u, double v) { return clifford_jet(d, u, v); };
    } else if (name == "torus" || name == "torus_of_revolution") {
        auto it = params.find("r");
        if (it == params.end()) throw ContractViolation("torus requires parameter r");
        const double r = it->second;
        if (!(r > 0.0 && r < 1.0)) throw ContractViolation("torus: need 0 < r < 1");
        chart.n = check_n(3);
        const int d = chart.n + 2;
        const double R = std::sqrt(1.0 - r * r);
        chart.grid = make_grid(0, 2 * M_PI * r, 0, 2 * M_PI * R, nu, nv, true, true);
        chart.jet = [d, r](double u, double v) { return torus_jet(d, r, u, v); };
    } else if (name == "round_sphere") {
        chart.n = check_n(3);
        const int d = chart.n + 2;
        chart.grid = make_grid(-1, 1, -1, 1, nu, nv, false, false);
        chart.jet = [d](double u, double v) { return round_sphere_jet(d, u, v); };
    } else if (name == "catenoid") {
        chart.n = check_n(4);
        const int d = chart.n + 2;
        chart.grid = make_grid(0, 2 * M_PI, -0.8, 0.8, nu, nv, true, false);
        chart.jet = [d](double u, double v) { return r3_lift_jet(d, catenoid_y(u, v)); };
    } else if (name == "enneper") {
        chart.n = check_n(4);
        const int d = chart.n + 2;
        chart.grid = make_grid(-0.7, 0.7, -0.7, 0.7, nu, nv, false, false);
        chart.jet = [d](double u, double v) { return r3_lift_jet(d, enneper_y(u, v)); };
    } else {
        throw ContractViolation("make_chart: unknown family '" + name + "'");
    }
    auto jet = chart.jet;
    chart.lift = [jet](double u, double v) { return jet(u, v).sigma; };
    return chart;
}

double conformality_residual(const Jet2& jet) {
    const double guu = inner(jet.su, jet.su);
    const double gvv = inner(jet.sv, jet.sv);
    const double guv = inner(jet.su, jet.sv);
    // (d_Z sigma, d_Z sigma) = (guu - gvv - 2i guv) / 4
    const double num = 0.25 * std::hypot(guu - gvv, 2.0 * guv);
    const double den = 0.25 * (jet.su.squaredNorm() + jet.sv.squaredNorm());
    return num / std::max(den, 1e-300);
}

double immersion_residual(const Jet2& jet) {
    const double sn = jet.sigma.norm();
    RVec shat = jet.sigma / std::max(sn, 1e-300);
    RMat m(jet.sigma.size(), 2);
    m.col(0) = jet.su - shat * shat.dot(jet.su);
    m.col(1) = jet.sv - shat * shat.dot(jet.sv);
    Eigen::JacobiSVD<RMat> svd(m);
    const auto& s = svd.singularValues();
    if (s(0) < 1e-14) return 0.0;
    return s(1) / s(0);
}

RVec dual_lift(const LiftedChart& chart, double u, double v) {
    const int d = chart.ambient_dim();
    if (chart.name == "clifford") {
        RVec s = chart.lift(u, v);
        s.head(d - 1) *= -1.0;  // antipodal point, same congruence fiber
        return s;
    }
    if (chart.name == "catenoid" || chart.name == "enneper") {
        // minimal in R^3: the dual degenerates to the point at infinity
        RVec s = RVec::Zero(d);
        s(d - 2) = -1.0;
        s(d - 1) = 1.0;
        return s;
    }
    throw ContractViolation("dual_lift: no dual-pair oracle for family '" + chart.name + "'");
}

LiftedChart gauge_rescaled(const LiftedChart& chart,
                           std::function<ScalarJet2(double, double)> lambda) {
    LiftedChart out = chart;
    out.name = chart.name;
    auto base_jet = chart.jet;
    auto base_lift = chart.lift;
    out.lift = [base_lift, lambda](double u, double v) {
        return lambda(u, v).val * base_lift(u, v);
    };
    if (base_jet) {
        out.jet = [base_jet, lambda](double u, double v) {
            const Jet2 j = base_jet(u, v);
            const ScalarJet2 l = lambda(u, v);
            Jet2 r;
            r.sigma = l.val * j.sigma;
            r.su = l.du * j.sigma + l.val * j.su;
            r.sv = l.dv * j.sigma + l.val * j.sv;
            r.suu = l.duu * j.sigma + 2 * l.du * j.su + l.val * j.suu;
            r.suv = l.duv * j.sigma + l.du * j.sv + l.dv * j.su + l.val * j.suv;
            r.svv = l.dvv * j.sigma + 2 * l.dv * j.sv + l.val * j.svv;
            return r;
        };
    } else {
        out.jet = nullptr;
    }
    return out;
}

ScalarJet2 default_gauge(double u, double v) {
    ScalarJet2 l;
    l.val = 1.0 + 0.5 * std::sin(u + v);
    l.du = l.dv = 0.5 * std::cos(u + v);
    l.duu = l.duv = l.dvv = -0.5 * std::sin(u + v);
    return l;
}

Field<RVec> sample_lift(const LiftedChart& chart) {
    Field<RVec> f(chart.grid);
    for (int i = 0; i < chart.grid.nu; ++i)
        for (int j = 0; j < chart.grid.nv; ++j) f.at(i, j) = chart.lift(chart.grid.u(i), chart.grid.v(j));
    return f;
}

Field<Jet2> analytic_jet_field(const LiftedChart& chart) {
    if (!chart.has_analytic_jet())
        throw ContractViolation("analytic_jet_field: chart has no analytic jet");
    Field<Jet2> f(chart.grid);
    for (int i = 0; i < chart.grid.nu; ++i)
        for (int j = 0; j < chart.grid.nv; ++j) f.at(i, j) = chart.jet(chart.grid.u(i), chart.grid.v(j));
    return f;
}

Field<Jet2> fd_jet_field(const LiftedChart& chart, int order) {
    Field<RVec> s = sample_lift(chart);
    Field<RVec> su = fd_derivative(s, 0, order);
    Field<RVec> sv = fd_derivative(s, 1, order);
    Field<RVec> suu = fd_derivative(su, 0, order);
    Field<RVec> suv = fd_derivative(su, 1, order);
    Field<RVec> svv = fd_derivative(sv, 1, order);
    Field<Jet2> f(chart.grid);
    for (int k = 0; k < chart.grid.size(); ++k) {
        Mask m = s.mask[k];
        for (const auto* g : {&su, &sv, &suu, &suv, &svv})
            if (m == Mask::ok && g->mask[k] != Mask::ok) m = g->mask[k];
        f.mask[k] = m;
        if (m != Mask::ok) continue;
        f.values[k].sigma = s.values[k];
        f.values[k].su = su.values[k];
        f.values[k].sv = sv.values[k];
        f.values[k].suu = suu.values[k];
        f.values[k].suv = suv.values[k];
        f.values[k].svv = svv.values[k];
    }
    return f;
}

}  // namespace cgm
