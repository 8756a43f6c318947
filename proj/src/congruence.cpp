#include "cgm/congruence.hpp"

#include <cmath>

namespace cgm {

namespace {

// complexify a real matrix field lazily where needed
CMat cx(const RMat& m) { return m.cast<std::complex<double>>(); }

}  // namespace

double n_scale_sq(const RMat& nu, const RMat& nv) {
    return 0.5 * (nu.squaredNorm() + nv.squaredNorm());
}

CongruenceField build_congruence(const LiftedChart& chart, const CongruenceOptions& opts) {
    CongruenceField F;
    F.grid = chart.grid;
    F.dim = chart.ambient_dim();
    F.fd_order = opts.fd_order;
    F.chart_name = chart.name;
    F.jets = opts.use_fd_jet || !chart.has_analytic_jet() ? fd_jet_field(chart, opts.fd_order)
                                                          : analytic_jet_field(chart);

    const int d = F.dim;
    const RVec e = metric_diagonal(d);
    F.basis = Field<RMat>(F.grid);
    F.pi = OperatorField(F.grid);
    F.vperp = Field<RMat>(F.grid);

    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            if (F.jets.mask_at(i, j) != Mask::ok) {
                F.basis.mask_at(i, j) = F.jets.mask_at(i, j);
                F.pi.mask_at(i, j) = F.jets.mask_at(i, j);
                F.vperp.mask_at(i, j) = F.jets.mask_at(i, j);
                continue;
            }
            const Jet2& jet = F.jets.at(i, j);
            if (immersion_residual(jet) <= opts.immersion_tol) {
                F.basis.mask_at(i, j) = Mask::non_immersed;
                F.pi.mask_at(i, j) = Mask::non_immersed;
                F.vperp.mask_at(i, j) = Mask::non_immersed;
                continue;
            }
            RMat b(d, 4);
            b.col(0) = jet.sigma;
            b.col(1) = jet.su;
            b.col(2) = jet.sv;
            b.col(3) = jet.laplacian();
            RMat gram = b.transpose() * e.asDiagonal() * b;
            Eigen::JacobiSVD<RMat> gsvd(gram);
            const auto& sv = gsvd.singularValues();
            const double cond = sv(0) / std::max(sv(3), 1e-300);
            Mask m = Mask::ok;
            if (!(cond < opts.cond_max)) {
                m = Mask::degenerate;
            } else {
                Eigen::SelfAdjointEigenSolver<RMat> es(gram);
                int pos = 0, neg = 0;
                const double thr = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
                for (int k = 0; k < 4; ++k) {
                    if (es.eigenvalues()(k) > thr) ++pos;
                    if (es.eigenvalues()(k) < -thr) ++neg;
                }
                if (pos != 3 || neg != 1) m = Mask::bad_signature;
            }
            if (m != Mask::ok) {
                F.basis.mask_at(i, j) = m;
                F.pi.mask_at(i, j) = m;
                F.vperp.mask_at(i, j) = m;
                continue;
            }
            F.basis.at(i, j) = b;
            F.pi.at(i, j) = b * gram.inverse() * b.transpose() * e.asDiagonal();
            // V-perp = Euclidean nullspace of B^T eta  (right singular vectors)
            RMat bte = b.transpose() * e.asDiagonal();
            Eigen::JacobiSVD<RMat> nsvd(bte, Eigen::ComputeFullV);
            F.vperp.at(i, j) = nsvd.matrixV().rightCols(d - 4);
        }
    }
    F.dpi_u = fd_derivative(F.pi, 0, opts.fd_order);
    F.dpi_v = fd_derivative(F.pi, 1, opts.fd_order);
    return F;
}

CongruenceField congruence_from_projector(const GridSpec& grid, int dim, int fd_order,
                                          const std::function<RMat(double, double)>& pi_fn) {
    CongruenceField F;
    F.grid = grid;
    F.dim = dim;
    F.fd_order = fd_order;
    F.chart_name = "synthetic";
    F.pi = OperatorField(grid);
    F.basis = Field<RMat>(grid);
    F.vperp = Field<RMat>(grid);
    const RVec e = metric_diagonal(dim);
    for (int i = 0; i < grid.nu; ++i) {
        for (int j = 0; j < grid.nv; ++j) {
            RMat p = pi_fn(grid.u(i), grid.v(j));
            F.pi.at(i, j) = p;
            Eigen::ColPivHouseholderQR<RMat> qr(p);
            qr.setThreshold(1e-8);
            if (qr.rank() != 4) {
                F.basis.mask_at(i, j) = Mask::bad_signature;
                F.vperp.mask_at(i, j) = Mask::bad_signature;
                continue;
            }
            RMat q = qr.householderQ();
            RMat b = q.leftCols(4);
            F.basis.at(i, j) = b;
            RMat bte = b.transpose() * e.asDiagonal();
            Eigen::JacobiSVD<RMat> nsvd(bte, Eigen::ComputeFullV);
            F.vperp.at(i, j) = nsvd.matrixV().rightCols(dim - 4);
        }
    }
    F.dpi_u = fd_derivative(F.pi, 0, fd_order);
    F.dpi_v = fd_derivative(F.pi, 1, fd_order);
    return F;
}

namespace {

template <typename Vec>
Field<Vec> d_section_impl(const CongruenceField& F, const Field<Vec>& s, int axis) {
    Field<Vec> ps(s.grid), qs(s.grid);
    ps.mask = s.mask;
    qs.mask = s.mask;
    for (int i = 0; i < s.grid.nu; ++i) {
        for (int j = 0; j < s.grid.nv; ++j) {
            if (F.pi.mask_at(i, j) != Mask::ok && ps.mask_at(i, j) == Mask::ok) {
                ps.mask_at(i, j) = F.pi.mask_at(i, j);
                qs.mask_at(i, j) = F.pi.mask_at(i, j);
            }
            if (ps.mask_at(i, j) != Mask::ok) continue;
            if constexpr (std::is_same_v<Vec, CVec>) {
                ps.at(i, j) = cx(F.pi.at(i, j)) * s.at(i, j);
                qs.at(i, j) = cx(F.pperp(i, j)) * s.at(i, j);
            } else {
                ps.at(i, j) = F.pi.at(i, j) * s.at(i, j);
                qs.at(i, j) = F.pperp(i, j) * s.at(i, j);
            }
        }
    }
    Field<Vec> dps = fd_derivative(ps, axis, F.fd_order);
    Field<Vec> dqs = fd_derivative(qs, axis, F.fd_order);
    Field<Vec> out(s.grid);
    for (int i = 0; i < s.grid.nu; ++i) {
        for (int j = 0; j < s.grid.nv; ++j) {
            Mask m = dps.mask_at(i, j) != Mask::ok ? dps.mask_at(i, j) : dqs.mask_at(i, j);
            out.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            if constexpr (std::is_same_v<Vec, CVec>) {
                out.at(i, j) = cx(F.pi.at(i, j)) * dps.at(i, j) + cx(F.pperp(i, j)) * dqs.at(i, j);
            } else {
                out.at(i, j) = F.pi.at(i, j) * dps.at(i, j) + F.pperp(i, j) * dqs.at(i, j);
            }
        }
    }
    return out;
}

template <typename Mat>
Field<Mat> d_operator_impl(const CongruenceField& F, const Field<Mat>& T, int axis) {
    const auto& dpi = axis == 0 ? F.dpi_u : F.dpi_v;
    Field<Mat> pt(T.grid), qt(T.grid);
    pt.mask = T.mask;
    qt.mask = T.mask;
    for (int k = 0; k < T.grid.size(); ++k) {
        if (pt.mask[k] == Mask::ok && F.pi.mask[k] != Mask::ok) {
            pt.mask[k] = F.pi.mask[k];
            qt.mask[k] = F.pi.mask[k];
        }
    }
    const RMat id = RMat::Identity(F.dim, F.dim);
    for (int i = 0; i < T.grid.nu; ++i) {
        for (int j = 0; j < T.grid.nv; ++j) {
            if (pt.mask_at(i, j) != Mask::ok) continue;
            if constexpr (std::is_same_v<Mat, CMat>) {
                pt.at(i, j) = cx(F.pi.at(i, j)) * T.at(i, j);
                qt.at(i, j) = cx(F.pperp(i, j)) * T.at(i, j);
            } else {
                pt.at(i, j) = F.pi.at(i, j) * T.at(i, j);
                qt.at(i, j) = F.pperp(i, j) * T.at(i, j);
            }
        }
    }
    Field<Mat> dpt = fd_derivative(pt, axis, F.fd_order);
    Field<Mat> dqt = fd_derivative(qt, axis, F.fd_order);
    Field<Mat> out(T.grid);
    for (int i = 0; i < T.grid.nu; ++i) {
        for (int j = 0; j < T.grid.nv; ++j) {
            Mask m = dpt.mask_at(i, j) != Mask::ok ? dpt.mask_at(i, j) : dqt.mask_at(i, j);
            if (m == Mask::ok && dpi.mask_at(i, j) != Mask::ok) m = dpi.mask_at(i, j);
            out.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            // D_X e_i = (pi - pi_perp) (d_X pi) e_i for constant sections e_i
            RMat a = (2.0 * F.pi.at(i, j) - id) * dpi.at(i, j);
            if constexpr (std::is_same_v<Mat, CMat>) {
                out.at(i, j) = cx(F.pi.at(i, j)) * dpt.at(i, j) + cx(F.pperp(i, j)) * dqt.at(i, j) -
                               T.at(i, j) * cx(a);
            } else {
                out.at(i, j) =
                    F.pi.at(i, j) * dpt.at(i, j) + F.pperp(i, j) * dqt.at(i, j) - T.at(i, j) * a;
            }
        }
    }
    return out;
}

}  // namespace

Field<RVec> compute_D_section(const CongruenceField& F, const Field<RVec>& s, int axis) {
    return d_section_impl(F, s, axis);
}
Field<CVec> compute_D_section(const CongruenceField& F, const Field<CVec>& s, int axis) {
    return d_section_impl(F, s, axis);
}
OperatorField compute_D_operator(const CongruenceField& F, const OperatorField& T, int axis) {
    return d_operator_impl(F, T, axis);
}
CxOperatorField compute_D_operator(const CongruenceField& F, const CxOperatorField& T, int axis) {
    return d_operator_impl(F, T, axis);
}

std::pair<OperatorField, OperatorField> compute_N(const CongruenceField& F) {
    auto sandwich = [&](const OperatorField& dpi) {
        OperatorField n(F.grid);
        for (int i = 0; i < F.grid.nu; ++i) {
            for (int j = 0; j < F.grid.nv; ++j) {
                Mask m = dpi.mask_at(i, j) != Mask::ok ? dpi.mask_at(i, j) : F.pi.mask_at(i, j);
                n.mask_at(i, j) = m;
                if (m != Mask::ok) continue;
                const RMat& p = F.pi.at(i, j);
                const RMat q = F.pperp(i, j);
                n.at(i, j) = q * dpi.at(i, j) * p - p * dpi.at(i, j) * q;
            }
        }
        return n;
    };
    return {sandwich(F.dpi_u), sandwich(F.dpi_v)};
}

CxOperatorField compute_N10(const OperatorField& nu, const OperatorField& nv) {
    return zip_fields(nu, nv, [](const RMat& a, const RMat& b) {
        return CMat(0.5 * (cx(a) - std::complex<double>(0, 1) * cx(b)));
    });
}

OperatorField compute_tension(const CongruenceField& F, const OperatorField& nu,
                              const OperatorField& nv) {
    OperatorField du = compute_D_operator(F, nu, 0);
    OperatorField dv = compute_D_operator(F, nv, 1);
    return zip_fields(du, dv, [](const RMat& a, const RMat& b) { return RMat(a + b); });
}

void structure_residuals(const CongruenceField& F, const OperatorField& nu,
                         const OperatorField& nv, ResidualReport& report) {
    // connection coefficients on constant sections: A_X = (pi - pi_perp) dpi_X
    const RMat id = RMat::Identity(F.dim, F.dim);
    auto a_field = [&](const OperatorField& dpi) {
        return zip_fields(F.pi, dpi,
                          [&](const RMat& p, const RMat& dp) { return RMat((2.0 * p - id) * dp); });
    };
    OperatorField au = a_field(F.dpi_u);
    OperatorField av = a_field(F.dpi_v);

    // R(du,dv) e = D_u(A_v e) - D_v(A_u e); A_X e are plain section stacks, so the
    // operator derivative without the A-correction applies.
    auto d_sections = [&](const OperatorField& t, int axis) {
        auto pt = zip_fields(F.pi, t, [](const RMat& p, const RMat& m) { return RMat(p * m); });
        auto qt = zip_fields(F.pi, t, [&](const RMat& p, const RMat& m) { return RMat((id - p) * m); });
        auto dpt = fd_derivative(pt, axis, F.fd_order);
        auto dqt = fd_derivative(qt, axis, F.fd_order);
        OperatorField out(F.grid);
        for (int k = 0; k < F.grid.size(); ++k) {
            Mask m = dpt.mask[k] != Mask::ok ? dpt.mask[k] : dqt.mask[k];
            out.mask[k] = m;
        }
        for (int i = 0; i < F.grid.nu; ++i)
            for (int j = 0; j < F.grid.nv; ++j)
                if (out.ok(i, j))
                    out.at(i, j) =
                        F.pi.at(i, j) * dpt.at(i, j) + F.pperp(i, j) * dqt.at(i, j);
        return out;
    };
    OperatorField r1 = d_sections(av, 0);
    OperatorField r2 = d_sections(au, 1);

    OperatorField dunv = compute_D_operator(F, nv, 0);
    OperatorField dvnu = compute_D_operator(F, nu, 1);

    report.eq2 = Field<double>(F.grid);
    report.eq3 = Field<double>(F.grid);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = Mask::ok;
            for (const auto* f : {&r1, &r2, &dunv, &dvnu})
                if (m == Mask::ok && f->mask_at(i, j) != Mask::ok) m = f->mask_at(i, j);
            if (m == Mask::ok && nu.mask_at(i, j) != Mask::ok) m = nu.mask_at(i, j);
            report.eq2.mask_at(i, j) = m;
            report.eq3.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            const double s2 = n_scale_sq(nu.at(i, j), nv.at(i, j));
            if (s2 < kVacuousScale) {
                report.eq2.at(i, j) = 0.0;
                report.eq3.at(i, j) = 0.0;
                continue;
            }
            RMat curv = r1.at(i, j) - r2.at(i, j);
            RMat comm = nu.at(i, j) * nv.at(i, j) - nv.at(i, j) * nu.at(i, j);
            report.eq2.at(i, j) =
                (curv + comm).norm() /
                std::max(nu.at(i, j).norm() * nv.at(i, j).norm() + curv.norm(), 1e-300);
            report.eq3.at(i, j) = (dunv.at(i, j) - dvnu.at(i, j)).norm() / s2;
        }
    }
}

Field<double> strong_conformality_residual(const CongruenceField& F, const CxOperatorField& n10) {
    Field<double> out(F.grid);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = n10.mask_at(i, j) != Mask::ok ? n10.mask_at(i, j) : F.vperp.mask_at(i, j);
            out.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            const CMat& nz = n10.at(i, j);
            const double scale = nz.squaredNorm();
            if (scale < kVacuousScale) {
                out.at(i, j) = 0.0;  // condition vacuous where N10 = 0
                continue;
            }
            double worst = 0.0;
            const RMat& vp = F.vperp.at(i, j);
            for (int k = 0; k < vp.cols(); ++k) {
                CVec w = nz * (nz * cx(vp.col(k)).eval()).eval();
                worst = std::max(worst, w.norm() / scale);
            }
            out.at(i, j) = worst;
        }
    }
    return out;
}

void containment_residuals(const CongruenceField& F, const CxOperatorField& n10,
                           const OperatorField& tau, ResidualReport& report, bool has_chart) {
    const GridSpec& g = F.grid;
    report.eq5 = Field<double>(g);
    report.eq6 = Field<double>(g);
    report.eq8 = Field<double>(g);
    report.eq9 = Field<double>(g);
    report.lemma6 = Field<double>(g);
    report.tension_norm = Field<double>(g);
    report.n10_vperp_rank_ratio = Field<double>(g);

    // operator-level derivative for the lemma-6 containment: the V-perp frame from
    // the pointwise SVD has no coherent sign across the grid, so w = N_Z nu must
    // never be differenced directly. D_Zbar(N_Z pi_perp) applied to nu differs
    // from D_Zbar w only by a term inside N_Z V-perp, which the span absorbs.
    CxOperatorField t_op(g);
    for (int i = 0; i < g.nu; ++i) {
        for (int j = 0; j < g.nv; ++j) {
            Mask m = n10.mask_at(i, j);
            t_op.mask_at(i, j) = m;
            if (m == Mask::ok) t_op.at(i, j) = n10.at(i, j) * cx(F.pperp(i, j));
        }
    }
    CxOperatorField dz1 = compute_D_operator(F, t_op, 0);
    CxOperatorField dz2 = compute_D_operator(F, t_op, 1);

    // N_u, N_v recovered from N10 to avoid extra plumbing
    auto n_u = map_field(n10, [](const CMat& z) { return RMat(2.0 * z.real()); });
    auto n_v = map_field(n10, [](const CMat& z) { return RMat(-2.0 * z.imag()); });

    for (int i = 0; i < g.nu; ++i) {
        for (int j = 0; j < g.nv; ++j) {
            Mask m = Mask::ok;
            for (Mask cand : {n10.mask_at(i, j), tau.mask_at(i, j), F.vperp.mask_at(i, j),
                              dz1.mask_at(i, j), dz2.mask_at(i, j)})
                if (m == Mask::ok && cand != Mask::ok) m = cand;
            for (auto* f : {&report.eq5, &report.eq6, &report.eq8, &report.eq9, &report.lemma6,
                            &report.tension_norm, &report.n10_vperp_rank_ratio})
                f->mask_at(i, j) = m;
            if (m != Mask::ok) continue;

            const CMat& nz = n10.at(i, j);
            const RMat& tp = tau.at(i, j);
            const RMat& vp = F.vperp.at(i, j);
            const int k = static_cast<int>(vp.cols());
            const double s2 = n_scale_sq(n_u.at(i, j), n_v.at(i, j));
            report.tension_norm.at(i, j) = tp.norm();
            if (s2 < kVacuousScale) {
                report.eq5.at(i, j) = report.eq6.at(i, j) = report.eq8.at(i, j) =
                    report.eq9.at(i, j) = report.lemma6.at(i, j) = 0.0;
                report.n10_vperp_rank_ratio.at(i, j) = 0.0;
                continue;
            }
            const double s1_5 = std::pow(s2, 1.5);
            const double nz_norm = nz.norm();

            // generators of U and the N10|V-perp column stack
            CMat nz_cols(F.dim, k), gen(F.dim, 2 * k);
            for (int c = 0; c < k; ++c) {
                nz_cols.col(c) = nz * cx(vp.col(c)).eval();
                gen.col(c) = nz_cols.col(c);
                gen.col(k + c) = cx((tp * vp.col(c)).eval());
            }
            CMat uspan = orthonormal_span(gen);
            Eigen::JacobiSVD<CMat> nzsvd(nz_cols);
            report.n10_vperp_rank_ratio.at(i, j) =
                k >= 2 ? nzsvd.singularValues()(1) / std::max(nzsvd.singularValues()(0), 1e-300)
                       : 0.0;

            double eq5 = 0, eq6 = 0, eq8 = 0, eq9 = 0, l6 = 0;
            CMat f01;
            RMat fline;
            if (has_chart) {
                const Jet2& jet = F.jets.at(i, j);
                CMat f01_cols(F.dim, 2);
                f01_cols.col(0) = cx(jet.sigma);
                f01_cols.col(1) = 0.5 * (cx(jet.su) + std::complex<double>(0, 1) * cx(jet.sv));
                f01 = orthonormal_span(f01_cols);
                fline = orthonormal_span(RMat(jet.sigma));
            }
            for (int c = 0; c < k; ++c) {
                const CVec& nzv = nz_cols.col(c);
                RVec tv = tp * vp.col(c);
                if (has_chart) {
                    eq5 = std::max(eq5, dist_to_span(nzv, f01) / std::max(nz_norm, 1e-300));
                    eq6 = std::max(eq6, dist_to_span(tv, fline) / s2);
                }
                eq8 = std::max(eq8, (n_u.at(i, j) * tv).norm() / s1_5);
                eq8 = std::max(eq8, (n_v.at(i, j) * tv).norm() / s1_5);
                eq9 = std::max(eq9, (tp * tv).norm() / (s2 * s2));
                CVec dzw = 0.5 * (dz1.at(i, j) * cx(vp.col(c)).eval() +
                                  std::complex<double>(0, 1) * (dz2.at(i, j) * cx(vp.col(c)).eval()));
                l6 = std::max(l6, dist_to_span(dzw, uspan) / s2);
            }
            report.eq5.at(i, j) = eq5;
            report.eq6.at(i, j) = eq6;
            report.eq8.at(i, j) = eq8;
            report.eq9.at(i, j) = eq9;
            report.lemma6.at(i, j) = l6;
        }
    }
}

Field<std::uint8_t> detect_set_A(const CongruenceField& F, const OperatorField& nu,
                                 const OperatorField& nv, double tol) {
    Field<std::uint8_t> out(F.grid);
    CxOperatorField n10 = compute_N10(nu, nv);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = n10.mask_at(i, j) != Mask::ok ? n10.mask_at(i, j) : F.vperp.mask_at(i, j);
            out.mask_at(i, j) = m;
            out.at(i, j) = 0;
            if (m != Mask::ok) continue;
            const CMat& nz = n10.at(i, j);
            const RMat& vp = F.vperp.at(i, j);
            const int k = static_cast<int>(vp.cols());
            CMat a(F.dim, k), b(F.dim, k);
            for (int c = 0; c < k; ++c) {
                a.col(c) = nz * cx(vp.col(c)).eval();
                b.col(c) = nz.conjugate() * cx(vp.col(c)).eval();
            }
            const double scale = std::sqrt(n_scale_sq(2.0 * nz.real(), -2.0 * nz.imag()));
            if (a.norm() < tol * scale || b.norm() < tol * scale) continue;  // excluded by != {0}
            CMat qa = orthonormal_span(a), qb = orthonormal_span(b);
            if (qa.cols() != qb.cols()) continue;
            // spans coincide iff all principal angles vanish
            Eigen::JacobiSVD<CMat> svd(qa.adjoint() * qb);
            const double min_cos = svd.singularValues().minCoeff();
            if (min_cos > 1.0 - tol) out.at(i, j) = 1;
        }
    }
    return out;
}

ResidualReport evaluate_residuals(const CongruenceField& F, const OperatorField& nu,
                                  const OperatorField& nv, const CxOperatorField& n10,
                                  const OperatorField& tau, bool has_chart) {
    ResidualReport report;
    structure_residuals(F, nu, nv, report);
    report.strong_conformality = strong_conformality_residual(F, n10);
    containment_residuals(F, n10, tau, report, has_chart);
    return report;
}

}  // namespace cgm
