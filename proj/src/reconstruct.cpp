#include "cgm/reconstruct.hpp"

#include <algorithm>
#include <cmath>

namespace cgm {

namespace {

CMat cx(const RMat& m) { return m.cast<std::complex<double>>(); }
CVec cxv(const RVec& v) { return v.cast<std::complex<double>>(); }

struct WorstPoint {
    double value = 0.0;
    int i = 0, j = 0;
    void update(double v, int ii, int jj) {
        if (v > value) {
            value = v;
            i = ii;
            j = jj;
        }
    }
};

}  // namespace

int RankClassification::count(int r) const {
    int c = 0;
    rank.for_each_ok([&](int, int, std::int8_t v) {
        if (v == r) ++c;
    });
    return c;
}

int RankClassification::masked_count() const {
    int c = 0;
    for (Mask m : rank.mask)
        if (m != Mask::ok) ++c;
    return c;
}

RankClassification classify_rank_U(const CongruenceField& F, const CxOperatorField& n10,
                                   const OperatorField& tau, const ClassifyOptions& opts) {
    auto n_u = map_field(n10, [](const CMat& z) { return RMat(2.0 * z.real()); });
    auto n_v = map_field(n10, [](const CMat& z) { return RMat(-2.0 * z.imag()); });

    if (opts.check_hypotheses) {
        Field<double> sconf = strong_conformality_residual(F, n10);
        ResidualReport rep;
        containment_residuals(F, n10, tau, rep, /*has_chart=*/false);
        WorstPoint w_sconf, w_eq8, w_eq9;
        sconf.for_each_ok([&](int i, int j, double v) { w_sconf.update(v, i, j); });
        rep.eq8.for_each_ok([&](int i, int j, double v) { w_eq8.update(v, i, j); });
        rep.eq9.for_each_ok([&](int i, int j, double v) { w_eq9.update(v, i, j); });
        if (w_sconf.value > opts.hypothesis_tol)
            throw HypothesisViolation("strong_conformality", w_sconf.value, w_sconf.i, w_sconf.j);
        if (w_eq8.value > opts.hypothesis_tol)
            throw HypothesisViolation("eq7_n_tau", w_eq8.value, w_eq8.i, w_eq8.j);
        if (w_eq9.value > opts.hypothesis_tol)
            throw HypothesisViolation("eq7_tau_sq", w_eq9.value, w_eq9.i, w_eq9.j);
        Field<std::uint8_t> set_a = detect_set_A(F, n_u, n_v);
        WorstPoint w_a;
        set_a.for_each_ok([&](int i, int j, std::uint8_t v) {
            if (v) w_a.update(1.0, i, j);
        });
        if (w_a.value > 0)
            throw HypothesisViolation("set_A_empty", 1.0, w_a.i, w_a.j);
    }

    RankClassification cls;
    cls.rank = Field<std::int8_t>(F.grid);
    cls.basisU = Field<CMat>(F.grid);
    cls.sv_ratio = Field<double>(F.grid);
    cls.isotropy = Field<double>(F.grid);

    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = Mask::ok;
            for (Mask cand : {n10.mask_at(i, j), tau.mask_at(i, j), F.vperp.mask_at(i, j)})
                if (m == Mask::ok && cand != Mask::ok) m = cand;
            if (m != Mask::ok) {
                cls.rank.mask_at(i, j) = m;
                cls.basisU.mask_at(i, j) = m;
                cls.sv_ratio.mask_at(i, j) = m;
                cls.isotropy.mask_at(i, j) = m;
                continue;
            }
            const CMat& nz = n10.at(i, j);
            const RMat& tp = tau.at(i, j);
            const RMat& vp = F.vperp.at(i, j);
            const int k = static_cast<int>(vp.cols());
            CMat gen(F.dim, 2 * k);
            for (int c = 0; c < k; ++c) {
                gen.col(c) = nz * cxv(vp.col(c));
                gen.col(k + c) = cxv(tp * vp.col(c));
            }
            Eigen::JacobiSVD<CMat> svd(gen, Eigen::ComputeThinU);
            const auto& sv = svd.singularValues();
            if (sv(0) < opts.rank0_abs) {
                cls.rank.at(i, j) = 0;
                cls.basisU.at(i, j) = CMat::Zero(F.dim, 0);
                cls.sv_ratio.at(i, j) = 0.0;
                cls.isotropy.at(i, j) = 0.0;
                continue;
            }
            int rank = 1;
            bool indeterminate = false;
            for (Eigen::Index c = 1; c < sv.size(); ++c) {
                const double r = sv(c) / sv(0);
                if (r > opts.tol_rank * opts.guard)
                    ++rank;
                else if (r > opts.tol_rank / opts.guard)
                    indeterminate = true;
            }
            if (indeterminate) {
                cls.rank.mask_at(i, j) = Mask::indeterminate;
                cls.basisU.mask_at(i, j) = Mask::indeterminate;
                cls.sv_ratio.mask_at(i, j) = Mask::indeterminate;
                cls.isotropy.mask_at(i, j) = Mask::indeterminate;
                continue;
            }
            if (rank > 2) {
                cls.rank.mask_at(i, j) = Mask::inconsistent;  // isotropy forces rank <= 2
                cls.basisU.mask_at(i, j) = Mask::inconsistent;
                cls.sv_ratio.mask_at(i, j) = Mask::inconsistent;
                cls.isotropy.mask_at(i, j) = Mask::inconsistent;
                continue;
            }
            cls.rank.at(i, j) = static_cast<std::int8_t>(rank);
            cls.sv_ratio.at(i, j) = sv.size() > 1 ? sv(1) / sv(0) : 0.0;
            CMat u = svd.matrixU().leftCols(rank);
            cls.basisU.at(i, j) = u;
            cls.isotropy.at(i, j) = is_isotropic(ComplexSubspaceBasis(u), 1e-10).residual;
        }
    }
    return cls;
}

const char* branch_name(Branch b) {
    switch (b) {
        case Branch::none: return "none";
        case Branch::rank2_unique: return "rank2_unique";
        case Branch::rank1_dual_pair: return "rank1_dual_pair";
        case Branch::rank0_constant: return "rank0_constant";
    }
    return "unknown";
}

namespace {

ReconstructionResult make_result(const GridSpec& g) {
    ReconstructionResult r;
    r.branch = Field<Branch>(g);
    r.line1 = Field<RVec>(g);
    r.line2 = Field<RVec>(g);
    r.d01_stability = Field<double>(g);
    r.prop5_check = Field<double>(g);
    return r;
}

// D^{0,1}-stability of U measured at the operator level (the pointwise U frame has
// no coherent phase, so sections of U are differentiated through N_Z pi_perp and
// tau pi_perp; terms T(D c) stay inside U and drop out of the distance).
Field<double> d01_stability_field(const CongruenceField& F, const RankClassification& cls,
                                  const CxOperatorField& n10, const OperatorField& tau) {
    CxOperatorField t1(F.grid), t2(F.grid);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = n10.mask_at(i, j) != Mask::ok ? n10.mask_at(i, j) : tau.mask_at(i, j);
            t1.mask_at(i, j) = m;
            t2.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            t1.at(i, j) = n10.at(i, j) * cx(F.pperp(i, j));
            t2.at(i, j) = cx(tau.at(i, j)) * cx(F.pperp(i, j));
        }
    }
    CxOperatorField d1u = compute_D_operator(F, t1, 0), d1v = compute_D_operator(F, t1, 1);
    CxOperatorField d2u = compute_D_operator(F, t2, 0), d2v = compute_D_operator(F, t2, 1);
    Field<double> out(F.grid);
    const std::complex<double> I(0, 1);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = cls.basisU.mask_at(i, j);
            for (const auto* f : {&d1u, &d1v, &d2u, &d2v})
                if (m == Mask::ok && f->mask_at(i, j) != Mask::ok) m = f->mask_at(i, j);
            out.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            const CMat& u = cls.basisU.at(i, j);
            if (u.cols() == 0) {
                out.at(i, j) = 0.0;
                continue;
            }
            const RMat& vp = F.vperp.at(i, j);
            auto n_u = RMat(2.0 * n10.at(i, j).real());
            auto n_v = RMat(-2.0 * n10.at(i, j).imag());
            const double s2 = n_scale_sq(n_u, n_v);
            if (s2 < kVacuousScale) {
                out.at(i, j) = 0.0;
                continue;
            }
            double worst = 0.0;
            for (int c = 0; c < vp.cols(); ++c) {
                CVec col = cxv(vp.col(c));
                CVec w1 = 0.5 * (d1u.at(i, j) * col + I * (d1v.at(i, j) * col));
                CVec w2 = 0.5 * (d2u.at(i, j) * col + I * (d2v.at(i, j) * col));
                worst = std::max(worst, dist_to_span(w1, u) / s2);
                worst = std::max(worst, dist_to_span(w2, u) / s2);
            }
            out.at(i, j) = worst;
        }
    }
    return out;
}

}  // namespace

ReconstructionResult reconstruct_rank2(const CongruenceField& F, const RankClassification& cls,
                                       const CxOperatorField& n10, const OperatorField& tau) {
    ReconstructionResult r = make_result(F.grid);
    r.d01_stability = d01_stability_field(F, cls, n10, tau);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = cls.rank.mask_at(i, j);
            if (m == Mask::ok && cls.rank.at(i, j) != 2) m = Mask::inconsistent;
            r.branch.mask_at(i, j) = m;
            r.line1.mask_at(i, j) = m;
            r.line2.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            const CMat& u = cls.basisU.at(i, j);
            ComplexSubspaceBasis U(u), Ubar(u.conjugate());
            ComplexSubspaceBasis f = intersect(U, Ubar, 1e-8);
            if (f.dim() != 1) {
                r.branch.mask_at(i, j) = Mask::not_line;
                r.line1.mask_at(i, j) = Mask::not_line;
                continue;
            }
            auto [line, realness] = real_representative(f.vector(0));
            if (realness > 1e-6) {
                r.branch.mask_at(i, j) = Mask::not_line;
                r.line1.mask_at(i, j) = Mask::not_line;
                continue;
            }
            r.branch.at(i, j) = Branch::rank2_unique;
            r.line1.at(i, j) = line;
        }
    }
    return r;
}

ReconstructionResult reconstruct_rank1(const CongruenceField& F, const RankClassification& cls,
                                       const CxOperatorField& n10, const OperatorField& tau,
                                       double tau_small_tol) {
    // harmonicity: tau must vanish relative to the N scale before U is recomputed
    // as N_Z V-perp alone
    WorstPoint w_tau;
    const RVec e = metric_diagonal(F.dim);
    tau.for_each_ok([&](int i, int j, const RMat& t) {
        if (n10.mask_at(i, j) != Mask::ok) return;
        auto n_u = RMat(2.0 * n10.at(i, j).real());
        auto n_v = RMat(-2.0 * n10.at(i, j).imag());
        const double s2 = n_scale_sq(n_u, n_v);
        if (s2 < kVacuousScale) return;
        w_tau.update(t.norm() / s2, i, j);
    });
    if (w_tau.value > tau_small_tol)
        throw HypothesisViolation("tau_vanishes_on_rank1", w_tau.value, w_tau.i, w_tau.j);

    ReconstructionResult r = make_result(F.grid);
    r.d01_stability = d01_stability_field(F, cls, n10, tau);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = cls.rank.mask_at(i, j);
            if (m == Mask::ok && cls.rank.at(i, j) != 1) m = Mask::inconsistent;
            r.branch.mask_at(i, j) = m;
            r.line1.mask_at(i, j) = m;
            r.line2.mask_at(i, j) = m;
            r.prop5_check.mask_at(i, j) = m;
            if (m != Mask::ok) continue;

            // U = N_Z V-perp: dominant direction of the N_Z column stack
            const CMat& nz = n10.at(i, j);
            const RMat& vp = F.vperp.at(i, j);
            CMat cols(F.dim, vp.cols());
            for (int c = 0; c < vp.cols(); ++c) cols.col(c) = nz * cxv(vp.col(c));
            Eigen::JacobiSVD<CMat> svd(cols, Eigen::ComputeThinU);
            CVec u = svd.matrixU().col(0);

            // U cap conj U = 0 guard (hypothesis (3) pointwise): u proportional to a
            // real vector iff |sum u_i^2| equals the Hermitian norm
            const std::complex<double> bsq = (u.array() * u.array()).sum();
            const double overlap = std::abs(bsq) / u.squaredNorm();
            if (overlap > 0.99) {
                r.branch.mask_at(i, j) = Mask::inconsistent;
                r.line1.mask_at(i, j) = Mask::inconsistent;
                r.line2.mask_at(i, j) = Mask::inconsistent;
                continue;
            }

            // P = (U + conj U)-perp cap V, cut out inside the V coordinates
            const RMat& b = F.basis.at(i, j);
            RMat bte = b.transpose() * e.asDiagonal();
            RMat cond(2, 4);
            cond.row(0) = (bte * u.real()).transpose();
            cond.row(1) = (bte * u.imag()).transpose();
            Eigen::JacobiSVD<RMat> csvd(cond, Eigen::ComputeFullV);
            RMat pbasis = b * csvd.matrixV().rightCols(2);
            SubspaceBasis P(pbasis);
            const Signature sig = signature_of(P);
            if (!(sig.positive == 1 && sig.negative == 1)) {
                r.branch.mask_at(i, j) = Mask::bad_signature;
                r.line1.mask_at(i, j) = Mask::bad_signature;
                r.line2.mask_at(i, j) = Mask::bad_signature;
                continue;
            }
            auto [l1, l2] = null_lines_in_plane(P);
            r.branch.at(i, j) = Branch::rank1_dual_pair;
            r.line1.at(i, j) = l1;
            r.line2.at(i, j) = l2;

            // Prop. 5 check on both W = f_i + U
            double worst = 0.0;
            for (const RVec* f : {&l1, &l2}) {
                CVec nf = nz * cxv(*f);
                worst = std::max(worst, nf.norm() / std::max(nz.norm(), 1e-300));
            }
            worst = std::max(worst, (nz * u).norm() / std::max(nz.norm(), 1e-300));
            r.prop5_check.at(i, j) = worst;
        }
    }
    return r;
}

ReconstructionResult reconstruct_rank0(const CongruenceField& F, const RankClassification& cls,
                                       double constancy_tol) {
    ReconstructionResult r = make_result(F.grid);
    bool found_origin = false;
    RMat pi0;
    int oi = 0, oj = 0;
    WorstPoint w_rank, w_dev;
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            if (cls.rank.mask_at(i, j) != Mask::ok) continue;
            if (cls.rank.at(i, j) != 0) w_rank.update(1.0, i, j);
            if (!found_origin) {
                pi0 = F.pi.at(i, j);
                oi = i;
                oj = j;
                found_origin = true;
            } else {
                w_dev.update((F.pi.at(i, j) - pi0).norm(), i, j);
            }
        }
    }
    if (!found_origin) throw InconsistencyError("reconstruct_rank0: no unmasked points");
    if (w_rank.value > 0)
        throw InconsistencyError("reconstruct_rank0: nonzero rank at grid point (" +
                                 std::to_string(w_rank.i) + "," + std::to_string(w_rank.j) + ")");
    if (w_dev.value > constancy_tol)
        throw InconsistencyError("reconstruct_rank0: rank 0 everywhere but V not constant (max "
                                 "deviation " + std::to_string(w_dev.value) + ")");
    r.infinitely_many = true;
    r.constant_V = pi0;

    // two witness null lines of the constant fiber, from the signature basis
    const SubspaceBasis V(F.basis.at(oi, oj));
    Eigen::SelfAdjointEigenSolver<RMat> es(V.gram());
    const RVec ev = es.eigenvalues();  // ascending; ev(0) < 0 < rest
    RVec q_neg = V.vectors() * es.eigenvectors().col(0) / std::sqrt(-ev(0));
    for (int w = 0; w < 2; ++w) {
        RVec q_pos = V.vectors() * es.eigenvectors().col(1 + w) / std::sqrt(ev(1 + w));
        RVec line = (q_pos + q_neg).normalized();
        r.witness_lines.push_back(line);
    }
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            r.branch.mask_at(i, j) = cls.rank.mask_at(i, j);
            if (r.branch.mask_at(i, j) == Mask::ok) r.branch.at(i, j) = Branch::rank0_constant;
        }
    }
    return r;
}

ReconstructionResult reconstruct(const CongruenceField& F, const RankClassification& cls,
                                 const CxOperatorField& n10, const OperatorField& tau) {
    const int c0 = cls.count(0), c1 = cls.count(1), c2 = cls.count(2);
    if (c2 >= c0 && c2 >= c1 && c2 > 0) return reconstruct_rank2(F, cls, n10, tau);
    if (c1 >= c0 && c1 > 0) return reconstruct_rank1(F, cls, n10, tau);
    return reconstruct_rank0(F, cls);
}

RoundtripSummary roundtrip_error(const LiftedChart& chart, const CongruenceField& F,
                                 const ReconstructionResult& result, Field<double>* per_point) {
    RoundtripSummary out;
    Field<double> err(F.grid);
    Field<double> dual_err(F.grid);
    bool dual_oracle = true;
    try {
        dual_lift(chart, chart.grid.u(0), chart.grid.v(0));
    } catch (const ContractViolation&) {
        dual_oracle = false;
    }
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = result.branch.mask_at(i, j);
            err.mask_at(i, j) = m;
            dual_err.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            const Branch b = result.branch.at(i, j);
            out.branch = b;
            if (b == Branch::rank0_constant) {
                err.mask_at(i, j) = Mask::inconsistent;  // no per-point metric on this branch
                dual_err.mask_at(i, j) = Mask::inconsistent;
                continue;
            }
            const RVec sigma = chart.lift(F.grid.u(i), F.grid.v(j));
            if (b == Branch::rank2_unique) {
                err.at(i, j) = line_angle_sin(result.line1.at(i, j), sigma);
                dual_err.mask_at(i, j) = Mask::inconsistent;
                continue;
            }
            const double e1 = line_angle_sin(result.line1.at(i, j), sigma);
            const double e2 = line_angle_sin(result.line2.at(i, j), sigma);
            err.at(i, j) = std::min(e1, e2);
            const RVec& dual = e1 < e2 ? result.line2.at(i, j) : result.line1.at(i, j);
            if (dual_oracle) {
                dual_err.at(i, j) = line_angle_sin(dual, dual_lift(chart, F.grid.u(i), F.grid.v(j)));
            } else {
                dual_err.mask_at(i, j) = Mask::inconsistent;
            }
        }
    }
    out.error = summarize(err);
    out.dual_error = summarize(dual_err);
    out.dual_available = dual_oracle && out.dual_error.count > 0;
    if (per_point) *per_point = err;
    return out;
}

Field<double> line_field_immersion(const CongruenceField& F, const Field<RVec>& line) {
    // sign-invariant projector of the line, then derivative rank
    Field<RMat> proj(F.grid);
    proj.mask = line.mask;
    for (int k = 0; k < F.grid.size(); ++k) {
        if (proj.mask[k] != Mask::ok) continue;
        RVec l = line.values[k].normalized();
        proj.values[k] = l * l.transpose();
    }
    Field<RMat> du = fd_derivative(proj, 0, F.fd_order);
    Field<RMat> dv = fd_derivative(proj, 1, F.fd_order);
    Field<double> out(F.grid);
    for (int i = 0; i < F.grid.nu; ++i) {
        for (int j = 0; j < F.grid.nv; ++j) {
            Mask m = du.mask_at(i, j) != Mask::ok ? du.mask_at(i, j) : dv.mask_at(i, j);
            out.mask_at(i, j) = m;
            if (m != Mask::ok) continue;
            RMat stack(2, F.dim * F.dim);
            stack.row(0) = Eigen::Map<const RVec>(du.at(i, j).data(), F.dim * F.dim).transpose();
            stack.row(1) = Eigen::Map<const RVec>(dv.at(i, j).data(), F.dim * F.dim).transpose();
            Eigen::JacobiSVD<RMat> svd(stack);
            out.at(i, j) = svd.singularValues()(1);  // rank-2 differential strength
        }
    }
    return out;
}

}  // namespace cgm
