#include "cgm/minkowski.hpp"

#include <algorithm>
#include <cmath>

namespace cgm {

RVec metric_diagonal(int dim) {
    RVec e = RVec::Ones(dim);
    e(dim - 1) = -1.0;
    return e;
}

double inner(const RVec& u, const RVec& v) {
    if (u.size() != v.size() || u.size() < 2)
        throw ContractViolation("inner: dimension mismatch");
    const auto n = u.size() - 1;
    return u.head(n).dot(v.head(n)) - u(n) * v(n);
}

std::complex<double> inner(const CVec& u, const CVec& v) {
    if (u.size() != v.size() || u.size() < 2)
        throw ContractViolation("inner: dimension mismatch");
    const auto n = u.size() - 1;
    // bilinear, not Hermitian
    std::complex<double> s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += u(i) * v(i);
    return s - u(n) * v(n);
}

namespace {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> bilinear_gram(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& b) {
    const RVec e = metric_diagonal(static_cast<int>(b.rows()));
    return b.transpose() * e.asDiagonal() * b;  // transpose, never adjoint
}

}  // namespace

template <typename Scalar>
SubspaceBasisT<Scalar>::SubspaceBasisT(Mat vectors, double tol)
    : vectors_(std::move(vectors)), tol_(tol) {
    if (vectors_.rows() < 2) throw ContractViolation("SubspaceBasis: ambient dim < 2");
    if (vectors_.cols() > 0) {
        Eigen::JacobiSVD<Mat> svd(vectors_);
        const auto& s = svd.singularValues();
        if (s(s.size() - 1) <= tol_ * s(0))
            throw ContractViolation("SubspaceBasis: vectors not independent to tolerance");
    }
    gram_ = bilinear_gram<Scalar>(vectors_);
}

template class SubspaceBasisT<double>;
template class SubspaceBasisT<std::complex<double>>;

Signature signature_of(const SubspaceBasis& s, double zero_threshold) {
    if (s.dim() == 0) return {};
    Eigen::SelfAdjointEigenSolver<RMat> es(s.gram());
    const RVec& ev = es.eigenvalues();
    const double thr = zero_threshold * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Signature sig;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > thr)
            ++sig.positive;
        else if (ev(i) < -thr)
            ++sig.negative;
        else
            ++sig.null;
    }
    return sig;
}

namespace {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> projector_impl(
    const SubspaceBasisT<Scalar>& s) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (s.dim() == 0)
        return Mat::Zero(s.ambient_dim(), s.ambient_dim());
    Eigen::JacobiSVD<Mat> svd(s.gram());
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
    if (!(cond < kGramCondMax))
        throw DegenerateSubspaceError("projector: degenerate Gram matrix", cond);
    const RVec e = metric_diagonal(s.ambient_dim());
    Mat gi = s.gram().inverse();
    return s.vectors() * gi * s.vectors().transpose() * e.asDiagonal();
}

}  // namespace

RMat projector(const SubspaceBasis& s) { return projector_impl<double>(s); }
CMat projector(const ComplexSubspaceBasis& s) { return projector_impl<std::complex<double>>(s); }

template <typename Scalar>
SubspaceBasisT<Scalar> intersect(const SubspaceBasisT<Scalar>& a, const SubspaceBasisT<Scalar>& b,
                                 double tol) {
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (a.ambient_dim() != b.ambient_dim())
        throw ContractViolation("intersect: ambient dimension mismatch");
    const int d = a.ambient_dim();
    if (a.dim() == 0 || b.dim() == 0) return SubspaceBasisT<Scalar>(Mat::Zero(d, 0), tol);

    Mat qa = orthonormal_span(a.vectors());
    Mat qb = orthonormal_span(b.vectors());
    Mat m(d, qa.cols() + qb.cols());
    m << qa, -qb;
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    std::vector<Eigen::Index> null_idx;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) <= tol * sv(0)) null_idx.push_back(i);
    if (null_idx.empty()) return SubspaceBasisT<Scalar>(Mat::Zero(d, 0), tol);

    Mat result(d, static_cast<Eigen::Index>(null_idx.size()));
    for (size_t k = 0; k < null_idx.size(); ++k) {
        auto x = svd.matrixV().col(null_idx[k]).head(qa.cols());
        result.col(static_cast<Eigen::Index>(k)) = qa * x;
    }
    return SubspaceBasisT<Scalar>(orthonormal_span(result), tol);
}

template SubspaceBasisT<double> intersect(const SubspaceBasisT<double>&,
                                          const SubspaceBasisT<double>&, double);
template SubspaceBasisT<std::complex<double>> intersect(
    const SubspaceBasisT<std::complex<double>>&, const SubspaceBasisT<std::complex<double>>&,
    double);

namespace {

RVec canonical_line_rep(RVec w) {
    w.normalize();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (std::abs(w(i)) > 1e-12) {
            if (w(i) < 0) w = -w;
            break;
        }
    }
    return w;
}

bool lex_less(const RVec& a, const RVec& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) < b(i) - 1e-14) return true;
        if (a(i) > b(i) + 1e-14) return false;
    }
    return false;
}

}  // namespace

std::pair<RVec, RVec> null_lines_in_plane(const SubspaceBasis& p) {
    if (p.dim() != 2) throw ContractViolation("null_lines_in_plane: not a 2-plane");
    const Signature sig = signature_of(p);
    if (!(sig.positive == 1 && sig.negative == 1)) {
        throw ContractViolation("null_lines_in_plane: signature (" + std::to_string(sig.positive) +
                                "," + std::to_string(sig.negative) + "," + std::to_string(sig.null) +
                                ") is not (1,1)");
    }
    Eigen::SelfAdjointEigenSolver<RMat> es(p.gram());
    const RVec ev = es.eigenvalues();  // ascending: ev(0) < 0 < ev(1)
    const RVec qm = es.eigenvectors().col(0);
    const RVec qp = es.eigenvectors().col(1);
    const double a = std::sqrt(-ev(0));
    const double b = std::sqrt(ev(1));
    RVec w1 = canonical_line_rep(p.vectors() * (a * qp + b * qm));
    RVec w2 = canonical_line_rep(p.vectors() * (a * qp - b * qm));
    if (lex_less(w2, w1)) std::swap(w1, w2);
    return {w1, w2};
}

template <typename Scalar>
IsotropyCheck is_isotropic(const SubspaceBasisT<Scalar>& s, double tol) {
    IsotropyCheck out;
    for (int i = 0; i < s.dim(); ++i) {
        const double ni = s.vector(i).norm();
        for (int j = 0; j < s.dim(); ++j) {
            const double nj = s.vector(j).norm();
            const double g = std::abs(s.gram()(i, j));
            out.residual = std::max(out.residual, g / std::max(ni * nj, 1e-300));
        }
    }
    out.isotropic = out.residual < tol;
    return out;
}

template IsotropyCheck is_isotropic(const SubspaceBasisT<double>&, double);
template IsotropyCheck is_isotropic(const SubspaceBasisT<std::complex<double>>&, double);

namespace {

template <typename Mat>
Mat orthonormal_span_impl(const Mat& columns, double tol) {
    if (columns.cols() == 0) return columns;
    Eigen::JacobiSVD<Mat> svd(columns, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > tol * sv(0)) ++rank;
    return svd.matrixU().leftCols(rank);
}

}  // namespace

CMat orthonormal_span(const CMat& columns, double tol) { return orthonormal_span_impl(columns, tol); }
RMat orthonormal_span(const RMat& columns, double tol) { return orthonormal_span_impl(columns, tol); }

double dist_to_span(const CVec& w, const CMat& q) { return (w - q * (q.adjoint() * w)).norm(); }
double dist_to_span(const RVec& w, const RMat& q) { return (w - q * (q.transpose() * w)).norm(); }

double line_angle_sin(const RVec& a, const RVec& b) {
    // rejection form: resolves angles below sqrt(eps), unlike sqrt(1 - cos^2)
    const RVec ah = a.normalized();
    const RVec bh = b.normalized();
    return (bh - ah * ah.dot(bh)).norm();
}

std::pair<RVec, double> real_representative(const CVec& z) {
    RMat m(z.size(), 2);
    m.col(0) = z.real();
    m.col(1) = z.imag();
    Eigen::JacobiSVD<RMat> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double res = sv(1) / std::max(sv(0), 1e-300);
    return {svd.matrixU().col(0), res};
}

}  // namespace cgm
