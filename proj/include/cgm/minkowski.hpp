#pragma once

// Linear algebra over R^{n+1,1} and its complexification, metric diag(+,...,+,-)
// with the last coordinate timelike. The inner product extends complex-bilinearly
// (no conjugation).

#include <Eigen/Dense>
#include <complex>
#include <utility>
#include <vector>

#include "cgm/errors.hpp"

namespace cgm {

using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;

constexpr double kDefaultRankTol = 1e-9;
constexpr double kGramCondMax = 1e12;

/// Metric signs as a vector: (+1,...,+1,-1).
RVec metric_diagonal(int dim);

double inner(const RVec& u, const RVec& v);
std::complex<double> inner(const CVec& u, const CVec& v);

struct Signature {
    int positive = 0;
    int negative = 0;
    int null = 0;
    bool operator==(const Signature&) const = default;
};

/// Ordered spanning set with cached Gram matrix. Columns of vectors() are the basis.
/// Construction checks linear independence (smallest singular value of the
/// coordinate matrix > tol x largest); a zero-column basis is the zero subspace.
template <typename Scalar>
class SubspaceBasisT {
public:
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    explicit SubspaceBasisT(Mat vectors, double tol = kDefaultRankTol);

    int ambient_dim() const { return static_cast<int>(vectors_.rows()); }
    int dim() const { return static_cast<int>(vectors_.cols()); }
    const Mat& vectors() const { return vectors_; }
    Vec vector(int k) const { return vectors_.col(k); }
    const Mat& gram() const { return gram_; }
    double tol() const { return tol_; }

private:
    Mat vectors_;
    Mat gram_;
    double tol_;
};

using SubspaceBasis = SubspaceBasisT<double>;
using ComplexSubspaceBasis = SubspaceBasisT<std::complex<double>>;

/// Eigenvalue sign counts of the Gram matrix (real subspaces only).
Signature signature_of(const SubspaceBasis& s, double zero_threshold = 1e-10);

/// Metric projector pi_S = B G^{-1} B^T eta. Throws DegenerateSubspaceError when
/// cond(G) exceeds kGramCondMax.
RMat projector(const SubspaceBasis& s);
CMat projector(const ComplexSubspaceBasis& s);

/// Basis of A cap B by the SVD method on stacked orthonormalized coordinate
/// matrices; singular values below tol x largest count as intersection directions.
template <typename Scalar>
SubspaceBasisT<Scalar> intersect(const SubspaceBasisT<Scalar>& a, const SubspaceBasisT<Scalar>& b,
                                 double tol = 1e-8);

/// The two null lines of a real (1,1)-plane, as Euclidean-unit representatives with
/// nonnegative first nonzero coordinate, sorted lexicographically.
std::pair<RVec, RVec> null_lines_in_plane(const SubspaceBasis& p);

struct IsotropyCheck {
    bool isotropic = false;
    double residual = 0.0;  // max |gram_ij| / (|v_i| |v_j|), Euclidean norms
};
template <typename Scalar>
IsotropyCheck is_isotropic(const SubspaceBasisT<Scalar>& s, double tol = 1e-10);

// --- Euclidean span helpers (targets like f^{0,1} are isotropic, so containment
// --- residuals use Hermitian-orthogonal projection, not the metric projector).

/// Orthonormal basis of the column span, rank-truncated at tol x largest sv.
CMat orthonormal_span(const CMat& columns, double tol = 1e-12);
RMat orthonormal_span(const RMat& columns, double tol = 1e-12);

/// Euclidean distance of w to the column span of q (q orthonormal).
double dist_to_span(const CVec& w, const CMat& q);
double dist_to_span(const RVec& w, const RMat& q);

/// sin of the principal angle between two real lines.
double line_angle_sin(const RVec& a, const RVec& b);

/// Real unit representative of a conjugation-symmetric complex line, with the
/// residual (second singular value ratio) measuring failure of realness.
std::pair<RVec, double> real_representative(const CVec& z);

}  // namespace cgm
