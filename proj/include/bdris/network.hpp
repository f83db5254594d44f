// Scattering-parameter algebra: block extraction, cascade loading,
// Redheffer star product, S/Z conversion, Neumann truncation and
// physical-validity checks. All channel evaluation in this library
// funnels through the single resolvent kernel defined here.
#pragma once

#include "bdris/types.hpp"

#include <cmath>
#include <sstream>

namespace bdris {

namespace detail {

inline double sigma_max(const CMatrix& m) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    Eigen::JacobiSVD<CMatrix> svd(m);
    return svd.singularValues()(0);
}

inline double spectral_radius(const CMatrix& m) {
    Eigen::ComplexEigenSolver<CMatrix> es(m, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline CMatrix take(const CMatrix& m, const IndexSet& rows, const IndexSet& cols) {
    CMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    return out;
}

// Solves (I - A) X = B, raising NumericalError with the spectral radius of
// A when the system is singular -- which for passive inputs cannot occur.
inline CMatrix resolvent_solve(const CMatrix& a, const CMatrix& b, const char* who) {
    const Index n = a.rows();
    Eigen::FullPivLU<CMatrix> lu(CMatrix::Identity(n, n) - a);
    if (!lu.isInvertible()) {
        std::ostringstream os;
        os << who << ": singular (I - S^L S_QQ); inputs are not passive"
           << " (spectral radius " << spectral_radius(a) << " >= 1)";
        throw NumericalError(os.str());
    }
    return lu.solve(b);
}

// Shared channel kernel: M_out,in + M_out,S (I - L M_SS)^-1 L M_S,in.
// Written with the load appearing linearly so that singular loads
// (matched ports, L = 0) are in the domain. An empty inner set means
// nothing is terminated and the plain block comes back.
inline CMatrix loaded_coupling(const CMatrix& m, const IndexSet& out,
                               const IndexSet& in, const IndexSet& inner,
                               const CMatrix& load, const char* who) {
    if (inner.empty()) return take(m, out, in);
    const CMatrix m_ss = take(m, inner, inner);
    const CMatrix m_si = take(m, inner, in);
    const CMatrix x = resolvent_solve(load * m_ss, load * m_si, who);
    return take(m, out, in) + take(m, out, inner) * x;
}

} // namespace detail

/// Submatrix of S in the given row/column order (0-based port indices).
inline CMatrix block(const SMatrix& s, const IndexSet& rows, const IndexSet& cols) {
    const Index n = s.ports();
    for (Index i : rows)
        detail::require(i >= 0 && i < n, "block: row index out of range");
    for (Index j : cols)
        detail::require(j >= 0 && j < n, "block: column index out of range");
    return detail::take(s.matrix(), rows, cols);
}

/// Report of the two standing physical assumptions: reciprocity and
/// passivity. reciprocity_err = max|S - S^T|; passivity_margin = 1 - sigma_max.
struct ValidationReport {
    double reciprocity_err;
    double passivity_margin;

    bool reciprocal(double tol = kStructuralTol) const { return reciprocity_err <= tol; }
    bool passive(double tol = kStructuralTol) const { return passivity_margin >= -tol; }
};

inline ValidationReport validate(const SMatrix& s) {
    const CMatrix& m = s.matrix();
    const double rec = (m - m.transpose()).cwiseAbs().maxCoeff();
    return ValidationReport{rec, 1.0 - detail::sigma_max(m)};
}

/// Terminates the ports of the partition's final set with `load` and
/// returns the reduced scattering matrix over the remaining ports, in
/// partition order. Defined for singular loads (e.g. matched, load = 0).
inline SMatrix cascade_load(const SMatrix& s, const PortPartition& part, const SMatrix& load) {
    detail::require(part.n_ports() == s.ports(), "cascade_load: partition size mismatch");
    detail::require(part.n_sets() >= 2, "cascade_load: partition needs kept and terminated sets");
    const IndexSet& q = part.set(part.n_sets() - 1);
    IndexSet p;
    for (std::size_t k = 0; k + 1 < part.n_sets(); ++k) {
        const auto& ks = part.set(k);
        p.insert(p.end(), ks.begin(), ks.end());
    }
    detail::require(!p.empty() && !q.empty(), "cascade_load: empty port sets rejected");
    detail::require(static_cast<Index>(q.size()) == load.ports(),
                    "cascade_load: load dimension does not match terminated port count");
    detail::require(s.z0() == load.z0(),
                    "cascade_load: reference impedances differ (renormalize first)");
    return SMatrix(detail::loaded_coupling(s.matrix(), p, p, q, load.matrix(), "cascade_load"),
                   s.z0());
}

/// Redheffer star product of two multi-port systems. The final set of
/// `part_a` connects one-to-one, in order, to the first set of `part_b`;
/// the result spans the remaining ports of `a` (in partition order)
/// followed by the remaining ports of `b`.
inline SMatrix redheffer_star(const SMatrix& a, const PortPartition& part_a,
                              const SMatrix& b, const PortPartition& part_b) {
    detail::require(part_a.n_ports() == a.ports(), "redheffer_star: partition A size mismatch");
    detail::require(part_b.n_ports() == b.ports(), "redheffer_star: partition B size mismatch");
    detail::require(part_a.n_sets() >= 2 && part_b.n_sets() >= 2,
                    "redheffer_star: both partitions need free and connected sets");

    const IndexSet& sa = part_a.set(part_a.n_sets() - 1); // connected ports of A
    const IndexSet& sb = part_b.set(0);                   // connected ports of B
    detail::require(!sa.empty(), "redheffer_star: empty connected port set rejected");
    detail::require(sa.size() == sb.size(),
                    "redheffer_star: connected port counts differ");
    detail::require(a.z0() == b.z0(),
                    "redheffer_star: reference impedances differ (renormalize first)");

    IndexSet fa, fb; // free ports
    for (std::size_t k = 0; k + 1 < part_a.n_sets(); ++k) {
        const auto& ks = part_a.set(k);
        fa.insert(fa.end(), ks.begin(), ks.end());
    }
    for (std::size_t k = 1; k < part_b.n_sets(); ++k) {
        const auto& ks = part_b.set(k);
        fb.insert(fb.end(), ks.begin(), ks.end());
    }

    const Index ns = static_cast<Index>(sa.size());
    const Index na = static_cast<Index>(fa.size());
    const Index nc = static_cast<Index>(fb.size());

    const CMatrix a_ss = detail::take(a.matrix(), sa, sa);
    const CMatrix b_ss = detail::take(b.matrix(), sb, sb);

    const CMatrix eye = CMatrix::Identity(ns, ns);
    Eigen::FullPivLU<CMatrix> lu1(a_ss * b_ss - eye);
    Eigen::FullPivLU<CMatrix> lu2(b_ss * a_ss - eye);
    if (!lu1.isInvertible() || !lu2.isInvertible()) {
        std::ostringstream os;
        os << "redheffer_star: singular connection (spectral radius of S_SS S_SS' = "
           << detail::spectral_radius(a_ss * b_ss) << " >= 1); inputs are not passive";
        throw NumericalError(os.str());
    }

    const CMatrix a_fs = detail::take(a.matrix(), fa, sa);
    const CMatrix a_sf = detail::take(a.matrix(), sa, fa);
    const CMatrix b_fs = detail::take(b.matrix(), fb, sb);
    const CMatrix b_sf = detail::take(b.matrix(), sb, fb);

    const CMatrix x1_asf = lu1.solve(a_sf);        // X1 S^A_SA
    const CMatrix x2_bsf = lu2.solve(b_sf);        // X2 S^B_SC

    CMatrix k(na + nc, na + nc);
    k.topLeftCorner(na, na) = detail::take(a.matrix(), fa, fa) - a_fs * b_ss * x1_asf;
    k.topRightCorner(na, nc) = -a_fs * x2_bsf;
    k.bottomLeftCorner(nc, na) = -b_fs * x1_asf;
    k.bottomRightCorner(nc, nc) = detail::take(b.matrix(), fb, fb) - b_fs * a_ss * x2_bsf;
    return SMatrix(std::move(k), a.z0());
}

/// Z = z0 (I + S)(I - S)^-1. Fails on networks with a unit eigenvalue
/// (e.g. the through-connection), which have no impedance description.
inline ZMatrix s_to_z(const SMatrix& s) {
    const Index n = s.ports();
    Eigen::FullPivLU<CMatrix> lu(CMatrix::Identity(n, n) - s.matrix());
    if (!lu.isInvertible())
        throw NumericalError("s_to_z: (I - S) is singular; network has no impedance matrix");
    // (I + S) and (I - S)^-1 commute, so one left solve suffices.
    return ZMatrix(s.z0() * lu.solve(CMatrix::Identity(n, n) + s.matrix()));
}

inline SMatrix z_to_s(const ZMatrix& z, double z0 = 50.0) {
    const Index n = z.ports();
    const CMatrix zn = z.matrix() / z0;
    Eigen::FullPivLU<CMatrix> lu(zn + CMatrix::Identity(n, n));
    if (!lu.isInvertible())
        throw NumericalError("z_to_s: (Z + z0 I) is singular");
    return SMatrix(lu.solve(zn - CMatrix::Identity(n, n)), z0);
}

/// Truncated-series channel: S_RT + S_RS (sum_{j<=k} (L S_SS)^j) L S_ST.
/// k = 0 is the simplified cascaded model; k -> inf converges to the
/// exact channel whenever sigma_max(L S_SS) < 1.
inline CMatrix neumann_channel(const SMatrix& s_re, const PortPartition& part,
                               const SMatrix& s_l, int order) {
    detail::require(order >= 0, "neumann_channel: order must be >= 0");
    detail::require(part.n_ports() == s_re.ports(), "neumann_channel: partition size mismatch");
    const IndexSet& t = part.set("T");
    const IndexSet& r = part.set("R");
    const IndexSet& sp = part.set("S");
    detail::require(static_cast<Index>(sp.size()) == s_l.ports(),
                    "neumann_channel: load dimension mismatch");

    const CMatrix m_ss = detail::take(s_re.matrix(), sp, sp);
    const CMatrix step = s_l.matrix() * m_ss;
    CMatrix tail = s_l.matrix() * detail::take(s_re.matrix(), sp, t);
    CMatrix sum = tail;
    for (int j = 1; j <= order; ++j) {
        tail = step * tail;
        sum += tail;
    }
    return detail::take(s_re.matrix(), r, t) + detail::take(s_re.matrix(), r, sp) * sum;
}

} // namespace bdris
