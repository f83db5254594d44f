// Shared generators and comparison helpers for the test suites.
#pragma once

#include <bdris/bdris.hpp>

#include <algorithm>
#include <random>

namespace bdris::testing {

inline double rel_err(const CMatrix& a, const CMatrix& b) {
    const double scale = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / scale;
}

inline double rel_err(Complex a, Complex b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

inline CMatrix random_complex(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = Complex(g(rng), g(rng));
    return m;
}

/// Random reciprocal matrix with sigma_max scaled to the given value.
inline SMatrix random_reciprocal(Index n, double sigma, std::mt19937_64& rng) {
    CMatrix g = random_complex(n, n, rng);
    CMatrix sym = (g + g.transpose()) / 2.0;
    Eigen::JacobiSVD<CMatrix> svd(sym);
    return SMatrix(sym * (sigma / svd.singularValues()(0)));
}

/// Random symmetric unitary matrix (Q Q^T for unitary Q).
inline SMatrix random_symmetric_unitary(Index n, std::mt19937_64& rng) {
    const CMatrix g = random_complex(n, n, rng);
    const CMatrix q = Eigen::HouseholderQR<CMatrix>(g).householderQ();
    return SMatrix(q * q.transpose());
}

/// Random diagonal load with |r| <= rmax on every port.
inline SMatrix random_diagonal_load(Index n, double rmax, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    CMatrix d = CMatrix::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        d(i, i) = std::polar(rmax * std::sqrt(u(rng)), 2.0 * kPi * u(rng));
    return SMatrix(std::move(d));
}

} // namespace bdris::testing
