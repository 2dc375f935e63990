#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "fock.hpp"

namespace ddao {

/// Hermitian, unit-trace matrix over the truncated Fock basis. Construction
/// checks Hermiticity and trace; positivity is checked where eigenvalues are
/// computed anyway (von_neumann_entropy).
class DensityMatrix {
public:
    static constexpr double hermitian_tol = 1e-10;
    static constexpr double trace_tol = 1e-8;
    static constexpr double eigen_tol = 1e-8;

    DensityMatrix() = default;

    explicit DensityMatrix(OperatorMatrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols() || m_.rows() < 1) throw InvalidArgument("density matrix must be square");
        if (!m_.allFinite()) throw InvalidArgument("density matrix has non-finite entries");
        const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
        if (herm > hermitian_tol) throw InvalidArgument("density matrix is not Hermitian");
        const Complex tr = m_.trace();
        if (std::abs(tr - 1.0) > trace_tol) throw InvalidArgument("density matrix trace differs from 1");
    }

    static DensityMatrix pure(const Eigen::VectorXcd& psi) { return DensityMatrix(psi * psi.adjoint()); }

    static DensityMatrix fock(int dim, int n) {
        OperatorMatrix m = OperatorMatrix::Zero(dim, dim);
        m(n, n) = 1.0;
        return DensityMatrix(std::move(m));
    }

    int dim() const { return int(m_.rows()); }
    const OperatorMatrix& matrix() const { return m_; }
    Complex operator()(int n, int m) const { return m_(n, m); }

private:
    OperatorMatrix m_;
};

/// Tr(rho a^dagger a).
inline double mean_excitation(const DensityMatrix& rho) {
    double s = 0;
    for (int n = 1; n < rho.dim(); ++n) s += n * rho(n, n).real();
    return s;
}

}  // namespace ddao
