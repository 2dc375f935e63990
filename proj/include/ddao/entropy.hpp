#pragma once

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "density.hpp"

namespace ddao {

inline constexpr double entropy_clamp = 1e-12;

inline Eigen::VectorXd density_eigenvalues(const DensityMatrix& rho) {
    Eigen::SelfAdjointEigenSolver<OperatorMatrix> es(rho.matrix(), Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericsError("Hermitian eigensolver failed", 0);
    return es.eigenvalues();
}

/// S = -Tr(rho ln rho) from the eigenvalues of rho. Eigenvalues up to
/// entropy_clamp (including small negative ones from finite ensembles)
/// contribute nothing; anything below -1e-8 is rejected.
inline double von_neumann_entropy(const DensityMatrix& rho) {
    const auto ev = density_eigenvalues(rho);
    double s = 0;
    for (double p : ev) {
        if (p < -DensityMatrix::eigen_tol)
            throw InvalidArgument("density matrix has eigenvalue " + std::to_string(p) + " < -1e-8");
        if (p > entropy_clamp) s -= p * std::log(p);
    }
    return std::max(s, 0.0);
}

}  // namespace ddao
