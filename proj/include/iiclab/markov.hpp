#pragma once

#include <Eigen/Dense>

#include "iiclab/percolation.hpp"

namespace iiclab {

// Dense transition matrix of the simple walk on the cluster: P(i,j) = 1/deg(i)
// for open neighbors j. Intended for exact linear algebra on small clusters;
// refuses more than 1000 vertices.
Eigen::MatrixXd transition_matrix(const RootedCluster& cluster);

// deg(v) / sum of degrees, the stationary (reversible) law of that walk
Eigen::VectorXd degree_stationary(const RootedCluster& cluster);

struct NegCorrCertificate {
    double quadratic_form = 0.0;  // <x, (I-P)(I-P^{t-1})x>_pi
    double min_eigenvalue = 0.0;  // of the pi-symmetrized operator
    bool psd = false;             // min_eigenvalue >= -1e-9
};

// Evaluates the increment-correlation quadratic form exactly and certifies
// positive semidefiniteness of D^{1/2} (I-P)(I-P^{t-1}) D^{-1/2} (D = diag pi)
// by its eigenvalue floor. Nonnegativity of the form for every x is the
// negative-correlation inequality E (Z_t - Z_{t-1})(Z_{t-1} - Z_0) <= 0.
//
// Requirements (std::invalid_argument otherwise): P row-stochastic, pi a
// positive probability vector, detailed balance pi_i P_ij = pi_j P_ji within
// 1e-12 relative, dimension <= 1000, t >= 1.
NegCorrCertificate negative_correlation_exact(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi,
                                              const Eigen::VectorXd& x, std::int64_t t);

}  // namespace iiclab
