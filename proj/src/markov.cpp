#include "iiclab/markov.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace iiclab {

Eigen::MatrixXd transition_matrix(const RootedCluster& cluster) {
    if (cluster.size() > 1000)
        throw std::invalid_argument("transition_matrix: cluster too large for dense algebra");
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(cluster.size(), cluster.size());
    for (int i = 0; i < cluster.size(); ++i) {
        double step = 1.0 / double(cluster.degree(i));
        for (std::uint32_t a = cluster.adj_off[i]; a < cluster.adj_off[i + 1]; ++a)
            P(i, cluster.adj[a]) = step;
    }
    return P;
}

Eigen::VectorXd degree_stationary(const RootedCluster& cluster) {
    Eigen::VectorXd pi(cluster.size());
    for (int i = 0; i < cluster.size(); ++i)
        pi(i) = double(cluster.degree(i)) / double(cluster.sum_degree);
    return pi;
}

namespace {

Eigen::MatrixXd matrix_power(Eigen::MatrixXd base, std::int64_t e) {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(base.rows(), base.cols());
    while (e > 0) {
        if (e & 1) acc = acc * base;
        base = base * base;
        e >>= 1;
    }
    return acc;
}

}  // namespace

NegCorrCertificate negative_correlation_exact(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi,
                                              const Eigen::VectorXd& x, std::int64_t t) {
    const Eigen::Index n = P.rows();
    if (P.cols() != n || pi.size() != n || x.size() != n)
        throw std::invalid_argument("negative_correlation_exact: dimension mismatch");
    if (n < 1 || n > 1000)
        throw std::invalid_argument("negative_correlation_exact: dimension out of range");
    if (t < 1) throw std::invalid_argument("negative_correlation_exact: t must be >= 1");
    double pi_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(pi(i) > 0.0))
            throw std::invalid_argument("negative_correlation_exact: pi must be positive");
        pi_sum += pi(i);
        double row = P.row(i).sum();
        if (std::abs(row - 1.0) > 1e-9)
            throw std::invalid_argument("negative_correlation_exact: P is not row-stochastic");
        if (P.row(i).minCoeff() < -1e-15)
            throw std::invalid_argument("negative_correlation_exact: negative entry in P");
    }
    if (std::abs(pi_sum - 1.0) > 1e-9)
        throw std::invalid_argument("negative_correlation_exact: pi does not sum to 1");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            double a = pi(i) * P(i, j), b = pi(j) * P(j, i);
            if (std::abs(a - b) > 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300}))
                throw std::invalid_argument("negative_correlation_exact: detailed balance fails");
        }

    // quadratic form in the original coordinates
    Eigen::VectorXd z = x - matrix_power(P, t - 1) * x;
    Eigen::VectorXd y = z - P * z;
    NegCorrCertificate cert;
    cert.quadratic_form = (pi.array() * x.array() * y.array()).sum();

    // pi-symmetrized operator: polynomials of the symmetric S commute, so the
    // product is symmetric up to roundoff
    Eigen::VectorXd sq = pi.array().sqrt();
    Eigen::MatrixXd S = sq.asDiagonal() * P * sq.cwiseInverse().asDiagonal();
    S = ((S + S.transpose()) / 2.0).eval();
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd M = (I - S) * (I - matrix_power(S, t - 1));
    M = ((M + M.transpose()) / 2.0).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, Eigen::EigenvaluesOnly);
    cert.min_eigenvalue = solver.eigenvalues().minCoeff();
    cert.psd = cert.min_eigenvalue >= -1e-9;
    return cert;
}

}  // namespace iiclab
