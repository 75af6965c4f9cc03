#include <Eigen/Eigenvalues>

#include "apc/experts.hpp"

namespace apc::experts {

RiccatiSolution riccati_solve(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                              double tolerance, int max_iterations) {
  const auto n = static_cast<std::size_t>(a.rows());
  numcore::check_dim(static_cast<std::size_t>(a.cols()), n, "riccati A");
  numcore::check_dim(static_cast<std::size_t>(b.rows()), n, "riccati B");
  numcore::check_dim(static_cast<std::size_t>(q.rows()), n, "riccati Q");
  numcore::check_dim(static_cast<std::size_t>(r.rows()), static_cast<std::size_t>(b.cols()), "riccati R");

  Matrix p = q;
  for (int it = 1; it <= max_iterations; ++it) {
    const Matrix bt_p = b.transpose() * p;
    const Matrix gain = (r + bt_p * b).ldlt().solve(bt_p * a);
    Matrix next = q + a.transpose() * p * a - a.transpose() * p * b * gain;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) break;
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (change < tolerance) {
      const Matrix bt = b.transpose() * p;
      return {p, (r + bt * b).ldlt().solve(bt * a), it};
    }
  }
  throw RiccatiError("riccati_solve: no convergence; (A, B) may not be stabilizable");
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(m), false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace apc::experts
