#include "gmcs/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gmcs {

GaussianComponent::GaussianComponent(double w, double mu, double var)
    : weight(w), mean(mu), variance(std::max(var, kVarianceFloor)) {
  if (!(w > 0.0) || w > 1.0 + 1e-12)
    throw std::invalid_argument("component weight must be in (0, 1]");
}

void MixtureConstraint::validate(int n_points) const {
  if (i == j) throw std::invalid_argument("constraint relates a point to itself");
  if (i < 0 || j < 0 || i >= n_points || j >= n_points)
    throw std::invalid_argument("constraint point index out of range");
  if (components.empty())
    throw std::invalid_argument("constraint has no components");
  double total = 0.0;
  for (const auto& c : components) total += c.weight;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("component weights sum to " + std::to_string(total) +
                                ", expected 1");
}

Coordinates StateEstimate::coordinates() const {
  Coordinates out(static_cast<std::size_t>(n_points));
  for (int k = 0; k < n_points; ++k) out[static_cast<std::size_t>(k)] = point(k);
  return out;
}

void StateEstimate::validate() const {
  if (n_points <= 0) throw std::invalid_argument("state has no points");
  if (mean.size() != 3 * n_points)
    throw std::invalid_argument("mean length does not match 3 * n_points");
  if (cov.rows() != mean.size() || cov.cols() != mean.size())
    throw std::invalid_argument("covariance dimension does not match mean");
  if (!cov.isApprox(cov.transpose(), 1e-9))
    throw std::invalid_argument("covariance is not symmetric");
}

StateEstimate make_state(const Coordinates& coords, double diagonal_variance) {
  StateEstimate s;
  s.n_points = static_cast<int>(coords.size());
  s.mean.resize(3 * s.n_points);
  for (int k = 0; k < s.n_points; ++k)
    s.mean.segment<3>(3 * k) = coords[static_cast<std::size_t>(k)];
  s.cov = diagonal_variance * Matrix::Identity(3 * s.n_points, 3 * s.n_points);
  return s;
}

void SolverConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (branch_cap < 1) throw std::invalid_argument("branch_cap must be >= 1");
  if (max_cycles < 1) throw std::invalid_argument("max_cycles must be >= 1");
  if (!(initial_variance > 0.0))
    throw std::invalid_argument("initial_variance must be > 0");
  if (!(refine_variance > 0.0))
    throw std::invalid_argument("refine_variance must be > 0");
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
}

double distance_h(const Vector& mean, int i, int j) {
  if (i == j) throw std::invalid_argument("distance_h: i == j");
  if (i < 0 || j < 0 || 3 * i + 2 >= mean.size() || 3 * j + 2 >= mean.size())
    throw std::invalid_argument("distance_h: index out of range");
  return (mean.segment<3>(3 * i) - mean.segment<3>(3 * j)).norm();
}

Vector distance_jacobian(const Vector& mean, int i, int j) {
  const double d = distance_h(mean, i, j);
  if (d < kDegenerateDistance)
    throw DegenerateGeometryError("distance_jacobian: points " + std::to_string(i) +
                                  " and " + std::to_string(j) + " are coincident");
  Vector row = Vector::Zero(mean.size());
  const Eigen::Vector3d dir = (mean.segment<3>(3 * i) - mean.segment<3>(3 * j)) / d;
  row.segment<3>(3 * i) = dir;
  row.segment<3>(3 * j) = -dir;
  return row;
}

MixtureConstraint collapse_mixture(const MixtureConstraint& c) {
  double mu = 0.0;
  double second = 0.0;
  for (const auto& g : c.components) {
    mu += g.weight * g.mean;
    second += g.weight * (g.variance + g.mean * g.mean);
  }
  MixtureConstraint out;
  out.i = c.i;
  out.j = c.j;
  out.components.emplace_back(1.0, mu, second - mu * mu);
  return out;
}

double constraint_error(const StateEstimate& state, const MixtureConstraint& c) {
  if (!c.unimodal())
    throw std::invalid_argument("constraint_error: constraint is not unimodal");
  return multicomponent_error(state, c);
}

double multicomponent_error(const StateEstimate& state, const MixtureConstraint& c) {
  const double h = distance_h(state.mean, c.i, c.j);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& g : c.components)
    best = std::min(best, std::abs(g.mean - h) / std::sqrt(g.variance));
  return best;
}

void symmetrize_psd(Matrix& cov) {
  cov = 0.5 * (cov + cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov);
  if (es.info() == Eigen::Success) {
    if (es.eigenvalues().minCoeff() >= 0.0) return;
    const Vector clamped = es.eigenvalues().cwiseMax(0.0);
    cov = es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
  } else {
    // The tridiagonal QL iteration can fail to converge on matrices with
    // tightly clustered eigenvalues. SVD is slower but does not: for a
    // symmetric matrix the eigenvalues are the singular values signed by
    // the U/V column agreement.
    Eigen::BDCSVD<Matrix> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vector clamped = svd.singularValues();
    for (Eigen::Index k = 0; k < clamped.size(); ++k) {
      const double sign = svd.matrixU().col(k).dot(svd.matrixV().col(k));
      if (sign < 0.0) clamped(k) = 0.0;
    }
    cov = svd.matrixU() * clamped.asDiagonal() * svd.matrixU().transpose();
  }
  cov = 0.5 * (cov + cov.transpose()).eval();
}

}  // namespace gmcs
