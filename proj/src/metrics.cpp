#include "gmcs/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gmcs {

ErrorSummary error_summary(const StateEstimate& state,
                           const std::vector<MixtureConstraint>& constraints) {
  ErrorSummary out;
  out.per_constraint.reserve(constraints.size());
  for (const auto& c : constraints) {
    const double e = multicomponent_error(state, c);
    out.per_constraint.push_back(e);
    out.average += e;
    out.maximum = std::max(out.maximum, e);
  }
  if (!constraints.empty())
    out.average /= static_cast<double>(constraints.size());
  return out;
}

namespace {

Eigen::Vector3d centroid(const Coordinates& pts) {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

double rmsd_with_rotation(const Coordinates& a, const Coordinates& b,
                          const Eigen::Vector3d& ca, const Eigen::Vector3d& cb,
                          const Eigen::Matrix3d& rot) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    sum += (rot * (a[k] - ca) - (b[k] - cb)).squaredNorm();
  return std::sqrt(sum / static_cast<double>(a.size()));
}

}  // namespace

RmsdResult rmsd_superposed(const Coordinates& a, const Coordinates& b,
                           bool allow_reflection) {
  if (a.size() != b.size())
    throw std::invalid_argument("rmsd_superposed: point counts differ");
  if (a.size() < 3)
    throw std::invalid_argument("rmsd_superposed: need at least 3 points");

  const Eigen::Vector3d ca = centroid(a);
  const Eigen::Vector3d cb = centroid(b);
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < a.size(); ++k)
    cross += (b[k] - cb) * (a[k] - ca).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(1) < 1e-12)
    throw std::invalid_argument("rmsd_superposed: degenerate (collinear) configuration");

  const double det = (svd.matrixU() * svd.matrixV().transpose()).determinant();

  // proper rotation (Kabsch sign correction)
  Eigen::Vector3d signs(1.0, 1.0, det > 0 ? 1.0 : -1.0);
  const Eigen::Matrix3d rot_proper =
      svd.matrixU() * signs.asDiagonal() * svd.matrixV().transpose();
  RmsdResult result;
  result.rmsd = rmsd_with_rotation(a, b, ca, cb, rot_proper);

  if (allow_reflection) {
    Eigen::Vector3d mirror_signs(1.0, 1.0, det > 0 ? -1.0 : 1.0);
    const Eigen::Matrix3d rot_improper =
        svd.matrixU() * mirror_signs.asDiagonal() * svd.matrixV().transpose();
    const double mirrored = rmsd_with_rotation(a, b, ca, cb, rot_improper);
    if (mirrored < result.rmsd) {
      result.rmsd = mirrored;
      result.mirrored = true;
    }
  }
  return result;
}

double component_identification_rate(const StateEstimate& state,
                                     const std::vector<MixtureConstraint>& constraints,
                                     const std::vector<int>& answer_key) {
  if (answer_key.size() != constraints.size())
    throw std::invalid_argument("component_identification_rate: key size mismatch");
  if (constraints.empty()) return 1.0;
  std::size_t hits = 0;
  for (std::size_t n = 0; n < constraints.size(); ++n) {
    const auto& c = constraints[n];
    if (answer_key[n] < 0 ||
        answer_key[n] >= static_cast<int>(c.components.size()))
      throw std::invalid_argument("component_identification_rate: key entry out of range");
    const double h = distance_h(state.mean, c.i, c.j);
    int best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (int m = 0; m < static_cast<int>(c.components.size()); ++m) {
      const auto& g = c.components[static_cast<std::size_t>(m)];
      const double e = std::abs(g.mean - h) / std::sqrt(g.variance);
      if (e < best_err) {
        best_err = e;
        best = m;
      }
    }
    if (best == answer_key[n]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(constraints.size());
}

std::vector<Ellipsoid> ellipsoid_report(const StateEstimate& state) {
  state.validate();
  std::vector<Ellipsoid> out;
  out.reserve(static_cast<std::size_t>(state.n_points));
  for (int k = 0; k < state.n_points; ++k) {
    Ellipsoid e;
    e.point = k;
    e.mean = state.point(k);
    e.cov_block = state.cov.block<3, 3>(3 * k, 3 * k);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(e.cov_block);
    for (int ax = 0; ax < 3; ++ax) {
      EllipsoidAxis axis;
      axis.length = 2.0 * std::sqrt(std::max(es.eigenvalues()(ax), 0.0));
      axis.direction = es.eigenvectors().col(ax);
      e.axes.push_back(axis);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace gmcs
