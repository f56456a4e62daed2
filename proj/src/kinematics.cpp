#include "gymlink/kinematics.hpp"

#include "gymlink/sim_kernel.hpp"

namespace gymlink {

std::optional<Joints> solve_position_ik(const Eigen::Vector3d& target, const Joints& seed, const IkOptions& opts) {
  Joints q = seed;
  const double lambda2 = opts.damping * opts.damping;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::Vector3d err = target - forward_kinematics(q);
    if (err.norm() < opts.tolerance) return q;
    const Eigen::Matrix<double, 3, 6> jac = position_jacobian(q);
    const Eigen::Matrix3d jjt = jac * jac.transpose() + lambda2 * Eigen::Matrix3d::Identity();
    Joints step = jac.transpose() * jjt.ldlt().solve(err);
    if (const double n = step.cwiseAbs().maxCoeff(); n > opts.max_step) step *= opts.max_step / n;
    q += step;
    for (int i = 0; i < ur::kJoints; ++i) q[i] = normalize_angle(q[i]);
  }
  if ((target - forward_kinematics(q)).norm() < opts.tolerance) return q;
  return std::nullopt;
}

}  // namespace gymlink
