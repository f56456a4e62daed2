#pragma once

#include <array>
#include <cmath>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gymlink/robot_model.hpp"

namespace gymlink {

template <typename Scalar>
using Vector6 = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Isometry3 = Eigen::Transform<Scalar, 3, Eigen::Isometry>;

using Joints = Vector6<double>;

// Standard Denavit-Hartenberg table, one row per joint.
template <typename Scalar>
struct DhTable {
  std::array<Scalar, 6> a;
  std::array<Scalar, 6> d;
  std::array<Scalar, 6> alpha;
};

// Manufacturer values for the UR10.
template <typename Scalar = double>
DhTable<Scalar> ur10_dh() {
  const Scalar half_pi = Scalar(std::numbers::pi) / Scalar(2);
  return {{Scalar(0), Scalar(-0.612), Scalar(-0.5723), Scalar(0), Scalar(0), Scalar(0)},
          {Scalar(0.1273), Scalar(0), Scalar(0), Scalar(0.163941), Scalar(0.1157), Scalar(0.0922)},
          {half_pi, Scalar(0), Scalar(0), half_pi, -half_pi, Scalar(0)}};
}

// Rot_z(theta) * Trans_z(d) * Trans_x(a) * Rot_x(alpha)
template <typename Scalar>
Isometry3<Scalar> dh_link(Scalar theta, Scalar d, Scalar a, Scalar alpha) {
  Isometry3<Scalar> t = Isometry3<Scalar>::Identity();
  t.rotate(Eigen::AngleAxis<Scalar>(theta, Vector3<Scalar>::UnitZ()));
  t.translate(Vector3<Scalar>(a, Scalar(0), d));
  t.rotate(Eigen::AngleAxis<Scalar>(alpha, Vector3<Scalar>::UnitX()));
  return t;
}

// Base frame followed by the six link frames.
template <typename Derived>
std::array<Isometry3<typename Derived::Scalar>, 7> link_frames(
    const Eigen::MatrixBase<Derived>& q,
    const DhTable<typename Derived::Scalar>& dh = ur10_dh<typename Derived::Scalar>()) {
  using Scalar = typename Derived::Scalar;
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 6);
  std::array<Isometry3<Scalar>, 7> frames;
  frames[0] = Isometry3<Scalar>::Identity();
  for (int i = 0; i < 6; ++i) {
    frames[i + 1] = frames[i] * dh_link<Scalar>(q[i], dh.d[i], dh.a[i], dh.alpha[i]);
  }
  return frames;
}

template <typename Derived>
std::array<Vector3<typename Derived::Scalar>, 7> frame_origins(const Eigen::MatrixBase<Derived>& q) {
  const auto frames = link_frames(q);
  std::array<Vector3<typename Derived::Scalar>, 7> out;
  for (std::size_t i = 0; i < frames.size(); ++i) out[i] = frames[i].translation();
  return out;
}

// End-effector (last frame origin) position in the base frame, meters.
template <typename Derived>
Vector3<typename Derived::Scalar> forward_kinematics(const Eigen::MatrixBase<Derived>& q) {
  return link_frames(q)[6].translation();
}

// Geometric position Jacobian: column i is z_i x (p_ee - p_i).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 3, 6> position_jacobian(const Eigen::MatrixBase<Derived>& q) {
  using Scalar = typename Derived::Scalar;
  const auto frames = link_frames(q);
  const Vector3<Scalar> ee = frames[6].translation();
  Eigen::Matrix<Scalar, 3, 6> jac;
  for (int i = 0; i < 6; ++i) {
    const Vector3<Scalar> axis = frames[i].linear().col(2);
    jac.col(i) = axis.cross(ee - frames[i].translation());
  }
  return jac;
}

struct IkOptions {
  int max_iterations = 200;
  double tolerance = 1e-9;  // m
  double damping = 1e-3;
  double max_step = 0.2;    // rad per iteration
};

// Damped least-squares position IK started from `seed`. Returns nullopt when
// it does not converge or leaves the joint limits.
std::optional<Joints> solve_position_ik(const Eigen::Vector3d& target, const Joints& seed, const IkOptions& opts = {});

}  // namespace gymlink
