#ifndef LBC_LIEGROUP_HPP
#define LBC_LIEGROUP_HPP

#include <Eigen/Core>

#include "lbc/errors.hpp"

namespace lbc {

using Vector6d = Eigen::Matrix<double, 6, 1>;

// Lie-algebra coordinates xi = [rho; phi] of an SE(3) element.
// rho is the translational part (meters), phi the rotational part (radians).
struct Twist {
  Eigen::Vector3d rho = Eigen::Vector3d::Zero();
  Eigen::Vector3d phi = Eigen::Vector3d::Zero();

  Twist() = default;
  Twist(const Eigen::Vector3d& rho_in, const Eigen::Vector3d& phi_in)
      : rho(rho_in), phi(phi_in) {}

  static Twist Zero() { return Twist(); }
  static Twist FromVector(const Vector6d& v) {
    return Twist(v.head<3>(), v.tail<3>());
  }
  Vector6d vector() const {
    Vector6d v;
    v << rho, phi;
    return v;
  }
  bool allFinite() const { return rho.allFinite() && phi.allFinite(); }
};

// Rigid-body transform in SE(3), stored as rotation matrix + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Pose() = default;
  Pose(const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
      : rotation(r), translation(t) {}

  static Pose Identity() { return Pose(); }

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  // Applies the transform to a point.
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }
};

// skew(v) * u == v x u
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// Transform equal to applying b then a.
Pose compose(const Pose& a, const Pose& b);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

Pose inverse(const Pose& t);

// Closed-form SE(3) exponential; series branch below ||phi|| = 1e-8.
Pose exp_map(const Twist& xi);

// SE(3) logarithm. Throws CutLocusError when the rotation angle is within
// 1e-6 of pi.
Twist log_map(const Pose& t);

// 4x4 se(3) representation of a twist and its inverse.
Eigen::Matrix4d hat(const Twist& xi);

// Throws MalformedAlgebraElement if m violates the se(3) sparsity pattern
// beyond 1e-12.
Twist vee(const Eigen::Matrix4d& m);

double rotation_angle(const Eigen::Matrix3d& r);

// Nearest rotation via polar decomposition; used to bound drift in long
// composition chains.
Pose orthonormalized(const Pose& t);

bool is_orthonormal(const Eigen::Matrix3d& r, double tol = 1e-9);

// Left-composes relative poses, re-orthonormalizing every 100 steps.
class PoseAccumulator {
 public:
  explicit PoseAccumulator(const Pose& start = Pose::Identity())
      : value_(start) {}

  // value <- value * rel
  const Pose& append(const Pose& rel) {
    value_ = value_ * rel;
    if (++count_ % 100 == 0) value_ = orthonormalized(value_);
    return value_;
  }

  const Pose& value() const { return value_; }

 private:
  Pose value_;
  int count_ = 0;
};

}  // namespace lbc

#endif  // LBC_LIEGROUP_HPP
