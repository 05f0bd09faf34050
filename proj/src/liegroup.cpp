#include "lbc/liegroup.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>

namespace lbc {

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  // clang-format off
  s <<     0, -v.z(),  v.y(),
       v.z(),      0, -v.x(),
      -v.y(),  v.x(),      0;
  // clang-format on
  return s;
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation * b.rotation, a.rotation * b.translation + a.translation);
}

Pose inverse(const Pose& t) {
  Eigen::Matrix3d rt = t.rotation.transpose();
  return Pose(rt, -(rt * t.translation));
}

namespace {

// Rodrigues coefficients A = sin(t)/t, B = (1-cos(t))/t^2, C = (t-sin(t))/t^3
// in cancellation-free forms.
struct RodriguesCoeffs {
  double a, b, c;
};

RodriguesCoeffs rodrigues_coeffs(double theta) {
  RodriguesCoeffs r;
  const double t2 = theta * theta;
  if (theta < 1e-8) {
    r.a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    r.b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    r.c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
    return r;
  }
  const double sh = std::sin(0.5 * theta);
  r.a = std::sin(theta) / theta;
  r.b = 2.0 * sh * sh / t2;
  // (t - sin t)/t^3 cancels below ~1e-4; switch to the series there.
  r.c = (theta < 1e-4) ? 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
                       : (theta - std::sin(theta)) / (t2 * theta);
  return r;
}

}  // namespace

Pose exp_map(const Twist& xi) {
  const double theta = xi.phi.norm();
  const Eigen::Matrix3d w = skew(xi.phi);
  const Eigen::Matrix3d w2 = w * w;
  const RodriguesCoeffs k = rodrigues_coeffs(theta);

  Pose out;
  out.rotation = Eigen::Matrix3d::Identity() + k.a * w + k.b * w2;
  const Eigen::Matrix3d v = Eigen::Matrix3d::Identity() + k.b * w + k.c * w2;
  out.translation = v * xi.rho;
  return out;
}

double rotation_angle(const Eigen::Matrix3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Twist log_map(const Pose& t) {
  const double theta = rotation_angle(t.rotation);
  if (theta > M_PI - 1e-6) {
    throw CutLocusError("log_map: rotation angle within 1e-6 of pi");
  }

  Eigen::AngleAxisd aa(t.rotation);
  Twist xi;
  xi.phi = aa.angle() * aa.axis();

  const Eigen::Matrix3d w = skew(xi.phi);
  const Eigen::Matrix3d w2 = w * w;
  // V^-1 = I - 1/2 W + D W^2 with D = (1 - (theta/2) cot(theta/2)) / theta^2.
  double d;
  const double t2 = theta * theta;
  if (theta < 1e-2) {
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    const double half = 0.5 * theta;
    d = (1.0 - half * std::cos(half) / std::sin(half)) / t2;
  }
  const Eigen::Matrix3d vinv = Eigen::Matrix3d::Identity() - 0.5 * w + d * w2;
  xi.rho = vinv * t.translation;
  return xi;
}

Eigen::Matrix4d hat(const Twist& xi) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.topLeftCorner<3, 3>() = skew(xi.phi);
  m.topRightCorner<3, 1>() = xi.rho;
  return m;
}

Twist vee(const Eigen::Matrix4d& m) {
  constexpr double kTol = 1e-12;
  for (int c = 0; c < 4; ++c) {
    if (std::abs(m(3, c)) > kTol) {
      throw MalformedAlgebraElement("vee: bottom row not zero");
    }
  }
  for (int i = 0; i < 3; ++i) {
    if (std::abs(m(i, i)) > kTol) {
      throw MalformedAlgebraElement("vee: nonzero diagonal in rotation block");
    }
  }
  if (std::abs(m(0, 1) + m(1, 0)) > kTol || std::abs(m(0, 2) + m(2, 0)) > kTol ||
      std::abs(m(1, 2) + m(2, 1)) > kTol) {
    throw MalformedAlgebraElement("vee: rotation block not skew-symmetric");
  }
  Twist xi;
  xi.phi = Eigen::Vector3d(m(2, 1), m(0, 2), m(1, 0));
  xi.rho = m.topRightCorner<3, 1>();
  return xi;
}

Pose orthonormalized(const Pose& t) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(t.rotation,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  return Pose(r, t.translation);
}

bool is_orthonormal(const Eigen::Matrix3d& r, double tol) {
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

}  // namespace lbc
