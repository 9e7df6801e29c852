#pragma once

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace lmbox {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// State vector layout: [x, y, phi, phi_dot, v, a, w, l].
namespace sv {
inline constexpr int X = 0;
inline constexpr int Y = 1;
inline constexpr int Phi = 2;
inline constexpr int PhiDot = 3;
inline constexpr int V = 4;
inline constexpr int A = 5;
inline constexpr int W = 6;
inline constexpr int L = 7;
inline constexpr int Dim = 8;
}  // namespace sv

/// Bitmask over state indices selecting the features a sensor reports.
/// Bit i corresponds to state index i; position bits are mandatory.
using FeatureMask = std::uint8_t;
inline constexpr FeatureMask kPositionMask = (1u << sv::X) | (1u << sv::Y);
inline constexpr FeatureMask kFullMask = 0xFFu;

inline int mask_dim(FeatureMask mask) { return std::popcount(unsigned{mask}); }

/// Reference points of the bounding box: center plus the four corners
/// (front-left, front-right, back-left, back-right).
enum class RefPoint : std::uint8_t { C, FL, FR, BL, BR };

/// The corner alphabet, in the canonical iteration order used everywhere.
inline constexpr std::array<RefPoint, 4> kCorners{RefPoint::FL, RefPoint::FR,
                                                  RefPoint::BL, RefPoint::BR};

inline const char* to_string(RefPoint rp) {
  switch (rp) {
    case RefPoint::C: return "C";
    case RefPoint::FL: return "FL";
    case RefPoint::FR: return "FR";
    case RefPoint::BL: return "BL";
    case RefPoint::BR: return "BR";
  }
  return "?";
}

inline RefPoint ref_point_from_string(const std::string& s) {
  if (s == "C") return RefPoint::C;
  if (s == "FL") return RefPoint::FL;
  if (s == "FR") return RefPoint::FR;
  if (s == "BL") return RefPoint::BL;
  if (s == "BR") return RefPoint::BR;
  throw std::invalid_argument("unknown reference point '" + s + "'");
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

/// Box state anchored at a reference point. The filter keeps everything in
/// the C (center) frame; corner-anchored states only appear transiently.
struct BoxState {
  Vec8 vec = Vec8::Zero();
  RefPoint ref_point = RefPoint::C;

  double& x() { return vec[sv::X]; }
  double& y() { return vec[sv::Y]; }
  double& phi() { return vec[sv::Phi]; }
  double& phi_dot() { return vec[sv::PhiDot]; }
  double& v() { return vec[sv::V]; }
  double& a() { return vec[sv::A]; }
  double& w() { return vec[sv::W]; }
  double& l() { return vec[sv::L]; }

  double x() const { return vec[sv::X]; }
  double y() const { return vec[sv::Y]; }
  double phi() const { return vec[sv::Phi]; }
  double phi_dot() const { return vec[sv::PhiDot]; }
  double v() const { return vec[sv::V]; }
  double a() const { return vec[sv::A]; }
  double w() const { return vec[sv::W]; }
  double l() const { return vec[sv::L]; }

  Vec2 position() const { return vec.head<2>(); }
};

/// Lateral (delta: +1 left, -1 right) and longitudinal (gamma: +1 front,
/// -1 back) signs of a corner. Both zero for the center.
inline std::pair<double, double> corner_signs(RefPoint zeta) {
  switch (zeta) {
    case RefPoint::FL: return {+1.0, +1.0};
    case RefPoint::FR: return {-1.0, +1.0};
    case RefPoint::BL: return {+1.0, -1.0};
    case RefPoint::BR: return {-1.0, -1.0};
    case RefPoint::C: return {0.0, 0.0};
  }
  return {0.0, 0.0};
}

/// Gain matrix mapping the extent [w, l] to the planar displacement from the
/// box center to the reference point, at yaw angle phi.
inline Mat2 corner_gain(double phi, RefPoint zeta) {
  const auto [delta, gamma] = corner_signs(zeta);
  Mat2 f;
  f << -std::sin(phi) * delta, std::cos(phi) * gamma,
        std::cos(phi) * delta, std::sin(phi) * gamma;
  return 0.5 * f;
}

/// Displacement from the box center to reference point `zeta`.
inline Vec2 corner_offset(double phi, double w, double l, RefPoint zeta) {
  return corner_gain(phi, zeta) * Vec2(w, l);
}

/// Full 8x8 state transform between reference-point anchorings. Block
/// structure [[I, D], [0, I]] with D nonzero only in the (w, l) columns of
/// the position rows, so the determinant is 1 and the inverse is exact.
struct TransformMatrix {
  Mat8 full = Mat8::Identity();

  Mat8 inverse() const {
    Mat8 inv = full;
    inv.block<2, 6>(0, 2) = -full.block<2, 6>(0, 2);
    return inv;
  }

  /// Measurement matrix for a sensor reporting the masked features: the rows
  /// of the full transform selected by `mask`, in state-index order.
  MatX rows(FeatureMask mask) const {
    const int d = mask_dim(mask);
    MatX h(d, sv::Dim);
    int r = 0;
    for (int i = 0; i < sv::Dim; ++i) {
      if (mask & (1u << i)) h.row(r++) = full.row(i);
    }
    return h;
  }
};

/// Builds the center-to-`zeta` transform at yaw angle phi.
inline TransformMatrix build_transform(double phi, RefPoint zeta) {
  TransformMatrix t;
  t.full.block<2, 2>(0, sv::W) = corner_gain(phi, zeta);
  return t;
}

/// Builds the transform from a center-anchored state to `zeta` at the
/// state's own yaw angle. The state must be anchored at C.
inline TransformMatrix build_transform(const BoxState& state, RefPoint zeta) {
  if (state.ref_point != RefPoint::C) {
    throw std::invalid_argument("build_transform expects a center-anchored state");
  }
  return build_transform(state.phi(), zeta);
}

/// Re-anchors a Gaussian (mean, cov) from one reference point to another.
/// The transform is evaluated at the input mean's yaw and treated as locally
/// constant, so the map is affine and the round trip is exact.
inline std::pair<Vec8, Mat8> convert_ref_point(const Vec8& mean, const Mat8& cov,
                                               RefPoint from, RefPoint to) {
  if (!mean.allFinite() || !cov.allFinite()) {
    throw std::invalid_argument("convert_ref_point: non-finite input");
  }
  if (from == to) return {mean, cov};
  const double phi = mean[sv::Phi];
  TransformMatrix t;
  t.full.block<2, 2>(0, sv::W) = corner_gain(phi, to) - corner_gain(phi, from);
  Vec8 m = t.full * mean;
  Mat8 c = t.full * cov * t.full.transpose();
  c = (0.5 * (c + c.transpose())).eval();
  return {m, c};
}

}  // namespace lmbox
