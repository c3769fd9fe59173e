#pragma once
// External field H_s(t): a continuous concatenation of C^1 monotone pieces.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "beancrit/core.hpp"

namespace beancrit {

struct DrivePiece {
  double t0 = 0.0, t1 = 1.0;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::string kind = "linear";
};

class DriveProfile {
 public:
  DriveProfile() = default;

  explicit DriveProfile(std::vector<DrivePiece> pieces) : pieces_(std::move(pieces)) {
    if (pieces_.empty()) throw Error(ErrorKind::ConfigError, "drive needs at least one piece");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      const auto& p = pieces_[i];
      if (!(p.t1 > p.t0)) throw Error(ErrorKind::ConfigError, "drive piece " + std::to_string(i) + " has t1 <= t0");
      if (i > 0) {
        const auto& q = pieces_[i - 1];
        if (std::abs(q.t1 - p.t0) > 1e-12)
          throw Error(ErrorKind::ConfigError, "drive pieces are not contiguous at piece " + std::to_string(i));
        if (std::abs(q.value(q.t1) - p.value(p.t0)) > 1e-9 * std::max(1.0, std::abs(p.value(p.t0))))
          throw Error(ErrorKind::ConfigError, "drive is discontinuous at piece " + std::to_string(i));
      }
    }
  }

  static DrivePiece linear_piece(double t0, double t1, double h0, double h1) {
    const double slope = (h1 - h0) / (t1 - t0);
    return {t0, t1, [=](double t) { return h0 + slope * (t - t0); }, [=](double) { return slope; }, "linear"};
  }

  /// Monotone C^1 interpolant (Fritsch-Carlson) through (t_k, H_k).
  static DrivePiece sampled_piece(std::vector<std::pair<double, double>> samples) {
    if (samples.size() < 2) throw Error(ErrorKind::ConfigError, "custom drive piece needs two samples");
    const std::size_t n = samples.size();
    std::vector<double> t(n), h(n), m(n), delta(n - 1);
    for (std::size_t i = 0; i < n; ++i) std::tie(t[i], h[i]) = samples[i];
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!(t[i + 1] > t[i])) throw Error(ErrorKind::ConfigError, "custom drive sample times must increase");
      delta[i] = (h[i + 1] - h[i]) / (t[i + 1] - t[i]);
    }
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) m[i] = delta[i - 1] * delta[i] <= 0.0 ? 0.0 : 0.5 * (delta[i - 1] + delta[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (delta[i] == 0.0) {
        m[i] = m[i + 1] = 0.0;
        continue;
      }
      const double a = m[i] / delta[i], b = m[i + 1] / delta[i];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        m[i] = tau * a * delta[i];
        m[i + 1] = tau * b * delta[i];
      }
    }
    auto locate = [t](double x) {
      const auto it = std::upper_bound(t.begin(), t.end(), x);
      const std::size_t i = static_cast<std::size_t>(std::clamp<long>(it - t.begin() - 1, 0, static_cast<long>(t.size()) - 2));
      return i;
    };
    auto value = [=](double x) {
      const std::size_t i = locate(x);
      const double hh = t[i + 1] - t[i], s = (x - t[i]) / hh;
      const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
      const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
      return h00 * h[i] + h10 * hh * m[i] + h01 * h[i + 1] + h11 * hh * m[i + 1];
    };
    auto derivative = [=](double x) {
      const std::size_t i = locate(x);
      const double hh = t[i + 1] - t[i], s = (x - t[i]) / hh;
      const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
      const double d01 = -6 * s * s + 6 * s, d11 = 3 * s * s - 2 * s;
      return (d00 * h[i] + d01 * h[i + 1]) / hh + d10 * m[i] + d11 * m[i + 1];
    };
    return {t.front(), t.back(), value, derivative, "custom-samples"};
  }

  /// Linear ramp from h0 at t0 to h1 at t1.
  static DriveProfile ramp(double t0, double t1, double h0, double h1) {
    return DriveProfile({linear_piece(t0, t1, h0, h1)});
  }

  /// Up on [0, T] from 0 to amplitude, then back down on [T, 2T].
  static DriveProfile loop(double period, double amplitude) {
    return DriveProfile({linear_piece(0.0, period, 0.0, amplitude),
                         linear_piece(period, 2.0 * period, amplitude, 0.0)});
  }

  const std::vector<DrivePiece>& pieces() const { return pieces_; }
  double t_begin() const { return pieces_.front().t0; }
  double t_end() const { return pieces_.back().t1; }

  /// Piece containing t; [t0, t1) except that the last piece owns t_end.
  std::size_t piece_index(double t) const {
    for (std::size_t i = 0; i < pieces_.size(); ++i)
      if (t < pieces_[i].t1) return i;
    return pieces_.size() - 1;
  }

  double value(double t) const { return pieces_[piece_index(t)].value(t); }
  double derivative(double t) const { return pieces_[piece_index(t)].derivative(t); }

  /// +1 nondecreasing, -1 nonincreasing, 0 constant. Throws
  /// NonmonotonePiece when the sampled derivative changes sign.
  int direction(std::size_t i, std::size_t samples = 1024) const {
    const auto& p = pieces_.at(i);
    bool up = false, down = false;
    for (std::size_t k = 0; k <= samples; ++k) {
      const double t = p.t0 + (p.t1 - p.t0) * static_cast<double>(k) / static_cast<double>(samples);
      const double d = p.derivative(t);
      up = up || d > 1e-14;
      down = down || d < -1e-14;
    }
    if (up && down) throw Error(ErrorKind::NonmonotonePiece, "drive piece " + std::to_string(i) + " is not monotone");
    return up ? 1 : (down ? -1 : 0);
  }

  /// max |H'| over all pieces (sampled).
  double max_rate(std::size_t samples = 1024) const {
    double m = 0.0;
    for (const auto& p : pieces_)
      for (std::size_t k = 0; k <= samples; ++k)
        m = std::max(m, std::abs(p.derivative(p.t0 + (p.t1 - p.t0) * static_cast<double>(k) / static_cast<double>(samples))));
    return m;
  }

 private:
  std::vector<DrivePiece> pieces_;
};

}  // namespace beancrit
