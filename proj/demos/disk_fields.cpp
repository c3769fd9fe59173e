// Unit disk with the Euclidean ball: compares the computed distance, cut
// lengths, curvature and saturated dissipation against 1 - r, 1, 1 and a r / 2.
//
//   demo_disk_fields [resolution]

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "beancrit/beancrit.hpp"

using namespace beancrit;

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 256;
  const DomainBoundary omega = DomainBoundary::disk(1.0);
  const MinkowskiFields f(omega, ConvexBody::disk(1.0), {n, n, {}});

  double d_err = 0.0;
  for (std::size_t k = 0; k < f.d().size(); ++k)
    if (f.d().inside(k)) d_err = std::max(d_err, std::abs(f.d()[k] - (1.0 - norm(f.spec().center(k)))));
  double l_err = 0.0, kappa_err = 0.0;
  const HalfFan& fan = f.fan().plus;
  for (std::size_t i = 0; i < fan.size(); ++i) {
    l_err = std::max(l_err, std::abs(fan.cut[i] - 1.0));
    kappa_err = std::max(kappa_err, std::abs(fan.kappa[i] - 1.0));
  }
  std::printf("grid %zu^2, %zu rays\n", n, fan.size());
  std::printf("max |d - (1 - r)|   %.3e\n", d_err);
  std::printf("max |l - 1|         %.3e\n", l_err);
  std::printf("max |kappa - 1|     %.3e\n", kappa_err);

  // H_s(t) = a t from h0 = 0 saturates at t = 1 / a.
  const double a = 2.0;
  const DriveProfile drive({DriveProfile::linear_piece(0.0, 1.0, 0.0, a)});
  const SampledField zero = SampledField::from_function(f.blank(), [](Vec2) { return 0.0; });
  const auto tau = full_penetration_time(f, zero, drive);
  std::printf("full penetration    t = %.12f (1/a = %.12f)\n", tau.value_or(-1.0), 1.0 / a);

  const ScalarGrid w = dissipation_field(f, zero, 1, drive.value(0.9), a);
  double w_err = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double r = norm(f.spec().center(k));
    if (!w.inside(k) || r < 0.05) continue;
    w_err = std::max(w_err, std::abs(w[k] - 0.5 * a * r) / (0.5 * a * r));
  }
  std::printf("saturated w vs a r/2, relative error away from the centre  %.3e\n", w_err);

  std::printf("\n  r      h(0.3)    w(0.3)\n");
  const EvolutionState s = evolve_state(f, f.blank(0.0), drive, 0.3);
  for (double r = 0.0; r <= 1.0; r += 0.125) {
    const Vec2 x{r * 0.999, 0.0};
    std::printf("%5.3f  %8.5f  %8.5f\n", r, s.h.sample(x), s.w.sample(x));
  }
  return 0;
}
