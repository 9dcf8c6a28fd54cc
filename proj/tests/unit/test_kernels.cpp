#include <doctest.h>

#include <vector>

#include "gen.hpp"
#include "ppmp/kernels/kernels.hpp"

using namespace ppmp;
using namespace ppmp::kernels;

namespace {

const KernelTable* vector_table() {
  const KernelTable* t = avx2_table();
  if (!t) MESSAGE("AVX2/FMA unavailable: equivalence checks run against the scalar table only");
  return t ? t : &scalar_table();
}

std::vector<double> draw(gen::Rng& r, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = r.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("dispatch honours explicit selection") {
  const Isa before = active().isa;
  CHECK(select(Isa::scalar) == Isa::scalar);
  CHECK(active().isa == Isa::scalar);
  const Isa got = select(Isa::avx2);
  CHECK(got == (avx2_table() ? Isa::avx2 : Isa::scalar));
  select(before);
  CHECK(to_string(Isa::avx2) == "avx2");
}

TEST_CASE("property: nearest_phase equivalence, including ties and tails") {
  const KernelTable* v = vector_table();
  gen::for_all(31, 3000, [&](gen::Rng& r, int i) {
    // Lengths cover empty-tail and partial-tail cases of the 4-wide loop.
    const std::size_t n = static_cast<std::size_t>(r.integer(1, 67));
    std::vector<double> phases(n);
    for (double& p : phases) p = r.angle();
    // Every few cases, force exact duplicates so ties must go to the lowest index.
    if (i % 4 == 0 && n > 3) phases[n - 1] = phases[n - 3] = phases[1];
    const double phi = i % 4 == 0 && n > 3 ? phases[1] : r.angle();
    for (PhaseMetric m : {PhaseMetric::circular, PhaseMetric::linear}) {
      CHECK(v->nearest_phase(phases, phi, m) == scalar_table().nearest_phase(phases, phi, m));
    }
  });
}

TEST_CASE("property: affine_gain equivalence") {
  const KernelTable* v = vector_table();
  gen::for_all(32, 2000, [&](gen::Rng& r, int) {
    const std::size_t rows = static_cast<std::size_t>(r.integer(1, 40));
    const std::size_t cols = static_cast<std::size_t>(r.integer(1, 4));
    const auto base = draw(r, rows, -3, 3);
    const auto gain = draw(r, rows * cols, -2, 2);
    const auto delta = draw(r, cols, -1, 1);
    std::vector<double> a(rows), b(rows);
    scalar_table().affine_gain(base, gain, delta, a);
    v->affine_gain(base, gain, delta, b);
    for (std::size_t k = 0; k < rows; ++k) {
      // FMA skips one rounding per term; allow a few ulps of the magnitudes involved.
      double mag = std::fabs(base[k]);
      for (std::size_t j = 0; j < cols; ++j) mag += std::fabs(gain[j * rows + k] * delta[j]);
      CHECK(std::fabs(a[k] - b[k]) <= 8 * 2.2e-16 * mag);
    }
  });
}

TEST_CASE("property: axpy equivalence") {
  const KernelTable* v = vector_table();
  gen::for_all(33, 2000, [&](gen::Rng& r, int) {
    const std::size_t n = static_cast<std::size_t>(r.integer(0, 37));
    const auto x = draw(r, n, -5, 5);
    auto a = draw(r, n, -5, 5);
    auto b = a;
    const double s = r.uniform(-2, 2);
    scalar_table().axpy(a, x, s);
    v->axpy(b, x, s);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::fabs(a[k] - b[k]) <= 4 * 2.2e-16 * (std::fabs(a[k]) + 1));
  });
}
