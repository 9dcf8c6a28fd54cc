#include <cmath>
#include <limits>

#include "ppmp/angle.hpp"
#include "ppmp/kernels/kernels.hpp"

#if defined(__x86_64__) && (defined(__GNUC__) || defined(__clang__))
#define PPMP_HAVE_AVX2_KERNELS 1
#include <immintrin.h>
#else
#define PPMP_HAVE_AVX2_KERNELS 0
#endif

namespace ppmp::kernels {

#if PPMP_HAVE_AVX2_KERNELS

namespace {

#define PPMP_AVX2 __attribute__((target("avx2,fma")))

PPMP_AVX2 std::size_t nearest_phase_avx2(std::span<const double> phases, double phi,
                                          PhaseMetric metric) {
  const std::size_t n = phases.size();
  const double* p = phases.data();
  const bool circular = metric == PhaseMetric::circular;

  const __m256d vphi = _mm256_set1_pd(phi);
  const __m256d vpi = _mm256_set1_pd(kPi);
  const __m256d vtwo_pi = _mm256_set1_pd(kTwoPi);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));

  __m256d best_d = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  __m256d best_i = _mm256_set1_pd(0.0);
  __m256d idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  const __m256d step = _mm256_set1_pd(4.0);

  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_and_pd(_mm256_sub_pd(_mm256_loadu_pd(p + i), vphi), abs_mask);
    if (circular) {
      const __m256d wrapped = _mm256_sub_pd(vtwo_pi, d);
      d = _mm256_blendv_pd(d, wrapped, _mm256_cmp_pd(d, vpi, _CMP_GT_OQ));
    }
    const __m256d better = _mm256_cmp_pd(d, best_d, _CMP_LT_OQ);
    best_d = _mm256_blendv_pd(best_d, d, better);
    best_i = _mm256_blendv_pd(best_i, idx, better);
    idx = _mm256_add_pd(idx, step);
  }

  alignas(32) double lane_d[4];
  alignas(32) double lane_i[4];
  _mm256_store_pd(lane_d, best_d);
  _mm256_store_pd(lane_i, best_i);

  double bd = std::numeric_limits<double>::infinity();
  std::size_t bi = 0;
  for (int l = 0; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(lane_i[l]);
    if (lane_d[l] < bd || (lane_d[l] == bd && li < bi)) {
      bd = lane_d[l];
      bi = li;
    }
  }
  for (; i < n; ++i) {
    const double d = circular ? circular_distance(p[i], phi) : std::fabs(p[i] - phi);
    if (d < bd) {
      bd = d;
      bi = i;
    }
  }
  return bi;
}

PPMP_AVX2 void affine_gain_avx2(std::span<const double> base, std::span<const double> gain,
                                std::span<const double> delta, std::span<double> out) {
  const std::size_t rows = base.size();
  const std::size_t cols = delta.size();
  const double* g = gain.data();
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    __m256d acc = _mm256_loadu_pd(base.data() + i);
    for (std::size_t j = 0; j < cols; ++j) {
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(g + j * rows + i), _mm256_set1_pd(delta[j]), acc);
    }
    _mm256_storeu_pd(out.data() + i, acc);
  }
  for (; i < rows; ++i) {
    double acc = base[i];
    for (std::size_t j = 0; j < cols; ++j) acc = std::fma(g[j * rows + i], delta[j], acc);
    out[i] = acc;
  }
}

PPMP_AVX2 void axpy_avx2(std::span<double> acc, std::span<const double> x, double scale) {
  const std::size_t n = acc.size();
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(acc.data() + i);
    _mm256_storeu_pd(acc.data() + i, _mm256_fmadd_pd(s, _mm256_loadu_pd(x.data() + i), a));
  }
  for (; i < n; ++i) acc[i] = std::fma(scale, x[i], acc[i]);
}

#undef PPMP_AVX2

}  // namespace

bool cpu_supports_avx2() {
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::avx2, &nearest_phase_avx2, &affine_gain_avx2, &axpy_avx2};
  return cpu_supports_avx2() ? &table : nullptr;
}

#else

bool cpu_supports_avx2() { return false; }
const KernelTable* avx2_table() { return nullptr; }

#endif

}  // namespace ppmp::kernels
