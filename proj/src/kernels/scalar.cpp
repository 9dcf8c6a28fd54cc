#include <cmath>
#include <limits>

#include "ppmp/angle.hpp"
#include "ppmp/kernels/kernels.hpp"

namespace ppmp::kernels {

namespace {

std::size_t nearest_phase_scalar(std::span<const double> phases, double phi, PhaseMetric metric) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const double d = metric == PhaseMetric::circular ? circular_distance(phases[i], phi)
                                                     : std::fabs(phases[i] - phi);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

void affine_gain_scalar(std::span<const double> base, std::span<const double> gain,
                        std::span<const double> delta, std::span<double> out) {
  const std::size_t rows = base.size();
  for (std::size_t i = 0; i < rows; ++i) out[i] = base[i];
  for (std::size_t j = 0; j < delta.size(); ++j) {
    const double dj = delta[j];
    const double* col = gain.data() + j * rows;
    for (std::size_t i = 0; i < rows; ++i) out[i] += col[i] * dj;
  }
}

void axpy_scalar(std::span<double> acc, std::span<const double> x, double scale) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, &nearest_phase_scalar, &affine_gain_scalar,
                                 &axpy_scalar};
  return table;
}

}  // namespace ppmp::kernels
