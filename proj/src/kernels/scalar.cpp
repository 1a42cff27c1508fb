#include "crowdsense/kernels.hpp"

#include <cmath>
#include <limits>

namespace crowdsense::kernels {
namespace {

void squared_distances(const double* xs, const double* ys, std::size_t n, Vec2 q, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - q.x;
    const double dy = ys[i] - q.y;
    out[i] = dx * dx + dy * dy;
  }
}

void row_distances(SoaView a, SoaView b, double* out) {
  for (std::size_t i = 0; i < a.count; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.dims; ++c) {
      const double d = a.at(c, i) - b.at(c, i);
      acc = acc + d * d;
    }
    out[i] = std::sqrt(acc);
  }
}

void nearest_centroid(SoaView points, const double* centroids, std::size_t k, int* labels,
                      double* min_sq) {
  for (std::size_t i = 0; i < points.count; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < points.dims; ++c) {
        const double d = points.at(c, i) - centroids[j * points.dims + c];
        acc = acc + d * d;
      }
      if (acc < best) {
        best = acc;
        best_j = static_cast<int>(j);
      }
    }
    labels[i] = best_j;
    min_sq[i] = best;
  }
}

}  // namespace

namespace detail {
const KernelTable scalar_table{Isa::Scalar, &squared_distances, &row_distances,
                               &nearest_centroid};
}

}  // namespace crowdsense::kernels
