#include "crowdsense/kernels.hpp"

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace crowdsense::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void squared_distances(const double* xs, const double* ys, std::size_t n, Vec2 q, double* out) {
  const __m256d qx = _mm256_set1_pd(q.x);
  const __m256d qy = _mm256_set1_pd(q.y);
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs + i), qx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys + i), qy);
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy)));
  }
  for (; i < n; ++i) {
    const double dx = xs[i] - q.x;
    const double dy = ys[i] - q.y;
    out[i] = dx * dx + dy * dy;
  }
}

void row_distances(SoaView a, SoaView b, double* out) {
  std::size_t i = 0;
  for (; i + kLanes <= a.count; i += kLanes) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t c = 0; c < a.dims; ++c) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data + c * a.stride + i),
                                      _mm256_loadu_pd(b.data + c * b.stride + i));
      acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    _mm256_storeu_pd(out + i, _mm256_sqrt_pd(acc));
  }
  for (; i < a.count; ++i) {
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
  const std::size_t dims = points.dims;
  std::size_t i = 0;
  for (; i + kLanes <= points.count; i += kLanes) {
    __m256d best = _mm256_set1_pd(std::numeric_limits<double>::infinity());
    __m256d best_j = _mm256_setzero_pd();
    for (std::size_t j = 0; j < k; ++j) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t c = 0; c < dims; ++c) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(points.data + c * points.stride + i),
                                        _mm256_set1_pd(centroids[j * dims + c]));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
      }
      const __m256d closer = _mm256_cmp_pd(acc, best, _CMP_LT_OQ);
      best = _mm256_blendv_pd(best, acc, closer);
      best_j = _mm256_blendv_pd(best_j, _mm256_set1_pd(static_cast<double>(j)), closer);
    }
    _mm256_storeu_pd(min_sq + i, best);
    const __m128i idx = _mm256_cvttpd_epi32(best_j);
    _mm_storeu_si128(reinterpret_cast<__m128i*>(labels + i), idx);
  }
  for (; i < points.count; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (std::size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < dims; ++c) {
        const double d = points.at(c, i) - centroids[j * dims + c];
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
const KernelTable avx2_table{Isa::Avx2, &squared_distances, &row_distances, &nearest_centroid};
}

}  // namespace crowdsense::kernels
