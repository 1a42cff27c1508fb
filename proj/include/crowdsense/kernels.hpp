#pragma once

// Data-parallel inner loops shared by neighbor search, clustering and
// scoring. Each kernel has a scalar reference and vectorized variants; the
// variant is chosen once at runtime from CPU features. Variants produce
// bit-identical results to the scalar reference: same per-lane operation
// order, no FMA contraction, and no cross-lane reductions.

#include <cstddef>
#include <span>
#include <string_view>

#include "crowdsense/geometry.hpp"

namespace crowdsense::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Structure-of-arrays view over `dims` components of `count` rows;
/// component c of row i lives at data[c * stride + i].
struct SoaView {
  const double* data = nullptr;
  std::size_t dims = 0;
  std::size_t count = 0;
  std::size_t stride = 0;

  double at(std::size_t c, std::size_t i) const { return data[c * stride + i]; }
};

struct KernelTable {
  Isa isa;
  /// out[i] = (xs[i] - q.x)^2 + (ys[i] - q.y)^2
  void (*squared_distances)(const double* xs, const double* ys, std::size_t n, Vec2 q,
                            double* out);
  /// out[i] = Euclidean distance between row i of a and row i of b.
  void (*row_distances)(SoaView a, SoaView b, double* out);
  /// labels[i] = index of the nearest centroid (row-major k x dims, lowest
  /// index on ties); min_sq[i] = squared distance to it.
  void (*nearest_centroid)(SoaView points, const double* centroids, std::size_t k,
                           int* labels, double* min_sq);
};

bool supported(Isa isa);

/// Throws std::invalid_argument if the ISA is not available on this CPU.
const KernelTable& table(Isa isa);

/// Best supported table. CROWDSENSE_ISA=scalar in the environment forces
/// the reference path.
const KernelTable& active();

inline void squared_distances(std::span<const double> xs, std::span<const double> ys, Vec2 q,
                              std::span<double> out) {
  active().squared_distances(xs.data(), ys.data(), xs.size(), q, out.data());
}

inline void row_distances(SoaView a, SoaView b, std::span<double> out) {
  active().row_distances(a, b, out.data());
}

inline void nearest_centroid(SoaView points, std::span<const double> centroids, std::size_t k,
                             std::span<int> labels, std::span<double> min_sq) {
  active().nearest_centroid(points, centroids.data(), k, labels.data(), min_sq.data());
}

namespace detail {
extern const KernelTable scalar_table;
#if defined(CROWDSENSE_HAVE_AVX2)
extern const KernelTable avx2_table;
#endif
}  // namespace detail

}  // namespace crowdsense::kernels
