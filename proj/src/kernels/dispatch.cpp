#include "crowdsense/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace crowdsense::kernels {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

bool supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(CROWDSENSE_HAVE_AVX2)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Isa isa) {
  if (!supported(isa)) {
    throw std::invalid_argument("kernel ISA not supported on this CPU: " +
                                std::string(isa_name(isa)));
  }
#if defined(CROWDSENSE_HAVE_AVX2)
  if (isa == Isa::Avx2) return detail::avx2_table;
#endif
  return detail::scalar_table;
}

namespace {

const KernelTable& select() {
  if (const char* forced = std::getenv("CROWDSENSE_ISA")) {
    const std::string_view name(forced);
    if (name == "scalar") return detail::scalar_table;
    if (name == "avx2" && supported(Isa::Avx2)) return table(Isa::Avx2);
  }
  if (supported(Isa::Avx2)) return table(Isa::Avx2);
  return detail::scalar_table;
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& chosen = select();
  return chosen;
}

}  // namespace crowdsense::kernels
