#include "iotprint/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "iotprint/errors.hpp"
#include "iotprint/log.hpp"

namespace iotprint::kern {

bool avx2_supported() {
#if defined(IOTPRINT_HAVE_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

#if !defined(IOTPRINT_HAVE_AVX2)
const Kernels& avx2_kernels() {
  throw ConfigError("this build has no AVX2 kernels");
}
#endif

namespace {

const Kernels& select() {
  const char* wanted = std::getenv("IOTPRINT_KERNEL");
  if (wanted != nullptr && *wanted != '\0') {
    const std::string name(wanted);
    if (name == "scalar") return scalar_kernels();
    if (name == "avx2") {
#if defined(IOTPRINT_HAVE_AVX2)
      if (!avx2_supported()) {
        throw ConfigError("IOTPRINT_KERNEL=avx2 but this CPU lacks AVX2/FMA");
      }
      return avx2_kernels();
#else
      throw ConfigError("IOTPRINT_KERNEL=avx2 but this build has no AVX2 support");
#endif
    }
    throw ConfigError("unknown IOTPRINT_KERNEL value: " + name + " (expected scalar or avx2)");
  }
#if defined(IOTPRINT_HAVE_AVX2)
  if (avx2_supported()) return avx2_kernels();
#endif
  return scalar_kernels();
}

}  // namespace

const Kernels& active() {
  // Selected once; the choice is stable for the life of the process so that a
  // run never mixes kernel variants.
  static const Kernels& chosen = []() -> const Kernels& {
    const Kernels& k = select();
    log::debug("active kernel set: ", k.name);
    return k;
  }();
  return chosen;
}

}  // namespace iotprint::kern
