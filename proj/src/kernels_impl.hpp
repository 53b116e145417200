#pragma once

#include <cstddef>

#include "pibgen/kernels.hpp"

namespace pibgen::kernels::detail {

extern const Table scalar_table;
#if defined(PIBGEN_HAVE_AVX2)
extern const Table avx2_table;
#endif
#if defined(PIBGEN_HAVE_NEON)
extern const Table neon_table;
#endif

}  // namespace pibgen::kernels::detail
