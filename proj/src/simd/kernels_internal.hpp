#pragma once

#include "bbis/simd/kernels.hpp"

namespace bbis::simd::detail {

const KernelTable& scalar_table();
#if defined(BBIS_HAVE_AVX2_KERNELS)
const KernelTable& avx2_table();
#endif

}  // namespace bbis::simd::detail
