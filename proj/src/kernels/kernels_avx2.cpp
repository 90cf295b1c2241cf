// Compiled with -mavx2 -mfma (see CMakeLists); only dispatched to when the
// CPU reports both features.

#include "kernels_impl.hpp"

#ifndef HOMSPEC_VEC_AVX2
#error "kernels_avx2.cpp must be compiled with -mavx2 -mfma"
#endif

namespace homspec::kernels::avx2_backend {

HOMSPEC_DEFINE_KERNEL_BACKEND(vec::AvxD)

}  // namespace homspec::kernels::avx2_backend
