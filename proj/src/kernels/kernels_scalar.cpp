#include "kernels_impl.hpp"

namespace homspec::kernels::scalar_backend {

HOMSPEC_DEFINE_KERNEL_BACKEND(vec::ScalarD)

}  // namespace homspec::kernels::scalar_backend
