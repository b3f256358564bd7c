// Home for the scalar reference lane's explicit instantiations. The
// implementations live in the header so non-float element types can use them
// directly from templated layer code.

#include "augkd/kernels.hpp"

namespace augkd::kernels::scalar {

template void gemm_nn<float>(int, int, int, const float*, const float*, float*, float);
template void gemm_nt<float>(int, int, int, const float*, const float*, float*, float);
template void gemm_tn<float>(int, int, int, const float*, const float*, float*, float);
template void gemm_nn<double>(int, int, int, const double*, const double*, double*, double);
template void gemm_nt<double>(int, int, int, const double*, const double*, double*, double);
template void gemm_tn<double>(int, int, int, const double*, const double*, double*, double);
template void relu_fwd<float>(const float*, float*, int64_t);
template void relu_fwd<double>(const double*, double*, int64_t);
template void relu_bwd<float>(const float*, const float*, float*, int64_t);
template void relu_bwd<double>(const double*, const double*, double*, int64_t);
template void sgd_momentum<float>(float*, float*, const float*, int64_t, float, float, float);
template void sgd_momentum<double>(double*, double*, const double*, int64_t, double, double,
                                   double);

}  // namespace augkd::kernels::scalar
