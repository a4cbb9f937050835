#include "ffkm/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

namespace ffkm::kernels::neon {

void squared_distances(const double* points, std::size_t n, std::size_t d, std::size_t ld,
                       const double* center, double* out) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t acc = vdupq_n_f64(0.0);
        for (std::size_t j = 0; j < d; ++j) {
            const float64x2_t diff = vsubq_f64(vld1q_f64(points + j * ld + i), vdupq_n_f64(center[j]));
            // vmulq + vaddq rather than vfmaq: keeps rounding identical to the scalar loop.
            acc = vaddq_f64(acc, vmulq_f64(diff, diff));
        }
        vst1q_f64(out + i, acc);
    }
    for (; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = points[j * ld + i] - center[j];
            acc += diff * diff;
        }
        out[i] = acc;
    }
}

double sum_squared_difference(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t d0 = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        const float64x2_t d1 = vsubq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
        acc0 = vaddq_f64(acc0, vmulq_f64(d0, d0));
        acc1 = vaddq_f64(acc1, vmulq_f64(d1, d1));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

double sum_squares(const double* a, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const float64x2_t x0 = vld1q_f64(a + i);
        const float64x2_t x1 = vld1q_f64(a + i + 2);
        acc0 = vaddq_f64(acc0, vmulq_f64(x0, x0));
        acc1 = vaddq_f64(acc1, vmulq_f64(x1, x1));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        acc += a[i] * a[i];
    }
    return acc;
}

}  // namespace ffkm::kernels::neon

#endif
