#include "ffkm/kernels.hpp"

namespace ffkm::kernels::scalar {

void squared_distances(const double* points, std::size_t n, std::size_t d, std::size_t ld,
                       const double* center, double* out) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = 0.0;
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double* col = points + j * ld;
        const double c = center[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = col[i] - c;
            out[i] += diff * diff;
        }
    }
}

double sum_squared_difference(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

double sum_squares(const double* a, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += a[i] * a[i];
    }
    return acc;
}

}  // namespace ffkm::kernels::scalar
