#include <atomic>
#include <cstdlib>
#include <string>

#include "ffkm/error.hpp"
#include "ffkm/kernels.hpp"

namespace ffkm::kernels {

namespace {

struct KernelTable {
    Isa isa;
    void (*squared_distances)(const double*, std::size_t, std::size_t, std::size_t, const double*,
                              double*);
    double (*sum_squared_difference)(const double*, const double*, std::size_t);
    double (*sum_squares)(const double*, std::size_t);
};

constexpr KernelTable scalar_table{Isa::scalar, &scalar::squared_distances,
                                   &scalar::sum_squared_difference, &scalar::sum_squares};
#if defined(__x86_64__) || defined(_M_X64)
constexpr KernelTable avx2_table{Isa::avx2, &avx2::squared_distances,
                                 &avx2::sum_squared_difference, &avx2::sum_squares};
#endif
#if defined(__aarch64__)
constexpr KernelTable neon_table{Isa::neon, &neon::squared_distances,
                                 &neon::sum_squared_difference, &neon::sum_squares};
#endif

const KernelTable* table_for(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return &scalar_table;
        case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return &avx2_table;
#else
            return nullptr;
#endif
        case Isa::neon:
#if defined(__aarch64__)
            return &neon_table;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

Isa detect_best() {
    if (const char* env = std::getenv("FFKM_ISA")) {
        const std::string_view requested(env);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (requested == isa_name(isa) && isa_supported(isa)) {
                return isa;
            }
        }
    }
    if (isa_supported(Isa::avx2)) {
        return Isa::avx2;
    }
    if (isa_supported(Isa::neon)) {
        return Isa::neon;
    }
    return Isa::scalar;
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{table_for(detect_best())};
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa active_isa() { return current().load()->isa; }

void select_isa(Isa isa) {
    if (!isa_supported(isa)) {
        throw ConfigError("kernel ISA '" + std::string(isa_name(isa)) + "' is not supported on this CPU");
    }
    current().store(table_for(isa));
}

void squared_distances(const double* points, std::size_t n, std::size_t d, std::size_t ld,
                       const double* center, double* out) {
    current().load()->squared_distances(points, n, d, ld, center, out);
}

double sum_squared_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw InputError("sum_squared_difference: length mismatch");
    }
    return current().load()->sum_squared_difference(a.data(), b.data(), a.size());
}

double sum_squares(std::span<const double> a) {
    return current().load()->sum_squares(a.data(), a.size());
}

}  // namespace ffkm::kernels
