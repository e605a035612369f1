#include "eventline/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace eventline::kernels {
namespace {

std::atomic<const Backend*> g_active{nullptr};

const Backend* resolve(std::string_view mode) {
    if (mode == "scalar") return &scalar_backend();
    if (mode == "avx2") return &avx2_backend(); // throws when unsupported
    if (mode.empty() || mode == "auto") {
        return avx2_supported() ? &avx2_backend() : &scalar_backend();
    }
    throw std::invalid_argument("unknown SIMD backend '" + std::string(mode) +
                                "' (use scalar, avx2 or auto)");
}

} // namespace

const Backend& active() {
    const Backend* b = g_active.load(std::memory_order_acquire);
    if (b == nullptr) {
        const char* env = std::getenv("EVENTLINE_SIMD");
        b = resolve(env ? std::string_view(env) : std::string_view("auto"));
        g_active.store(b, std::memory_order_release);
    }
    return *b;
}

void force_backend(std::string_view name) {
    g_active.store(resolve(name), std::memory_order_release);
}

} // namespace eventline::kernels
