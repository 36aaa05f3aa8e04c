// Backend selection: best available at startup, HYDRODP_KERNELS to override,
// select_backend() for tests.

#include "hydrodp/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace hydrodp::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const Ops* pick(std::string_view name) {
    if (name == "scalar") return &scalar_ops();
    if (name == "avx2") {
        const Ops* ops = avx2_ops();
        return (ops && cpu_has_avx2()) ? ops : nullptr;
    }
    if (name == "auto" || name.empty()) {
        const Ops* ops = avx2_ops();
        return (ops && cpu_has_avx2()) ? ops : &scalar_ops();
    }
    return nullptr;
}

std::atomic<const Ops*>& slot() {
    static std::atomic<const Ops*> current{[] {
        const char* env = std::getenv("HYDRODP_KERNELS");
        const Ops* ops = pick(env ? std::string_view(env) : std::string_view("auto"));
        return ops ? ops : &scalar_ops();
    }()};
    return current;
}

} // namespace

const Ops& active() { return *slot().load(std::memory_order_relaxed); }

bool select_backend(std::string_view name) {
    const Ops* ops = pick(name);
    if (!ops) return false;
    slot().store(ops, std::memory_order_relaxed);
    return true;
}

} // namespace hydrodp::kernels
