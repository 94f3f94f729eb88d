#include <cstdlib>
#include <stdexcept>

#include "nps/kernels/kernels.hpp"

namespace nps::kernels {

namespace {

const Ops* select_initial() {
    if (const char* env = std::getenv("NPS_KERNELS")) {
        std::string want = env;
        if (want == "scalar") return &scalar_ops();
        if (want == "avx2" && avx2_available()) return &avx2_ops();
    }
    return avx2_available() ? &avx2_ops() : &scalar_ops();
}

const Ops*& active_ptr() {
    static const Ops* ptr = select_initial();
    return ptr;
}

}  // namespace

const Ops& active() { return *active_ptr(); }

void force_implementation(const std::string& name) {
    if (name == "scalar") {
        active_ptr() = &scalar_ops();
    } else if (name == "avx2") {
        if (!avx2_available()) throw std::runtime_error("avx2 kernels not available");
        active_ptr() = &avx2_ops();
    } else {
        throw std::runtime_error("unknown kernel implementation: " + name);
    }
}

}  // namespace nps::kernels
