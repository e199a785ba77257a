#pragma once

#include <stdexcept>

namespace adaptv {

/// Which regularizer a per-cell training run uses. For TGV the pair
/// (alpha0, alpha1) stays fixed while the fidelity weight is learned.
struct RegularizerSpec {
    enum class Kind { tv, tgv } kind = Kind::tv;
    double alpha0 = 1.0;
    double alpha1 = 1.0;

    static RegularizerSpec tv() { return RegularizerSpec{Kind::tv, 1.0, 1.0}; }
    static RegularizerSpec tgv(double a0, double a1) {
        if (!(a0 > 0.0) || !(a1 > 0.0)) throw std::domain_error("RegularizerSpec: alphas must be > 0");
        return RegularizerSpec{Kind::tgv, a0, a1};
    }
};

}  // namespace adaptv
