#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace fsbs {

enum class KernelFamily { gaussian, epanechnikov, uniform };

struct KernelSpec {
    KernelFamily family = KernelFamily::gaussian;
    int d = 1;
};

inline KernelFamily kernel_family_from_name(const std::string& name) {
    if (name == "gaussian") return KernelFamily::gaussian;
    if (name == "epanechnikov") return KernelFamily::epanechnikov;
    if (name == "uniform") return KernelFamily::uniform;
    throw std::invalid_argument("unknown kernel family: " + name);
}

inline const char* kernel_family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::epanechnikov: return "epanechnikov";
        case KernelFamily::uniform: return "uniform";
    }
    return "?";
}

// K(v) for v of length spec.d.
//   gaussian:      (2*pi)^{-d/2} exp(-|v|^2/2), isotropic, cut to 0 past |v| > 8
//                  (tail mass < 1e-14, below every test tolerance)
//   epanechnikov:  prod_j (3/4)(1 - v_j^2) 1{|v_j| <= 1}
//   uniform:       2^{-d} 1{max_j |v_j| <= 1}
inline double kernel_value(const KernelSpec& spec, const double* v) {
    const int d = spec.d;
    switch (spec.family) {
        case KernelFamily::gaussian: {
            double q = 0.0;
            for (int j = 0; j < d; ++j) q += v[j] * v[j];
            if (q > 64.0) return 0.0;
            double norm = std::pow(2.0 * M_PI, -0.5 * d);
            return norm * std::exp(-0.5 * q);
        }
        case KernelFamily::epanechnikov: {
            double p = 1.0;
            for (int j = 0; j < d; ++j) {
                double a = std::fabs(v[j]);
                if (a > 1.0) return 0.0;
                p *= 0.75 * (1.0 - v[j] * v[j]);
            }
            return p;
        }
        case KernelFamily::uniform: {
            for (int j = 0; j < d; ++j)
                if (std::fabs(v[j]) > 1.0) return 0.0;
            return std::pow(0.5, d);
        }
    }
    return 0.0;
}

// K_h(x) = h^{-d} K(x/h)
inline double scaled_kernel(const KernelSpec& spec, double h, const double* x) {
    if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    const int d = spec.d;
    double v[8];
    if (d > 8) throw std::invalid_argument("dimension larger than supported (8)");
    for (int j = 0; j < d; ++j) v[j] = x[j] / h;
    return std::pow(h, -d) * kernel_value(spec, v);
}

}  // namespace fsbs
