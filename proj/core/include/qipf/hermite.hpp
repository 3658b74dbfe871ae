#pragma once

#include <cstddef>

namespace qipf {

/// Largest polynomial order accepted by default; bounds factorial growth in
/// the normalization constant.
inline constexpr int kMaxHermiteOrder = 64;

/// Order of a physicist's Hermite polynomial, validated on construction.
class HermiteOrder {
public:
    explicit HermiteOrder(int k, int max_order = kMaxHermiteOrder);
    int value() const noexcept { return k_; }

private:
    int k_;
};

/// H_k(x) and its first two derivatives.
struct HermiteValue {
    double value = 0.0;
    double first = 0.0;
    double second = 0.0;
};

/// H_k(x) by the three-term upward recurrence H_{n+1} = 2x H_n - 2n H_{n-1}.
double hermite_eval(HermiteOrder k, double x);

/// H_k(x), H_k'(x) = 2k H_{k-1}(x), H_k''(x) = 4k(k-1) H_{k-2}(x).
HermiteValue hermite_derivs(HermiteOrder k, double x);

/// sqrt(sqrt(pi) 2^k k!), the weighted L2 norm of H_k under exp(-x^2).
double hermite_norm(HermiteOrder k);

/// hermite_derivs scaled by 1 / hermite_norm(k).
HermiteValue normalized_hermite_derivs(HermiteOrder k, double x);

}  // namespace qipf
