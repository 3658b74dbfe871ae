#include "qipf/hermite.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qipf/error.hpp"

namespace qipf {

HermiteOrder::HermiteOrder(int k, int max_order) : k_(k) {
    if (k < 0) throw InvalidArgument("Hermite order must be non-negative");
    if (k > max_order) {
        throw InvalidArgument("Hermite order " + std::to_string(k) + " exceeds the bound " + std::to_string(max_order));
    }
}

namespace {

// Returns H_k, H_{k-1}, H_{k-2} (zero where the order would be negative).
struct Trailing {
    double h0 = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
};

Trailing recurrence(int k, double x) {
    if (!std::isfinite(x)) throw InvalidArgument("Hermite argument must be finite");
    double prev2 = 0.0;  // H_{n-2}
    double prev = 0.0;   // H_{n-1}
    double cur = 1.0;    // H_n, starting at n = 0
    for (int n = 0; n < k; ++n) {
        const double next = 2.0 * x * cur - 2.0 * n * prev;
        prev2 = prev;
        prev = cur;
        cur = next;
    }
    return {cur, prev, prev2};
}

}  // namespace

double hermite_eval(HermiteOrder k, double x) { return recurrence(k.value(), x).h0; }

HermiteValue hermite_derivs(HermiteOrder k, double x) {
    const int n = k.value();
    const Trailing t = recurrence(n, x);
    HermiteValue out;
    out.value = t.h0;
    out.first = n >= 1 ? 2.0 * n * t.h1 : 0.0;
    out.second = n >= 2 ? 4.0 * n * (n - 1) * t.h2 : 0.0;
    return out;
}

double hermite_norm(HermiteOrder k) {
    const double n = k.value();
    const double log_sq = 0.5 * std::log(std::numbers::pi) + n * std::numbers::ln2 + std::lgamma(n + 1.0);
    const double norm = std::exp(0.5 * log_sq);
    if (!std::isfinite(norm)) throw NumericalError("Hermite normalization overflowed");
    return norm;
}

HermiteValue normalized_hermite_derivs(HermiteOrder k, double x) {
    HermiteValue h = hermite_derivs(k, x);
    const double inv = 1.0 / hermite_norm(k);
    h.value *= inv;
    h.first *= inv;
    h.second *= inv;
    return h;
}

}  // namespace qipf
