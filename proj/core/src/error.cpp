#include "qipf/error.hpp"

#include <cmath>

namespace qipf::detail {

void throw_invalid(const std::string& what) { throw InvalidArgument(what); }

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(name) + " must be finite");
}

}  // namespace qipf::detail
