// SPDX-License-Identifier: Apache-2.0
#include "capguard/errors.hpp"

#include <cstdio>

namespace capguard {

std::string UnresolvableAddressError::to_hex(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace capguard
