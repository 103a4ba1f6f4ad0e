// Copyright (c) gal contributors.
// SPDX-License-Identifier: MIT
#include "gal/base.hpp"

namespace gal {

std::string to_string(RegName r) {
    switch (r) {
    case RegName::sp: return "sp";
    case RegName::pc: return "pc";
    default: return "r" + std::to_string(static_cast<int>(r));
    }
}

} // namespace gal
