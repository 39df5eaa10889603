#pragma once

#include <string>

#include "fdp/errors.hpp"

namespace fdp {

enum class BandKind { KR, SB, UB };

inline const char* to_string(BandKind k) {
    switch (k) {
        case BandKind::KR: return "KR";
        case BandKind::SB: return "SB";
        case BandKind::UB: return "UB";
    }
    return "?";
}

inline BandKind band_kind_from_string(const std::string& s) {
    if (s == "kr" || s == "KR") return BandKind::KR;
    if (s == "sb" || s == "SB") return BandKind::SB;
    if (s == "ub" || s == "UB") return BandKind::UB;
    throw param_error("unknown band kind '" + s + "'");
}

}  // namespace fdp
