#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace glucoguard {

enum class AgeClass : std::uint8_t { Adult, Child };

inline std::string_view to_string(AgeClass age) { return age == AgeClass::Adult ? "Adult" : "Child"; }

inline std::optional<AgeClass> age_class_from_string(std::string_view s) {
    if (s == "Adult") return AgeClass::Adult;
    if (s == "Child") return AgeClass::Child;
    return std::nullopt;
}

/// Simulated time in seconds.
using SimTime = std::int64_t;

}  // namespace glucoguard
