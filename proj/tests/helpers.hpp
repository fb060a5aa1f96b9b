#pragma once

#include <functional>
#include <optional>

#include "icsdet/error.hpp"

// Runs f and returns the icsdet error code it raised, if any.
inline std::optional<icsdet::ErrorCode> error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const icsdet::Error& e) {
        return e.code();
    }
    return std::nullopt;
}
