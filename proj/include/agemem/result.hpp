#pragma once

#include <optional>
#include <string>
#include <utility>

namespace agemem {

// Value-or-error pair for failures that are routine at runtime (bad tool
// arguments, malformed files). These are surfaced as messages, not thrown.
template <typename T>
class Expected {
public:
    Expected(T value) : value_(std::move(value)) {}  // NOLINT(google-explicit-constructor)

    static Expected failure(std::string message) {
        Expected e;
        e.error_ = std::move(message);
        return e;
    }

    bool ok() const { return value_.has_value(); }
    explicit operator bool() const { return ok(); }

    const T& value() const& { return *value_; }
    T& value() & { return *value_; }
    T&& value() && { return *std::move(value_); }

    const std::string& error() const { return error_; }

private:
    Expected() = default;
    std::optional<T> value_;
    std::string error_;
};

}  // namespace agemem
