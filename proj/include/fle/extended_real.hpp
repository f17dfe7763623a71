#pragma once

#include <cmath>
#include <compare>
#include <limits>
#include <ostream>

namespace fle {

/// A real number or +infinity, kept as a tag rather than a floating-point sentinel.
class ExtendedReal {
public:
    constexpr ExtendedReal() = default;
    constexpr explicit ExtendedReal(double v) : value_(v) {}

    static constexpr ExtendedReal infinity() {
        ExtendedReal r;
        r.infinite_ = true;
        return r;
    }

    constexpr bool is_finite() const { return !infinite_; }
    constexpr bool is_infinite() const { return infinite_; }

    /// Finite value; +inf as a double for convenience in arithmetic.
    constexpr double value() const {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }

    friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
        return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
    }

    friend constexpr std::partial_ordering operator<=>(const ExtendedReal& a,
                                                       const ExtendedReal& b) {
        if (a.infinite_ || b.infinite_) {
            return a.infinite_ <=> b.infinite_;
        }
        return a.value_ <=> b.value_;
    }

    friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) {
        if (x.infinite_) {
            return os << "inf";
        }
        return os << x.value_;
    }

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

}  // namespace fle
