#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace collspin {

// Half-integer quantum number stored as twice its value, so that basis
// indexing and range checks stay exact integer arithmetic.
class HalfInt {
public:
    constexpr HalfInt() = default;

    static constexpr HalfInt from_twice(int twice)
    {
        HalfInt h;
        h.twice_ = twice;
        return h;
    }

    // Accepts only values that are exactly k/2 for integer k.
    static HalfInt from_double(double v)
    {
        const double twice = 2.0 * v;
        const double rounded = std::round(twice);
        if (std::abs(twice - rounded) > 1e-9) {
            throw std::domain_error("not a half-integer: " + std::to_string(v));
        }
        return from_twice(static_cast<int>(rounded));
    }

    constexpr int twice() const { return twice_; }
    constexpr double value() const { return 0.5 * static_cast<double>(twice_); }
    constexpr bool is_integer() const { return twice_ % 2 == 0; }

    friend constexpr HalfInt operator+(HalfInt a, HalfInt b) { return from_twice(a.twice_ + b.twice_); }
    friend constexpr HalfInt operator-(HalfInt a, HalfInt b) { return from_twice(a.twice_ - b.twice_); }
    constexpr HalfInt operator-() const { return from_twice(-twice_); }
    friend constexpr bool operator==(HalfInt a, HalfInt b) { return a.twice_ == b.twice_; }
    friend constexpr auto operator<=>(HalfInt a, HalfInt b) { return a.twice_ <=> b.twice_; }

    std::string str() const
    {
        if (is_integer()) return std::to_string(twice_ / 2);
        return std::to_string(twice_) + "/2";
    }

private:
    int twice_ = 0;
};

constexpr HalfInt half_int(int twice) { return HalfInt::from_twice(twice); }

// j(j+1) computed exactly from the twice-value representation.
inline double casimir(HalfInt j)
{
    const double jj = j.value();
    return jj * (jj + 1.0);
}

} // namespace collspin
