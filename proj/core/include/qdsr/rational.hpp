#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qdsr {

/// Exact rational number with 64-bit numerator and denominator.
///
/// Always normalized: gcd(num, den) == 1 and den > 0. Dimension exponents are
/// small, so overflow is treated as a logic error rather than handled.
class Rational {
public:
    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num_(n) {} // NOLINT(google-explicit-constructor)
    Rational(std::int64_t n, std::int64_t d);

    [[nodiscard]] constexpr std::int64_t num() const { return num_; }
    [[nodiscard]] constexpr std::int64_t den() const { return den_; }

    [[nodiscard]] constexpr bool is_zero() const { return num_ == 0; }
    [[nodiscard]] constexpr bool is_integer() const { return den_ == 1; }
    [[nodiscard]] double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Parses "3", "-2", "1/2" or "-3/4".
    static Rational parse(std::string_view text);

    /// Best approximation with denominator <= max_den, if within tol of v.
    static bool from_double(double v, std::int64_t max_den, double tol, Rational& out);

    [[nodiscard]] std::string str() const;

    Rational operator-() const { return {-num_, den_}; }
    Rational& operator+=(Rational const& o);
    Rational& operator-=(Rational const& o);
    Rational& operator*=(Rational const& o);
    Rational& operator/=(Rational const& o);

    friend Rational operator+(Rational a, Rational const& b) { return a += b; }
    friend Rational operator-(Rational a, Rational const& b) { return a -= b; }
    friend Rational operator*(Rational a, Rational const& b) { return a *= b; }
    friend Rational operator/(Rational a, Rational const& b) { return a /= b; }

    friend constexpr bool operator==(Rational const& a, Rational const& b) = default;
    friend std::strong_ordering operator<=>(Rational const& a, Rational const& b);

    friend std::ostream& operator<<(std::ostream& os, Rational const& r);

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

} // namespace qdsr

template <>
struct std::hash<qdsr::Rational> {
    std::size_t operator()(qdsr::Rational const& r) const noexcept
    {
        auto h = std::hash<std::int64_t>{}(r.num());
        return h ^ (std::hash<std::int64_t>{}(r.den()) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
    }
};
