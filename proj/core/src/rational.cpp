#include "qdsr/rational.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

namespace qdsr {

namespace {
    std::int64_t checked_mul(std::int64_t a, std::int64_t b)
    {
        std::int64_t r = 0;
        if (__builtin_mul_overflow(a, b, &r)) {
            throw std::overflow_error("rational arithmetic overflow");
        }
        return r;
    }

    std::int64_t checked_add(std::int64_t a, std::int64_t b)
    {
        std::int64_t r = 0;
        if (__builtin_add_overflow(a, b, &r)) {
            throw std::overflow_error("rational arithmetic overflow");
        }
        return r;
    }

    std::int64_t parse_int(std::string_view s)
    {
        while (!s.empty() && s.front() == ' ') { s.remove_prefix(1); }
        while (!s.empty() && s.back() == ' ') { s.remove_suffix(1); }
        if (!s.empty() && s.front() == '+') { s.remove_prefix(1); }
        std::int64_t v = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
            throw std::invalid_argument(fmt::format("not an integer: '{}'", s));
        }
        return v;
    }
} // namespace

Rational::Rational(std::int64_t n, std::int64_t d)
{
    if (d == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    if (d < 0) {
        n = -n;
        d = -d;
    }
    auto g = std::gcd(n, d);
    if (g == 0) { g = 1; }
    num_ = n / g;
    den_ = d / g;
}

Rational Rational::parse(std::string_view text)
{
    auto slash = text.find('/');
    if (slash == std::string_view::npos) {
        return {parse_int(text)};
    }
    return {parse_int(text.substr(0, slash)), parse_int(text.substr(slash + 1))};
}

bool Rational::from_double(double v, std::int64_t max_den, double tol, Rational& out)
{
    if (!std::isfinite(v)) { return false; }
    for (std::int64_t d = 1; d <= max_den; ++d) {
        double n = std::round(v * static_cast<double>(d));
        if (std::abs(n) > 1e15) { return false; }
        if (std::abs(n / static_cast<double>(d) - v) <= tol) {
            out = Rational(static_cast<std::int64_t>(n), d);
            return true;
        }
    }
    return false;
}

std::string Rational::str() const
{
    if (den_ == 1) { return fmt::format("{}", num_); }
    return fmt::format("{}/{}", num_, den_);
}

Rational& Rational::operator+=(Rational const& o)
{
    auto g = std::gcd(den_, o.den_);
    auto n = checked_add(checked_mul(num_, o.den_ / g), checked_mul(o.num_, den_ / g));
    *this = Rational(n, checked_mul(den_ / g, o.den_));
    return *this;
}

Rational& Rational::operator-=(Rational const& o) { return *this += -o; }

Rational& Rational::operator*=(Rational const& o)
{
    auto g1 = std::gcd(num_, o.den_);
    auto g2 = std::gcd(o.num_, den_);
    if (g1 == 0) { g1 = 1; }
    if (g2 == 0) { g2 = 1; }
    *this = Rational(checked_mul(num_ / g1, o.num_ / g2), checked_mul(den_ / g2, o.den_ / g1));
    return *this;
}

Rational& Rational::operator/=(Rational const& o)
{
    if (o.num_ == 0) {
        throw std::domain_error("rational division by zero");
    }
    return *this *= Rational(o.den_, o.num_);
}

std::strong_ordering operator<=>(Rational const& a, Rational const& b)
{
    // denominators are positive, cross-multiplication preserves order
    __extension__ using Wide = __int128;
    Wide lhs = static_cast<Wide>(a.num_) * b.den_;
    Wide rhs = static_cast<Wide>(b.num_) * a.den_;
    return lhs <=> rhs;
}

std::ostream& operator<<(std::ostream& os, Rational const& r) { return os << r.str(); }

} // namespace qdsr
