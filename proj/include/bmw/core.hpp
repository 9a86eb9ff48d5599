#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bmw {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using CVec3 = std::array<cplx, 3>;

inline constexpr double pi = std::numbers::pi;

// Error taxonomy; the CLI maps families onto exit codes.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct domain_error : error { using error::error; };
struct index_error : error { using error::error; };
struct order_error : error { using error::error; };
struct singularity_error : error { using error::error; };
struct regime_error : error { using error::error; };
struct stability_error : error { using error::error; };
struct config_error : error { using error::error; };

namespace si {
inline constexpr double hbar = 1.054571817e-34;
inline constexpr double h = 6.62607015e-34;
inline constexpr double e = 1.602176634e-19;
inline constexpr double m_e = 9.1093837015e-31;
inline constexpr double m_rb87 = 1.44316e-25;
inline constexpr double g = 9.81;
inline constexpr double ueV = 1e-6 * e;
} // namespace si

// (2n-1)!! with (-1)!! = 1; accepts n >= 0 meaning (2n-1)!!, and odd/even arguments via dfact
inline double dfact(int n)
{
    if (n < -1) throw index_error("double factorial of " + std::to_string(n));
    double r = 1.0;
    for (int k = n; k > 1; k -= 2) r *= k;
    return r;
}

inline double fact(int n)
{
    if (n < 0) throw index_error("factorial of negative number");
    return std::tgamma(n + 1.0);
}

inline double binom(int n, int k)
{
    if (k < 0 || k > n || n < 0) return 0.0;
    return std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0)));
}

inline double norm3(const Vec3& v) { return std::hypot(v[0], v[1], v[2]); }

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

inline void require_finite(double x, const char* what)
{
    if (!std::isfinite(x)) throw domain_error(std::string(what) + " is not finite");
}

// Real number m*exp(e); keeps Airy products representable when the factors are not.
struct ExpReal {
    double m = 0.0;
    double e = 0.0;

    double value() const { return m == 0.0 ? 0.0 : m * std::exp(e); }
    double log_abs() const { return std::log(std::abs(m)) + e; }

    friend ExpReal operator*(ExpReal a, ExpReal b) { return {a.m * b.m, a.e + b.e}; }
    friend ExpReal operator*(double s, ExpReal a) { return {s * a.m, a.e}; }
    friend ExpReal operator+(ExpReal a, ExpReal b)
    {
        if (a.m == 0.0) return b;
        if (b.m == 0.0) return a;
        if (a.e >= b.e) return {a.m + b.m * std::exp(b.e - a.e), a.e};
        return {b.m + a.m * std::exp(a.e - b.e), b.e};
    }
    friend ExpReal operator-(ExpReal a, ExpReal b) { return a + ExpReal{-b.m, b.e}; }
};

} // namespace bmw
