#pragma once

#include "core.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

namespace bmw {

struct AiryValues {
    double ai, aip, bi, bip;
};

// Ai = ai*exp(ai_exp), Bi = bi*exp(bi_exp); the exponents are zero on the table range.
struct AiryScaled {
    double ai, aip, bi, bip;
    double ai_exp = 0.0, bi_exp = 0.0;

    AiryValues unscaled() const
    {
        double sa = std::exp(ai_exp), sb = std::exp(bi_exp);
        return {ai * sa, aip * sa, bi * sb, bip * sb};
    }
};

namespace detail {

inline constexpr double airy_step = 0.25;
inline constexpr int airy_half = 40;  // nodes j*step for |j| <= airy_half
inline constexpr double airy_xtab = airy_step * airy_half;

// y, y' at x0+h from y, y' at x0 for y'' = x y, summing the Taylor series with the
// derivative recurrence y^(n+2) = x0 y^(n) + n y^(n-1).
template <class T>
void airy_taylor(T x0, T h, T& y, T& yp, int nmax = 60)
{
    T d[3] = {y, yp, x0 * y};  // d_{n-2}, d_{n-1}, d_n with n = 2
    T c = h;                   // h^(n-1)/(n-1)!
    T s = y + yp * h, sp = yp;
    int small = 0;
    for (int n = 2; n < nmax; ++n) {
        T dn = d[2];
        T tp = dn * c;  // contribution to y'
        c *= h / T(n);
        T t = dn * c;
        s += t;
        sp += tp;
        using std::abs;
        const T tol = std::numeric_limits<T>::epsilon() / 64;
        if (abs(t) <= tol * abs(s) && abs(tp) <= tol * abs(sp)) {
            if (++small == 3) break;
        } else {
            small = 0;
        }
        T next = x0 * d[1] + T(n - 1) * d[0];  // y^(n+1) = x0 y^(n-1) + (n-1) y^(n-2)
        d[0] = d[1];
        d[1] = d[2];
        d[2] = next;
    }
    y = s;
    yp = sp;
}

struct AirySeriesCoeffs {
    std::array<long double, 80> u{}, v{};
    AirySeriesCoeffs()
    {
        u[0] = v[0] = 1.0L;
        for (int k = 1; k < 80; ++k) {
            long double kk = k;
            u[k] = u[k - 1] * (6 * kk - 5) * (6 * kk - 3) * (6 * kk - 1) / ((2 * kk - 1) * 216 * kk);
            v[k] = -(6 * kk + 1) / (6 * kk - 1) * u[k];
        }
    }
};

inline const AirySeriesCoeffs& airy_coeffs()
{
    static const AirySeriesCoeffs c;
    return c;
}

// Optimally truncated sum over k of sgn^k c_k z^-k.
template <class T>
T asym_sum(const std::array<long double, 80>& c, T z, int sgn, T tol)
{
    T s = 0, p = 1, last = T(1e300);
    for (int k = 0; k < 80; ++k) {
        T t = T(c[k]) * p;
        using std::abs;
        if (k > 0 && abs(t) > last) break;
        s += t;
        last = abs(t);
        if (last <= tol * abs(s)) break;
        p *= T(sgn) / z;
    }
    return s;
}

struct AiryTable {
    std::array<double, 2 * airy_half + 1> ai{}, aip{}, bi{}, bip{};

    AiryTable()
    {
        using L = long double;
        const L pil = std::acos(-1.0L);
        const L ai0 = 1.0L / (std::pow(3.0L, 2.0L / 3) * std::tgamma(2.0L / 3));
        const L aip0 = -1.0L / (std::pow(3.0L, 1.0L / 3) * std::tgamma(1.0L / 3));
        const L bi0 = 1.0L / (std::pow(3.0L, 1.0L / 6) * std::tgamma(2.0L / 3));
        const L bip0 = std::pow(3.0L, 1.0L / 6) / std::tgamma(1.0L / 3);
        const L h = airy_step;
        auto put = [](std::array<double, 2 * airy_half + 1>& a, int j, L v) { a[j + airy_half] = double(v); };

        put(ai, 0, ai0); put(aip, 0, aip0); put(bi, 0, bi0); put(bip, 0, bip0);

        // x <= 0: both solutions oscillate; step outwards from the origin.
        L a = ai0, ap = aip0, b = bi0, bp = bip0;
        for (int j = -1; j >= -airy_half; --j) {
            L x0 = (j + 1) * h;
            airy_taylor<L>(x0, -h, a, ap, 90);
            airy_taylor<L>(x0, -h, b, bp, 90);
            put(ai, j, a); put(aip, j, ap); put(bi, j, b); put(bip, j, bp);
        }

        // x > 0, Bi: dominant to the right, forward stepping is stable.
        b = bi0; bp = bip0;
        for (int j = 1; j <= airy_half; ++j) {
            airy_taylor<L>((j - 1) * h, h, b, bp, 90);
            put(bi, j, b); put(bip, j, bp);
        }

        // x > 0, Ai: start from the asymptotic series further out, step back (Ai is dominant leftwards).
        const int jstart = airy_half + 8;
        L xs = jstart * h;
        L zs = 2.0L / 3 * xs * std::sqrt(xs);
        const auto& c = airy_coeffs();
        L pre = std::exp(-zs) / (2 * std::sqrt(pil));
        a = pre / std::pow(xs, 0.25L) * asym_sum<L>(c.u, zs, -1, 1e-22L);
        ap = -pre * std::pow(xs, 0.25L) * asym_sum<L>(c.v, zs, -1, 1e-22L);
        for (int j = jstart - 1; j >= 1; --j) {
            airy_taylor<L>((j + 1) * h, -h, a, ap, 90);
            if (j <= airy_half) { put(ai, j, a); put(aip, j, ap); }
        }
    }
};

inline const AiryTable& airy_table()
{
    static const AiryTable t;
    return t;
}

// sin and cos of (2/3) t^(3/2) - pi/4 with the phase carried in double-double precision.
inline std::pair<double, double> airy_phase(double t)
{
    double s = std::sqrt(t);
    double slo = std::fma(-s, s, t) / (2 * s);
    double p = t * s;
    double plo = std::fma(t, s, -p) + t * slo;
    const double c_hi = 2.0 / 3.0;
    const double c_lo = std::fma(-3.0, c_hi, 2.0) / 3.0;
    double zh = p * c_hi;
    double zl = std::fma(p, c_hi, -zh) + p * c_lo + plo * c_hi;
    const double q_hi = pi / 4;
    const double q_lo = 3.061616997868383e-17;
    double th = zh - q_hi;
    double bv = th - zh;
    double err = (zh - (th - bv)) + (-q_hi - bv);
    double tl = err + zl - q_lo;
    double hi = th + tl;
    double lo = tl - (hi - th);
    double sh = std::sin(hi), ch = std::cos(hi);
    return {sh + ch * lo, ch - sh * lo};
}

} // namespace detail

inline AiryScaled airy_scaled(double x)
{
    require_finite(x, "airy argument");
    using namespace detail;
    if (std::abs(x) <= airy_xtab) {
        const auto& t = airy_table();
        int j = int(std::lround(x / airy_step));
        double x0 = j * airy_step, h = x - x0;
        int i = j + airy_half;
        double a = t.ai[i], ap = t.aip[i], b = t.bi[i], bp = t.bip[i];
        if (h != 0.0) {
            airy_taylor<double>(x0, h, a, ap);
            airy_taylor<double>(x0, h, b, bp);
        }
        return {a, ap, b, bp, 0.0, 0.0};
    }
    const auto& c = airy_coeffs();
    const double rpi = 1.0 / std::sqrt(pi);
    if (x > 0) {
        double z = 2.0 / 3.0 * x * std::sqrt(x);
        double q = std::sqrt(std::sqrt(x));
        double su = asym_sum<double>(c.u, z, -1, 1e-17), sv = asym_sum<double>(c.v, z, -1, 1e-17);
        double bu = asym_sum<double>(c.u, z, 1, 1e-17), bv = asym_sum<double>(c.v, z, 1, 1e-17);
        return {0.5 * rpi / q * su, -0.5 * rpi * q * sv, rpi / q * bu, rpi * q * bv, -z, z};
    }
    double t = -x;
    double z = 2.0 / 3.0 * t * std::sqrt(t);
    double q = std::sqrt(std::sqrt(t));
    // even/odd parts of the alternating series in 1/z^2
    double pu = 0, qu = 0, pv = 0, qv = 0;
    {
        double zi = 1.0 / z, zi2 = zi * zi, w = 1.0;
        double last = 1e300;
        for (int k = 0; k < 39; ++k) {
            double te = double(c.u[2 * k]) * w, to = double(c.u[2 * k + 1]) * w * zi;
            double ve = double(c.v[2 * k]) * w, vo = double(c.v[2 * k + 1]) * w * zi;
            double mag = std::max({std::abs(te), std::abs(to), std::abs(ve), std::abs(vo)});
            if (k > 0 && mag > last) break;
            pu += te; qu += to; pv += ve; qv += vo;
            last = mag;
            if (mag < 1e-18) break;
            w *= -zi2;
        }
    }
    auto [sn, cs] = airy_phase(t);  // sin, cos of z - pi/4
    return {rpi / q * (cs * pu + sn * qu),
            rpi * q * (sn * pv - cs * qv),
            rpi / q * (-sn * pu + cs * qu),
            rpi * q * (cs * pv + sn * qv),
            0.0, 0.0};
}

inline AiryValues airy(double x) { return airy_scaled(x).unscaled(); }

inline std::pair<cplx, cplx> airy_ci(double x)
{
    auto v = airy(x);
    return {cplx(v.bi, v.ai), cplx(v.bip, v.aip)};
}

inline constexpr int airy_max_deriv = 40;

// Derivatives 0..n of a solution of y'' = x y from (y, y').
inline void airy_derivs(double x, double y, double yp, int n, double* out)
{
    out[0] = y;
    if (n >= 1) out[1] = yp;
    for (int k = 2; k <= n; ++k) out[k] = x * out[k - 2] + (k >= 3 ? (k - 2) * out[k - 3] : 0.0);
}

inline double airy_deriv_n(int n, double x)
{
    if (n < 0 || n > airy_max_deriv) throw order_error("airy_deriv_n: order " + std::to_string(n) + " unsupported");
    auto v = airy(x);
    double d[airy_max_deriv + 1];
    airy_derivs(x, v.ai, v.aip, n, d);
    return d[n];
}

inline double airy_integral(double x)
{
    require_finite(x, "airy_integral argument");
    auto ai = [](double t) { return airy(t).ai; };
    auto series = [](double x) {
        const double c1 = 0.355028053887817239, c2 = 0.258819403792806798;
        double x3 = x * x * x;
        double t = 1.0, s = x, f = x, g = x * x / 2;
        for (int k = 0; k < 200; ++k) {
            double tn = t * x3 / ((3 * k + 2.0) * (3 * k + 3));
            double sn = s * x3 / ((3 * k + 3.0) * (3 * k + 4));
            double df = tn * x / (3 * k + 4), dg = sn * x / (3 * k + 5);
            f += df;
            g += dg;
            t = tn;
            s = sn;
            if (std::abs(df) + std::abs(dg) < 1e-18 * (std::abs(f) + std::abs(g))) break;
        }
        return c1 * f - c2 * g;
    };
    if (std::abs(x) <= 2.0) return series(x);
    using boost::math::quadrature::gauss;
    if (x > 0) {
        // 1/3 minus the tail, Ai decays like exp(-sqrt(x) s) beyond x
        double len = 45.0 / std::sqrt(x), tail = 0.0;
        int np = 8;
        for (int i = 0; i < np; ++i)
            tail += gauss<double, 20>::integrate(ai, x + len * i / np, x + len * (i + 1) / np);
        return 1.0 / 3.0 - tail;
    }
    double acc = series(-2.0), b = -2.0;
    while (b > x) {
        double w = std::min(0.5, 1.5 / std::sqrt(-b));
        double a = std::max(x, b - w);
        acc -= gauss<double, 20>::integrate(ai, a, b);
        b = a;
    }
    return acc;
}

// n-th zero of Ai (kind 0) or Ai' (kind 1), n >= 1, by Newton from the asymptotic guess.
inline double airy_zero_impl(int n, int kind)
{
    if (n < 1 || n > 100) throw index_error("airy zero index out of range");
    double t = 3 * pi * (4 * n - (kind == 0 ? 1 : 3)) / 8;
    double t2 = t * t;
    double x = -std::pow(t, 2.0 / 3.0) * (kind == 0 ? 1 + 5.0 / 48 / t2 : 1 - 7.0 / 48 / t2);
    for (int it = 0; it < 50; ++it) {
        auto v = airy(x);
        double dx = kind == 0 ? v.ai / v.aip : v.aip / (x * v.ai);
        x -= dx;
        if (std::abs(dx) < 1e-15 * std::abs(x)) break;
    }
    return x;
}

inline double airy_zero(int n) { return airy_zero_impl(n, 0); }
inline double airy_prime_zero(int n) { return airy_zero_impl(n, 1); }

// |P_l^m(x)|^2 with the Condon-Shortley phase; for |x| > 1 the factor (1-x^2)^{|m|/2} enters through its modulus.
inline double assoc_legendre_abs2(int l, int m, double x)
{
    if (l < 0 || std::abs(m) > l) throw index_error("assoc_legendre_abs2: need |m| <= l");
    int am = std::abs(m);
    double pmm = 1.0;
    for (int k = 1; k <= am; ++k) pmm *= -(2.0 * k - 1);
    double p = pmm;
    if (l > am) {
        double p0 = pmm, p1 = x * (2 * am + 1) * pmm;
        for (int ll = am + 2; ll <= l; ++ll) {
            double p2 = (x * (2 * ll - 1) * p1 - (ll + am - 1) * p0) / (ll - am);
            p0 = p1;
            p1 = p2;
        }
        p = p1;
    }
    double r = p * p * std::pow(std::abs(1 - x * x), am);
    if (m < 0) {
        double f = std::exp(std::lgamma(l - am + 1.0) - std::lgamma(l + am + 1.0));
        r *= f * f;
    }
    return r;
}

// Spherical Bessel j_l and the irregular solution n_l = -y_l, normalised so that x^{l+1} n_l(x) -> (2l-1)!!.
// libstdc++ versions throw for large x
inline double sph_j(int l, double x) { return boost::math::sph_bessel(unsigned(l), x); }
inline double sph_n(int l, double x) { return -boost::math::sph_neumann(unsigned(l), x); }

} // namespace bmw
