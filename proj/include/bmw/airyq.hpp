#pragma once

#include "core.hpp"
#include "specfun.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <limits>
#include <vector>

namespace bmw {

inline constexpr double rho_min = 1e-3;

// Dimensionless point (rho = |beta F r|, zeta = beta F z) and energy eps = -2 beta E.
// rho -/+ zeta are kept separately so that alpha_- near the axis in the far field
// does not suffer from cancellation.
struct QArgs {
    double rho = 0, zeta = 0, eps = 0;
    double rmz = std::numeric_limits<double>::quiet_NaN();  // rho - zeta
    double rpz = std::numeric_limits<double>::quiet_NaN();  // rho + zeta

    QArgs() = default;
    QArgs(double rho_, double zeta_, double eps_) : rho(rho_), zeta(zeta_), eps(eps_)
    {
        if (!(rho >= 0)) throw domain_error("QArgs: rho must be >= 0");
        require_finite(zeta, "zeta");
        require_finite(eps, "eps");
        rmz = rho - zeta;
        rpz = rho + zeta;
    }

    static QArgs cartesian(double xi, double ups, double zeta, double eps)
    {
        double lat2 = xi * xi + ups * ups;
        QArgs a(std::sqrt(lat2 + zeta * zeta), zeta, eps);
        if (zeta > 0) a.rmz = lat2 / (a.rho + zeta);
        if (zeta < 0) a.rpz = lat2 / (a.rho - zeta);
        return a;
    }

    double alpha_minus() const { return eps + rmz; }  // argument of Ai
    double alpha_plus() const { return eps - rpz; }   // argument of Ci
};

// Real and imaginary parts of Q_k for klo <= k <= khi, each part m * exp(base + e2*ln2).
struct QSeq {
    int klo = 0, khi = 0;
    std::vector<double> re, im;
    std::vector<int> re_e2, im_e2;
    double re_base = 0, im_base = 0;
    bool flagged = false;

    ExpReal re_at(int k) const
    {
        int i = k - klo;
        return {re[i], re_base + re_e2[i] * std::numbers::ln2};
    }
    ExpReal im_at(int k) const
    {
        int i = k - klo;
        return {im[i], im_base + im_e2[i] * std::numbers::ln2};
    }
    cplx at(int k) const { return {re_at(k).value(), im_at(k).value()}; }
};

namespace detail {

struct AiryProductSeeds {
    AiryScaled am, ap;
    double dA[airy_max_deriv + 1], dAp[airy_max_deriv + 1], dBp[airy_max_deriv + 1];
};

inline void fill_seeds(const QArgs& a, int nd, AiryProductSeeds& s)
{
    double xm = a.alpha_minus(), xp = a.alpha_plus();
    s.am = airy_scaled(xm);
    s.ap = airy_scaled(xp);
    airy_derivs(xm, s.am.ai, s.am.aip, nd, s.dA);
    airy_derivs(xp, s.ap.ai, s.ap.aip, nd, s.dAp);
    airy_derivs(xp, s.ap.bi, s.ap.bip, nd, s.dBp);
}

// Forward five-point recursion on one real component, with binary rescaling.
inline void q_forward(std::vector<double>& v, std::vector<int>& e2, int klo, int khi, const QArgs& a)
{
    double r2 = a.rho * a.rho;
    double zme = a.zeta - a.eps;
    for (int k = 0; k + 2 <= khi; ++k) {
        int i1 = k + 1 - klo, i0 = k - klo, im2 = k - 2 - klo;
        int e = e2[i1];
        double t = (k + 0.5) * v[i1] - zme * std::ldexp(v[i0], e2[i0] - e) - 0.25 * std::ldexp(v[im2], e2[im2] - e);
        t /= r2;
        if (t != 0 && std::abs(t) > 0x1p400) { t = std::ldexp(t, -400); e += 400; }
        if (t != 0 && std::abs(t) < 0x1p-400) { t = std::ldexp(t, 400); e -= 400; }
        v[k + 2 - klo] = t;
        e2[k + 2 - klo] = e;
    }
}

} // namespace detail

inline ExpReal qi_scaled(int k, double eps);
inline std::vector<ExpReal> qi_scaled_range(int k0, int k1, double eps);

namespace detail {

inline constexpr double im_series_rho = 1.0;

// Im Q_k is entire in rho^2 with d/d(rho^2) Q_k = -Q_{k+1}, so
// Im Q_k = sum_n (-rho^2)^n/n! Qi_{k+n}(eps - zeta). Im Q_k is the bounded solution of the
// forward recursion, which round-off drives towards the rho^{-2k} one; the series has no such problem.
inline void im_small_rho(QSeq& q, const QArgs& a)
{
    constexpr int kcap = 80;
    double x = a.eps - a.zeta, r2 = a.rho * a.rho;
    auto qi = qi_scaled_range(1, kcap, x);
    for (int k = 1; k <= q.khi; ++k) {
        double e0 = qi[k - 1].e;
        double sum = qi[k - 1].m, term = 1, mx = std::abs(sum);
        bool ok = false;
        for (int n = 1; k + n <= kcap; ++n) {
            term *= -r2 / n;
            double c = term * qi[k + n - 1].m * std::exp(qi[k + n - 1].e - e0);
            sum += c;
            mx = std::max(mx, std::abs(c));
            if (std::abs(c) <= 1e-17 * std::abs(sum)) { ok = true; break; }
        }
        if (!ok || mx > 1e3 * std::abs(sum)) continue;
        int i = k - q.klo;
        q.im[i] = sum * std::exp(e0 - q.im_base);
        q.im_e2[i] = 0;
    }
}

} // namespace detail

inline QSeq q_sequence(const QArgs& a, int kmin, int kmax)
{
    if (kmin > kmax) throw order_error("q_sequence: empty index range");
    if (kmin < -airy_max_deriv) throw order_error("q_sequence: index below -" + std::to_string(airy_max_deriv));
    if (kmax >= 1 && a.rho == 0.0) throw singularity_error("Q_k with k >= 1 diverges at rho = 0");
    int klo = std::min(kmin, -2), khi = a.rho > 0 ? std::max(kmax, 1) : kmax;
    int nd = std::max(2, -klo);
    detail::AiryProductSeeds s;
    detail::fill_seeds(a, nd, s);

    QSeq q;
    q.klo = klo;
    q.khi = khi;
    int n = khi - klo + 1;
    q.re.assign(n, 0.0);
    q.im.assign(n, 0.0);
    q.re_e2.assign(n, 0);
    q.im_e2.assign(n, 0);
    q.re_base = s.am.ai_exp + s.ap.bi_exp;
    q.im_base = s.am.ai_exp + s.ap.ai_exp;

    // Q_{-k} = d^k/dzeta^k [Ai(alpha_-) Ci(alpha_+)], both arguments decreasing with zeta
    for (int k = 0; k <= -klo; ++k) {
        double sr = 0, si = 0;
        for (int j = 0; j <= k; ++j) {
            double c = binom(k, j) * s.dA[j];
            sr += c * s.dBp[k - j];
            si += c * s.dAp[k - j];
        }
        double sg = (k % 2) ? -1.0 : 1.0;
        q.re[-k - klo] = sg * sr;
        q.im[-k - klo] = sg * si;
    }
    if (khi >= 1) {
        double f = -0.5 / a.rho;
        q.re[1 - klo] = f * (s.dBp[0] * s.dA[1] - s.dBp[1] * s.dA[0]);
        q.im[1 - klo] = f * (s.dAp[0] * s.dA[1] - s.dAp[1] * s.dA[0]);
        detail::q_forward(q.re, q.re_e2, klo, khi, a);
        detail::q_forward(q.im, q.im_e2, klo, khi, a);
        q.flagged = a.rho < rho_min && khi >= 2;
        if (a.rho < detail::im_series_rho) detail::im_small_rho(q, a);
    }
    return q;
}

inline cplx q0(const QArgs& a) { return q_sequence(a, 0, 0).at(0); }

inline cplx q_neg(int k, const QArgs& a)
{
    if (k < 0 || k > 12) throw order_error("q_neg: order " + std::to_string(k) + " outside [0, 12]");
    return q_sequence(a, -k, 0).at(-k);
}

inline cplx q(int k, const QArgs& a, bool* flagged = nullptr)
{
    if (k < -12 || k > 24) throw order_error("q: index " + std::to_string(k) + " outside [-12, 24]");
    if (k >= 1 && a.rho == 0.0) throw singularity_error("Q_k with k >= 1 diverges at rho = 0");
    auto s = q_sequence(a, std::min(k, 0), std::max(k, 0));
    if (flagged) *flagged = s.flagged;
    return s.at(k);
}

inline std::pair<cplx, cplx> q_grad(int k, const QArgs& a)
{
    if (k < -11 || k > 23) throw order_error("q_grad: index outside [-11, 23]");
    auto s = q_sequence(a, std::min(k - 1, 0), std::max(k + 1, 0));
    return {-2.0 * a.rho * s.at(k + 1), s.at(k - 1)};
}

inline double q_asym_origin(int k, double rho)
{
    if (k < 1) throw order_error("q_asym_origin needs k >= 1");
    if (!(rho > 0)) throw domain_error("q_asym_origin needs rho > 0");
    return dfact(2 * k - 3) / (std::ldexp(1.0, k) * pi * std::pow(rho, 2 * k - 1));
}

namespace detail {

// Qi_k for k >= 1 as the positive integral of (t-eps)^{k-1}/(k-1)! Ai(t)^2 over t > eps,
// relative to exp(2*ai_exp(eps)).
inline ExpReal qi_quadrature(int k, double eps)
{
    auto base = airy_scaled(eps);
    double lg = std::lgamma(double(k));
    auto f = [&](double s) {
        if (s <= 0) return k == 1 ? base.ai * base.ai : 0.0;
        double x = eps + s;
        auto v = airy_scaled(x);
        // ai_exp difference without cancellation: -(2/3)(x^{3/2} - eps^{3/2})
        double de = v.ai_exp - base.ai_exp;
        if (v.ai_exp != 0 && base.ai_exp != 0) {
            double sx = std::sqrt(x), se = std::sqrt(eps);
            de = -2.0 / 3.0 * s * (x * x + x * eps + eps * eps) / (x * sx + eps * se);
        }
        double le = (k - 1) * std::log(s) - lg + 2 * de;
        return v.ai * v.ai * std::exp(le);
    };
    // decay rate of Ai^2 beyond eps and location of the integrand's peak
    double kap = 2 * std::sqrt(std::max(eps, 0.0)) + 1.0;
    double peak = (k - 1) / kap;
    double width = (std::sqrt(double(k)) + 1) / kap;
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double total = 0, lo = 0, hi = peak + width;
    for (int seg = 0; seg < 200; ++seg) {
        double part = GK::integrate(f, lo, hi, 15, 1e-12);
        total += part;
        if (seg > 1 && std::abs(part) < 1e-18 * std::abs(total)) break;
        lo = hi;
        hi += width * (1 << std::min(seg, 20));
    }
    return {total, 2 * base.ai_exp};
}

} // namespace detail

inline constexpr double qi_quadrature_threshold = 1.0;

// Qi_k(eps) = lim Im Q_k at the origin, as m * exp(e).
inline ExpReal qi_scaled(int k, double eps)
{
    require_finite(eps, "eps");
    if (k < -airy_max_deriv || k > 80) throw order_error("qi: index " + std::to_string(k) + " unsupported");
    if (k >= 1 && eps > qi_quadrature_threshold) return detail::qi_quadrature(k, eps);
    auto a = airy_scaled(eps);
    int nd = std::max(2, -k);
    double d[airy_max_deriv + 1];
    airy_derivs(eps, a.ai, a.aip, nd, d);
    auto neg = [&](int kk) {
        double s = 0;
        for (int j = 0; j <= kk; ++j) s += binom(kk, j) * d[j] * d[kk - j];
        return (kk % 2) ? -s : s;
    };
    double base = 2 * a.ai_exp;
    if (k <= 0) return {neg(-k), base};
    // (j+1/2) Qi_{j+1} = -eps Qi_j + Qi_{j-2}/4
    double qm2 = neg(2), qm1 = neg(1), q0v = neg(0);
    double cur = 0;
    for (int j = 0; j < k; ++j) {
        cur = (-eps * q0v + 0.25 * qm2) / (j + 0.5);
        qm2 = qm1;
        qm1 = q0v;
        q0v = cur;
    }
    return {cur, base};
}

// Qi_k0 .. Qi_k1 (k0 >= 1) in one pass where the upward recursion is stable.
inline std::vector<ExpReal> qi_scaled_range(int k0, int k1, double eps)
{
    std::vector<ExpReal> out;
    out.reserve(k1 - k0 + 1);
    if (eps > qi_quadrature_threshold) {
        for (int k = k0; k <= k1; ++k) out.push_back(qi_scaled(k, eps));
        return out;
    }
    auto a = airy_scaled(eps);
    double d[3];
    airy_derivs(eps, a.ai, a.aip, 2, d);
    double qm2 = 2 * (d[1] * d[1] + d[0] * d[2]), qm1 = -2 * d[0] * d[1], q0v = d[0] * d[0];
    int e2 = 0;  // binary exponent shared by the three live values
    for (int j = 0; j < k1; ++j) {
        double cur = (-eps * q0v + 0.25 * qm2) / (j + 0.5);
        qm2 = qm1;
        qm1 = q0v;
        q0v = cur;
        if (std::abs(cur) > 0x1p400) {
            qm2 = std::ldexp(qm2, -400); qm1 = std::ldexp(qm1, -400); q0v = std::ldexp(q0v, -400);
            e2 += 400;
        }
        if (j + 1 >= k0) out.push_back({q0v, 2 * a.ai_exp + e2 * std::numbers::ln2});
    }
    return out;
}

inline double qi(int k, double eps)
{
    if (k < -12 || k > 60) throw order_error("qi: index " + std::to_string(k) + " outside [-12, 60]");
    return qi_scaled(k, eps).value();
}

// Qi at half-integer index nu (nu - 1/2 integer), -5/2 <= nu <= 21/2.
inline double qi_half(double nu, double eps)
{
    double t = nu - 0.5;
    int n = int(std::lround(t));
    if (std::abs(t - n) > 1e-12 || n < -3 || n > 10) throw order_error("qi_half: index must be a half-integer in [-5/2, 21/2]");
    const double c = std::cbrt(4.0), rsp = 1.0 / (2 * std::sqrt(pi));
    auto v = airy(c * eps);
    double d[4];
    airy_derivs(c * eps, v.ai, v.aip, 3, d);
    auto down = [&](int j) {  // Qi_{1/2 - j}
        if (j == 0) return rsp * (1.0 / 3.0 - airy_integral(c * eps));
        return ((j + 1) % 2 ? -1.0 : 1.0) * std::pow(c, j) * d[j - 1] * rsp;
    };
    if (n <= 0) return down(-n);
    // (kk+1/2) Qi_{kk+1} = -eps Qi_kk + Qi_{kk-2}/4 with kk = 1/2, 3/2, ...
    double qm2 = down(2), qm1 = down(1), qc = down(0), cur = qc;
    for (int j = 0; j < n; ++j) {
        double kk = j + 0.5;
        cur = (-eps * qc + 0.25 * qm2) / (kk + 0.5);
        qm2 = qm1;
        qm1 = qc;
        qc = cur;
    }
    return cur;
}

enum class Regime { tunneling, classical };

inline double qi_asym_secular(int k, double eps)
{
    return std::pow(std::abs(eps), k - 0.5) / (2 * std::sqrt(pi) * std::tgamma(k + 0.5));
}

inline double qi_asym(int k, double eps, Regime regime)
{
    if (regime == Regime::tunneling) {
        if (!(eps > 0)) throw domain_error("qi_asym: tunneling regime needs eps > 0");
        double e32 = eps * std::sqrt(eps);
        return std::pow(2 * std::sqrt(eps), -(k + 1.0)) * std::exp(-4.0 / 3.0 * e32) / (2 * pi) *
               (1 - (3.0 * k * k + 9.0 * k + 5) / (24 * e32));
    }
    if (!(eps < 0)) throw domain_error("qi_asym: classical regime needs eps < 0");
    // oscillation amplitude fixed by Ai^2 ~ (1 + sin(4/3 |eps|^{3/2})) / (2 pi sqrt|eps|)
    double ae = -eps;
    return qi_asym_secular(k, eps) +
           std::pow(2 * std::sqrt(ae), -(k + 1.0)) / pi * std::sin(4.0 / 3.0 * ae * std::sqrt(ae) - k * pi / 2);
}

} // namespace bmw
