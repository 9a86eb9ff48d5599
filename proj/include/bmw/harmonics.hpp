#pragma once

#include "core.hpp"
#include "specfun.hpp"

#include <map>
#include <vector>

namespace bmw {

inline constexpr int max_l = 20;

struct MultipoleIndex {
    int l = 0;
    int m = 0;

    friend bool operator==(const MultipoleIndex&, const MultipoleIndex&) = default;
    friend auto operator<=>(const MultipoleIndex&, const MultipoleIndex&) = default;
};

inline void check_index(MultipoleIndex idx, int lmax = max_l)
{
    if (idx.l < 0 || std::abs(idx.m) > idx.l)
        throw index_error("multipole index (" + std::to_string(idx.l) + "," + std::to_string(idx.m) + ") needs |m| <= l");
    if (idx.l > lmax) throw index_error("multipole order l=" + std::to_string(idx.l) + " exceeds " + std::to_string(lmax));
}

struct Monomial {
    int p, q, s;  // powers of x, y, z
    cplx coeff;
};

struct MonomialExpansion {
    int l = 0;
    std::vector<Monomial> terms;
};

namespace detail {

using Poly = std::map<std::array<int, 3>, cplx>;

inline Poly poly_mul(const Poly& a, const Poly& b)
{
    Poly r;
    for (auto& [ea, ca] : a)
        for (auto& [eb, cb] : b) r[{ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]}] += ca * cb;
    return r;
}

inline MonomialExpansion build_klm(int l, int m)
{
    int am = std::abs(m);
    double norm = std::sqrt((2 * l + 1) / (4 * pi) * std::exp(std::lgamma(l - am + 1.0) - std::lgamma(l + am + 1.0)));
    // (x +/- i y)^|m|
    Poly xy{{{0, 0, 0}, 1.0}};
    Poly lin{{{1, 0, 0}, 1.0}, {{0, 1, 0}, cplx(0, m >= 0 ? 1.0 : -1.0)}};
    for (int k = 0; k < am; ++k) xy = poly_mul(xy, lin);
    // sum_k a_k z^{l-|m|-2k} r^{2k}, from the |m|-th derivative of P_l
    Poly r2{{{2, 0, 0}, 1.0}, {{0, 2, 0}, 1.0}, {{0, 0, 2}, 1.0}};
    Poly rad;
    Poly r2k{{{0, 0, 0}, 1.0}};
    for (int k = 0; 2 * k <= l - am; ++k) {
        double a = (k % 2 ? -1.0 : 1.0) * binom(l, k) * binom(2 * l - 2 * k, l) *
                   std::exp(std::lgamma(l - 2 * k + 1.0) - std::lgamma(l - 2 * k - am + 1.0)) / std::ldexp(1.0, l);
        for (auto& [e, c] : r2k) rad[{e[0], e[1], e[2] + l - am - 2 * k}] += a * c;
        r2k = poly_mul(r2k, r2);
    }
    // Condon-Shortley phase (-1)^m for m > 0; K_{l,-m} = (-1)^m K_lm^*
    double phase = (m > 0 && am % 2) ? -1.0 : 1.0;
    Poly full = poly_mul(xy, rad);
    MonomialExpansion out{l, {}};
    for (auto& [e, c] : full) {
        cplx v = phase * norm * c;
        if (std::abs(v) > 1e-300) out.terms.push_back({e[0], e[1], e[2], v});
    }
    return out;
}

struct KlmCache {
    std::vector<MonomialExpansion> table;
    KlmCache()
    {
        table.reserve((max_l + 1) * (max_l + 1));
        for (int l = 0; l <= max_l; ++l)
            for (int m = -l; m <= l; ++m) table.push_back(build_klm(l, m));
    }
};

inline const KlmCache& klm_cache()
{
    static const KlmCache c;
    return c;
}

template <class T>
void powers(T v, int n, T* out)
{
    out[0] = T(1);
    for (int k = 1; k <= n; ++k) out[k] = out[k - 1] * v;
}

} // namespace detail

inline const MonomialExpansion& klm_coeffs(MultipoleIndex idx)
{
    check_index(idx);
    return detail::klm_cache().table[idx.l * idx.l + idx.l + idx.m];
}

inline cplx klm_eval(MultipoleIndex idx, const CVec3& r)
{
    const auto& e = klm_coeffs(idx);
    cplx px[max_l + 1], py[max_l + 1], pz[max_l + 1];
    detail::powers(r[0], idx.l, px);
    detail::powers(r[1], idx.l, py);
    detail::powers(r[2], idx.l, pz);
    cplx s = 0;
    for (auto& t : e.terms) s += t.coeff * px[t.p] * py[t.q] * pz[t.s];
    return s;
}

inline cplx klm_eval(MultipoleIndex idx, const Vec3& r) { return klm_eval(idx, CVec3{r[0], r[1], r[2]}); }

inline CVec3 klm_grad(MultipoleIndex idx, const Vec3& r)
{
    const auto& e = klm_coeffs(idx);
    double px[max_l + 1], py[max_l + 1], pz[max_l + 1];
    detail::powers(r[0], idx.l, px);
    detail::powers(r[1], idx.l, py);
    detail::powers(r[2], idx.l, pz);
    CVec3 g{0.0, 0.0, 0.0};
    for (auto& t : e.terms) {
        if (t.p) g[0] += t.coeff * double(t.p) * px[t.p - 1] * py[t.q] * pz[t.s];
        if (t.q) g[1] += t.coeff * double(t.q) * px[t.p] * py[t.q - 1] * pz[t.s];
        if (t.s) g[2] += t.coeff * double(t.s) * px[t.p] * py[t.q] * pz[t.s - 1];
    }
    return g;
}

inline cplx ylm(MultipoleIndex idx, const Vec3& r)
{
    double n = norm3(r);
    if (n == 0) throw singularity_error("Y_lm at the origin");
    return klm_eval(idx, (1.0 / n) * r);
}

inline double translation_coeff_c(int l, int m, int lam, int mu)
{
    check_index({l, m});
    if (lam < 0 || lam > l || std::abs(mu) > lam) throw index_error("translation_coeff_c: need 0 <= lambda <= l, |mu| <= lambda");
    if (std::abs(m - mu) > l - lam) return 0.0;
    // ratio first: exactly 1 for lambda = 0 or l
    double r = (2 * l + 1) / ((2 * lam + 1.0) * (2 * l - 2 * lam + 1));
    return std::sqrt(4 * pi * r * binom(l + m, lam + mu) * binom(l - m, lam - mu));
}

inline double translation_coeff_t(int j, int l, int m)
{
    check_index({l, m});
    if (j < std::abs(m) || j > l) throw index_error("translation_coeff_t: need |m| <= j <= l");
    return std::sqrt((2 * l + 1.0) / (2 * j + 1) * binom(l + m, j + m) * binom(l - m, j - m));
}

inline cplx klm_translate_z(MultipoleIndex idx, double a, const Vec3& r)
{
    check_index(idx);
    cplx s = 0;
    for (int j = std::abs(idx.m); j <= idx.l; ++j)
        s += translation_coeff_t(j, idx.l, idx.m) * std::pow(a, idx.l - j) * klm_eval({j, idx.m}, r);
    return s;
}

inline cplx klm_general_translate(MultipoleIndex idx, const Vec3& a, const Vec3& r)
{
    check_index(idx);
    cplx s = 0;
    for (int lam = 0; lam <= idx.l; ++lam)
        for (int mu = -lam; mu <= lam; ++mu) {
            if (std::abs(idx.m - mu) > idx.l - lam) continue;
            s += translation_coeff_c(idx.l, idx.m, lam, mu) * klm_eval({lam, mu}, r) *
                 klm_eval({idx.l - lam, idx.m - mu}, a);
        }
    return s;
}

// K_lm(X, Y, i d/dalpha) applied to a function whose derivatives d[0..l] at alpha are given.
inline cplx klm_operator(MultipoleIndex idx, cplx X, cplx Y, const double* d)
{
    const auto& e = klm_coeffs(idx);
    cplx px[max_l + 1], py[max_l + 1];
    detail::powers(X, idx.l, px);
    detail::powers(Y, idx.l, py);
    static constexpr cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    cplx s = 0;
    for (auto& t : e.terms) s += t.coeff * px[t.p] * py[t.q] * ipow[t.s % 4] * d[t.s];
    return s;
}

inline cplx klm_operator_on_airy(MultipoleIndex idx, double X, double Y, double alpha)
{
    check_index(idx);
    auto v = airy(alpha);
    double d[max_l + 1];
    airy_derivs(alpha, v.ai, v.aip, idx.l, d);
    return klm_operator(idx, X, Y, d);
}

} // namespace bmw
