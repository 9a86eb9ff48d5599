#pragma once

#include "harmonics.hpp"

#include <boost/math/interpolators/makima.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <functional>
#include <vector>

namespace bmw {

inline double wave_number(double E, double mass, double hbar = si::hbar) { return std::sqrt(2 * mass * std::abs(E)) / hbar; }

// Outgoing spherical wave; E <= 0 continues k -> i kappa (decaying).
inline cplx green_free(const Vec3& r, const Vec3& rp, double E, double mass, double hbar = si::hbar)
{
    double d = norm3(r - rp);
    if (d == 0) throw singularity_error("green_free at coincident points");
    double pref = -mass / (2 * pi * hbar * hbar * d);
    double k = wave_number(E, mass, hbar);
    if (E > 0) return pref * std::polar(1.0, k * d);
    return pref * std::exp(-k * d);
}

// h_l^(+)(x) = n_l(x) + i j_l(x) with n_l = -y_l, so that h_0^(+) = e^{ix}/x
inline cplx hankel_plus(int l, double x) { return {sph_n(l, x), sph_j(l, x)}; }

inline cplx green_free_lm(MultipoleIndex idx, const Vec3& R, double E, double mass, double hbar = si::hbar)
{
    check_index(idx);
    if (!(E > 0)) throw domain_error("green_free_lm needs E > 0");
    double r = norm3(R);
    if (r == 0) throw singularity_error("green_free_lm at the source");
    double k = wave_number(E, mass, hbar);
    return -mass * std::pow(k, idx.l + 1) / (2 * pi * hbar * hbar) * hankel_plus(idx.l, k * r) * ylm(idx, R);
}

inline double wigner_current(MultipoleIndex idx, double E, double mass, double hbar = si::hbar)
{
    check_index(idx);
    if (E < 0) throw domain_error("wigner_current needs E >= 0");
    double k = wave_number(E, mass, hbar);
    return mass * std::pow(k, 2 * idx.l + 1) / (4 * pi * pi * hbar * hbar * hbar);
}

// Radial coefficient function sigma_lm(R) tabulated on a finite grid (zero outside).
struct RadialSourceProfile {
    MultipoleIndex idx;
    std::vector<double> R, sigma;
};

namespace detail {

inline double radial_integral(const std::function<double(double)>& f, double rmax, int panels = 64)
{
    using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
    double s = 0;
    for (int i = 0; i < panels; ++i) {
        double err = 0;
        s += GK::integrate(f, rmax * i / panels, rmax * (i + 1) / panels, 12, 1e-10, &err);
    }
    return s;
}

// j_l(kR)/k^l, continuous at k = 0
inline double bessel_over_kl(int l, double k, double R)
{
    double x = k * R;
    if (x < 1e-3) {
        double t = std::pow(R, l) / dfact(2 * l + 1);
        return t * (1 - x * x / (2 * (2 * l + 3)));
    }
    return sph_j(l, x) / std::pow(k, l);
}

} // namespace detail

// lambda_lm = (4 pi / k^l) int R^{l+2} j_l(kR) sigma_lm(R) dR for a source supported on [0, rmax]
inline cplx extended_source_strength(const std::function<double(double)>& sigma_lm, double rmax, MultipoleIndex idx,
                                     double E, double mass, double hbar = si::hbar)
{
    check_index(idx);
    if (!(rmax > 0)) throw domain_error("extended_source_strength needs a positive support radius");
    double k = wave_number(std::max(E, 0.0), mass, hbar);
    int l = idx.l;
    auto f = [&](double R) { return std::pow(R, l + 2) * detail::bessel_over_kl(l, k, R) * sigma_lm(R); };
    double v = 4 * pi * detail::radial_integral(f, rmax);
    if (!std::isfinite(v)) throw stability_error("extended_source_strength: quadrature did not converge");
    return v;
}

inline cplx extended_source_strength(const RadialSourceProfile& p, double E, double mass, double hbar = si::hbar)
{
    if (p.R.size() != p.sigma.size() || p.R.size() < 4) throw domain_error("radial profile needs >= 4 samples");
    for (size_t i = 1; i < p.R.size(); ++i)
        if (!(p.R[i] > p.R[i - 1]) || p.R[0] < 0) throw domain_error("radial profile grid must be increasing from R >= 0");
    auto interp = boost::math::interpolators::makima<std::vector<double>>(std::vector<double>(p.R), std::vector<double>(p.sigma));
    double r0 = p.R.front(), r1 = p.R.back();
    auto s = [&](double R) { return (R < r0 || R > r1) ? 0.0 : interp(R); };
    return extended_source_strength(s, r1, p.idx, E, mass, hbar);
}

// Threshold value 4 pi gamma_lm / (2l+1)!!, gamma_lm = int R^{2l+2} sigma_lm(R) dR
inline double threshold_source_strength(const std::function<double(double)>& sigma_lm, double rmax, int l)
{
    auto f = [&](double R) { return std::pow(R, 2 * l + 2) * sigma_lm(R); };
    return 4 * pi * detail::radial_integral(f, rmax) / dfact(2 * l + 1);
}

inline double free_total_current(const std::map<MultipoleIndex, cplx>& amps, double E, double mass, double hbar = si::hbar)
{
    double s = 0;
    for (auto& [idx, lam] : amps) s += std::norm(lam) * wigner_current(idx, E, mass, hbar);
    return s;
}

} // namespace bmw
