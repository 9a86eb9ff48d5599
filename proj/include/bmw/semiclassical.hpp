#pragma once

#include "ballistic.hpp"
#include "freespace.hpp"

namespace bmw {

struct ScreenPoint {
    double R = 0;    // lateral radius
    double phi = 0;  // azimuth
    double z = 0;
    double E = 0;

    Vec3 position() const { return {R * std::cos(phi), R * std::sin(phi), z}; }
};

// R_cl^2 = 4Ez/F (E > 0); R_tun^2 = 4|E|z/F (E < 0)
inline double classical_radius(const ScreenPoint& p, const PhysicalContext& ctx)
{
    return std::sqrt(4 * std::abs(p.E) * p.z / ctx.force);
}

inline double classical_cross_section(const ScreenPoint& p, const PhysicalContext& ctx)
{
    if (!(p.E > 0)) throw regime_error("classical cross section needs E > 0");
    double rc = classical_radius(p, ctx);
    if (!(p.R < rc)) throw regime_error("screen point at or beyond the caustic radius R_cl");
    return rc * rc * std::sqrt(1 - p.R * p.R / (rc * rc));
}

enum class Branch { fast, slow };

inline double reduced_action(const ScreenPoint& p, Branch b, const PhysicalContext& ctx)
{
    double bf = ctx.bf();
    Vec3 r = p.position();
    QArgs a = QArgs::cartesian(bf * r[0], bf * r[1], bf * r[2], ctx.eps(p.E));
    double am = a.alpha_minus(), ap = a.alpha_plus();
    if (am > 0 || ap > 0) throw regime_error("reduced action needs the classically allowed region (alpha_- <= 0)");
    double s = b == Branch::slow ? 1.0 : -1.0;
    return 2 * ctx.hbar / 3 * (std::pow(-ap, 1.5) + s * std::pow(-am, 1.5));
}

// General two-path profile for an angular amplitude A(theta, phi).
inline double semiclassical_profile(const std::function<cplx(double, double)>& A, const ScreenPoint& p,
                                    const PhysicalContext& ctx)
{
    double cs = classical_cross_section(p, ctx);
    double rc = classical_radius(p, ctx);
    double th = std::asin(p.R / rc);
    double ws = reduced_action(p, Branch::slow, ctx) / ctx.hbar - pi / 2;
    double wf = reduced_action(p, Branch::fast, ctx) / ctx.hbar;
    // only the phase difference matters; drop the large common part
    double d = ws - wf;
    cplx s = A(pi - th, p.phi) * std::polar(1.0, d) + A(th, p.phi);
    return std::norm(s) / cs;
}

inline double semiclassical_profile(MultipoleIndex idx, const ScreenPoint& p, const PhysicalContext& ctx)
{
    check_index(idx);
    double rc = classical_radius(p, ctx);
    if (!(p.E > 0)) throw regime_error("semiclassical profile needs E > 0");
    if (!(p.R < rc)) throw regime_error("screen point at or beyond the caustic radius R_cl");
    int l = idx.l, am = std::abs(idx.m);
    double k = wave_number(p.E, ctx.mass, ctx.hbar);
    double h = ctx.hbar;
    double u = 1 - p.R * p.R / (rc * rc);
    double w = (2 * l + 1) / (rc * std::sqrt(rc * rc - p.R * p.R)) * fact(l - am) / fact(l + am) *
               assoc_legendre_abs2(l, am, std::sqrt(u));
    double ph = 2.0 / 3.0 * std::pow(2 * ctx.beta() * p.E * u, 1.5) + (((l - am) % 2) ? -pi / 4 : pi / 4);
    double s = std::sin(ph);
    return ctx.mass * std::pow(k, 2 * l + 1) / (4 * pi * pi * pi * h * h * h) * w * s * s;
}

inline double tunneling_profile(MultipoleIndex idx, const ScreenPoint& p, const PhysicalContext& ctx)
{
    check_index(idx);
    if (!(p.E < 0)) throw regime_error("tunneling profile needs E < 0");
    int l = idx.l, am = std::abs(idx.m);
    double rt = classical_radius(p, ctx);
    double kap = wave_number(p.E, ctx.mass, ctx.hbar);
    double h = ctx.hbar;
    double u = 1 + p.R * p.R / (rt * rt);
    double w = (2 * l + 1) / (rt * std::sqrt(rt * rt + p.R * p.R)) * fact(l - am) / fact(l + am) *
               assoc_legendre_abs2(l, am, std::sqrt(u));
    return ctx.mass * std::pow(kap, 2 * l + 1) / (16 * pi * pi * pi * h * h * h) * w *
           std::exp(-4.0 / 3.0 * std::pow(-2 * ctx.beta() * p.E * u, 1.5));
}

inline double tunneling_profile_paraxial(MultipoleIndex idx, const ScreenPoint& p, const PhysicalContext& ctx)
{
    check_index(idx);
    if (!(p.E < 0)) throw regime_error("tunneling profile needs E < 0");
    int l = idx.l, am = std::abs(idx.m);
    double rt = classical_radius(p, ctx);
    double kap = wave_number(p.E, ctx.mass, ctx.hbar);
    double h = ctx.hbar, bf = ctx.bf();
    double c = (2 * l + 1) * fact(l + am) / (std::ldexp(1.0, 2 * am) * fact(am) * fact(am) * fact(l - am));
    return ctx.mass * std::pow(kap, 2 * l + 1) / (16 * pi * pi * pi * h * h * h) * c * std::pow(p.R, 2 * am) /
           std::pow(rt, 2 * am + 2) * std::exp(-kap * p.R * p.R / (2 * p.z) - std::pow(kap / bf, 3) / 6);
}

} // namespace bmw
