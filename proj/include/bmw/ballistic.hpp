#pragma once

#include "airyq.hpp"
#include "harmonics.hpp"

#include <algorithm>
#include <exception>
#include <functional>
#include <map>
#include <thread>
#include <vector>

namespace bmw {

// Particle of mass M in the uniform force F (along +z).
struct PhysicalContext {
    double mass = si::m_e;
    double force = 0;
    double hbar = si::hbar;

    PhysicalContext() = default;
    PhysicalContext(double m, double f, double hb = si::hbar) : mass(m), force(f), hbar(hb)
    {
        if (!(mass > 0) || !std::isfinite(mass)) throw domain_error("PhysicalContext: mass must be > 0");
        if (!(force > 0) || !std::isfinite(force))
            throw domain_error("PhysicalContext: force must be > 0 (use freespace for F = 0)");
        if (!(hbar > 0)) throw domain_error("PhysicalContext: hbar must be > 0");
    }

    static PhysicalContext electron_in_field(double field_vpm) { return {si::m_e, si::e * field_vpm}; }

    double beta() const { return std::cbrt(mass / (4 * hbar * hbar * force * force)); }
    double bf() const { return beta() * force; }  // inverse length scale
    double eps(double E) const { return -2 * beta() * E; }
    double energy(double eps) const { return -eps / (2 * beta()); }
    Vec3 to_dimless(const Vec3& r) const { return bf() * r; }
};

using SourceAmplitudes = std::map<MultipoleIndex, cplx>;

struct SourceSuperposition {
    SourceAmplitudes amplitudes;
    Vec3 origin{0, 0, 0};
    double energy = 0;
};

inline constexpr double far_field_threshold = 15.0;

namespace detail {

struct GlmValue {
    cplx g;
    CVec3 grad{};  // with respect to the dimensionless position
    bool flagged = false;
};

// sum_j T_jlm K_jm(2 rho) Q_{2j-l+1}(rho, zeta; eps) and optionally its gradient
inline GlmValue glm_dimless(MultipoleIndex idx, const Vec3& rv, double eps, bool want_grad)
{
    check_index(idx, 12);
    int l = idx.l, am = std::abs(idx.m);
    QArgs a = QArgs::cartesian(rv[0], rv[1], rv[2], eps);
    if (a.rho == 0.0) throw singularity_error("multipole Green function evaluated at the source");
    int kmin = 2 * am - l + 1, kmax = l + 1;
    QSeq s = q_sequence(a, std::min(kmin - 1, 0), kmax + 1);
    Vec3 r2 = 2.0 * rv;
    GlmValue out{0.0, {0.0, 0.0, 0.0}, s.flagged};
    for (int j = am; j <= l; ++j) {
        int k = 2 * j - l + 1;
        double t = translation_coeff_t(j, l, idx.m);
        cplx K = klm_eval({j, idx.m}, r2);
        cplx Q = s.at(k);
        out.g += t * K * Q;
        if (want_grad) {
            CVec3 gk = klm_grad({j, idx.m}, r2);
            cplx qp = s.at(k + 1), qm = s.at(k - 1);
            for (int c = 0; c < 3; ++c) {
                cplx dq = -2.0 * rv[c] * qp + (c == 2 ? qm : 0.0);
                out.grad[c] += t * (2.0 * gk[c] * Q + K * dq);
            }
        }
    }
    return out;
}

inline QArgs far_args(const PhysicalContext& ctx, const Vec3& r, double E, double& bf)
{
    bf = ctx.bf();
    return QArgs::cartesian(bf * r[0], bf * r[1], bf * r[2], ctx.eps(E));
}

inline double check_far(const QArgs& a)
{
    double ap = a.alpha_plus();
    if (!(ap < -far_field_threshold))
        throw regime_error("far-field asymptotics need alpha_+ < -" + std::to_string(far_field_threshold) +
                           " (got " + std::to_string(ap) + ")");
    return ap;
}

} // namespace detail

// s-wave Green function G(r, r'; E) as an Airy product.
inline cplx green_swave(const Vec3& r, const Vec3& rp, double E, const PhysicalContext& ctx)
{
    Vec3 d = r - rp;
    double R = norm3(d);
    if (R == 0) throw singularity_error("green_swave at coincident points");
    double Ee = E + ctx.force * rp[2];
    double bf = ctx.bf();
    QArgs a = QArgs::cartesian(bf * d[0], bf * d[1], bf * d[2], ctx.eps(Ee));
    auto m = airy_scaled(a.alpha_minus());
    auto p = airy_scaled(a.alpha_plus());
    double pref = ctx.mass / (2 * ctx.hbar * ctx.hbar * R);
    double re = (p.bi * m.aip - p.bip * m.ai) * std::exp(p.bi_exp + m.ai_exp);
    double im = (p.ai * m.aip - p.aip * m.ai) * std::exp(p.ai_exp + m.ai_exp);
    return pref * cplx(re, im);
}

inline cplx green_lm(MultipoleIndex idx, const Vec3& r, double E, const PhysicalContext& ctx, bool* flagged = nullptr)
{
    double bf = ctx.bf();
    auto v = detail::glm_dimless(idx, bf * r, ctx.eps(E), false);
    if (flagged) *flagged = v.flagged;
    return -4 * ctx.beta() * std::pow(bf, idx.l + 3) * v.g;
}

struct GreenWithGrad {
    cplx g;
    CVec3 grad;
    bool flagged = false;
};

inline GreenWithGrad green_lm_grad(MultipoleIndex idx, const Vec3& r, double E, const PhysicalContext& ctx)
{
    double bf = ctx.bf();
    auto v = detail::glm_dimless(idx, bf * r, ctx.eps(E), true);
    double pref = -4 * ctx.beta() * std::pow(bf, idx.l + 3);
    GreenWithGrad out{pref * v.g, {}, v.flagged};
    for (int c = 0; c < 3; ++c) out.grad[c] = pref * bf * v.grad[c];
    return out;
}

// Far-field form with the harmonic polynomial operator acting on Ai(alpha_-).
inline cplx green_lm_far(MultipoleIndex idx, const Vec3& r, double E, const PhysicalContext& ctx)
{
    check_index(idx);
    double bf;
    QArgs a = detail::far_args(ctx, r, E, bf);
    double ap = detail::check_far(a);
    double s = std::sqrt(-ap);
    auto [ci, cip] = airy_ci(ap);
    (void)cip;
    cplx pref = -0.5 * ctx.beta() * std::pow(cplx(0, 2 * bf), idx.l + 3) * ci / s;
    double sg = (idx.m % 2) ? -1.0 : 1.0;
    return pref * sg * klm_operator_on_airy(idx, bf * r[0] / s, bf * r[1] / s, a.alpha_minus());
}

// Far-field z current density matrix element j^(z)_{ab}.
inline cplx current_density_z_far(MultipoleIndex ia, MultipoleIndex ib, const Vec3& r, double E,
                                  const PhysicalContext& ctx)
{
    check_index(ia);
    check_index(ib);
    double bf;
    QArgs a = detail::far_args(ctx, r, E, bf);
    double ap = detail::check_far(a);
    double s = std::sqrt(-ap);
    double X = bf * r[0] / s, Y = bf * r[1] / s, am = a.alpha_minus();
    cplx ka = klm_operator_on_airy(ia, X, Y, am);
    cplx kb = klm_operator_on_airy(ib, X, Y, am);
    static constexpr cplx ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    cplx ph = ipow[((ib.l - ia.l) % 4 + 4) % 4] * (((ia.m + ib.m) % 2) ? -1.0 : 1.0);
    double pref = -ctx.beta() / (4 * pi * ctx.hbar * ap) * std::pow(2 * bf, ia.l + ib.l + 5);
    return pref * ph * std::conj(ka) * kb;
}

inline double current_density_z_far(const SourceAmplitudes& amps, const Vec3& r, double E, const PhysicalContext& ctx)
{
    cplx s = 0;
    for (auto& [ia, la] : amps)
        for (auto& [ib, lb] : amps) s += std::conj(la) * lb * current_density_z_far(ia, ib, r, E, ctx);
    return s.real();
}

struct WaveValue {
    cplx psi;
    CVec3 grad;
    bool flagged = false;
};

inline WaveValue source_wave(const SourceSuperposition& src, const Vec3& r, const PhysicalContext& ctx)
{
    Vec3 d = r - src.origin;
    double Ee = src.energy + ctx.force * src.origin[2];
    WaveValue w{0.0, {0.0, 0.0, 0.0}, false};
    for (auto& [idx, lam] : src.amplitudes) {
        if (lam == 0.0) continue;
        auto g = green_lm_grad(idx, d, Ee, ctx);
        w.psi += lam * g.g;
        for (int c = 0; c < 3; ++c) w.grad[c] += lam * g.grad[c];
        w.flagged = w.flagged || g.flagged;
    }
    return w;
}

// j = (hbar/M) Im(psi^* grad psi), gradients assembled analytically.
inline Vec3 current_density(const SourceSuperposition& src, const Vec3& r, const PhysicalContext& ctx)
{
    auto w = source_wave(src, r, ctx);
    double f = ctx.hbar / ctx.mass;
    return {f * std::imag(std::conj(w.psi) * w.grad[0]), f * std::imag(std::conj(w.psi) * w.grad[1]),
            f * std::imag(std::conj(w.psi) * w.grad[2])};
}

// Matrix element j_ab = -(i hbar/2M) [G_a^* grad G_b - G_b grad G_a^*], source at the origin.
inline CVec3 current_density_matrix(MultipoleIndex ia, MultipoleIndex ib, const Vec3& r, double E,
                                    const PhysicalContext& ctx)
{
    auto a = green_lm_grad(ia, r, E, ctx);
    auto b = green_lm_grad(ib, r, E, ctx);
    cplx f(0, -ctx.hbar / (2 * ctx.mass));
    CVec3 j;
    for (int c = 0; c < 3; ++c) j[c] = f * (std::conj(a.g) * b.grad[c] - b.g * std::conj(a.grad[c]));
    return j;
}

// Total current matrix from the Qi sum, for psi = sum lambda_lm G_lm.
inline double total_current_matrix(MultipoleIndex ia, MultipoleIndex ib, double E, const PhysicalContext& ctx)
{
    check_index(ia, 12);
    check_index(ib, 12);
    if (ia.m != ib.m) return 0.0;
    double eps = ctx.eps(E), bf = ctx.bf();
    int am = std::abs(ia.m);
    double s = 0;
    for (int j = am; j <= std::min(ia.l, ib.l); ++j)
        s += std::ldexp(dfact(2 * j + 1), j) * translation_coeff_t(j, ia.l, ia.m) * translation_coeff_t(j, ib.l, ib.m) *
             qi(3 * j - ia.l - ib.l + 1, eps);
    double h = ctx.hbar;
    return ctx.mass / (2 * pi * h * h * h) * std::pow(bf, ia.l + ib.l + 1) * s;
}

// The same matrix from the bilinear differentiation of Im G(r, r') at coincidence.
inline cplx total_current_bilinear(MultipoleIndex ia, MultipoleIndex ib, double E, const PhysicalContext& ctx)
{
    using P4 = std::map<std::array<int, 4>, cplx>;  // powers of d_x, d_y, d_u, d_w
    auto op = [](const MonomialExpansion& k, bool conj_, double lat, double zsign) {
        P4 out;
        for (auto& t : k.terms) {
            cplx c = conj_ ? std::conj(t.coeff) : t.coeff;
            c *= std::pow(lat, t.p + t.q);
            for (int i = 0; i <= t.s; ++i)
                out[{t.p, t.q, i, t.s - i}] += c * binom(t.s, i) * std::pow(zsign, i);
        }
        return out;
    };
    P4 a = op(klm_coeffs(ia), true, 1.0, 1.0);
    P4 b = op(klm_coeffs(ib), false, -1.0, -1.0);
    double eps = ctx.eps(E);
    auto even_factor = [](int n) { return std::exp(std::lgamma(n + 1.0) - std::lgamma(n / 2 + 1.0)); };
    cplx s = 0;
    for (auto& [ea, ca] : a)
        for (auto& [eb, cb] : b) {
            int px = ea[0] + eb[0], py = ea[1] + eb[1], pu = ea[2] + eb[2], pw = ea[3] + eb[3];
            if (px % 2 || py % 2 || pu % 2) continue;
            int n = (px + py + pu) / 2;
            double v = ((n % 2) ? -1.0 : 1.0) * qi(1 + n - pw, eps) * even_factor(px) * even_factor(py) * even_factor(pu);
            s += ca * cb * v;
        }
    double bf = ctx.bf();
    return 8 * ctx.beta() * std::pow(bf, 3 + ia.l + ib.l) / ctx.hbar * s;
}

inline double total_current(const SourceAmplitudes& amps, double E, const PhysicalContext& ctx)
{
    double s = 0;
    for (auto& [ia, la] : amps)
        for (auto& [ib, lb] : amps) {
            if (ia.m != ib.m) continue;
            s += (std::conj(la) * lb).real() * total_current_matrix(ia, ib, E, ctx);
        }
    return s;
}

// Leading asymptotes; refined = true sums the Qi tunneling series (with first correction) instead.
inline double total_current_asym(MultipoleIndex idx, double E, const PhysicalContext& ctx, Regime regime,
                                 bool refined = false)
{
    check_index(idx);
    double eps = ctx.eps(E), bf = ctx.bf();
    if (std::abs(eps) < 4) throw regime_error("total_current_asym needs |eps| >= 4 (got " + std::to_string(eps) + ")");
    int l = idx.l, am = std::abs(idx.m);
    double h = ctx.hbar;
    if (refined) {
        if ((regime == Regime::tunneling) != (eps > 0)) throw regime_error("total_current_asym: regime does not match sign of E");
        double s = 0;
        for (int j = am; j <= l; ++j) {
            double t = translation_coeff_t(j, l, idx.m);
            s += std::ldexp(dfact(2 * j + 1), j) * t * t * qi_asym(3 * j - 2 * l + 1, eps, regime);
        }
        return ctx.mass / (2 * pi * h * h * h) * std::pow(bf, 2 * l + 1) * s;
    }
    double w = (2 * l + 1) * fact(l + am) / (fact(am) * fact(l - am));
    if (regime == Regime::tunneling) {
        if (eps <= 0) throw regime_error("tunneling asymptote needs E < 0");
        double kap = 2 * bf * std::sqrt(eps);
        return ctx.mass * std::pow(kap, 2 * l + 1) / (4 * pi * pi * h * h * h) * w * std::pow(bf / kap, 3 * am + 3) *
               std::exp(-std::pow(kap / bf, 3) / 6);
    }
    if (eps >= 0) throw regime_error("classical asymptote needs E > 0");
    double k = 2 * bf * std::sqrt(-eps);
    double sg = (l % 2) ? -1.0 : 1.0;
    return ctx.mass * std::pow(k, 2 * l + 1) / (4 * pi * pi * h * h * h) *
           (1 - sg * 2 * w * std::pow(bf / k, 3 * am + 3) * std::cos(std::pow(k / bf, 3) / 6 + am * pi / 2));
}

// Secular (field independent) part of the classical asymptote.
inline double total_current_secular(MultipoleIndex idx, double E, const PhysicalContext& ctx)
{
    double k = std::sqrt(2 * ctx.mass * E) / ctx.hbar;
    double h = ctx.hbar;
    return ctx.mass * std::pow(k, 2 * idx.l + 1) / (4 * pi * pi * h * h * h);
}

inline std::vector<double> staircase_energies(int l, int nu_max, const PhysicalContext& ctx)
{
    std::vector<double> out;
    double b = ctx.beta();
    for (int nu = -l / 2; nu <= nu_max; ++nu) {
        if (2 * nu <= -l) continue;
        out.push_back(std::pow(3 * pi * (4 * nu + 2 * l - 1), 2.0 / 3.0) / (8 * b));
    }
    return out;
}

enum class Polarization { pi, sigma, circular, tilt45, vector };

inline Polarization parse_polarization(const std::string& s)
{
    if (s == "pi") return Polarization::pi;
    if (s == "sigma") return Polarization::sigma;
    if (s == "circ" || s == "circular") return Polarization::circular;
    if (s == "tilt" || s == "tilt45") return Polarization::tilt45;
    throw config_error("unknown polarization '" + s + "' (pi, sigma, circular, tilt45)");
}

inline const char* polarization_name(Polarization p)
{
    switch (p) {
    case Polarization::pi: return "pi";
    case Polarization::sigma: return "sigma";
    case Polarization::circular: return "circular";
    case Polarization::tilt45: return "tilt45";
    default: return "vector";
    }
}

// C (e . grad) delta(r) = C sum_m lambda_1m delta_1m(r), up to the constant sqrt(4 pi/3).
inline SourceSuperposition polarization_to_source(const CVec3& e, cplx C, double E)
{
    double n = std::sqrt(std::norm(e[0]) + std::norm(e[1]) + std::norm(e[2]));
    if (!(n > 0)) throw domain_error("polarization vector is zero");
    cplx ex = e[0] / n, ey = e[1] / n, ez = e[2] / n;
    const cplx I(0, 1);
    SourceSuperposition s;
    s.energy = E;
    s.amplitudes[{1, -1}] = C * (ex - I * ey) / std::sqrt(2.0);
    s.amplitudes[{1, 0}] = C * ez;
    s.amplitudes[{1, 1}] = C * (-ex - I * ey) / std::sqrt(2.0);
    return s;
}

inline CVec3 polarization_vector(Polarization p)
{
    double r = 1 / std::sqrt(2.0);
    switch (p) {
    case Polarization::pi: return {0.0, 0.0, 1.0};
    case Polarization::sigma: return {1.0, 0.0, 0.0};
    case Polarization::circular: return {cplx(0, r), 0.0, r};
    case Polarization::tilt45: return {r, 0.0, r};
    default: throw domain_error("vector polarization needs an explicit vector");
    }
}

inline SourceSuperposition polarization_to_source(Polarization p, cplx C, double E)
{
    return polarization_to_source(polarization_vector(p), C, E);
}

// Closed far-field photocurrent profiles for the preset polarizations (unit source strength).
inline double photodetachment_jz_far(Polarization p, double x, double y, double z, double E, const PhysicalContext& ctx)
{
    double bf;
    QArgs a = detail::far_args(ctx, {x, y, z}, E, bf);
    double ap = detail::check_far(a);
    auto v = airy(a.alpha_minus());
    double b = ctx.beta(), F = ctx.force;
    double c8 = std::pow(b, 8) * std::pow(F, 7) / (pi * pi * ctx.hbar * (-ap));
    double u = bf * x / std::sqrt(-ap);
    switch (p) {
    case Polarization::pi: return 24 * c8 * v.aip * v.aip;
    case Polarization::sigma: return 24 * c8 * u * u * v.ai * v.ai;
    case Polarization::circular: return 12 * c8 * (v.aip - u * v.ai) * (v.aip - u * v.ai);
    case Polarization::tilt45: return 0.5 * (24 * c8 * v.aip * v.aip + 24 * c8 * u * u * v.ai * v.ai);
    default: throw domain_error("closed far-field profile only for preset polarizations");
    }
}

struct GridSpec {
    double z = 0;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
    int nx = 0, ny = 0;

    static GridSpec centered(double z, double width, int n) { return {z, -width / 2, width / 2, -width / 2, width / 2, n, n}; }
};

struct DetectorGrid {
    GridSpec spec;
    std::vector<double> values;  // row-major, y outer

    explicit DetectorGrid(const GridSpec& s) : spec(s)
    {
        if (s.nx < 1 || s.ny < 1) throw config_error("grid needs at least one sample per axis");
        if (double(s.nx) * s.ny > 4096.0 * 4096.0) throw config_error("grid exceeds 4096^2 pixels");
        values.assign(size_t(s.nx) * s.ny, 0.0);
    }
    double x(int i) const { return spec.nx == 1 ? 0.5 * (spec.x0 + spec.x1) : spec.x0 + (spec.x1 - spec.x0) * i / (spec.nx - 1); }
    double y(int j) const { return spec.ny == 1 ? 0.5 * (spec.y0 + spec.y1) : spec.y0 + (spec.y1 - spec.y0) * j / (spec.ny - 1); }
    double& at(int i, int j) { return values[size_t(j) * spec.nx + i]; }
    double at(int i, int j) const { return values[size_t(j) * spec.nx + i]; }
    double max() const { return *std::max_element(values.begin(), values.end()); }
};

inline unsigned default_threads()
{
    unsigned n = std::thread::hardware_concurrency();
    return n ? n : 1;
}

// Per-pixel map; each pixel is written once, so the result does not depend on scheduling.
inline void fill_grid(DetectorGrid& g, const std::function<double(double, double, double)>& f, unsigned threads = 0)
{
    if (!threads) threads = default_threads();
    int ny = g.spec.ny;
    threads = std::min<unsigned>(threads, unsigned(ny));
    std::vector<std::exception_ptr> errs(threads);
    auto work = [&](unsigned t) {
        try {
            for (int j = int(t); j < ny; j += int(threads))
                for (int i = 0; i < g.spec.nx; ++i) g.at(i, j) = f(g.x(i), g.y(j), g.spec.z);
        } catch (...) {
            errs[t] = std::current_exception();
        }
    };
    if (threads <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

enum class ProfileMode { far_field, exact };

inline DetectorGrid photodetachment_profile(Polarization p, const GridSpec& spec, double E, const PhysicalContext& ctx,
                                            ProfileMode mode = ProfileMode::far_field, unsigned threads = 0)
{
    DetectorGrid g(spec);
    if (mode == ProfileMode::far_field) {
        fill_grid(g, [&](double x, double y, double z) { return photodetachment_jz_far(p, x, y, z, E, ctx); }, threads);
    } else {
        auto src = polarization_to_source(p, 1.0, E);
        fill_grid(g, [&](double x, double y, double z) { return current_density(src, {x, y, z}, ctx)[2]; }, threads);
    }
    return g;
}

struct SpectrumPoint {
    double E;
    double J;
};

inline double photodetachment_current(const CVec3& e, double E, const PhysicalContext& ctx)
{
    return total_current(polarization_to_source(e, 1.0, E).amplitudes, E, ctx);
}

inline std::vector<SpectrumPoint> photodetachment_spectrum(Polarization p, double E0, double E1, int n,
                                                           const PhysicalContext& ctx)
{
    if (!(std::isfinite(E0) && std::isfinite(E1)) || n < 1) throw config_error("spectrum needs a finite range and n >= 1");
    std::vector<SpectrumPoint> out;
    CVec3 e = polarization_vector(p);
    for (int i = 0; i < n; ++i) {
        double E = n == 1 ? E0 : E0 + (E1 - E0) * i / (n - 1);
        out.push_back({E, photodetachment_current(e, E, ctx)});
    }
    return out;
}

} // namespace bmw
