#pragma once

#include "ballistic.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

#include <numeric>

namespace bmw {

// Rb-87 under gravity, F = M g
inline PhysicalContext rb87_gravity() { return {si::m_rb87, si::m_rb87 * si::g}; }

// Gaussian multipole condensate sigma_lm = N_l K_lm(grad) sigma_00.
struct GaussianSource {
    double atoms = 1e6;
    double rabi = 2 * pi * 100;  // Omega, rad/s
    double width = 2e-6;         // a, m
    MultipoleIndex idx{0, 0};

    void validate() const
    {
        if (!(atoms > 0) || !(rabi > 0) || !(width > 0) || !std::isfinite(atoms * rabi * width))
            throw domain_error("GaussianSource: N, Omega and a must be finite and > 0");
        check_index(idx);
    }
};

// N_l^2 = 2 pi^{3/2} a^{2l} / Gamma(l + 3/2)
inline double gaussian_norm_l(int l, double a)
{
    return std::sqrt(2 * std::pow(pi, 1.5) * std::pow(a, 2 * l) / std::tgamma(l + 1.5));
}

// K_lm(grad) exp(-r^2/2a^2) = (-1/a^2)^l K_lm(r) exp(-r^2/2a^2) for harmonic K_lm
inline cplx gaussian_source_value(const GaussianSource& s, const Vec3& r, double hbar = si::hbar)
{
    s.validate();
    double a = s.width, r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    double g = std::sqrt(s.atoms) * hbar * s.rabi * std::pow(a, -1.5) * std::pow(pi, -0.75) * std::exp(-r2 / (2 * a * a));
    if (s.idx.l == 0) return g;
    double c = gaussian_norm_l(s.idx.l, a) * std::pow(-1.0 / (a * a), s.idx.l);
    return c * g * klm_eval(s.idx, r);
}

struct ScaledVars {
    double alpha = 0;
    double xi = 0, ups = 0;
    double zeta_t = 0, rho_t = 0, eps_t = 0;

    QArgs args() const { return QArgs::cartesian(xi, ups, zeta_t, eps_t); }
};

inline ScaledVars scaled_vars(double a, const Vec3& r, double E, const PhysicalContext& ctx)
{
    double bf = ctx.bf();
    ScaledVars v;
    v.alpha = bf * a;
    double a4 = std::pow(v.alpha, 4);
    v.xi = bf * r[0];
    v.ups = bf * r[1];
    v.zeta_t = bf * r[2] + 2 * a4;
    v.rho_t = std::sqrt(v.xi * v.xi + v.ups * v.ups + v.zeta_t * v.zeta_t);
    v.eps_t = ctx.eps(E) + 4 * a4;
    return v;
}

// log Lambda(eps_t); Lambda itself overflows for alpha^2 eps_t beyond ~350
inline double log_virtual_strength(const GaussianSource& s, double eps_t, const PhysicalContext& ctx)
{
    s.validate();
    double al = ctx.bf() * s.width;
    double a2 = al * al;
    return 0.5 * std::log(s.atoms) + std::log(ctx.hbar * s.rabi) + 1.5 * std::log(2 * std::sqrt(pi) * s.width) +
           2 * a2 * (eps_t - 4 * a2 * a2 / 3);
}

inline double virtual_strength(const GaussianSource& s, double E, const PhysicalContext& ctx)
{
    double al = ctx.bf() * s.width;
    double v = std::exp(log_virtual_strength(s, ctx.eps(E) + 4 * std::pow(al, 4), ctx));
    if (!std::isfinite(v)) throw stability_error("virtual source strength overflows; use log_virtual_strength");
    return v;
}

// Beam from a weighted set of Gaussian multipoles sharing N, Omega, a.
enum class SourceKind { ground, parallel, perpendicular, custom };

struct AtomLaserSource {
    GaussianSource base;
    SourceAmplitudes weights;
    SourceKind kind = SourceKind::custom;
};

inline AtomLaserSource single_source(const GaussianSource& s)
{
    s.validate();
    SourceKind k = s.idx == MultipoleIndex{0, 0} ? SourceKind::ground
                   : s.idx == MultipoleIndex{1, 1} ? SourceKind::parallel
                                                   : SourceKind::custom;
    return {s, {{s.idx, 1.0}}, k};
}

// vortex along x: l = 1 rotation by pi/2 about y
inline AtomLaserSource perp_vortex_source(const GaussianSource& s)
{
    s.validate();
    if (s.idx.l != 1) throw index_error("perpendicular vortex needs an l = 1 source");
    return {s, {{{1, 1}, 0.5}, {{1, 0}, std::sqrt(0.5)}, {{1, -1}, 0.5}}, SourceKind::perpendicular};
}

struct BeamValue {
    cplx psi;
    cplx dpsi_dz;
    bool inside = false;  // within 3a of the condensate centre
};

namespace detail {

// Q_k * exp(shift), without forming exp(shift) alone
inline cplx q_shifted(const QSeq& s, int k, double shift)
{
    auto re = s.re_at(k), im = s.im_at(k);
    double vr = re.m == 0 ? 0.0 : re.m * std::exp(re.e + shift);
    double vi = im.m == 0 ? 0.0 : im.m * std::exp(im.e + shift);
    return {vr, vi};
}

inline BeamValue beam_lm(MultipoleIndex idx, const GaussianSource& base, const Vec3& r, double E, const PhysicalContext& ctx)
{
    if (idx.l > 1) throw index_error("closed-form Gaussian beams exist for l <= 1 (use the lattice beam for m = l)");
    check_index(idx);
    double bf = ctx.bf(), b = ctx.beta();
    ScaledVars v = scaled_vars(base.width, r, E, ctx);
    QArgs a = v.args();
    if (a.rho == 0) throw singularity_error("beam evaluated at the virtual source point");
    double lam = log_virtual_strength(base, v.eps_t, ctx);
    QSeq s = q_sequence(a, -1, 3);
    auto Q = [&](int k) { return q_shifted(s, k, lam); };
    double pre = b * bf * bf * bf;
    double al = v.alpha, zt = v.zeta_t;
    BeamValue out;
    out.inside = norm3(r) < 3 * base.width;
    if (idx.l == 0) {
        out.psi = -4 * pre * Q(1);
        out.dpsi_dz = -4 * pre * bf * (-2 * zt * Q(2) + Q(0));
    } else if (idx.m == 0) {
        double c = 4 * std::sqrt(2.0) * pre * al;
        out.psi = c * (2 * zt * Q(2) - 4 * al * al * Q(1) + Q(0));
        out.dpsi_dz = c * bf * (2.0 * Q(2) - 4 * zt * zt * Q(3) + 8 * al * al * zt * Q(2) - 4 * al * al * Q(0) + Q(-1));
    } else {
        double sg = idx.m > 0 ? 1.0 : -1.0;
        cplx u(v.xi, sg * v.ups);
        double c = -sg * 8 * pre * al;
        out.psi = c * u * Q(2);
        out.dpsi_dz = c * bf * u * (-2 * zt * Q(3) + Q(1));
    }
    return out;
}

} // namespace detail

inline BeamValue beam_value(const AtomLaserSource& src, const Vec3& r, double E, const PhysicalContext& ctx)
{
    src.base.validate();
    BeamValue out{0.0, 0.0, false};
    for (auto& [idx, w] : src.weights) {
        auto b = detail::beam_lm(idx, src.base, r, E, ctx);
        out.psi += w * b.psi;
        out.dpsi_dz += w * b.dpsi_dz;
        out.inside = b.inside;
    }
    return out;
}

inline cplx beam_psi_00(const GaussianSource& s, const Vec3& r, double E, const PhysicalContext& ctx, bool* inside = nullptr)
{
    if (s.idx != MultipoleIndex{0, 0}) throw index_error("beam_psi_00 needs idx = (0,0)");
    s.validate();
    auto b = detail::beam_lm(s.idx, s, r, E, ctx);
    if (inside) *inside = b.inside;
    return b.psi;
}

inline cplx beam_psi_1m(const GaussianSource& s, const Vec3& r, double E, const PhysicalContext& ctx, bool* inside = nullptr)
{
    if (s.idx.l != 1) throw index_error("beam_psi_1m needs l = 1");
    s.validate();
    auto b = detail::beam_lm(s.idx, s, r, E, ctx);
    if (inside) *inside = b.inside;
    return b.psi;
}

inline double beam_density(const AtomLaserSource& src, const Vec3& r, double E, const PhysicalContext& ctx)
{
    return std::norm(beam_value(src, r, E, ctx).psi);
}

inline double beam_jz(const AtomLaserSource& src, const Vec3& r, double E, const PhysicalContext& ctx)
{
    auto b = beam_value(src, r, E, ctx);
    return ctx.hbar / ctx.mass * std::imag(std::conj(b.psi) * b.dpsi_dz);
}

// Total outcoupling currents.
enum class CurrentMode { exact, slicing };

namespace detail {

inline double gaussian_current_lm(MultipoleIndex idx, const GaussianSource& base, double E, const PhysicalContext& ctx,
                                  CurrentMode mode)
{
    if (idx.l > 1) throw index_error("Gaussian multipole currents implemented for l <= 1");
    check_index(idx);
    double b = ctx.beta(), bf = ctx.bf(), h = ctx.hbar;
    double al = bf * base.width, a2 = al * al;
    double eps = ctx.eps(E);
    if (mode == CurrentMode::slicing) {
        // (2 pi / hbar) int |sigma_lm|^2 delta(E + F z)
        double g = 2 * std::sqrt(pi) * base.atoms * h * base.rabi * base.rabi * b / al * std::exp(-eps * eps / (4 * a2));
        if (idx.m != 0 || idx.l == 0) return g;
        return g * eps * eps / (2 * a2);
    }
    double et = eps + 4 * a2 * a2;
    double ll = 2 * log_virtual_strength(base, et, ctx);
    double pre = b * bf * bf * bf / h;
    auto qs = [&](int k) { return qi_scaled(k, et); };
    if (idx.l == 0) {
        auto q1 = qs(1);
        return 8 * pre * q1.m * std::exp(q1.e + ll);
    }
    if (idx.m != 0) {
        auto q2 = qs(2);
        return 32 * pre * a2 * q2.m * std::exp(q2.e + ll);
    }
    ExpReal br = qs(2) + (8 * a2 * a2) * qs(1) - (4 * a2) * qs(0) + 0.5 * qs(-1);
    return 32 * pre * a2 * br.m * std::exp(br.e + ll);
}

} // namespace detail

// J for a weighted l <= 1 source; cross terms with m != m' vanish by symmetry
inline double gaussian_total_current(const AtomLaserSource& src, double E, const PhysicalContext& ctx,
                                     CurrentMode mode = CurrentMode::exact)
{
    src.base.validate();
    double s = 0;
    for (auto& [idx, w] : src.weights) s += std::norm(w) * detail::gaussian_current_lm(idx, src.base, E, ctx, mode);
    return s;
}

inline double vortex_current_1m(const GaussianSource& s, double E, const PhysicalContext& ctx,
                                CurrentMode mode = CurrentMode::exact)
{
    if (s.idx.l != 1) throw index_error("vortex_current_1m needs l = 1");
    return gaussian_total_current(single_source(s), E, ctx, mode);
}

// Detuning (Hz) <-> energy E = h dnu
inline double detuning_energy(double dnu_hz) { return si::h * dnu_hz; }

struct DetuningPoint {
    double detuning_hz;
    double J;
};

inline std::vector<DetuningPoint> gaussian_spectrum(const AtomLaserSource& src, double nu0, double nu1, int n,
                                                    const PhysicalContext& ctx, CurrentMode mode = CurrentMode::exact)
{
    if (!(std::isfinite(nu0) && std::isfinite(nu1)) || n < 1) throw config_error("spectrum needs a finite range and n >= 1");
    std::vector<DetuningPoint> out;
    for (int i = 0; i < n; ++i) {
        double nu = n == 1 ? nu0 : nu0 + (nu1 - nu0) * i / (n - 1);
        out.push_back({nu, gaussian_total_current(src, detuning_energy(nu), ctx, mode)});
    }
    return out;
}

// Far-field density profiles.
enum class BeamMode { virtual_source, asymptotic, exact };

inline constexpr double large_source_alpha = 2.0;

// large-alpha Gaussian envelope times f_11 or f_1perp
inline double asymptotic_density(const AtomLaserSource& src, const Vec3& r, double E, const PhysicalContext& ctx)
{
    if (src.kind != SourceKind::parallel && src.kind != SourceKind::perpendicular)
        throw domain_error("asymptotic density profile is available for the parallel and perpendicular vortex");
    double b = ctx.beta(), bf = ctx.bf(), F = ctx.force;
    double al = bf * src.base.width, a2 = al * al;
    double xi = bf * r[0], up = bf * r[1], ze = bf * r[2], eps = ctx.eps(E);
    if (!(ze > 0)) throw regime_error("asymptotic density needs z > 0");
    double f = src.kind == SourceKind::parallel
                   ? xi * xi + up * up
                   : eps * eps / 4 + std::pow(up - eps * std::sqrt(ze) / (2 * std::sqrt(2.0) * a2), 2);
    double zt = ze + 2 * a2 * a2;
    double hw = ctx.hbar * src.base.rabi;
    return 16 * src.base.atoms * hw * hw * std::pow(b, 5) * F * F * F * a2 * al * f / (std::sqrt(2 * pi * ze) * zt * zt) *
           std::exp(-(eps * eps / (4 * a2) + 2 * a2 * (xi * xi + up * up) / zt));
}

// Gauss-Hermite rule for weight exp(-t^2) (Golub-Welsch)
struct GaussHermite {
    std::vector<double> x, w;

    explicit GaussHermite(int n)
    {
        if (n < 1 || n > 200) throw order_error("Gauss-Hermite order must be in [1, 200]");
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
        for (int i = 1; i < n; ++i) J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
        x.resize(n);
        w.resize(n);
        for (int i = 0; i < n; ++i) {
            x[i] = es.eigenvalues()(i);
            double v = es.eigenvectors()(0, i);
            w[i] = std::sqrt(pi) * v * v;
        }
    }
};

struct ExactBeamRule {
    int lateral = 20;       // Gauss-Hermite nodes per transverse axis
    int axial_panels = 48;  // 15-point Gauss-Legendre panels on |z'| <= 8.5 a
};

// psi(r) = int d^3r' G(r, r') sigma(r'). Transverse: Gauss-Hermite in units of sqrt(2) a.
// Axial: G oscillates with the local momentum sqrt(2 M F z') above the resonance plane,
// which a Hermite rule does not resolve, so z' uses composite Gauss-Legendre.
inline cplx beam_psi_exact(const AtomLaserSource& src, const Vec3& r, double E, const PhysicalContext& ctx,
                           ExactBeamRule rule = {})
{
    src.base.validate();
    if (rule.axial_panels < 1) throw order_error("axial panel count must be >= 1");
    thread_local std::map<int, GaussHermite> cache;
    auto it = cache.find(rule.lateral);
    if (it == cache.end()) it = cache.emplace(rule.lateral, GaussHermite(rule.lateral)).first;
    const GaussHermite& gh = it->second;
    using GL = boost::math::quadrature::gauss<double, 15>;
    double a = src.base.width, s2a = std::sqrt(2.0) * a;
    double amp = std::sqrt(src.base.atoms) * ctx.hbar * src.base.rabi * std::pow(a, -1.5) * std::pow(pi, -0.75) * s2a * s2a;
    std::vector<std::pair<MultipoleIndex, cplx>> ws;
    for (auto& [idx, w] : src.weights) {
        int l = idx.l;
        ws.push_back({idx, w * (l == 0 ? 1.0 : gaussian_norm_l(l, a) * std::pow(-1.0 / (a * a), l))});
    }
    std::vector<double> zn, zw;
    double z0 = -8.5 * a, dz = 17 * a / rule.axial_panels;
    const auto& ab = GL::abscissa();
    const auto& wt = GL::weights();
    for (int p = 0; p < rule.axial_panels; ++p) {
        double c = z0 + (p + 0.5) * dz, hw = dz / 2;
        for (size_t i = 0; i < ab.size(); ++i) {
            double xs[2] = {ab[i], -ab[i]};
            for (int sg = 0; sg < (ab[i] == 0 ? 1 : 2); ++sg) {
                double z = c + hw * xs[sg];
                zn.push_back(z);
                zw.push_back(hw * wt[i] * std::exp(-z * z / (2 * a * a)));
            }
        }
    }
    cplx sum = 0;
    int n = int(gh.x.size());
    for (size_t k = 0; k < zn.size(); ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                Vec3 rp{s2a * gh.x[i], s2a * gh.x[j], zn[k]};
                cplx p = 0;
                for (auto& [idx, c] : ws) p += c * (idx.l == 0 ? cplx(1.0) : klm_eval(idx, rp));
                sum += gh.w[i] * gh.w[j] * zw[k] * p * green_swave(r, rp, E, ctx);
            }
    return amp * sum;
}

inline DetectorGrid farfield_density(const AtomLaserSource& src, const GridSpec& spec, double E, const PhysicalContext& ctx,
                                     BeamMode mode = BeamMode::virtual_source, unsigned threads = 0,
                                     bool* regime_warning = nullptr)
{
    src.base.validate();
    double al = ctx.bf() * src.base.width;
    if (regime_warning) *regime_warning = mode == BeamMode::asymptotic && al < large_source_alpha;
    DetectorGrid g(spec);
    switch (mode) {
    case BeamMode::virtual_source:
        fill_grid(g, [&](double x, double y, double z) { return beam_density(src, {x, y, z}, E, ctx); }, threads);
        break;
    case BeamMode::asymptotic:
        fill_grid(g, [&](double x, double y, double z) { return asymptotic_density(src, {x, y, z}, E, ctx); }, threads);
        break;
    case BeamMode::exact:
        fill_grid(g, [&](double x, double y, double z) { return std::norm(beam_psi_exact(src, {x, y, z}, E, ctx)); }, threads);
        break;
    }
    return g;
}

// Vortex lattices (isotropic trap).
struct VortexLattice {
    std::vector<cplx> positions;  // v_k = x_k + i y_k, m
    double rot = 0;               // Omega_rot, rad/s
    GaussianSource source;        // N, Omega, a; idx unused

    void validate() const
    {
        source.validate();
        if (!std::isfinite(rot)) throw domain_error("rotation frequency must be finite");
        for (auto& v : positions)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) throw domain_error("vortex positions must be finite");
    }
};

inline constexpr int max_lattice_coeffs = 60;
inline constexpr int max_lattice_beam = 40;

// coefficients of prod (u - v_k), lowest order first; roots multiplied in by increasing magnitude
inline std::vector<cplx> poly_from_roots(std::vector<cplx> roots)
{
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    std::vector<cplx> w{1.0};
    for (cplx v : roots) {
        std::vector<cplx> nw(w.size() + 1, 0.0);
        for (size_t k = 0; k < w.size(); ++k) {
            nw[k + 1] += w[k];
            nw[k] -= v * w[k];
        }
        w = std::move(nw);
    }
    return w;
}

inline std::vector<cplx> lattice_coeffs(const VortexLattice& latt)
{
    latt.validate();
    if (int(latt.positions.size()) > max_lattice_coeffs)
        throw order_error("lattice has more than " + std::to_string(max_lattice_coeffs) + " vortices");
    return poly_from_roots(latt.positions);
}

namespace detail {

// log(sqrt(m!) |w_m| a^m) - log sqrt(sum_k k! |w_k|^2 a^2k), and arg w_m, in units of a
struct LatticeWeights {
    std::vector<double> logc;  // -inf where w_m = 0
    std::vector<double> phase;
};

inline LatticeWeights lattice_weights_log(const VortexLattice& latt)
{
    std::vector<cplx> sc;
    for (auto v : latt.positions) sc.push_back(v / latt.source.width);
    if (int(sc.size()) > max_lattice_coeffs) throw order_error("lattice has more than " + std::to_string(max_lattice_coeffs) + " vortices");
    auto w = poly_from_roots(sc);
    int n = int(w.size()) - 1;
    LatticeWeights out;
    double mx = -std::numeric_limits<double>::infinity();
    for (int m = 0; m <= n; ++m) {
        double lc = std::abs(w[m]) == 0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(w[m])) + 0.5 * std::lgamma(m + 1.0);
        out.logc.push_back(lc);
        out.phase.push_back(std::arg(w[m]));
        mx = std::max(mx, lc);
    }
    double s = 0;
    for (double lc : out.logc) s += std::exp(2 * (lc - mx));
    double ln = mx + 0.5 * std::log(s);
    for (double& lc : out.logc) lc -= ln;
    return out;
}

} // namespace detail

// sqrt(m!) w_m a^m / sqrt(sum_k k! |w_k|^2 a^2k): amplitude of sigma_mm
inline std::vector<cplx> lattice_weights(const VortexLattice& latt)
{
    latt.validate();
    auto lw = detail::lattice_weights_log(latt);
    std::vector<cplx> c;
    for (size_t m = 0; m < lw.logc.size(); ++m) c.push_back(std::polar(std::exp(lw.logc[m]), lw.phase[m]));
    return c;
}

// N_n for a_x = a_z = a
inline double lattice_norm(const VortexLattice& latt, double hbar = si::hbar)
{
    latt.validate();
    double a = latt.source.width;
    std::vector<cplx> sc;
    for (auto v : latt.positions) sc.push_back(v / a);
    auto w = poly_from_roots(sc);
    int n = int(w.size()) - 1;
    // sum_k k! |w_k|^2 a^{2k+2} = a^{2n+2} sum_k k! |w~_k|^2
    double mx = -std::numeric_limits<double>::infinity();
    std::vector<double> lt;
    for (int k = 0; k <= n; ++k) {
        double t = std::abs(w[k]) == 0 ? -std::numeric_limits<double>::infinity() : 2 * std::log(std::abs(w[k])) + std::lgamma(k + 1.0);
        lt.push_back(t);
        mx = std::max(mx, t);
    }
    double s = 0;
    for (double t : lt) s += std::exp(t - mx);
    double logsum = mx + std::log(s) + (2 * n + 2) * std::log(a);
    double lg = 0.5 * std::log(latt.source.atoms) + std::log(hbar * latt.source.rabi) - 0.75 * std::log(pi) -
                0.5 * (std::log(a) + logsum);
    return std::exp(lg);
}

// Anisotropic traps are not supported; kept as an explicit entry point.
inline double lattice_norm(const VortexLattice& latt, double ax, double az, double hbar = si::hbar)
{
    if (ax != az) throw domain_error("anisotropic traps (a_x != a_z) are not supported");
    VortexLattice l2 = latt;
    l2.source.width = ax;
    return lattice_norm(l2, hbar);
}

// Source function in the rotating frame.
inline cplx lattice_source_value(const VortexLattice& latt, const Vec3& r, double hbar = si::hbar)
{
    double a = latt.source.width;
    cplx u(r[0], r[1]);
    cplx p = 1.0;
    for (auto v : latt.positions) p *= (u - v) / a;
    double r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    // N_n * a^n * prod((u - v_k)/a)
    return lattice_norm(latt, hbar) * std::pow(a, double(latt.positions.size())) * p * std::exp(-r2 / (2 * a * a));
}

// Lattice beam with the per-m constants (weights, shifted energies, log Lambda) precomputed.
inline constexpr double lattice_drop = 1e-13;

class LatticeBeam {
public:
    LatticeBeam(const VortexLattice& latt, double E, const PhysicalContext& ctx) : ctx_(ctx), E_(E), rot_(latt.rot)
    {
        latt.validate();
        int n = int(latt.positions.size());
        if (n > max_lattice_beam) throw order_error("lattice beam supports at most " + std::to_string(max_lattice_beam) + " vortices");
        auto lw = detail::lattice_weights_log(latt);
        GaussianSource g = latt.source;
        g.idx = {0, 0};
        bf_ = ctx.bf();
        pre_ = -4 * ctx.beta() * bf_ * bf_ * bf_;
        al_ = bf_ * g.width;
        a4_ = std::pow(al_, 4);
        double lmax = -std::numeric_limits<double>::infinity();
        for (double l : lw.logc) lmax = std::max(lmax, l);
        for (int m = 0; m <= n; ++m) {
            // amplitudes under 1e-13 of the largest are round-off left over from the root product
            if (!std::isfinite(lw.logc[m]) || lw.logc[m] < lmax + std::log(lattice_drop)) continue;
            Term t;
            t.m = m;
            t.Em = E + m * ctx.hbar * latt.rot;
            t.eps_t = ctx.eps(t.Em) + 4 * a4_;
            // c_m / sqrt(m!) = w_m a^m / sqrt(sum): the factorials cancel
            t.shift = lw.logc[m] - 0.5 * std::lgamma(m + 1.0) + log_virtual_strength(g, t.eps_t, ctx);
            t.phase = lw.phase[m];
            terms_.push_back(t);
        }
    }

    int order() const { return terms_.empty() ? 0 : terms_.back().m; }

    // c_m e^{-i E_m t/hbar} psi_mm(r; E_m), indexed by m (zero where w_m = 0)
    std::vector<cplx> components(const Vec3& r, double t = 0) const
    {
        std::vector<cplx> out(order() + 1, 0.0);
        cplx u(bf_ * r[0], bf_ * r[1]);
        double au = std::abs(u), lu = std::log(2 * al_ * au), ar = std::arg(u);
        double zt = bf_ * r[2] + 2 * a4_;
        for (auto& tm : terms_) {
            if (tm.m > 0 && au == 0) continue;
            QArgs a = QArgs::cartesian(u.real(), u.imag(), zt, tm.eps_t);
            if (a.rho == 0) throw singularity_error("lattice beam evaluated at the virtual source point");
            QSeq s = q_sequence(a, 0, tm.m + 1);
            cplx Q = detail::q_shifted(s, tm.m + 1, tm.shift + (tm.m ? tm.m * lu : 0.0));
            double ph = tm.phase + tm.m * ar - std::fmod(tm.Em * t / ctx_.hbar, 2 * pi);
            out[tm.m] = pre_ * Q * std::polar(1.0, ph);
        }
        return out;
    }

    cplx operator()(const Vec3& r, double t = 0) const
    {
        cplx s = 0;
        for (auto& v : components(r, t)) s += v;
        return s;
    }

private:
    struct Term {
        int m;
        double Em, eps_t, shift, phase;
    };
    PhysicalContext ctx_;
    double E_, rot_;
    double bf_ = 0, pre_ = 0, al_ = 0, a4_ = 0;
    std::vector<Term> terms_;
};

inline std::vector<cplx> lattice_beam_components(const VortexLattice& latt, const Vec3& r, double t, double E,
                                                 const PhysicalContext& ctx)
{
    return LatticeBeam(latt, E, ctx).components(r, t);
}

inline cplx lattice_beam(const VortexLattice& latt, const Vec3& r, double t, double E, const PhysicalContext& ctx)
{
    return LatticeBeam(latt, E, ctx)(r, t);
}

// J_mm(E_m) = (8/hbar) beta (beta F)^3 (2 alpha)^{2m} Lambda^2 Qi_{m+1}(eps_m)
inline double lattice_component_current(const GaussianSource& g, int m, double Em, const PhysicalContext& ctx)
{
    double b = ctx.beta(), bf = ctx.bf();
    double al = bf * g.width;
    double et = ctx.eps(Em) + 4 * std::pow(al, 4);
    auto q = qi_scaled(m + 1, et);
    double le = q.e + 2 * log_virtual_strength(g, et, ctx) + (m ? 2 * m * std::log(2 * al) : 0.0);
    return 8 * b * bf * bf * bf / ctx.hbar * q.m * std::exp(le);
}

inline double lattice_current(const VortexLattice& latt, double E, const PhysicalContext& ctx)
{
    latt.validate();
    auto lw = detail::lattice_weights_log(latt);
    double s = 0;
    for (int m = 0; m < int(lw.logc.size()); ++m) {
        if (!std::isfinite(lw.logc[m])) continue;
        s += std::exp(2 * lw.logc[m]) * lattice_component_current(latt.source, m, E + m * ctx.hbar * latt.rot, ctx);
    }
    return s;
}

inline std::vector<DetuningPoint> lattice_spectrum(const VortexLattice& latt, double nu0, double nu1, int n,
                                                   const PhysicalContext& ctx)
{
    if (!(std::isfinite(nu0) && std::isfinite(nu1)) || n < 1) throw config_error("spectrum needs a finite range and n >= 1");
    std::vector<DetuningPoint> out;
    for (int i = 0; i < n; ++i) {
        double nu = n == 1 ? nu0 : nu0 + (nu1 - nu0) * i / (n - 1);
        out.push_back({nu, lattice_current(latt, detuning_energy(nu), ctx)});
    }
    return out;
}

inline DetectorGrid lattice_density(const VortexLattice& latt, const GridSpec& spec, double t, double E,
                                    const PhysicalContext& ctx, unsigned threads = 0)
{
    DetectorGrid g(spec);
    LatticeBeam beam(latt, E, ctx);
    fill_grid(g, [&](double x, double y, double z) { return std::norm(beam({x, y, z}, t)); }, threads);
    return g;
}

// Triangular lattice of hexagonal shells around the origin: 1, 7, 19, 37, ... vortices.
inline std::vector<cplx> triangular_lattice(int shells, double spacing)
{
    if (shells < 0) throw config_error("shell count must be >= 0");
    std::vector<cplx> v;
    const cplx e1(1, 0), e2(0.5, std::sqrt(3.0) / 2);
    for (int i = -shells; i <= shells; ++i)
        for (int j = -shells; j <= shells; ++j) {
            int k = -i - j;
            if (std::max({std::abs(i), std::abs(j), std::abs(k)}) <= shells) v.push_back(spacing * (double(i) * e1 + double(j) * e2));
        }
    return v;
}

} // namespace bmw
