#pragma once

#include "atomlaser.hpp"
#include "io.hpp"
#include "semiclassical.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bmw::cli {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_config = 2;
inline constexpr int exit_regime = 3;
inline constexpr int exit_stability = 4;

inline int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const stability_error*>(&e)) return exit_stability;
    if (dynamic_cast<const regime_error*>(&e) || dynamic_cast<const singularity_error*>(&e)) return exit_regime;
    if (dynamic_cast<const config_error*>(&e) || dynamic_cast<const domain_error*>(&e) ||
        dynamic_cast<const index_error*>(&e) || dynamic_cast<const order_error*>(&e) ||
        dynamic_cast<const json::exception*>(&e))
        return exit_config;
    return exit_failure;
}

inline const std::vector<std::string>& scenarios()
{
    static const std::vector<std::string> s{"photodetach-profile", "photodetach-spectrum", "atomlaser-profile",
                                            "atomlaser-spectrum"};
    return s;
}

inline std::string default_figure(const std::string& scenario)
{
    if (scenario == "atomlaser-profile") return "fig4";
    if (scenario == "atomlaser-spectrum") return "fig5";
    return "";
}

// Default parameter sets; the keys double as the accepted config keys and flag names.
inline json scenario_defaults(const std::string& scenario, const std::string& figure = "")
{
    json common = {{"out", "out"}, {"stem", ""}};
    json d;
    if (scenario == "photodetach-profile") {
        d = {{"energy_uev", 60.8}, {"field_vpm", 116.0}, {"z_m", 0.514}, {"window_m", 1.2e-3}, {"grid_n", 512},
             {"polarization", "pi"}, {"mode", "far-field"}, {"lineout_n", 2048}, {"lineout_extent", 1.1}, {"threads", 0}};
    } else if (scenario == "photodetach-spectrum") {
        d = {{"field_vpm", 116.0}, {"emin_uev", -10.0}, {"emax_uev", 100.0}, {"n", 1101}};
    } else if (scenario == "atomlaser-profile") {
        std::string f = figure.empty() ? default_figure(scenario) : figure;
        if (f == "fig4")
            d = {{"figure", "fig4"}, {"vortex", "parallel"}, {"detuning_khz", 0.0}, {"z_m", 1e-3}, {"window_m", 30e-6},
                 {"grid_n", 512}, {"width_m", 2e-6}, {"atoms", 1e6}, {"rabi_hz", 100.0}, {"mode", "virtual"},
                 {"threads", 0}};
        else if (f == "fig7")
            d = {{"figure", "fig7"}, {"detuning_khz", 5.0}, {"z_m", 239e-6}, {"window_m", 120e-6}, {"grid_n", 512},
                 {"width_m", 5e-6}, {"atoms", 1e6}, {"rabi_hz", 100.0}, {"rot_hz", 250.0}, {"spacing_m", 10e-6},
                 {"shells", 3}, {"vortex_file", ""}, {"time_s", 0.0}, {"threads", 0}};
        else
            throw config_error("atomlaser-profile: unknown figure '" + f + "' (fig4, fig7)");
    } else if (scenario == "atomlaser-spectrum") {
        std::string f = figure.empty() ? default_figure(scenario) : figure;
        if (f == "fig5")
            d = {{"figure", "fig5"}, {"vortex", "both"}, {"mode", "exact"}, {"numin_khz", -10.0}, {"numax_khz", 10.0},
                 {"n", 401}, {"width_m", 2e-6}, {"atoms", 1e6}, {"rabi_hz", 100.0}};
        else if (f == "fig6")
            d = {{"figure", "fig6"}, {"numin_khz", -40.0}, {"numax_khz", 30.0}, {"n", 351}, {"width_m", 5e-6},
                 {"atoms", 1e6}, {"rabi_hz", 100.0}, {"rot_hz", 250.0}, {"spacing_m", 10e-6}, {"shells", 3},
                 {"vortex_file", ""}};
        else
            throw config_error("atomlaser-spectrum: unknown figure '" + f + "' (fig5, fig6)");
    } else {
        throw config_error("unknown scenario '" + scenario + "'");
    }
    d.update(common);
    return d;
}

// Every key any figure of the scenario accepts (used to register flags).
inline std::vector<std::string> scenario_keys(const std::string& scenario)
{
    std::vector<std::string> figs{""};
    if (scenario == "atomlaser-profile") figs = {"fig4", "fig7"};
    if (scenario == "atomlaser-spectrum") figs = {"fig5", "fig6"};
    std::vector<std::string> keys;
    for (auto& f : figs) {
        json d = scenario_defaults(scenario, f);
        for (auto& [k, v] : d.items())
            if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    return keys;
}

// String from the command line, converted to the type of the default.
inline json coerce(const std::string& key, const json& def, const std::string& text)
{
    if (def.is_string()) return text;
    size_t pos = 0;
    double v;
    try {
        v = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw config_error("--" + key + ": not a number: '" + text + "'");
    }
    if (pos != text.size()) throw config_error("--" + key + ": trailing characters in '" + text + "'");
    if (def.is_number_integer()) {
        if (v != std::floor(v) || std::abs(v) > 1e9) throw config_error("--" + key + ": expected an integer, got '" + text + "'");
        return static_cast<long long>(v);
    }
    return v;
}

inline void merge_layer(json& cfg, const json& layer, const std::string& what)
{
    if (!layer.is_object()) throw config_error(what + " must be a JSON object");
    for (auto& [k, v] : layer.items()) {
        if (k == "scenario") continue;
        if (!cfg.contains(k)) throw config_error(what + ": unknown key '" + k + "'");
        const json& d = cfg[k];
        bool ok = d.is_string() ? v.is_string() : d.is_number_integer() ? v.is_number_integer() : v.is_number();
        if (!ok) throw config_error(what + ": key '" + k + "' has the wrong type");
        cfg[k] = v;
    }
}

// defaults < config file < command-line flags
inline json resolve(const std::string& scenario, const json& file, const json& flags)
{
    std::string fig;
    if (flags.contains("figure")) fig = flags["figure"].get<std::string>();
    else if (file.contains("figure") && file["figure"].is_string()) fig = file["figure"].get<std::string>();
    json cfg = scenario_defaults(scenario, fig);
    merge_layer(cfg, file, "config");
    merge_layer(cfg, flags, "command line");
    cfg["scenario"] = scenario;
    return cfg;
}

inline double num(const json& c, const char* k) { return c.at(k).get<double>(); }
inline long long integer(const json& c, const char* k) { return c.at(k).get<long long>(); }
inline std::string str(const json& c, const char* k) { return c.at(k).get<std::string>(); }

inline double positive(const json& c, const char* k)
{
    double v = num(c, k);
    if (!(v > 0) || !std::isfinite(v)) throw config_error(std::string(k) + " must be > 0 (got " + io::fmt17(v) + ")");
    return v;
}

inline double finite(const json& c, const char* k)
{
    double v = num(c, k);
    if (!std::isfinite(v)) throw config_error(std::string(k) + " must be finite");
    return v;
}

inline int grid_n(const json& c)
{
    long long n = integer(c, "grid_n");
    if (n < 1 || n > 4096) throw config_error("grid_n must be in [1, 4096] (got " + std::to_string(n) + ")");
    return int(n);
}

inline int count_n(const json& c, const char* k, long long lo = 1, long long hi = 10000000)
{
    long long n = integer(c, k);
    if (n < lo || n > hi)
        throw config_error(std::string(k) + " must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return int(n);
}

inline unsigned threads(const json& c)
{
    long long t = integer(c, "threads");
    if (t < 0 || t > 1024) throw config_error("threads must be in [0, 1024]");
    return unsigned(t);
}

inline fs::path out_path(const json& c, const std::string& stem, const std::string& suffix)
{
    return fs::path(str(c, "out")) / (stem + suffix);
}

inline std::string stem_or(const json& c, const std::string& fallback)
{
    std::string s = str(c, "stem");
    return s.empty() ? fallback : s;
}

inline json base_meta(const json& cfg)
{
    return {{"program", "bmw"}, {"version", version}, {"scenario", cfg["scenario"]}, {"config", cfg}};
}

// Rethrow a library error with the scenario parameters that selected it.
template <class F>
auto with_context(const std::string& ctxt, F&& f)
{
    try {
        return f();
    } catch (const regime_error& e) {
        throw regime_error(ctxt + ": " + e.what());
    } catch (const stability_error& e) {
        throw stability_error(ctxt + ": " + e.what());
    }
}

// Photodetachment

// semiclassical two-path profile of the p-wave superposition (zero outside the classical disc)
inline double photodetach_semiclassical(Polarization p, double x, double y, double z, double E, const PhysicalContext& ctx)
{
    if (!(E > 0)) throw regime_error("semiclassical mode needs energy_uev > 0");
    ScreenPoint sp{std::hypot(x, y), std::atan2(y, x), z, E};
    if (!(sp.R < classical_radius(sp, ctx))) return 0.0;
    auto src = polarization_to_source(p, 1.0, E);
    double amp = std::sqrt(wigner_current({1, 0}, E, ctx.mass, ctx.hbar));
    auto A = [&](double th, double ph) {
        Vec3 d{std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th)};
        cplx s = 0;
        for (auto& [idx, lam] : src.amplitudes) s += lam * ylm(idx, d);
        return amp * s;
    };
    return semiclassical_profile(A, sp, ctx);
}

inline std::function<double(double, double, double)> photodetach_pixel(Polarization p, const std::string& mode, double E,
                                                                      const PhysicalContext& ctx)
{
    if (mode == "far-field")
        return [=](double x, double y, double z) { return photodetachment_jz_far(p, x, y, z, E, ctx); };
    if (mode == "exact") {
        auto src = polarization_to_source(p, 1.0, E);
        return [=](double x, double y, double z) { return current_density(src, {x, y, z}, ctx)[2]; };
    }
    if (mode == "semiclassical")
        return [=](double x, double y, double z) { return photodetach_semiclassical(p, x, y, z, E, ctx); };
    throw config_error("photodetach-profile: unknown mode '" + mode + "' (far-field, exact, semiclassical)");
}

inline int zeros_in(double lo, bool prime)
{
    int n = 0;
    while ((prime ? airy_prime_zero(n + 1) : airy_zero(n + 1)) > lo) ++n;
    return n;
}

inline json run_photodetach_profile(const json& cfg)
{
    double Euev = finite(cfg, "energy_uev"), field = positive(cfg, "field_vpm"), z = positive(cfg, "z_m");
    double win = positive(cfg, "window_m"), ext = positive(cfg, "lineout_extent");
    int n = grid_n(cfg), nl = count_n(cfg, "lineout_n", 2, 1000000);
    Polarization pol = parse_polarization(str(cfg, "polarization"));
    std::string mode = str(cfg, "mode");
    auto ctx = PhysicalContext::electron_in_field(field);
    double E = Euev * si::ueV;
    auto pix = photodetach_pixel(pol, mode, E, ctx);

    std::string ctxt = "photodetach-profile (energy_uev=" + io::fmt17(Euev) + ", field_vpm=" + io::fmt17(field) +
                       ", z_m=" + io::fmt17(z) + ", mode=" + mode + ")";
    GridSpec spec = GridSpec::centered(z, win, n);
    DetectorGrid g(spec);
    with_context(ctxt, [&] { fill_grid(g, pix, threads(cfg)); return 0; });

    double rcl = E > 0 ? std::sqrt(4 * E * z / ctx.force) : 0.0;
    double half = rcl > 0 ? ext * rcl : ext * win / 2;
    std::vector<std::vector<double>> line;
    QArgs c = QArgs::cartesian(0, 0, ctx.bf() * z, ctx.eps(E));
    with_context(ctxt, [&] {
        for (int i = 0; i < nl; ++i) {
            double x = -half + 2 * half * i / (nl - 1);
            QArgs a = QArgs::cartesian(ctx.bf() * x, 0, ctx.bf() * z, ctx.eps(E));
            line.push_back({x, a.alpha_minus(), pix(x, 0, z)});
        }
        return 0;
    });

    std::string stem = stem_or(cfg, std::string("photodetach_") + polarization_name(pol));
    auto csv = out_path(cfg, stem, ".csv"), pgm = out_path(cfg, stem, ".pgm"), lin = out_path(cfg, stem, "_lineout.csv"),
         meta = out_path(cfg, stem, ".json");
    io::write_grid_csv(csv, g, "jz_per_m2_s");
    double mx = io::write_pgm16(pgm, g);
    io::write_csv(lin, {"x_m", "alpha_minus", "jz_per_m2_s"}, line);

    json m = base_meta(cfg);
    m["derived"] = {{"beta_per_J", ctx.beta()},
                    {"beta_F_per_m", ctx.bf()},
                    {"eps", ctx.eps(E)},
                    {"zeta", ctx.bf() * z},
                    {"alpha_minus_center", c.alpha_minus()},
                    {"alpha_plus_center", c.alpha_plus()},
                    {"classical_radius_m", rcl},
                    {"ai_zeros_inside", c.alpha_minus() < 0 ? zeros_in(c.alpha_minus(), false) : 0},
                    {"aip_zeros_inside", c.alpha_minus() < 0 ? zeros_in(c.alpha_minus(), true) : 0}};
    m["grid"] = io::grid_json(spec);
    m["image_max"] = mx;
    m["units"] = "current density per unit source strength, 1/(m^2 s)";
    m["files"] = {csv.string(), pgm.string(), lin.string()};
    io::write_json(meta, m);
    m["files"].push_back(meta.string());
    return m;
}

inline json run_photodetach_spectrum(const json& cfg)
{
    double field = positive(cfg, "field_vpm"), e0 = finite(cfg, "emin_uev"), e1 = finite(cfg, "emax_uev");
    int n = count_n(cfg, "n");
    auto ctx = PhysicalContext::electron_in_field(field);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) {
        double eu = n == 1 ? e0 : e0 + (e1 - e0) * i / (n - 1), E = eu * si::ueV;
        double j10 = total_current_matrix({1, 0}, {1, 0}, E, ctx), j11 = total_current_matrix({1, 1}, {1, 1}, E, ctx);
        rows.push_back({eu, ctx.eps(E), j10, j11, 0.5 * (j10 + j11)});
    }
    std::string stem = stem_or(cfg, "photodetach_spectrum");
    auto csv = out_path(cfg, stem, ".csv"), meta = out_path(cfg, stem, ".json");
    io::write_csv(csv, {"E_uev", "eps", "J_10", "J_11", "J_avg"}, rows);
    json m = base_meta(cfg);
    std::vector<double> st;
    for (double E : staircase_energies(1, 3, ctx)) st.push_back(E / si::ueV);
    m["derived"] = {{"beta_per_J", ctx.beta()}, {"beta_F_per_m", ctx.bf()}, {"staircase_energies_uev", st}};
    m["units"] = "total current per unit source strength, 1/s";
    m["files"] = {csv.string()};
    io::write_json(meta, m);
    m["files"].push_back(meta.string());
    return m;
}

// Atom laser

inline GaussianSource gaussian_from(const json& cfg, MultipoleIndex idx)
{
    GaussianSource g;
    g.atoms = positive(cfg, "atoms");
    g.rabi = 2 * pi * positive(cfg, "rabi_hz");
    g.width = positive(cfg, "width_m");
    g.idx = idx;
    return g;
}

inline AtomLaserSource vortex_source(const std::string& v, const json& cfg)
{
    if (v == "parallel") return single_source(gaussian_from(cfg, {1, 1}));
    if (v == "perpendicular") return perp_vortex_source(gaussian_from(cfg, {1, 1}));
    if (v == "ground") return single_source(gaussian_from(cfg, {0, 0}));
    throw config_error("unknown vortex '" + v + "' (parallel, perpendicular, ground)");
}

inline VortexLattice lattice_from(const json& cfg)
{
    VortexLattice L;
    L.source = gaussian_from(cfg, {0, 0});
    L.rot = 2 * pi * finite(cfg, "rot_hz");
    std::string vf = str(cfg, "vortex_file");
    if (!vf.empty()) L.positions = io::read_vortex_csv(vf);
    else L.positions = triangular_lattice(count_n(cfg, "shells", 0, 5), positive(cfg, "spacing_m"));
    L.validate();
    return L;
}

inline BeamMode beam_mode(const std::string& s)
{
    if (s == "virtual") return BeamMode::virtual_source;
    if (s == "asymptotic") return BeamMode::asymptotic;
    if (s == "exact") return BeamMode::exact;
    throw config_error("unknown mode '" + s + "' (virtual, asymptotic, exact)");
}

inline json run_atomlaser_profile(const json& cfg)
{
    auto ctx = rb87_gravity();
    std::string fig = str(cfg, "figure");
    double nu = finite(cfg, "detuning_khz") * 1e3, z = positive(cfg, "z_m"), win = positive(cfg, "window_m");
    int n = grid_n(cfg);
    double E = detuning_energy(nu);
    GridSpec spec = GridSpec::centered(z, win, n);
    std::string ctxt = "atomlaser-profile " + fig + " (detuning_khz=" + io::fmt17(nu / 1e3) + ", z_m=" + io::fmt17(z) + ")";
    json m = base_meta(cfg);
    std::string stem;
    DetectorGrid g(spec);
    if (fig == "fig4") {
        std::string v = str(cfg, "vortex");
        auto src = vortex_source(v, cfg);
        bool warn = false;
        g = with_context(ctxt, [&] { return farfield_density(src, spec, E, ctx, beam_mode(str(cfg, "mode")), threads(cfg), &warn); });
        auto sv = scaled_vars(src.base.width, {0, 0, z}, E, ctx);
        m["derived"] = {{"alpha", sv.alpha},
                        {"eps", ctx.eps(E)},
                        {"eps_shifted", sv.eps_t},
                        {"zeta_shifted", sv.zeta_t},
                        {"log_virtual_strength", log_virtual_strength(src.base, sv.eps_t, ctx)},
                        {"crossover_z_m", 2 * std::pow(sv.alpha, 4) / ctx.bf()}};
        m["regime_warning"] = warn;
        stem = stem_or(cfg, "atomlaser_fig4_" + v);
    } else {
        auto L = lattice_from(cfg);
        g = with_context(ctxt, [&] { return lattice_density(L, spec, finite(cfg, "time_s"), E, ctx, threads(cfg)); });
        auto w = lattice_weights(L);
        std::vector<double> w2;
        for (auto c : w) w2.push_back(std::norm(c));
        m["derived"] = {{"alpha", ctx.bf() * L.source.width}, {"vortices", L.positions.size()}, {"component_weights", w2}};
        stem = stem_or(cfg, "atomlaser_fig7");
    }
    for (auto& v : g.values) v *= 1e-18;  // atoms per cubic micrometre
    auto csv = out_path(cfg, stem, ".csv"), pgm = out_path(cfg, stem, ".pgm"), meta = out_path(cfg, stem, ".json");
    io::write_grid_csv(csv, g, "density_per_um3");
    m["image_max"] = io::write_pgm16(pgm, g);
    m["grid"] = io::grid_json(spec);
    m["units"] = "atoms per cubic micrometre";
    m["files"] = {csv.string(), pgm.string()};
    io::write_json(meta, m);
    m["files"].push_back(meta.string());
    return m;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y)
{
    double s = 0;
    for (size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return s;
}

inline json run_atomlaser_spectrum(const json& cfg)
{
    auto ctx = rb87_gravity();
    std::string fig = str(cfg, "figure");
    double nu0 = finite(cfg, "numin_khz") * 1e3, nu1 = finite(cfg, "numax_khz") * 1e3;
    int n = count_n(cfg, "n", 2);
    double atoms = positive(cfg, "atoms"), hw = si::hbar * 2 * pi * positive(cfg, "rabi_hz");
    json m = base_meta(cfg);
    std::vector<std::string> header{"detuning_hz"};
    std::vector<std::vector<double>> cols;
    std::vector<double> nus;
    for (int i = 0; i < n; ++i) nus.push_back(nu0 + (nu1 - nu0) * i / (n - 1));
    std::string stem;
    if (fig == "fig5") {
        std::string v = str(cfg, "vortex"), mode = str(cfg, "mode");
        CurrentMode cm = mode == "exact" ? CurrentMode::exact : mode == "slicing" ? CurrentMode::slicing
                         : throw config_error("unknown mode '" + mode + "' (exact, slicing)");
        std::vector<std::string> kinds = v == "both" ? std::vector<std::string>{"parallel", "perpendicular"}
                                                     : std::vector<std::string>{v};
        for (auto& k : kinds) {
            auto src = vortex_source(k, cfg);
            std::vector<double> J;
            for (double nu : nus) J.push_back(gaussian_total_current(src, detuning_energy(nu), ctx, cm));
            header.push_back("J_" + k);
            cols.push_back(J);
        }
        stem = stem_or(cfg, "atomlaser_fig5");
    } else {
        auto L = lattice_from(cfg);
        std::vector<double> J;
        for (double nu : nus) J.push_back(lattice_current(L, detuning_energy(nu), ctx));
        header.push_back("J_lattice");
        cols.push_back(J);
        stem = stem_or(cfg, "atomlaser_fig6");
    }
    size_t nc = cols.size();
    for (size_t c = 0; c < nc; ++c) {
        header.push_back(header[c + 1] + "_per_atom");
        std::vector<double> pa;
        for (double j : cols[c]) pa.push_back(j / atoms);
        cols.push_back(pa);
    }
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < n; ++i) {
        std::vector<double> r{nus[i]};
        for (auto& c : cols) r.push_back(c[i]);
        rows.push_back(r);
    }
    // integral of J dE over the window against 2 pi N (hbar Omega)^2 / hbar
    std::vector<double> Es;
    for (double nu : nus) Es.push_back(detuning_energy(nu));
    json sr = json::object();
    for (size_t c = 0; c < nc; ++c) sr[header[c + 1]] = trapezoid(Es, cols[c]) / (2 * pi * atoms * hw * hw / si::hbar);
    m["derived"] = {{"sum_rule_ratio", sr}};
    auto csv = out_path(cfg, stem, ".csv"), meta = out_path(cfg, stem, ".json");
    io::write_csv(csv, header, rows);
    m["units"] = "total outcoupling rate, atoms/s";
    m["files"] = {csv.string()};
    io::write_json(meta, m);
    m["files"].push_back(meta.string());
    return m;
}

inline json run(const json& cfg)
{
    std::string s = str(cfg, "scenario");
    if (s == "photodetach-profile") return run_photodetach_profile(cfg);
    if (s == "photodetach-spectrum") return run_photodetach_spectrum(cfg);
    if (s == "atomlaser-profile") return run_atomlaser_profile(cfg);
    if (s == "atomlaser-spectrum") return run_atomlaser_spectrum(cfg);
    throw config_error("unknown scenario '" + s + "'");
}

// eval: direct function access

inline const std::vector<std::string>& eval_functions()
{
    static const std::vector<std::string> f{"airy", "airy_zero", "airy_integral", "q", "qi", "qi_half",
                                            "green_lm", "tcoeff", "ccoeff", "klm"};
    return f;
}

inline const std::vector<std::string>& eval_keys()
{
    static const std::vector<std::string> k{"x", "y", "z", "n", "k", "rho", "zeta", "eps", "nu", "j", "l", "m",
                                            "lam", "mu", "energy_uev", "field_vpm"};
    return k;
}

inline std::string eval_function(const std::string& fn, const json& args)
{
    auto need = [&](const char* k) {
        if (!args.contains(k)) throw config_error("eval " + fn + " needs --" + std::string(k));
        return args[k].get<double>();
    };
    auto need_int = [&](const char* k) {
        double v = need(k);
        if (v != std::floor(v)) throw config_error("eval " + fn + ": --" + std::string(k) + " must be an integer");
        return int(v);
    };
    std::vector<std::pair<std::string, double>> out;
    if (fn == "airy") {
        auto v = airy(need("x"));
        out = {{"ai", v.ai}, {"aip", v.aip}, {"bi", v.bi}, {"bip", v.bip}};
    } else if (fn == "airy_zero") {
        int n = need_int("n");
        if (n < 1 || n > 100) throw config_error("eval airy_zero: --n must be in [1, 100]");
        out = {{"ai_zero", airy_zero(n)}, {"aip_zero", airy_prime_zero(n)}};
    } else if (fn == "airy_integral") {
        out = {{"value", airy_integral(need("x"))}};
    } else if (fn == "q") {
        int k = need_int("k");
        double rho = need("rho"), zeta = need("zeta"), eps = need("eps");
        bool fl = false;
        cplx v = q(k, QArgs(rho, zeta, eps), &fl);
        out = {{"re", v.real()}, {"im", v.imag()}, {"flagged", fl ? 1.0 : 0.0}};
    } else if (fn == "qi") {
        out = {{"value", qi(need_int("k"), need("eps"))}};
    } else if (fn == "qi_half") {
        out = {{"value", qi_half(need("nu"), need("eps"))}};
    } else if (fn == "green_lm") {
        auto ctx = PhysicalContext::electron_in_field(args.contains("field_vpm") ? args["field_vpm"].get<double>() : 116.0);
        double E = (args.contains("energy_uev") ? args["energy_uev"].get<double>() : 60.8) * si::ueV;
        cplx g = green_lm({need_int("l"), need_int("m")}, {need("x"), need("y"), need("z")}, E, ctx);
        out = {{"re", g.real()}, {"im", g.imag()}};
    } else if (fn == "tcoeff") {
        int j = need_int("j"), l = need_int("l"), m = need_int("m");
        check_index({l, m});
        if (j < std::abs(m) || j > l) throw index_error("tcoeff needs |m| <= j <= l");
        out = {{"value", translation_coeff_t(j, l, m)}};
    } else if (fn == "ccoeff") {
        out = {{"value", translation_coeff_c(need_int("l"), need_int("m"), need_int("lam"), need_int("mu"))}};
    } else if (fn == "klm") {
        cplx v = klm_eval({need_int("l"), need_int("m")}, Vec3{need("x"), need("y"), need("z")});
        out = {{"re", v.real()}, {"im", v.imag()}};
    } else {
        throw config_error("unknown eval function '" + fn + "'");
    }
    std::string s = "function," + fn + "\n";
    for (auto& [k, v] : args.items()) s += k + "," + io::fmt17(v.get<double>()) + "\n";
    for (auto& [k, v] : out) s += k + "," + io::fmt17(v) + "\n";
    return s;
}

} // namespace bmw::cli
