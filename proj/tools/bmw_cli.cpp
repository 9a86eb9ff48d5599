#include "bmw/cli.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>

using namespace bmw;
using cli::json;

namespace {

std::string flag_name(std::string key)
{
    std::replace(key.begin(), key.end(), '_', '-');
    return "--" + key;
}

struct Scenario {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> given;
    std::string config;
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Ballistic multipole matter waves: photodetachment and atom-laser scenarios"};
    app.set_version_flag("--version", std::string(bmw::version));
    app.require_subcommand(1);

    std::map<std::string, Scenario> scen;
    for (auto& name : cli::scenarios()) {
        auto& s = scen[name];
        s.app = app.add_subcommand(name);
        s.app->add_option("--config", s.config, "JSON config file (flags override its values)");
        json d0 = cli::scenario_defaults(name, cli::default_figure(name));
        for (auto& key : cli::scenario_keys(name)) {
            std::string desc = d0.contains(key) ? "default " + d0[key].dump() : "figure-specific";
            s.app->add_option(flag_name(key), s.given[key], desc);
        }
    }

    auto* ev = app.add_subcommand("eval", "Evaluate a single function and print name,value lines");
    std::string fn;
    ev->add_option("function", fn, "one of: airy airy_zero airy_integral q qi qi_half green_lm tcoeff ccoeff klm")->required();
    std::map<std::string, double> eargs;
    for (auto& key : cli::eval_keys()) ev->add_option(flag_name(key), eargs[key]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : cli::exit_config;
    }

    try {
        if (ev->parsed()) {
            json a = json::object();
            for (auto& key : cli::eval_keys())
                if (ev->count(flag_name(key))) a[key] = eargs[key];
            std::cout << cli::eval_function(fn, a);
            return cli::exit_ok;
        }
        for (auto& [name, s] : scen) {
            if (!s.app->parsed()) continue;
            json file = json::object();
            if (!s.config.empty()) file = io::read_json(s.config);
            json fig0 = json::object();
            if (s.given.count("figure") && s.app->count("--figure")) fig0["figure"] = s.given["figure"];
            json d = cli::resolve(name, file, fig0);
            json flags = json::object();
            for (auto& [key, text] : s.given) {
                if (!s.app->count(flag_name(key))) continue;
                if (!d.contains(key)) throw config_error("--" + key + " does not apply to figure " + d.value("figure", ""));
                flags[key] = cli::coerce(key, d[key], text);
            }
            json cfg = cli::resolve(name, file, flags);
            json m = cli::run(cfg);
            for (auto& f : m["files"]) std::cout << f.get<std::string>() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (ev->parsed() && cli::exit_code_for(e) == cli::exit_config) std::cerr << ev->help();
        return cli::exit_code_for(e);
    }
    return cli::exit_ok;
}
