#pragma once

#include "ballistic.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace bmw {

inline constexpr const char* version = "1.0.0";

namespace io {

// 17 significant digits, scientific
inline std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& p)
{
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw config_error("cannot open output file " + p.string());
    return f;
}

inline void write_csv(const std::filesystem::path& p, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows)
{
    auto f = open_out(p);
    for (size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << header[i];
    f << "\n";
    for (auto& r : rows) {
        for (size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << fmt17(r[i]);
        f << "\n";
    }
    if (!f) throw config_error("write failed: " + p.string());
}

// x, y, value per pixel, y outer
inline void write_grid_csv(const std::filesystem::path& p, const DetectorGrid& g, const std::string& value_name)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(g.values.size());
    for (int j = 0; j < g.spec.ny; ++j)
        for (int i = 0; i < g.spec.nx; ++i) rows.push_back({g.x(i), g.y(j), g.at(i, j)});
    write_csv(p, {"x_m", "y_m", value_name}, rows);
}

// 16-bit binary PGM normalized to the image maximum (negative values clip to 0); returns the maximum.
// Row 0 of the image is the largest y.
inline double write_pgm16(const std::filesystem::path& p, const DetectorGrid& g)
{
    double mx = 0;
    for (double v : g.values) mx = std::max(mx, v);
    auto f = open_out(p);
    f << "P5\n" << g.spec.nx << " " << g.spec.ny << "\n65535\n";
    std::vector<unsigned char> row(2 * size_t(g.spec.nx));
    for (int j = g.spec.ny - 1; j >= 0; --j) {
        for (int i = 0; i < g.spec.nx; ++i) {
            double v = mx > 0 ? std::clamp(g.at(i, j) / mx, 0.0, 1.0) : 0.0;
            auto q = static_cast<unsigned>(std::lround(v * 65535));
            row[2 * i] = static_cast<unsigned char>(q >> 8);
            row[2 * i + 1] = static_cast<unsigned char>(q & 0xff);
        }
        f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    if (!f) throw config_error("write failed: " + p.string());
    return mx;
}

struct Pgm16 {
    int nx = 0, ny = 0;
    std::vector<unsigned> pix;  // top row first
};

inline Pgm16 read_pgm16(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::string magic;
    int maxv = 0;
    Pgm16 img;
    f >> magic >> img.nx >> img.ny >> maxv;
    f.get();
    if (!f || magic != "P5" || maxv != 65535) throw config_error("not a 16-bit PGM: " + p.string());
    img.pix.resize(size_t(img.nx) * img.ny);
    for (auto& v : img.pix) {
        unsigned char b[2];
        f.read(reinterpret_cast<char*>(b), 2);
        v = (unsigned(b[0]) << 8) | b[1];
    }
    if (!f) throw config_error("truncated PGM: " + p.string());
    return img;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j)
{
    auto f = open_out(p);
    f << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& p)
{
    std::ifstream f(p);
    if (!f) throw config_error("cannot open config " + p.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw config_error("config " + p.string() + ": " + e.what());
    }
}

// CSV of x,y vortex positions in metres; '#' comments and a non-numeric header line are skipped.
inline std::vector<cplx> read_vortex_csv(const std::filesystem::path& p)
{
    std::ifstream f(p);
    if (!f) throw config_error("cannot open vortex file " + p.string());
    std::vector<cplx> out;
    std::string line;
    int ln = 0;
    while (std::getline(f, line)) {
        ++ln;
        auto h = line.find('#');
        if (h != std::string::npos) line.erase(h);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double x, y;
        if (!(ss >> x >> y)) {
            std::istringstream first(line);
            double probe;
            if (ln == 1 && !(first >> probe)) continue;  // header
            throw config_error("vortex file " + p.string() + ": bad line " + std::to_string(ln));
        }
        if (!std::isfinite(x) || !std::isfinite(y)) throw config_error("vortex file: non-finite position at line " + std::to_string(ln));
        out.emplace_back(x, y);
    }
    return out;
}

inline nlohmann::json grid_json(const GridSpec& s)
{
    return {{"z_m", s.z}, {"x0_m", s.x0}, {"x1_m", s.x1}, {"y0_m", s.y0}, {"y1_m", s.y1}, {"nx", s.nx}, {"ny", s.ny}};
}

} // namespace io
} // namespace bmw
