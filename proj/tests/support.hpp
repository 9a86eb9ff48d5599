#pragma once

#include <complex>
#include <cmath>
#include <random>
#include <vector>

namespace tsupport {

inline std::mt19937_64& rng()
{
    static std::mt19937_64 g(20260419);
    return g;
}

inline double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng()); }

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
inline double rel(std::complex<double> a, std::complex<double> b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

inline std::vector<double> linspace(double a, double b, int n)
{
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

// count of interior strict local minima
inline int local_minima(const std::vector<double>& y, size_t from = 1)
{
    int c = 0;
    for (size_t i = std::max<size_t>(from, 1); i + 1 < y.size(); ++i)
        if (y[i] < y[i - 1] && y[i] <= y[i + 1]) ++c;
    return c;
}

} // namespace tsupport
