#pragma once
// Arbitrary-precision Maclaurin evaluation of Ai, Ai', Bi, Bi' (test-only ground truth).

#include <boost/multiprecision/mpfr.hpp>

#include <cmath>

namespace oracle {

struct AiryMP {
    double ai, aip, bi, bip;
};

inline AiryMP airy_mp(double xd)
{
    using boost::multiprecision::mpfr_float;
    double ax = std::abs(xd);
    unsigned digits = 40 + unsigned(2.0 * (2.0 / 3.0) * ax * std::sqrt(ax) / std::log(10.0));
    mpfr_float::default_precision(digits);
    mpfr_float x = xd, x3 = x * x * x;
    mpfr_float three = 3;
    mpfr_float c1 = 1 / (pow(three, mpfr_float(2) / 3) * tgamma(mpfr_float(2) / 3));
    mpfr_float c2 = 1 / (pow(three, mpfr_float(1) / 3) * tgamma(mpfr_float(1) / 3));
    mpfr_float eps = pow(mpfr_float(10), -mpfr_float(digits));

    // f = sum t_k, g = sum s_k ; derivatives carried alongside
    mpfr_float t = 1, s = x, f = 1, g = x, fp = 0, gp = 1;
    mpfr_float tp = 0, sp = 1;  // d/dx of current terms
    for (int k = 0; k < 100000; ++k) {
        mpfr_float a = mpfr_float((3 * k + 2) * (3 * k + 3));
        mpfr_float b = mpfr_float((3 * k + 3) * (3 * k + 4));
        mpfr_float tn = t * x3 / a;
        mpfr_float sn = s * x3 / b;
        // derivative of x^{3k+3}/... term: (3k+3) x^{3k+2}
        mpfr_float x2 = x * x;
        mpfr_float tpn = t * x2 * (3 * k + 3) / a;
        mpfr_float spn = s * x2 * (3 * k + 4) / b;
        f += tn;
        g += sn;
        fp += tpn;
        gp += spn;
        t = tn;
        s = sn;
        if (k > 4 && k > ax * std::sqrt(ax) &&
            abs(tn) + abs(sn) + abs(tpn) + abs(spn) < eps * (abs(f) + abs(g) + 1e-300)) break;
    }
    mpfr_float sq3 = sqrt(three);
    AiryMP r;
    r.ai = double(mpfr_float(c1 * f - c2 * g));
    r.aip = double(mpfr_float(c1 * fp - c2 * gp));
    r.bi = double(mpfr_float(sq3 * (c1 * f + c2 * g)));
    r.bip = double(mpfr_float(sq3 * (c1 * fp + c2 * gp)));
    return r;
}

} // namespace oracle
