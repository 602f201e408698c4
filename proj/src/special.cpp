#include "harmoniums/special.hpp"

#include <cmath>
#include <limits>

#include "harmoniums/errors.hpp"

namespace harmoniums {

namespace {

// Asymptotic expansion of exp(-x) I_nu(x) sqrt(2 pi x) for large x.
double bessel_i_scaled_asymptotic(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 20; ++k) {
        const double num = mu - (2.0 * k - 1.0) * (2.0 * k - 1.0);
        term *= -num / (8.0 * k * x);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum))
            break;
    }
    return sum;
}

// Power series I_nu(x) = sum_k (x/2)^{2k+nu} / (k! (k+nu)!).
double bessel_i_series(int nu, double x) {
    const double q = 0.25 * x * x;
    double term = std::pow(0.5 * x, nu) / std::tgamma(nu + 1.0);
    double sum = term;
    for (int k = 1; k <= 200; ++k) {
        term *= q / (k * (k + nu));
        sum += term;
        if (term < 1e-17 * sum)
            break;
    }
    return sum;
}

} // namespace

double log_bessel_i0(double x) {
    x = std::abs(x);
    if (x < 20.0)
        return std::log(bessel_i_series(0, x));
    const double s = bessel_i_scaled_asymptotic(0, x);
    return x - 0.5 * std::log(2.0 * M_PI * x) + std::log(s);
}

double bessel_ratio_i1_i0(double x) {
    if (x == 0.0)
        return 0.0;
    if (x < 20.0)
        return bessel_i_series(1, x) / bessel_i_series(0, x);
    return bessel_i_scaled_asymptotic(1, x) / bessel_i_scaled_asymptotic(0, x);
}

double inverse_bessel_ratio(double a) {
    if (a < 0.0 || a >= 1.0)
        throw numeric_error("inverse_bessel_ratio: ratio must lie in [0, 1)");
    if (a == 0.0)
        return 0.0;
    // Standard starting guess for von Mises concentration.
    double r = a * (2.0 - a * a) / (1.0 - a * a);
    if (!(r > 0.0) || r > 500.0)
        r = 500.0;
    double lo = 0.0, hi = 500.0;
    for (int it = 0; it < 100; ++it) {
        const double f = bessel_ratio_i1_i0(r) - a;
        if (f > 0.0)
            hi = r;
        else
            lo = r;
        // A'(r) = 1 - A/r - A^2.
        const double A = f + a;
        const double dA = 1.0 - A / r - A * A;
        double step = (dA > 0.0) ? f / dA : 0.0;
        double next = r - step;
        if (!(next > lo) || !(next < hi))
            next = 0.5 * (lo + hi);
        if (std::abs(next - r) < 1e-13 * (1.0 + r)) {
            r = next;
            break;
        }
        r = next;
    }
    if (bessel_ratio_i1_i0(500.0) < a)
        throw numeric_error("inverse_bessel_ratio: concentration above 500");
    return r;
}

double digamma(double x) {
    if (x <= 0.0 && x == std::floor(x))
        throw numeric_error("digamma: pole");
    double result = 0.0;
    while (x < 8.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // Asymptotic series with Bernoulli coefficients.
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 -
                      inv2 * (1.0 / 120.0 -
                              inv2 * (1.0 / 252.0 -
                                      inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return result;
}

double trigamma(double x) {
    if (x <= 0.0 && x == std::floor(x))
        throw numeric_error("trigamma: pole");
    double result = 0.0;
    while (x < 12.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    result += inv *
              (1.0 + 0.5 * inv +
               inv2 * (1.0 / 6.0 -
                       inv2 * (1.0 / 30.0 -
                               inv2 * (1.0 / 42.0 -
                                       inv2 * (1.0 / 30.0 - inv2 * (5.0 / 66.0))))));
    return result;
}

double inverse_digamma(double y) {
    // Minka's initialization followed by Newton steps.
    double x = (y >= -2.22) ? std::exp(y) + 0.5 : -1.0 / (y - digamma(1.0));
    for (int it = 0; it < 50; ++it) {
        const double f = digamma(x) - y;
        const double step = f / trigamma(x);
        double next = x - step;
        if (next <= 0.0)
            next = 0.5 * x;
        if (std::abs(next - x) < 1e-14 * (1.0 + std::abs(x))) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

double log_factorial(unsigned n) {
    return std::lgamma(static_cast<double>(n) + 1.0);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 over the combined word.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace harmoniums
