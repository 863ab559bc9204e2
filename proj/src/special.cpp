#include "qme/special.hpp"

#include <array>
#include <cmath>

namespace qme {

namespace {
// B_{2n}/(2n) for the digamma asymptotic series.
constexpr std::array<double, 7> kDigammaCoeff = {
    1.0 / 12.0,   -1.0 / 120.0,   1.0 / 252.0,  -1.0 / 240.0,
    1.0 / 132.0,  -691.0 / 32760.0, 1.0 / 12.0,
};
// B_{2n} for the trigamma asymptotic series.
constexpr std::array<double, 7> kTrigammaCoeff = {
    1.0 / 6.0,   -1.0 / 30.0,   1.0 / 42.0,  -1.0 / 30.0,
    5.0 / 66.0,  -691.0 / 2730.0, 7.0 / 6.0,
};
constexpr double kAsymptoticEdge = 10.0;
}  // namespace

std::complex<double> digamma(std::complex<double> z) {
    std::complex<double> acc = 0.0;
    while (z.real() < kAsymptoticEdge) {
        acc -= 1.0 / z;
        z += 1.0;
    }
    const std::complex<double> inv = 1.0 / z;
    const std::complex<double> inv2 = inv * inv;
    std::complex<double> series = 0.0;
    std::complex<double> p = inv2;
    for (double c : kDigammaCoeff) {
        series += c * p;
        p *= inv2;
    }
    return acc + std::log(z) - 0.5 * inv - series;
}

std::complex<double> trigamma(std::complex<double> z) {
    std::complex<double> acc = 0.0;
    while (z.real() < kAsymptoticEdge) {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    const std::complex<double> inv = 1.0 / z;
    const std::complex<double> inv2 = inv * inv;
    std::complex<double> series = 0.0;
    std::complex<double> p = inv * inv2;
    for (double c : kTrigammaCoeff) {
        series += c * p;
        p *= inv2;
    }
    return acc + inv + 0.5 * inv2 + series;
}

}  // namespace qme
