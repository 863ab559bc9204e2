#pragma once

#include <complex>

namespace qme {

/// Digamma function for complex argument with Re(z) not a non-positive
/// integer. Recurrence pushes the argument right of Re(z) = 10, then the
/// standard asymptotic series applies; accuracy ~1e-14 on the domain used
/// here (arguments 1 + x with Re(x) >= 0 or small negative).
std::complex<double> digamma(std::complex<double> z);

/// Trigamma (derivative of digamma), same domain and scheme.
std::complex<double> trigamma(std::complex<double> z);

}  // namespace qme
