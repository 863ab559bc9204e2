#pragma once

#include "qme/linalg.hpp"

namespace qme {

/// Hamiltonian plus the system side of the bath coupling.
struct SystemOperators {
    Matrix hamiltonian;
    Matrix coupling;  // S
};

/// Truncated oscillator: H = diag((n + 1/2) Omega), coupling through position.
SystemOperators build_harmonic(double omega, int levels);

/// Position and momentum in the Fock basis, unit mass: q = (a + a^t)/sqrt(2 Omega),
/// p = i sqrt(Omega/2) (a^t - a).
Matrix position_operator(double omega, int levels);
Matrix momentum_operator(double omega, int levels);

/// Two-level system H = (eps/2) sigma_x with dephasing coupling S = sigma_z.
SystemOperators build_spin_boson(double eps);

/// Transverse-plus-longitudinal field Ising chain, open boundaries, length L,
/// with linearly twisting fields (1-based site index i):
///   h_x(i) = 0.8 J + 0.2 J (i-1)/(L-1),  h_z(i) = 0.7 J - 0.2 J (i-1)/(L-1).
/// Coupling operator is sigma_z on site L/2 (1-based).
SystemOperators build_ising_chain(int length, double J);

/// Kelvin to inverse picoseconds (hbar = k_B = 1 units): T * k_B / hbar.
double kelvin_to_energy(double t_kelvin);
double energy_to_kelvin(double e_inverse_ps);

}  // namespace qme
