#pragma once

#include <cmath>

namespace holespin {

/// CODATA values in SI, plus the eV-based derived quantities used by the solvers.
struct PhysicalConstants {
    static constexpr double hbar = 1.054571817e-34;               // J s
    static constexpr double electron_mass_m0 = 9.1093837015e-31;  // kg
    static constexpr double elementary_charge = 1.602176634e-19;  // C
    static constexpr double bohr_magneton_muB = 5.7883818060e-5;  // eV/T
    static constexpr double boltzmann_kB = 8.617333262e-5;        // eV/K
    static constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
    static constexpr double planck_h_ev = 4.135667696e-15;        // eV s
};

namespace units {

/// hbar^2 / (2 m0) in eV nm^2.
inline const double hbar2_2m0 = PhysicalConstants::hbar * PhysicalConstants::hbar /
                                (2.0 * PhysicalConstants::electron_mass_m0) /
                                PhysicalConstants::elementary_charge * 1e18;

/// e / hbar in 1/(T nm^2): turns A [T nm] into a wave-vector shift [1/nm].
inline const double e_over_hbar = PhysicalConstants::elementary_charge / PhysicalConstants::hbar * 1e-18;

/// e / eps0 in V nm: a density in e/nm^3 times this gives the Laplacian in V/nm^2.
inline const double e_over_eps0 = PhysicalConstants::elementary_charge /
                                  PhysicalConstants::vacuum_permittivity * 1e9;

/// 1 cm^-3 expressed in nm^-3.
inline constexpr double per_cm3 = 1e-21;

/// Charge density e/nm^3 in C/m^3.
inline constexpr double e_per_nm3_to_c_per_m3 = PhysicalConstants::elementary_charge * 1e27;

inline constexpr double pi = 3.14159265358979323846;

}  // namespace units

/// Relative consistency of muB with hbar e / (2 m0).
inline double bohr_magneton_consistency() {
    const double mu = PhysicalConstants::hbar * PhysicalConstants::elementary_charge /
                      (2.0 * PhysicalConstants::electron_mass_m0) / PhysicalConstants::elementary_charge;
    return std::abs(mu - PhysicalConstants::bohr_magneton_muB) / PhysicalConstants::bohr_magneton_muB;
}

}  // namespace holespin
