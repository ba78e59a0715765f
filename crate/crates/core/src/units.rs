//! Physical constants and unit conventions.
//!
//! Energies are eV throughout. Wave vectors are stored in units of 2π/a and
//! only converted to Å⁻¹ where a length scale is physically required
//! (effective masses and bond phases).

use std::f64::consts::PI;

/// ħ²/m₀ in eV·Å², so that m*/m₀ = `HBAR2_OVER_M0 / (d²E/dk²)` with k in Å⁻¹.
pub const HBAR2_OVER_M0: f64 = 7.61996;

/// hc in eV·μm, for converting a gap to a cutoff wavelength.
pub const HC_EV_UM: f64 = 1.23984;

/// Read-only bundle of the constants above, for callers that want them as data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar2_over_m0: f64,
    pub hc: f64,
}

impl PhysicalConstants {
    pub const VALUES: PhysicalConstants = PhysicalConstants {
        hbar2_over_m0: HBAR2_OVER_M0,
        hc: HC_EV_UM,
    };
}

/// Converts a reduced wave-vector component (units of 2π/a) to Å⁻¹.
#[inline]
pub fn reduced_to_inverse_angstrom(k: f64, lattice_constant: f64) -> f64 {
    k * 2.0 * PI / lattice_constant
}
