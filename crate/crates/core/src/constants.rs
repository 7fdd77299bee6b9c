//! Physical constants (SI, CODATA 2018).

/// Planck constant, J·s (exact).
pub const PLANCK: f64 = 6.62607015e-34;

/// Reduced Planck constant ħ = h/2π, J·s.
pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);

/// Boltzmann constant, J/K (exact).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Unified atomic mass unit, kg.
pub const AMU: f64 = 1.66053906660e-27;

/// Elementary charge, C (exact).
pub const ELEMENTARY_CHARGE: f64 = 1.602176634e-19;

/// ħ expressed in eV·s.
pub const HBAR_EV_S: f64 = HBAR / ELEMENTARY_CHARGE;

/// Molar mass of argon in atomic mass units.
pub const ARGON_MASS_AMU: f64 = 39.948;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hbar_in_ev_s() {
        // ħ = 6.582119569e-16 eV·s
        assert!((HBAR_EV_S - 6.582119569e-16).abs() < 1e-24);
    }

    #[test]
    fn hbar_consistent_with_h() {
        assert!((HBAR * 2.0 * std::f64::consts::PI - PLANCK).abs() < 1e-45);
    }
}
