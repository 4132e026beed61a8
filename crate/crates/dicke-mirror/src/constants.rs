//! Physical constants, CODATA 2018. Everything downstream pulls from here so
//! a constant can never drift between modules.

/// Speed of light in vacuum, m/s (exact by SI definition).
pub const SPEED_OF_LIGHT: f64 = 2.99792458e8;

/// Vacuum permittivity, F/m.
pub const VACUUM_PERMITTIVITY: f64 = 8.8541878128e-12;

/// Reduced Planck constant, J s.
pub const REDUCED_PLANCK: f64 = 1.054571817e-34;

/// Vacuum permeability, H/m, derived as 1/(eps0 c^2) so the identity
/// eps0 mu0 c^2 = 1 holds exactly in f64.
pub const VACUUM_PERMEABILITY: f64 =
    1.0 / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT * SPEED_OF_LIGHT);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permeability_closes_the_triplet() {
        let product = VACUUM_PERMITTIVITY * VACUUM_PERMEABILITY * SPEED_OF_LIGHT * SPEED_OF_LIGHT;
        assert!((product - 1.0).abs() < 1e-15);
        // sanity against the familiar 4 pi x 1e-7 value
        assert!((VACUUM_PERMEABILITY / (4.0 * std::f64::consts::PI * 1e-7) - 1.0).abs() < 1e-9);
    }
}
