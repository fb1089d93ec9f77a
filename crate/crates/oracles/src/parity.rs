//! Closed-form GHZ parity fringes.

use std::f64::consts::FRAC_PI_2;

/// `contrast * cos(n phi + offset)`.
pub fn closed_form_parity(n: usize, contrast: f64, phi: f64, offset: f64) -> f64 {
    contrast * (n as f64 * phi + offset).cos()
}

/// Offset for (|0..0> + |1..1>)/sqrt2 read with a global pi/2 pulse of azimuth
/// phi, where the pulse is `cos(pi/4) - i sin(pi/4) (cos phi X + sin phi Y)`.
pub fn ghz_offset(n: usize) -> f64 {
    n as f64 * FRAC_PI_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn single_atom_and_quarter_period() {
        // one atom: parity is the single-atom Z expectation, -sin(phi)
        for phi in [0.0, 0.4, 2.0] {
            assert!((closed_form_parity(1, 1.0, phi, ghz_offset(1)) + phi.sin()).abs() < 1e-12);
        }
        assert!(closed_form_parity(4, 1.0, PI / 8.0, 0.0).abs() < 1e-12);
    }
}
