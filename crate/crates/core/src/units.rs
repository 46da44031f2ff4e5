//! Physical constants and unit conversions.

use std::f64::consts::PI;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Angular frequency (rad/s) of vacuum wavelength `nm`.
#[inline]
pub fn nm_to_omega(nm: f64) -> f64 {
    2.0 * PI * C / (nm * 1e-9)
}

/// Vacuum wavelength (nm) of angular frequency `omega`.
#[inline]
pub fn omega_to_nm(omega: f64) -> f64 {
    2.0 * PI * C / omega * 1e9
}

/// Vacuum wavenumber (rad/m) of wavelength `nm`.
#[inline]
pub fn nm_to_k(nm: f64) -> f64 {
    2.0 * PI / (nm * 1e-9)
}

/// ps/(nm·km) to s/m².
pub const PS_PER_NM_KM: f64 = 1e-6;

/// 1/(W·km) to 1/(W·m).
pub const PER_W_KM: f64 = 1e-3;

/// β₂ (s²/m) from dispersion parameter `d` (ps/(nm·km)) at wavelength `nm`.
#[inline]
pub fn d_to_beta2(d: f64, nm: f64) -> f64 {
    let lambda = nm * 1e-9;
    -d * PS_PER_NM_KM * lambda * lambda / (2.0 * PI * C)
}

/// Dispersion parameter D in ps/(nm·km) from β₂ (s²/m) at wavelength `nm`.
#[inline]
pub fn beta2_to_d(beta2: f64, nm: f64) -> f64 {
    let lambda = nm * 1e-9;
    -beta2 * 2.0 * PI * C / (lambda * lambda) / PS_PER_NM_KM
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavelength_frequency_round_trip() {
        for nm in [400.0, 660.0, 760.4, 896.8, 1300.0] {
            assert!((omega_to_nm(nm_to_omega(nm)) - nm).abs() < 1e-9);
        }
    }

    #[test]
    fn beta2_d_round_trip() {
        let b2 = d_to_beta2(3.5, 800.0);
        assert!((beta2_to_d(b2, 800.0) - 3.5).abs() < 1e-12);
        assert!(b2 < 0.0);
    }
}
