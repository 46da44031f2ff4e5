//! Two-photon interference of a signal/idler pair in an unbalanced
//! Mach-Zehnder interferometer.
//!
//! Both photons enter the same input port and are detected at the same
//! output port. Each takes the long (L) or short (S) arm, giving four path
//! amplitudes, each of modulus ½ (global phase `e^{i2kpL_S}` dropped):
//!
//! | term   | signal | idler | amplitude        | arrival-time difference |
//! |--------|--------|-------|------------------|-------------------------|
//! | `A_LL` | L      | L     | ½·e^{i·2kp·ΔL}   | 0                       |
//! | `A_SL` | L      | S     | ½·e^{i·ks·ΔL}    | ±τ                      |
//! | `A_LS` | S      | L     | ½·e^{i·ki·ΔL}    | ∓τ                      |
//! | `A_SS` | S      | S     | ½                | 0                       |
//!
//! When ΔL is far beyond the single-photon coherence length the `ks`/`ki`
//! cross terms average out and the coincidence probability is
//! `1 + ½cos(2kpΔL)`. Keeping only pairs that arrive together (gate shorter
//! than τ = ΔL/c) leaves `A_LL + A_SS` and `1 + cos(2kpΔL)`.
//!
//! Imperfect mode overlap is modelled by one factor `μ ∈ [0, 1]` on every
//! interference cross term.

mod fit;

pub use fit::{fit_visibility, fit_visibility_free_period, scan_from_csv_str, scan_to_csv, FringeFit, SCAN_CSV_HEADER};

use std::f64::consts::{LN_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasematch::conjugate_wavelength;
use crate::spectrum::FilterShape;
use crate::units::{nm_to_k, nm_to_omega, C};

/// Arm lengths of the interferometer plus the piezo scan offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerGeometry {
    pub long_m: f64,
    pub short_m: f64,
    /// Scan offset added to the path difference, m.
    pub delta_x_m: f64,
}

impl InterferometerGeometry {
    /// Geometry with path difference `delta_l` (m). Arm lengths are counted
    /// from the end of the common section, so the short arm is zero.
    pub fn from_path_difference(delta_l: f64) -> Result<Self> {
        let g = Self {
            long_m: delta_l,
            short_m: 0.0,
            delta_x_m: 0.0,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_delta_x(mut self, delta_x_m: f64) -> Self {
        self.delta_x_m = delta_x_m;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.long_m - self.short_m >= 0.0) {
            return Err(Error::InvalidParameter("long arm must not be shorter than short arm".into()));
        }
        Ok(())
    }

    /// Nominal path difference `L_L − L_S`, m.
    pub fn delta_l(&self) -> f64 {
        self.long_m - self.short_m
    }

    /// Path difference including the scan offset, m.
    pub fn effective_delta_l(&self) -> f64 {
        self.delta_l() + self.delta_x_m
    }

    /// Propagation delay between the arms, s.
    pub fn tau(&self) -> f64 {
        self.delta_l() / C
    }
}

/// The four path amplitudes of a pair with definite wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiphotonPathState {
    pub k_p: f64,
    pub k_s: f64,
    pub k_i: f64,
    pub delta_l: f64,
    /// Both photons in the long arm.
    pub a_ll: Complex64,
    /// Signal long, idler short.
    pub a_sl: Complex64,
    /// Signal short, idler long.
    pub a_ls: Complex64,
    /// Both photons in the short arm.
    pub a_ss: Complex64,
    pub mu: f64,
}

/// `e^{iφ}` with the phase reduced modulo 2π first, for large path phases.
fn phasor(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase.rem_euclid(TAU))
}

/// Path amplitudes for pump wavenumber `k_p` and signal wavenumber `k_s`
/// (vacuum, rad/m); the idler takes `k_i = 2k_p − k_s`.
pub fn path_amplitudes(geometry: &InterferometerGeometry, k_p: f64, k_s: f64) -> Result<BiphotonPathState> {
    geometry.validate()?;
    let k_i = 2.0 * k_p - k_s;
    if !(k_i > 0.0) || !(k_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "signal wavenumber {k_s} leaves no positive idler wavenumber for pump {k_p}"
        )));
    }
    let dl = geometry.effective_delta_l();
    Ok(BiphotonPathState {
        k_p,
        k_s,
        k_i,
        delta_l: dl,
        a_ll: 0.5 * phasor(2.0 * k_p * dl),
        a_sl: 0.5 * phasor(k_s * dl),
        a_ls: 0.5 * phasor(k_i * dl),
        a_ss: Complex64::new(0.5, 0.0),
        mu: 1.0,
    })
}

impl BiphotonPathState {
    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    fn amplitudes(&self) -> [Complex64; 4] {
        [self.a_ll, self.a_sl, self.a_ls, self.a_ss]
    }

    fn with_cross_terms(amps: &[Complex64], mu: f64) -> f64 {
        let diag: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let mut cross = 0.0;
        for i in 0..amps.len() {
            for j in i + 1..amps.len() {
                cross += 2.0 * (amps[i] * amps[j].conj()).re;
            }
        }
        diag + mu * cross
    }

    /// Probability of both photons at the detected port, all arrival times.
    pub fn probability_full(&self) -> f64 {
        Self::with_cross_terms(&self.amplitudes(), self.mu)
    }

    /// Probability restricted to pairs arriving together (`A_LL + A_SS`).
    /// Not renormalised: those pairs are half of all pairs, so twice this is
    /// [`coincidence_postselected`].
    pub fn probability_postselected(&self) -> f64 {
        Self::with_cross_terms(&[self.a_ll, self.a_ss], self.mu)
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if (0.0..=1.0).contains(&mu) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("mu must lie in [0, 1], got {mu}")))
    }
}

/// `1 + (μ/2)·cos(2kpΔL)`: all coincidences, ΔL beyond the single-photon
/// coherence length.
pub fn coincidence_full(k_p: f64, delta_l: f64, mu: f64) -> f64 {
    1.0 + 0.5 * mu * (2.0 * k_p * delta_l).rem_euclid(TAU).cos()
}

/// `1 + μ·cos(2kpΔL)`: coincidences gated shorter than the arm delay.
pub fn coincidence_postselected(k_p: f64, delta_l: f64, mu: f64) -> f64 {
    1.0 + mu * (2.0 * k_p * delta_l).rem_euclid(TAU).cos()
}

/// Fringe visibility of [`coincidence_full`].
pub fn full_visibility(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(0.5 * mu)
}

/// Fringe visibility of [`coincidence_postselected`].
pub fn postselected_visibility(mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(mu)
}

/// Signal and idler band-pass filters behind the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilteredBiphotonSpectrum {
    pub pump_nm: f64,
    pub center_s: f64,
    pub center_i: f64,
    pub fwhm_s: f64,
    pub fwhm_i: f64,
    pub shape: FilterShape,
}

impl FilteredBiphotonSpectrum {
    /// Filters centred on the signal wavelength and its energy-conserving
    /// idler, both `fwhm` nm wide.
    pub fn new(pump_nm: f64, center_s: f64, fwhm: f64, shape: FilterShape) -> Result<Self> {
        let center_i = conjugate_wavelength(pump_nm, center_s)?;
        let s = Self {
            pump_nm,
            center_s,
            center_i,
            fwhm_s: fwhm,
            fwhm_i: fwhm,
            shape,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fwhm_s > 0.0) || !(self.fwhm_i > 0.0) {
            return Err(Error::InvalidParameter("filter widths must be > 0".into()));
        }
        let lhs = 2.0 / self.pump_nm;
        let rhs = 1.0 / self.center_s + 1.0 / self.center_i;
        if ((lhs - rhs) / lhs).abs() > 1e-9 {
            return Err(Error::InvalidParameter("filter centres violate energy conservation".into()));
        }
        Ok(())
    }

    fn transmission(shape: FilterShape, lambda: f64, center: f64, fwhm: f64) -> f64 {
        match shape {
            FilterShape::Rectangular => {
                if (lambda - center).abs() <= 0.5 * fwhm {
                    1.0
                } else {
                    0.0
                }
            }
            FilterShape::Gaussian => {
                let x = (lambda - center) / fwhm;
                (-4.0 * LN_2 * x * x).exp()
            }
        }
    }

    /// Joint weight `Ψ` at signal angular frequency `omega_s`, with the
    /// idler fixed by energy conservation.
    pub fn weight(&self, omega_s: f64) -> f64 {
        let wp = nm_to_omega(self.pump_nm);
        let ls = 2.0 * PI * C / omega_s * 1e9;
        let li = 2.0 * PI * C / (2.0 * wp - omega_s) * 1e9;
        Self::transmission(self.shape, ls, self.center_s, self.fwhm_s)
            * Self::transmission(self.shape, li, self.center_i, self.fwhm_i)
    }

    /// Signal angular-frequency interval outside which the weight vanishes
    /// (or is below 1e-11 for Gaussian filters).
    pub fn support(&self) -> Option<(f64, f64)> {
        let reach = match self.shape {
            FilterShape::Rectangular => 0.5,
            FilterShape::Gaussian => 3.0,
        };
        let wp = nm_to_omega(self.pump_nm);
        let s_lo = nm_to_omega(self.center_s + reach * self.fwhm_s);
        let s_hi = nm_to_omega(self.center_s - reach * self.fwhm_s);
        let i_far = self.center_i + reach * self.fwhm_i;
        let i_near = self.center_i - reach * self.fwhm_i;
        // ωs = 2ωp − ωi
        let via_i_lo = 2.0 * wp - nm_to_omega(i_near.max(1e-9));
        let via_i_hi = 2.0 * wp - nm_to_omega(i_far);
        let lo = s_lo.max(via_i_lo);
        let hi = s_hi.min(via_i_hi);
        (hi > lo).then_some((lo, hi))
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], 8 points.
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Composite 8-point Gauss–Legendre integral of `f` over `[lo, hi]`.
fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, panels: usize) -> f64 {
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + h * (p as f64 + 0.5);
        let mut acc = 0.0;
        for &(x, w) in &GL8 {
            acc += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * acc;
    }
    total
}

/// Largest change tolerated between a quadrature and its grid doubling.
pub const ORACLE_TOLERANCE: f64 = 1e-4;

/// Spectrally averaged coincidence probability at each scan offset.
///
/// Integrates the four-term probability `|Σ A_xy|²` (with `μ` on the cross
/// terms) over the filtered two-photon spectrum at every `delta_x` (m), and
/// normalises by the integrated weight. The panel count resolves the fastest
/// spectral oscillation; the result is accepted only if doubling the panel
/// count changes no value by more than [`ORACLE_TOLERANCE`].
pub fn coincidence_oracle(
    geometry: &InterferometerGeometry,
    spectrum: &FilteredBiphotonSpectrum,
    mu: f64,
    delta_x: &[f64],
) -> Result<Vec<f64>> {
    check_mu(mu)?;
    spectrum.validate()?;
    geometry.validate()?;
    let (lo, hi) = spectrum
        .support()
        .ok_or_else(|| Error::InvalidParameter("signal and idler filters do not overlap".into()))?;
    let k_p = nm_to_k(spectrum.pump_nm);
    let max_dl = delta_x
        .iter()
        .map(|dx| (geometry.delta_l() + dx).abs())
        .fold(0.0, f64::max);
    // The (ks − ki) cross term oscillates with period πc/ΔL in ωs.
    let cycles = (hi - lo) * 2.0 * max_dl / (2.0 * PI * C);
    let panels = ((2.0 * cycles).ceil() as usize).max(32);

    let norm_at = |n: usize| gauss_legendre(&|w| spectrum.weight(w), lo, hi, n);
    let value_at = |n: usize, dx: f64| -> Result<f64> {
        let g = geometry.with_delta_x(dx);
        let integrand = |w: f64| {
            let weight = spectrum.weight(w);
            if weight == 0.0 {
                return 0.0;
            }
            let state = path_amplitudes(&g, k_p, w / C).map(|s| s.with_mu(mu));
            weight * state.map(|s| s.probability_full()).unwrap_or(0.0)
        };
        Ok(gauss_legendre(&integrand, lo, hi, n))
    };

    let (norm1, norm2) = (norm_at(panels), norm_at(2 * panels));
    // Scan points are independent; each one is reduced serially.
    delta_x
        .par_iter()
        .map(|&dx| {
            let coarse = value_at(panels, dx)? / norm1;
            let fine = value_at(2 * panels, dx)? / norm2;
            let change = (fine - coarse).abs();
            if change > ORACLE_TOLERANCE {
                return Err(Error::QuadratureNonConvergence { change });
            }
            Ok(fine)
        })
        .collect()
}

/// Envelope of one photon's interference fringe at delay `delta_l` (m)
/// through a filter of width `fwhm` nm at `lambda_center` nm: the magnitude
/// of the filter's normalised autocorrelation.
pub fn single_photon_visibility(lambda_center: f64, fwhm: f64, delta_l: f64, shape: FilterShape) -> Result<f64> {
    if !(fwhm > 0.0) || !(lambda_center > 0.0) {
        return Err(Error::InvalidParameter("wavelength and width must be > 0".into()));
    }
    let lc = lambda_center * 1e-9;
    // Width of the passband in vacuum wavenumber.
    let dk = 2.0 * PI * fwhm * 1e-9 / (lc * lc);
    Ok(match shape {
        FilterShape::Rectangular => {
            let x = 0.5 * dk * delta_l;
            if x.abs() < 1e-8 {
                1.0
            } else {
                (x.sin() / x).abs()
            }
        }
        FilterShape::Gaussian => {
            let sigma = dk / (2.0 * (2.0 * LN_2).sqrt());
            (-0.5 * (sigma * delta_l).powi(2)).exp()
        }
    })
}

/// Coherence length `λ²/Δλ` of a filter, m.
pub fn coherence_length(lambda_center: f64, fwhm: f64) -> f64 {
    let l = lambda_center * 1e-9;
    l * l / (fwhm * 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn experiment_geometry() -> InterferometerGeometry {
        InterferometerGeometry::from_path_difference(0.6).unwrap()
    }

    #[test]
    fn geometry_delay() {
        let g = experiment_geometry();
        assert_relative_eq!(g.tau(), 2.0014e-9, max_relative = 1e-4);
        assert!(InterferometerGeometry {
            long_m: 1.0,
            short_m: 2.0,
            delta_x_m: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn balanced_amplitudes() {
        let g = InterferometerGeometry::from_path_difference(0.0).unwrap();
        let s = path_amplitudes(&g, nm_to_k(760.4), nm_to_k(660.0)).unwrap();
        for a in s.amplitudes() {
            assert_relative_eq!(a.re, 0.5, epsilon = 1e-15);
            assert!(a.im.abs() < 1e-15);
        }
        assert_relative_eq!(s.probability_full(), 4.0, epsilon = 1e-14);
        let norm: f64 = s.amplitudes().iter().map(|a| a.norm_sqr()).sum();
        assert_relative_eq!(norm, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn half_wave_pump_phase() {
        let k_p = 1e7;
        let dl = PI / (2.0 * k_p);
        let g = InterferometerGeometry::from_path_difference(dl).unwrap();
        let s = path_amplitudes(&g, k_p, 0.9e7).unwrap();
        assert!((s.a_ll + s.a_ss).norm() < 1e-12);
    }

    #[test]
    fn experiment_geometry_pair_interference() {
        let g = experiment_geometry();
        let k_p = nm_to_k(760.4);
        let s = path_amplitudes(&g, k_p, nm_to_k(660.0)).unwrap();
        assert_relative_eq!(s.k_s + s.k_i, 2.0 * s.k_p, max_relative = 1e-12);
        let lhs = (s.a_ss + s.a_ll).norm_sqr();
        let rhs = 0.5 * (1.0 + (2.0 * k_p * 0.6).rem_euclid(TAU).cos());
        assert!((lhs - rhs).abs() < 1e-9);
        assert_relative_eq!(s.probability_postselected(), lhs, epsilon = 1e-12);
        assert!((2.0 * lhs - coincidence_postselected(k_p, 0.6, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_negative_idler() {
        let g = experiment_geometry();
        assert!(path_amplitudes(&g, 1e7, 2.5e7).is_err());
    }

    #[test]
    fn closed_form_visibilities() {
        let k_p = nm_to_k(760.4);
        let quarter = PI / (2.0 * k_p);
        assert_relative_eq!(coincidence_full(k_p, 0.0, 1.0), 1.5);
        assert_relative_eq!(coincidence_full(k_p, quarter, 1.0), 0.5, epsilon = 1e-12);
        assert_eq!(coincidence_full(k_p, 0.3, 0.0), 1.0);
        assert_relative_eq!(full_visibility(0.83).unwrap(), 0.415);
        assert_relative_eq!(postselected_visibility(0.83).unwrap(), 0.83);
        assert_relative_eq!(coincidence_postselected(k_p, quarter, 1.0), 0.0, epsilon = 1e-12);
        assert!(full_visibility(1.2).is_err());
    }

    #[test]
    fn single_photon_envelopes() {
        for shape in [FilterShape::Rectangular, FilterShape::Gaussian] {
            assert_eq!(single_photon_visibility(660.0, 10.0, 0.0, shape).unwrap(), 1.0);
            assert!(single_photon_visibility(660.0, 10.0, 0.6, shape).unwrap() < 1e-3);
            assert!(single_photon_visibility(660.0, 1e-12, 0.6, shape).unwrap() > 0.999);
        }
        assert_relative_eq!(coherence_length(660.0, 10.0), 43.56e-6, max_relative = 1e-3);
    }

    #[test]
    fn oracle_zero_path_difference() {
        let g = InterferometerGeometry::from_path_difference(0.0).unwrap();
        let spec = FilteredBiphotonSpectrum::new(760.4, 660.0, 10.0, FilterShape::Rectangular).unwrap();
        let v = coincidence_oracle(&g, &spec, 1.0, &[0.0]).unwrap();
        assert_relative_eq!(v[0], 4.0, epsilon = 1e-12);
    }

    #[test]
    fn oracle_monochromatic_limit() {
        let g = InterferometerGeometry::from_path_difference(0.6).unwrap();
        let spec = FilteredBiphotonSpectrum::new(760.4, 660.0, 1e-9, FilterShape::Gaussian).unwrap();
        let k_p = nm_to_k(760.4);
        let k_s = nm_to_k(660.0);
        for dx in [0.0, 40e-9, 95e-9] {
            let v = coincidence_oracle(&g, &spec, 1.0, &[dx]).unwrap()[0];
            let dl = 0.6 + dx;
            let sum = phasor(2.0 * k_p * dl) + phasor(k_s * dl) + phasor((2.0 * k_p - k_s) * dl) + 1.0;
            assert!((v - 0.25 * sum.norm_sqr()).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn filters_must_conserve_energy() {
        let mut s = FilteredBiphotonSpectrum::new(760.4, 660.0, 10.0, FilterShape::Rectangular).unwrap();
        assert_relative_eq!(s.center_i, 896.826, epsilon = 1e-3);
        s.center_i = 900.0;
        assert!(s.validate().is_err());
    }
}
