//! Four-wave-mixing phase matching in the fiber.
//!
//! With `ωs = ωp + Δω` and `ωi = ωp − Δω` the phase mismatch is
//! `Δk = k(ωs) + k(ωi) − 2k(ωp)`, the effective mismatch is
//! `κ² = (Δk/2)(Δk/2 + 2γP)` and the number of pairs per unit bandwidth and
//! time is `(γPL)²·|sin(κL)/(κL)|²`. The factor peaks where `κ = 0`: on the
//! branch (`Δk = 0`, far from the pump) and on the trunk (`Δk = −4γP`, close
//! to the pump).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::{default_table_with_curvature, DispersionModel};
use crate::error::{Error, Result};
use crate::io;
use crate::roots;
use crate::svg;
use crate::units::{nm_to_omega, omega_to_nm, PER_W_KM};

/// Fiber and pump parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwmConfig {
    /// Nonlinear coefficient, 1/(W·m).
    pub gamma: f64,
    /// Pump power, W.
    pub power: f64,
    /// Fiber length, m.
    pub length: f64,
    /// Pump wavelength, nm.
    pub lambda_p_nm: f64,
    /// Fiber loss, dB/km.
    pub loss_db_per_km: f64,
}

impl Default for FwmConfig {
    /// The experiment's fiber: γ = 102 /(W·km), L = 1.93 m, 760.4 nm pump at
    /// 100 mW, 50 dB/km.
    fn default() -> Self {
        Self {
            gamma: 102.0 * PER_W_KM,
            power: 0.1,
            length: 1.93,
            lambda_p_nm: 760.4,
            loss_db_per_km: 50.0,
        }
    }
}

impl FwmConfig {
    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn with_pump_nm(mut self, lambda_p_nm: f64) -> Self {
        self.lambda_p_nm = lambda_p_nm;
        self
    }

    pub fn omega_p(&self) -> f64 {
        nm_to_omega(self.lambda_p_nm)
    }

    /// Dimensionless `γPL`.
    pub fn gamma_p_l(&self) -> f64 {
        self.gamma * self.power * self.length
    }

    pub fn validate(&self, model: &DispersionModel) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be > 0, got {}", self.gamma)));
        }
        if !(self.power >= 0.0) || !self.power.is_finite() {
            return Err(Error::InvalidParameter(format!("power must be >= 0, got {}", self.power)));
        }
        if !(self.length > 0.0) || !self.length.is_finite() {
            return Err(Error::InvalidParameter(format!("length must be > 0, got {}", self.length)));
        }
        if !(self.loss_db_per_km > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "loss must be > 0 dB/km, got {}",
                self.loss_db_per_km
            )));
        }
        model.check_range(self.omega_p())
    }
}

/// Which `κ = 0` condition a solution satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolutionKind {
    /// `Δk = −4γP`, close to the pump.
    Trunk,
    /// `Δk = 0`, well separated from the pump.
    Branch,
}

impl SolutionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolutionKind::Trunk => "trunk",
            SolutionKind::Branch => "branch",
        }
    }
}

/// A signal/idler pair obeying energy conservation. The signal is the
/// blue photon: `λs ≤ λp ≤ λi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPoint {
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub lambda_i: f64,
    /// `ωs − ωp`, rad/s.
    pub delta_omega: f64,
    /// `(γPL)²·F`: pairs per unit signal bandwidth (rad/s) per unit time (s).
    pub n_density: f64,
    pub kind: SolutionKind,
}

/// Idler wavelength conjugate to `lambda_s_nm` for pump `lambda_p_nm`:
/// `1/λi = 2/λp − 1/λs`.
pub fn conjugate_wavelength(lambda_p_nm: f64, lambda_s_nm: f64) -> Result<f64> {
    if !(lambda_p_nm > 0.0) || !(lambda_s_nm > 0.0) {
        return Err(Error::InvalidParameter("wavelengths must be positive".into()));
    }
    let inv = 2.0 / lambda_p_nm - 1.0 / lambda_s_nm;
    if !(inv > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "no positive-frequency conjugate of {lambda_s_nm} nm for a {lambda_p_nm} nm pump"
        )));
    }
    Ok(1.0 / inv)
}

/// Phase mismatch `Δk` (rad/m) for detuning `delta_omega` from the pump.
/// Even in `delta_omega`; unaffected by affine gauge terms of the model.
pub fn delta_k(model: &DispersionModel, lambda_p_nm: f64, delta_omega: f64) -> Result<f64> {
    let wp = nm_to_omega(lambda_p_nm);
    let (ws, wi) = (wp + delta_omega, wp - delta_omega);
    model.check_range(wp)?;
    model.check_range(ws)?;
    model.check_range(wi)?;
    Ok(delta_k_unchecked(model, wp, delta_omega))
}

#[inline]
fn delta_k_unchecked(model: &DispersionModel, wp: f64, delta_omega: f64) -> f64 {
    (model.k_curve(wp + delta_omega) + model.k_curve(wp - delta_omega)) - 2.0 * model.k_curve(wp)
}

/// `|sin(x)/x|²` as a function of `x²`, continued to `sinh²(|x|)/|x|²` for
/// negative `x²`.
pub fn sinc2_of_square(x2: f64) -> f64 {
    if x2.abs() < 1e-8 {
        // |x| < 1e-4
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 45.0
    } else if x2 > 0.0 {
        let x = x2.sqrt();
        let s = x.sin() / x;
        s * s
    } else {
        let x = (-x2).sqrt();
        let s = x.sinh() / x;
        s * s
    }
}

/// `κ²` in 1/m².
pub fn kappa_squared(delta_k: f64, config: &FwmConfig) -> f64 {
    let half = 0.5 * delta_k;
    half * (half + 2.0 * config.gamma * config.power)
}

/// `F = |sin(κL)/(κL)|²`, analytically continued into the gain regime.
pub fn phase_match_factor(delta_k: f64, config: &FwmConfig) -> f64 {
    sinc2_of_square(kappa_squared(delta_k, config) * config.length * config.length)
}

/// `(γPL)²·F`: pairs per unit bandwidth (rad/s) per unit time at detuning
/// `delta_omega`.
pub fn pair_density(model: &DispersionModel, config: &FwmConfig, delta_omega: f64) -> Result<f64> {
    let dk = delta_k(model, config.lambda_p_nm, delta_omega)?;
    let g = config.gamma_p_l();
    Ok(g * g * phase_match_factor(dk, config))
}

/// Number of pairs in signal bandwidth `d_omega` (rad/s) and time `dt` (s).
pub fn pair_rate(model: &DispersionModel, config: &FwmConfig, delta_omega: f64, d_omega: f64, dt: f64) -> Result<f64> {
    if !(d_omega > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter("bandwidth and time interval must be > 0".into()));
    }
    Ok(pair_density(model, config, delta_omega)? * d_omega * dt)
}

/// Pairs per second whose signal falls in a rectangular band of width
/// `fwhm_nm` around `center_s_nm`: `∫ N dΔω` over the band (midpoint rule,
/// `cells` cells).
pub fn band_pair_rate(model: &DispersionModel, config: &FwmConfig, center_s_nm: f64, fwhm_nm: f64, cells: usize) -> Result<f64> {
    if !(fwhm_nm > 0.0) || fwhm_nm >= 2.0 * center_s_nm || cells == 0 {
        return Err(Error::InvalidParameter("band width must be positive and narrower than the centre".into()));
    }
    let wp = config.omega_p();
    let lo = nm_to_omega(center_s_nm + 0.5 * fwhm_nm) - wp;
    let hi = nm_to_omega(center_s_nm - 0.5 * fwhm_nm) - wp;
    let h = (hi - lo) / cells as f64;
    let mut total = 0.0;
    for c in 0..cells {
        total += pair_density(model, config, (lo + h * (c as f64 + 0.5)).abs())?;
    }
    Ok(total * h.abs())
}

/// Root-search settings for the trunk and branch solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSearch {
    /// Cells of the pre-scan over `0 ≤ Δω ≤ Δω_max`.
    pub grid: usize,
    /// Relative bisection tolerance in `Δω`.
    pub rel_tol: f64,
}

impl Default for RootSearch {
    fn default() -> Self {
        Self {
            grid: 2000,
            rel_tol: 1e-6,
        }
    }
}

/// Largest detuning for which pump, signal and idler stay inside the model.
pub fn max_delta_omega(model: &DispersionModel, lambda_p_nm: f64) -> Result<f64> {
    let wp = nm_to_omega(lambda_p_nm);
    model.check_range(wp)?;
    let (lo, hi) = model.valid_range();
    Ok((hi - wp).min(wp - lo))
}

/// Detuning separating trunk from branch: four trunk widths,
/// `4·sqrt(4γP/|β₂(ωp)|)`.
pub fn trunk_branch_split(model: &DispersionModel, config: &FwmConfig) -> Result<f64> {
    let b2 = model.beta2_at(config.omega_p())?.abs();
    let gp = 4.0 * config.gamma * config.power;
    if gp == 0.0 {
        return Ok(0.0);
    }
    if b2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(4.0 * (gp / b2).sqrt())
}

fn mismatch_roots(model: &DispersionModel, config: &FwmConfig, target: f64, search: RootSearch) -> Result<Vec<f64>> {
    config.validate(model)?;
    let wp = config.omega_p();
    let max = max_delta_omega(model, config.lambda_p_nm)?;
    if max <= 0.0 {
        return Ok(Vec::new());
    }
    let f = |dw: f64| delta_k_unchecked(model, wp, dw.clamp(0.0, max)) - target;
    Ok(roots::scan_roots(f, 0.0, max, search.grid, search.rel_tol, 0.0))
}

fn pair_point(model: &DispersionModel, config: &FwmConfig, delta_omega: f64, kind: SolutionKind) -> PairPoint {
    let wp = config.omega_p();
    let g = config.gamma_p_l();
    let dk = delta_k_unchecked(model, wp, delta_omega);
    PairPoint {
        lambda_p: config.lambda_p_nm,
        lambda_s: omega_to_nm(wp + delta_omega),
        lambda_i: omega_to_nm(wp - delta_omega),
        delta_omega,
        n_density: g * g * phase_match_factor(dk, config),
        kind,
    }
}

/// Branch solutions `Δk = 0` beyond the trunk/branch split. Empty when the
/// pump sees normal dispersion and no far-detuned root exists.
pub fn branch_solutions(model: &DispersionModel, config: &FwmConfig) -> Result<Vec<PairPoint>> {
    branch_solutions_with(model, config, RootSearch::default())
}

pub fn branch_solutions_with(model: &DispersionModel, config: &FwmConfig, search: RootSearch) -> Result<Vec<PairPoint>> {
    let split = trunk_branch_split(model, config)?;
    Ok(mismatch_roots(model, config, 0.0, search)?
        .into_iter()
        .filter(|&dw| dw > 0.0 && dw > split)
        .map(|dw| pair_point(model, config, dw, SolutionKind::Branch))
        .collect())
}

/// Trunk solutions `Δk = −4γP` inside the trunk/branch split.
pub fn trunk_solutions(model: &DispersionModel, config: &FwmConfig) -> Result<Vec<PairPoint>> {
    trunk_solutions_with(model, config, RootSearch::default())
}

pub fn trunk_solutions_with(model: &DispersionModel, config: &FwmConfig, search: RootSearch) -> Result<Vec<PairPoint>> {
    if !(config.power > 0.0) {
        return Err(Error::InvalidParameter("trunk solutions need pump power > 0".into()));
    }
    let split = trunk_branch_split(model, config)?;
    let target = -4.0 * config.gamma * config.power;
    Ok(mismatch_roots(model, config, target, search)?
        .into_iter()
        .filter(|&dw| dw > 0.0 && dw <= split)
        .map(|dw| pair_point(model, config, dw, SolutionKind::Trunk))
        .collect())
}

/// Trunk and branch solutions for every pump wavelength in `pumps_nm`.
pub fn solutions_over_pump(model: &DispersionModel, config: &FwmConfig, pumps_nm: &[f64]) -> Result<Vec<PairPoint>> {
    let mut out = Vec::new();
    for &lp in pumps_nm {
        let c = config.with_pump_nm(lp);
        if c.power > 0.0 {
            out.extend(trunk_solutions(model, &c)?);
        }
        out.extend(branch_solutions(model, &c)?);
    }
    Ok(out)
}

pub const SOLUTIONS_CSV_HEADER: &str = "lambda_p_nm,lambda_s_nm,lambda_i_nm,kind";

pub fn solutions_to_csv(points: &[PairPoint]) -> String {
    let mut out = String::from(SOLUTIONS_CSV_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.lambda_p, p.lambda_s, p.lambda_i, p.kind.as_str()));
    }
    out
}

/// Pair density over a (pump wavelength × photon wavelength) grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensityMap {
    pub lambda_p_axis: Vec<f64>,
    pub lambda_axis: Vec<f64>,
    /// `values[p][j]`: density at pump `lambda_p_axis[p]` and photon
    /// wavelength `lambda_axis[j]`, per unit bandwidth and time.
    pub values: Vec<Vec<f64>>,
    /// `(γPL)²`, the density at perfect phase matching.
    pub peak_density: f64,
}

pub const MAP_CSV_HEADER: &[&str] = &["lambda_p_nm", "lambda_s_nm", "N_density"];

impl SpectralDensityMap {
    /// Contiguous runs of photon-wavelength indices where the density is at
    /// least `fraction` of the perfect-phase-matching density.
    pub fn ridge_segments(&self, pump_index: usize, fraction: f64) -> Vec<(usize, usize)> {
        let threshold = fraction * self.peak_density;
        let mut out = Vec::new();
        let mut start = None;
        for (j, &v) in self.values[pump_index].iter().enumerate() {
            match (v >= threshold && threshold > 0.0, start) {
                (true, None) => start = Some(j),
                (false, Some(s)) => {
                    out.push((s, j - 1));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s, self.lambda_axis.len() - 1));
        }
        out
    }

    /// Rows scaled by bandwidth and time: counts per cell.
    pub fn to_csv(&self, scale: f64) -> String {
        let rows = self.lambda_p_axis.iter().enumerate().flat_map(|(p, &lp)| {
            self.lambda_axis
                .iter()
                .enumerate()
                .map(move |(j, &l)| [lp, l, self.values[p][j] * scale])
        });
        let rows: Vec<[f64; 3]> = rows.collect();
        io::format_csv(&[], MAP_CSV_HEADER, rows.iter().map(|r| r.as_slice()))
    }

    pub fn to_svg(&self, overlay: &[PairPoint]) -> String {
        let marks: Vec<(f64, f64)> = overlay
            .iter()
            .flat_map(|p| [(p.lambda_s, p.lambda_p), (p.lambda_i, p.lambda_p)])
            .collect();
        svg::heat_map(
            &self.lambda_axis,
            &self.lambda_p_axis,
            &self.values,
            "Photon-pair spectral density",
            "photon wavelength (nm)",
            "pump wavelength (nm)",
            &marks,
        )
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Grid of a spectral map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapGrid {
    /// Pump wavelength range, nm.
    pub lambda_p_range: (f64, f64),
    /// Photon wavelength range (signal and idler side), nm.
    pub lambda_range: (f64, f64),
    pub n_pump: usize,
    pub n_lambda: usize,
    /// Sub-samples per photon-wavelength cell. `1` samples the grid nodes;
    /// larger values aggregate the sub-samples per `aggregate`, which keeps
    /// ridges narrower than a cell visible.
    pub oversample: usize,
    #[serde(default)]
    pub aggregate: CellAggregate,
}

/// How sub-samples of a map cell are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellAggregate {
    /// Mean density over the cell (density per unit bandwidth is preserved).
    #[default]
    Mean,
    /// Largest sub-sample: marks where any part of the cell is phase matched.
    Peak,
}

impl MapGrid {
    pub fn new(lambda_p_range: (f64, f64), lambda_range: (f64, f64), n_pump: usize, n_lambda: usize) -> Self {
        Self {
            lambda_p_range,
            lambda_range,
            n_pump,
            n_lambda,
            oversample: 1,
            aggregate: CellAggregate::Mean,
        }
    }

    pub fn with_oversample(mut self, oversample: usize) -> Self {
        self.oversample = oversample;
        self
    }

    pub fn with_aggregate(mut self, aggregate: CellAggregate) -> Self {
        self.aggregate = aggregate;
        self
    }

    fn lambda_step(&self) -> f64 {
        if self.n_lambda > 1 {
            (self.lambda_range.1 - self.lambda_range.0) / (self.n_lambda - 1) as f64
        } else {
            0.0
        }
    }
}

/// Evaluates the pair density on a grid. `parallel` spreads pump rows over
/// the rayon pool; the result is bit-identical to the serial path.
pub fn spectral_map(
    model: &DispersionModel,
    config: &FwmConfig,
    grid: &MapGrid,
    parallel: bool,
) -> Result<SpectralDensityMap> {
    if grid.n_pump == 0 || grid.n_lambda == 0 || grid.oversample == 0 {
        return Err(Error::InvalidParameter("map grid must be non-empty".into()));
    }
    let lambda_p_axis = linspace(grid.lambda_p_range.0, grid.lambda_p_range.1, grid.n_pump);
    let lambda_axis = linspace(grid.lambda_range.0, grid.lambda_range.1, grid.n_lambda);
    let step = grid.lambda_step();
    let sub = grid.oversample;
    // Sub-sample offsets centred in the cell around each node.
    let offsets: Vec<f64> = if sub == 1 {
        vec![0.0]
    } else {
        (0..sub).map(|i| step * ((i as f64 + 0.5) / sub as f64 - 0.5)).collect()
    };
    let g = config.gamma_p_l();
    let peak_density = g * g;
    let row = |lp: &f64| -> Result<Vec<f64>> {
        let c = config.with_pump_nm(*lp);
        c.validate(model)?;
        let wp = c.omega_p();
        lambda_axis
            .iter()
            .map(|&l| {
                let (mut sum, mut max) = (0.0, 0.0f64);
                for off in &offsets {
                    let dw = nm_to_omega(l + off) - wp;
                    let f = phase_match_factor(delta_k(model, *lp, dw)?, &c);
                    sum += f;
                    max = max.max(f);
                }
                Ok(peak_density
                    * match grid.aggregate {
                        CellAggregate::Mean => sum / sub as f64,
                        CellAggregate::Peak => max,
                    })
            })
            .collect()
    };
    let values = if parallel {
        lambda_p_axis.par_iter().map(row).collect::<Result<Vec<_>>>()?
    } else {
        lambda_p_axis.iter().map(row).collect::<Result<Vec<_>>>()?
    };
    Ok(SpectralDensityMap {
        lambda_p_axis,
        lambda_axis,
        values,
        peak_density,
    })
}

/// Fiber attenuation e-folding length (m) for a loss in dB/km.
pub fn attenuation_efolding_length(loss_db_per_km: f64) -> Result<f64> {
    if !(loss_db_per_km > 0.0) || !loss_db_per_km.is_finite() {
        return Err(Error::InvalidParameter(format!("loss must be > 0, got {loss_db_per_km}")));
    }
    Ok(10.0 / std::f64::consts::LN_10 / loss_db_per_km * 1000.0)
}

/// Solves for the curvature of the default dispersion curve that puts the
/// branch signal for pump `lambda_p_nm` at `target_lambda_s_nm`.
pub fn calibrate_default_curvature(lambda_p_nm: f64, target_lambda_s_nm: f64) -> Result<f64> {
    let config = FwmConfig::default().with_pump_nm(lambda_p_nm);
    let mismatch = |q: f64| -> f64 {
        let model = match DispersionModel::build_from_gvd(&default_table_with_curvature(q)) {
            Ok(m) => m,
            Err(_) => return f64::NAN,
        };
        match branch_solutions(&model, &config) {
            Ok(s) if !s.is_empty() => s[0].lambda_s - target_lambda_s_nm,
            _ => f64::NAN,
        }
    };
    roots::bisect(mismatch, -4.5e-3, -3.5e-3, 1e-12, 0.0)
        .ok_or_else(|| Error::InvalidParameter("calibration target not bracketed".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispersion::{default_model, GvdTable};

    fn experiment() -> FwmConfig {
        FwmConfig::default()
    }

    fn quartic_model(b2: f64, b4: f64) -> DispersionModel {
        // β₂(ω) = b2 + b4·δ²/2 about the centre, so k = b2 δ²/2 + b4 δ⁴/24.
        let center = 2.4e15;
        let omega: Vec<f64> = (0..201).map(|i| center - 1.0e15 + 1.0e13 * i as f64).collect();
        let beta2: Vec<f64> = omega.iter().map(|w| b2 + b4 * (w - center) * (w - center) / 2.0).collect();
        DispersionModel::from_beta2_samples(&omega, &beta2, "quartic").unwrap()
    }

    fn config_at(omega_p: f64) -> FwmConfig {
        experiment().with_pump_nm(omega_to_nm(omega_p))
    }

    #[test]
    fn conjugate_examples() {
        assert!((conjugate_wavelength(760.4, 660.0).unwrap() - 896.8).abs() < 0.05);
        assert!((conjugate_wavelength(800.0, 800.0).unwrap() - 800.0).abs() < 1e-12);
        let hand = 1.0 / (2.0 / 800.0 - 1.0 / 700.0);
        assert!((conjugate_wavelength(800.0, 700.0).unwrap() - hand).abs() < 1e-12);
        assert!((hand - 933.333).abs() < 1e-3);
        assert!(conjugate_wavelength(800.0, 400.0).is_err());
        assert!(conjugate_wavelength(800.0, 300.0).is_err());
    }

    #[test]
    fn delta_k_is_zero_and_even() {
        let m = default_model();
        assert_eq!(delta_k(&m, 760.4, 0.0).unwrap(), 0.0);
        for dw in [1e13, 7.7e13, 3.1e14] {
            assert_eq!(delta_k(&m, 770.0, dw).unwrap(), delta_k(&m, 770.0, -dw).unwrap());
        }
    }

    #[test]
    fn delta_k_constant_beta2() {
        let m = quartic_model(-1e-26, 0.0);
        let wp = m.omega_ref();
        let dk = delta_k(&m, omega_to_nm(wp), 2e14).unwrap();
        assert!(((dk - -400.0) / 400.0).abs() < 1e-9, "{dk}");
    }

    #[test]
    fn delta_k_out_of_range() {
        let m = default_model();
        assert!(matches!(delta_k(&m, 760.4, 2e15), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn factor_special_points() {
        let c = experiment();
        let gp = c.gamma * c.power;
        assert_eq!(phase_match_factor(0.0, &c), 1.0);
        assert_eq!(phase_match_factor(-4.0 * gp, &c), 1.0);
        // κL = π: κ² = (π/L)², solve (Δk/2)(Δk/2 + 2γP) = κ² for Δk > 0.
        let k2 = (std::f64::consts::PI / c.length).powi(2);
        let half = -gp + (gp * gp + k2).sqrt();
        assert!(phase_match_factor(2.0 * half, &c) < 1e-20);
        // Gain regime at Δk = −2γP.
        let x = c.gamma_p_l();
        let expect = (x.sinh() / x).powi(2);
        let got = phase_match_factor(-2.0 * gp, &c);
        assert!((got - expect).abs() < 1e-14);
        assert!((got - 1.00013).abs() < 1e-5, "{got}");
    }

    #[test]
    fn series_branch_is_continuous() {
        for x2 in [9.9e-9, -9.9e-9, 1.01e-8, -1.01e-8] {
            let exact = if x2 > 0.0 {
                let x: f64 = (x2 as f64).sqrt();
                (x.sin() / x).powi(2)
            } else {
                let x: f64 = (-x2 as f64).sqrt();
                (x.sinh() / x).powi(2)
            };
            assert!((sinc2_of_square(x2) - exact).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_rate_magnitudes() {
        let m = default_model();
        let c = experiment();
        // Δω = 0 is perfectly matched up to the tiny gain-regime excess.
        let n = pair_rate(&m, &c, 0.0, 1.0, 1.0).unwrap();
        assert!((n - 3.876e-4).abs() < 1e-6, "{n}");
        assert_eq!(pair_rate(&m, &c.with_power(0.0), 1e14, 1.0, 1.0).unwrap(), 0.0);
        assert!(pair_rate(&m, &c, 1e14, 0.0, 1.0).is_err());
    }

    #[test]
    fn band_rate_scales_with_power_squared() {
        let m = default_model();
        let c = experiment().with_power(0.004);
        let r1 = band_pair_rate(&m, &c, 660.0, 10.0, 4000).unwrap();
        let r2 = band_pair_rate(&m, &c.with_power(0.008), 660.0, 10.0, 4000).unwrap();
        assert!(r1 > 1e6 && r1 < 1e8, "{r1}");
        assert!((r2 / r1 - 4.0).abs() < 1e-2);
    }

    #[test]
    fn quartic_branch_closed_form() {
        let (b2, b4) = (-2e-28, 1e-56);
        let m = quartic_model(b2, b4);
        let c = config_at(m.omega_ref());
        let sols = branch_solutions(&m, &c).unwrap();
        assert_eq!(sols.len(), 1, "{sols:?}");
        let expect = (-12.0 * b2 / b4).sqrt();
        // pump wavelength round trip shifts ωp by ~1e-16 relative
        assert!(((sols[0].delta_omega - expect) / expect).abs() < 2e-6);
        assert_eq!(sols[0].kind, SolutionKind::Branch);
    }

    #[test]
    fn trunk_closed_form() {
        let b2 = -1e-27;
        let m = quartic_model(b2, 0.0);
        let c = config_at(m.omega_ref());
        let sols = trunk_solutions(&m, &c).unwrap();
        assert_eq!(sols.len(), 1);
        let expect = (4.0 * c.gamma * c.power / b2.abs()).sqrt();
        assert!(((sols[0].delta_omega - expect) / expect).abs() < 2e-6);
        assert!(branch_solutions(&m, &c).unwrap().is_empty());
    }

    #[test]
    fn trunk_collapses_with_power() {
        let m = quartic_model(-1e-27, 0.0);
        let c = config_at(m.omega_ref()).with_power(1e-12);
        let sols = trunk_solutions(&m, &c).unwrap();
        assert_eq!(sols.len(), 1);
        assert!(sols[0].delta_omega < 1e11);
        assert!(trunk_solutions(&m, &c.with_power(0.0)).is_err());
    }

    #[test]
    fn default_branch_at_calibration_point() {
        let m = default_model();
        let sols = branch_solutions(&m, &experiment()).unwrap();
        assert_eq!(sols.len(), 1);
        assert!((sols[0].lambda_s - 660.0).abs() < 0.01, "{sols:?}");
        assert!((sols[0].lambda_i - 896.8).abs() < 0.1);
        assert!(branch_solutions(&m, &experiment().with_pump_nm(750.0)).unwrap().is_empty());
    }

    #[test]
    fn default_trunk_is_near_pump() {
        let m = default_model();
        let sols = trunk_solutions(&m, &experiment()).unwrap();
        assert!(!sols.is_empty());
        for s in sols {
            assert!((s.lambda_s - 760.4).abs() < 15.0, "{s:?}");
        }
    }

    #[test]
    fn calibration_reproduces_default_curvature() {
        let q = calibrate_default_curvature(760.4, 660.0).unwrap();
        let rel = ((q - crate::dispersion::DEFAULT_CURVATURE_PER_NM) / q).abs();
        assert!(rel < 1e-9, "{q:e}");
    }

    #[test]
    fn attenuation_lengths() {
        assert!((attenuation_efolding_length(50.0).unwrap() - 86.86).abs() < 0.01);
        assert!((attenuation_efolding_length(100.0).unwrap() - 43.43).abs() < 0.01);
        let unit = 10.0 / std::f64::consts::LN_10;
        assert!((attenuation_efolding_length(unit).unwrap() - 1000.0).abs() < 1e-9);
        assert!(attenuation_efolding_length(0.0).is_err());
        assert!(attenuation_efolding_length(-3.0).is_err());
    }

    #[test]
    fn dispersionless_map_is_flat() {
        let t = GvdTable::sample(|_| 0.0, 600.0, 1000.0, 10, "zero").unwrap();
        let m = DispersionModel::build_from_gvd(&t).unwrap();
        let c = experiment().with_pump_nm(780.0);
        let grid = MapGrid::new((770.0, 790.0), (700.0, 860.0), 5, 17).with_oversample(3);
        let map = spectral_map(&m, &c, &grid, false).unwrap();
        let g = c.gamma_p_l();
        for row in &map.values {
            for &v in row {
                assert!((v - g * g).abs() <= 1e-15 * g * g);
            }
        }
    }

    #[test]
    fn map_parallel_matches_serial() {
        let m = default_model();
        let c = experiment();
        let grid = MapGrid::new((755.0, 770.0), (600.0, 1000.0), 8, 50).with_oversample(4);
        let a = spectral_map(&m, &c, &grid, false).unwrap();
        let b = spectral_map(&m, &c, &grid, true).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn map_rejects_out_of_range() {
        let m = default_model();
        let grid = MapGrid::new((755.0, 770.0), (400.0, 900.0), 4, 4);
        assert!(spectral_map(&m, &experiment(), &grid, false).is_err());
    }

    #[test]
    fn ridge_segments_simple() {
        let map = SpectralDensityMap {
            lambda_p_axis: vec![1.0],
            lambda_axis: (0..8).map(f64::from).collect(),
            values: vec![vec![0.0, 1.0, 0.9, 0.1, 0.0, 0.7, 0.0, 0.6]],
            peak_density: 1.0,
        };
        assert_eq!(map.ridge_segments(0, 0.5), vec![(1, 2), (5, 5), (7, 7)]);
    }

    #[test]
    fn validate_config() {
        let m = default_model();
        assert!(experiment().validate(&m).is_ok());
        let mut c = experiment();
        c.gamma = 0.0;
        assert!(c.validate(&m).is_err());
        assert!(experiment().with_power(-1.0).validate(&m).is_err());
        assert!(experiment().with_pump_nm(2000.0).validate(&m).is_err());
    }
}
