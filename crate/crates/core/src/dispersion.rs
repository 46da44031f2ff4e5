//! Fiber dispersion: tabulated group-velocity dispersion `D(λ)` turned into a
//! smooth propagation constant `k(ω)`.
//!
//! `β₂(ω) = −D(λ)·λ²/(2πc)` is interpolated by a not-a-knot cubic spline in
//! angular frequency and integrated twice, piece by piece and exactly, to give
//! `k(ω)`. Both integration constants are zero at the reference knot
//! `omega_ref`; they are gauge terms that drop out of the phase mismatch.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;
use crate::roots;
use crate::spline::{CubicSpline, DoubleIntegral};
use crate::units::{d_to_beta2, nm_to_omega, omega_to_nm};

/// Header of the GVD CSV format.
pub const GVD_CSV_HEADER: &[&str] = &["wavelength_nm", "D_ps_nm_km"];

/// Zero-dispersion wavelength of the default fiber model, nm.
pub const DEFAULT_ZDW_NM: f64 = 760.0;

/// Dispersion slope `dD/dλ` of the default model at its zero-dispersion
/// wavelength, ps/(nm²·km). Sets the absolute scale of `Δk` (and hence the
/// trunk width and the phase-matching bandwidth) but not the position of the
/// `Δk = 0` branch.
pub const DEFAULT_SLOPE_PS_NM2_KM: f64 = 0.5;

/// Relative curvature `q` of the default model,
/// `D(λ) = S₀·[(λ − λ₀) + q·(λ − λ₀)²]`, in 1/nm.
///
/// Calibrated so that the `Δk = 0` branch for a 760.4 nm pump lands at a
/// 660 nm signal; see [`crate::phasematch::calibrate_default_curvature`],
/// which reproduces this value.
pub const DEFAULT_CURVATURE_PER_NM: f64 = -3.865_043_685_806_087e-3;

/// Wavelength span (nm) and step of the default model's table.
pub const DEFAULT_TABLE_NM: (f64, f64, f64) = (500.0, 1300.0, 1.0);

/// Tabulated group-velocity dispersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GvdTable {
    /// `(wavelength nm, D ps/(nm·km))`, wavelength strictly increasing.
    pub rows: Vec<(f64, f64)>,
    pub source_label: String,
}

impl GvdTable {
    pub const MIN_ROWS: usize = 4;

    pub fn new(rows: Vec<(f64, f64)>, source_label: impl Into<String>) -> Result<Self> {
        let table = Self {
            rows,
            source_label: source_label.into(),
        };
        table.validate()?;
        Ok(table)
    }

    /// Samples `d_of_nm` on `n` equally spaced wavelengths in `[lo, hi]`.
    pub fn sample<F: Fn(f64) -> f64>(d_of_nm: F, lo: f64, hi: f64, n: usize, label: &str) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewRows { got: n, min: Self::MIN_ROWS });
        }
        let rows = (0..n)
            .map(|i| {
                let nm = if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 };
                (nm, d_of_nm(nm))
            })
            .collect();
        Self::new(rows, label)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.len() < Self::MIN_ROWS {
            return Err(Error::TooFewRows {
                got: self.rows.len(),
                min: Self::MIN_ROWS,
            });
        }
        for (row, &(nm, d)) in self.rows.iter().enumerate() {
            if !nm.is_finite() || !d.is_finite() {
                return Err(Error::NonFinite { row });
            }
            if nm <= 0.0 || (row > 0 && nm <= self.rows[row - 1].0) {
                return Err(Error::NonMonotone { row });
            }
        }
        Ok(())
    }

    /// Parses the `wavelength_nm,D_ps_nm_km` CSV format.
    pub fn from_csv_str(text: &str, source: &str) -> Result<Self> {
        let csv = io::parse_numeric_csv(text, source, GVD_CSV_HEADER)?;
        let mut rows = Vec::with_capacity(csv.rows.len());
        for (line, values) in &csv.rows {
            let (nm, d) = (values[0], values[1]);
            if !nm.is_finite() || !d.is_finite() {
                return Err(Error::parse(source, *line, "non-finite value"));
            }
            if nm <= 0.0 || rows.last().is_some_and(|&(prev, _)| nm <= prev) {
                return Err(Error::parse(source, *line, "wavelengths must be positive and strictly increasing"));
            }
            rows.push((nm, d));
        }
        Self::new(rows, source)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        Self::from_csv_str(&text, &path.display().to_string())
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 2]> = self.rows.iter().map(|&(a, b)| [a, b]).collect();
        io::format_csv(
            &[format!("source={}", self.source_label)],
            GVD_CSV_HEADER,
            rows.iter().map(|r| r.as_slice()),
        )
    }
}

/// Propagation constant `k(ω)` reconstructed from `β₂(ω)`.
///
/// Immutable after construction and `Sync`, so one model can be shared by
/// every worker of a parallel map.
#[derive(Debug, Clone)]
pub struct DispersionModel {
    label: String,
    omega_ref: f64,
    beta2: CubicSpline,
    k: DoubleIntegral,
    /// Affine gauge `c₀ + c₁·ω` added to `k`; zero unless set explicitly.
    gauge: (f64, f64),
}

impl DispersionModel {
    /// Builds the model from a validated GVD table.
    pub fn build_from_gvd(table: &GvdTable) -> Result<Self> {
        table.validate()?;
        // Ascending frequency is descending wavelength.
        let (omega, beta2): (Vec<f64>, Vec<f64>) = table
            .rows
            .iter()
            .rev()
            .map(|&(nm, d)| (nm_to_omega(nm), d_to_beta2(d, nm)))
            .unzip();
        Self::from_beta2_samples(&omega, &beta2, &table.source_label)
    }

    /// Builds the model directly from `β₂` samples (s²/m) at increasing
    /// angular frequencies (rad/s).
    pub fn from_beta2_samples(omega: &[f64], beta2: &[f64], label: &str) -> Result<Self> {
        if omega.len() != beta2.len() {
            return Err(Error::InvalidParameter("omega and beta2 lengths differ".into()));
        }
        if omega.len() < GvdTable::MIN_ROWS {
            return Err(Error::TooFewRows {
                got: omega.len(),
                min: GvdTable::MIN_ROWS,
            });
        }
        for (row, (&w, &b)) in omega.iter().zip(beta2).enumerate() {
            if !w.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite { row });
            }
            if w <= 0.0 || (row > 0 && w <= omega[row - 1]) {
                return Err(Error::NonMonotone { row });
            }
        }
        let spline = CubicSpline::not_a_knot(omega, beta2).ok_or(Error::InvalidParameter(
            "degenerate dispersion samples".into(),
        ))?;
        let mid = 0.5 * (omega[0] + omega[omega.len() - 1]);
        let origin = omega
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - mid).abs().total_cmp(&(b.1 - mid).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let k = spline.double_integral(origin);
        Ok(Self {
            label: label.to_string(),
            omega_ref: omega[origin],
            beta2: spline,
            k,
            gauge: (0.0, 0.0),
        })
    }

    /// Returns a copy whose `k(ω)` carries an extra affine term `c0 + c1·ω`.
    ///
    /// Such terms shift `k` but never the phase mismatch, because
    /// `ωs + ωi − 2ωp` vanishes identically.
    pub fn with_gauge(mut self, c0: f64, c1: f64) -> Self {
        self.gauge = (c0, c1);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn omega_ref(&self) -> f64 {
        self.omega_ref
    }

    /// `(ω_min, ω_max)` in rad/s.
    pub fn valid_range(&self) -> (f64, f64) {
        (self.beta2.min_x(), self.beta2.max_x())
    }

    /// `(λ_min, λ_max)` in nm.
    pub fn wavelength_range_nm(&self) -> (f64, f64) {
        let (lo, hi) = self.valid_range();
        (omega_to_nm(hi), omega_to_nm(lo))
    }

    pub fn contains(&self, omega: f64) -> bool {
        let (lo, hi) = self.valid_range();
        omega >= lo && omega <= hi
    }

    pub fn check_range(&self, omega: f64) -> Result<()> {
        if self.contains(omega) {
            Ok(())
        } else {
            let (min, max) = self.valid_range();
            Err(Error::OutOfRange { omega, min, max })
        }
    }

    pub fn beta2_at(&self, omega: f64) -> Result<f64> {
        self.check_range(omega)?;
        Ok(self.beta2.eval(omega))
    }

    /// Dispersion parameter D (ps/(nm·km)) at wavelength `nm`.
    pub fn d_at_nm(&self, nm: f64) -> Result<f64> {
        let b2 = self.beta2_at(nm_to_omega(nm))?;
        Ok(crate::units::beta2_to_d(b2, nm))
    }

    /// Propagation constant in rad/m, including any gauge term.
    pub fn k_at(&self, omega: f64) -> Result<f64> {
        self.check_range(omega)?;
        Ok(self.k.eval(omega) + self.gauge.0 + self.gauge.1 * omega)
    }

    /// Gauge-free `k(ω)`. Unchecked; callers validate the range first.
    #[inline]
    pub(crate) fn k_curve(&self, omega: f64) -> f64 {
        self.k.eval(omega)
    }

    /// All zero-dispersion wavelengths (nm) in the model range, ascending.
    pub fn zero_dispersion_wavelengths(&self) -> Result<Vec<f64>> {
        let (lo_nm, hi_nm) = self.wavelength_range_nm();
        let f = |nm: f64| self.beta2.eval(nm_to_omega(nm.clamp(lo_nm, hi_nm)));
        let intervals = (8 * self.beta2.knots().len()).max(2000);
        let roots = roots::scan_roots(f, lo_nm, hi_nm, intervals, 0.0, 1e-5);
        if roots.is_empty() {
            Err(Error::NoZeroCrossing)
        } else {
            Ok(roots)
        }
    }

    /// The shortest zero-dispersion wavelength, nm: the `λ₀` at which the
    /// fiber turns from normal to anomalous dispersion in the usual
    /// photonic-crystal-fiber geometry. [`Self::zero_dispersion_wavelengths`]
    /// lists all of them.
    pub fn zero_dispersion_wavelength(&self) -> Result<f64> {
        Ok(self.zero_dispersion_wavelengths()?[0])
    }
}

/// Dispersion parameter of the default fiber model, ps/(nm·km).
pub fn default_d_ps_nm_km(nm: f64) -> f64 {
    default_d_with_curvature(nm, DEFAULT_CURVATURE_PER_NM)
}

pub(crate) fn default_d_with_curvature(nm: f64, curvature: f64) -> f64 {
    let x = nm - DEFAULT_ZDW_NM;
    DEFAULT_SLOPE_PS_NM2_KM * (x + curvature * x * x)
}

pub(crate) fn default_table_with_curvature(curvature: f64) -> GvdTable {
    let (lo, hi, step) = DEFAULT_TABLE_NM;
    let n = ((hi - lo) / step).round() as usize + 1;
    GvdTable::sample(
        |nm| default_d_with_curvature(nm, curvature),
        lo,
        hi,
        n,
        "default NL-PM-760-like fiber",
    )
    .expect("default table is valid")
}

/// Table behind [`default_model`].
pub fn default_table() -> GvdTable {
    default_table_with_curvature(DEFAULT_CURVATURE_PER_NM)
}

/// Default fiber: zero dispersion at 760 nm, slope
/// [`DEFAULT_SLOPE_PS_NM2_KM`], curvature [`DEFAULT_CURVATURE_PER_NM`],
/// tabulated over 500–1300 nm.
pub fn default_model() -> DispersionModel {
    DispersionModel::build_from_gvd(&default_table()).expect("default table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{C, PS_PER_NM_KM};
    use std::f64::consts::PI;

    fn linear_table(zdw: f64, n: usize) -> GvdTable {
        GvdTable::sample(|nm| 0.5 * (nm - zdw), 600.0, 1000.0, n, "linear").unwrap()
    }

    #[test]
    fn table_validation() {
        assert!(matches!(
            GvdTable::new(vec![(700.0, 1.0), (710.0, 1.0), (720.0, 1.0)], "x"),
            Err(Error::TooFewRows { got: 3, .. })
        ));
        assert!(matches!(
            GvdTable::new(vec![(700.0, 1.0), (710.0, 1.0), (705.0, 1.0), (720.0, 1.0)], "x"),
            Err(Error::NonMonotone { row: 2 })
        ));
        assert!(matches!(
            GvdTable::new(vec![(700.0, 1.0), (710.0, f64::NAN), (715.0, 1.0), (720.0, 1.0)], "x"),
            Err(Error::NonFinite { row: 1 })
        ));
        assert!(matches!(
            GvdTable::new(vec![(-1.0, 1.0), (710.0, 1.0), (715.0, 1.0), (720.0, 1.0)], "x"),
            Err(Error::NonMonotone { row: 0 })
        ));
    }

    #[test]
    fn csv_parse_and_errors() {
        let text = "# vendor table\nwavelength_nm,D_ps_nm_km\n700,-10\n750,-2\n800,5\n850,12\n";
        let t = GvdTable::from_csv_str(text, "gvd.csv").unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.rows[2], (800.0, 5.0));

        let bad = "wavelength_nm,D_ps_nm_km\n700,-10\n690,-2\n800,5\n850,12\n";
        assert!(matches!(
            GvdTable::from_csv_str(bad, "gvd.csv"),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad = "wavelength_nm,D_ps_nm_km\n700,-10\n750,x\n";
        assert!(matches!(
            GvdTable::from_csv_str(bad, "gvd.csv"),
            Err(Error::Parse { line: 3, .. })
        ));
        let round = GvdTable::from_csv_str(&t.to_csv(), "gvd.csv").unwrap();
        assert_eq!(round.rows, t.rows);
    }

    #[test]
    fn zero_dispersion_of_linear_table() {
        let model = DispersionModel::build_from_gvd(&linear_table(760.0, 81)).unwrap();
        let zdw = model.zero_dispersion_wavelength().unwrap();
        assert!((zdw - 760.0).abs() < 1e-3, "{zdw}");
        assert!(model.beta2_at(nm_to_omega(760.0)).unwrap().abs() < 1e-32);
    }

    #[test]
    fn shifted_table_moves_zero() {
        let model = DispersionModel::build_from_gvd(&linear_table(780.0, 81)).unwrap();
        assert!((model.zero_dispersion_wavelength().unwrap() - 780.0).abs() < 1e-3);
    }

    #[test]
    fn synthetic_root_recovered() {
        let model = DispersionModel::build_from_gvd(&linear_table(765.3, 120)).unwrap();
        assert!((model.zero_dispersion_wavelength().unwrap() - 765.3).abs() < 0.01);
    }

    #[test]
    fn default_model_zdw() {
        let model = default_model();
        let all = model.zero_dispersion_wavelengths().unwrap();
        assert!((all[0] - 760.0).abs() < 0.1, "{all:?}");
        // The concave default curve turns normal again beyond its maximum.
        assert_eq!(all.len(), 2);
        let second = DEFAULT_ZDW_NM - 1.0 / DEFAULT_CURVATURE_PER_NM;
        assert!((all[1] - second).abs() < 0.01);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let t = GvdTable::sample(|_| 3.0, 600.0, 900.0, 20, "flat").unwrap();
        let model = DispersionModel::build_from_gvd(&t).unwrap();
        assert!(matches!(model.zero_dispersion_wavelength(), Err(Error::NoZeroCrossing)));
    }

    #[test]
    fn constant_d_beta2_pointwise() {
        let d0 = 4.0;
        let t = GvdTable::sample(|_| d0, 600.0, 1000.0, 41, "const").unwrap();
        let model = DispersionModel::build_from_gvd(&t).unwrap();
        let lambda = 800e-9;
        let hand = -d0 * 1e-6 * lambda * lambda / (2.0 * PI * 299_792_458.0);
        let got = model.beta2_at(nm_to_omega(800.0)).unwrap();
        assert!(((got - hand) / hand).abs() < 1e-12, "{got} vs {hand}");
        assert!((PS_PER_NM_KM - 1e-6).abs() < 1e-30 && C > 0.0);
    }

    #[test]
    fn dispersionless_table_is_pure_gauge() {
        let t = GvdTable::sample(|_| 0.0, 600.0, 1000.0, 10, "zero").unwrap();
        let model = DispersionModel::build_from_gvd(&t).unwrap();
        for nm in [600.0, 700.0, 812.5, 1000.0] {
            assert_eq!(model.k_at(nm_to_omega(nm)).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_beta2_double_integral() {
        let b2 = -1e-26;
        let omega: Vec<f64> = (0..41).map(|i| 2.0e15 + 2.5e13 * i as f64).collect();
        let model = DispersionModel::from_beta2_samples(&omega, &vec![b2; 41], "const").unwrap();
        let delta = 1e13;
        let k = model.k_at(model.omega_ref() + delta).unwrap();
        let exact = b2 * delta * delta / 2.0;
        assert!(((k - exact) / exact).abs() < 1e-10, "{k} vs {exact}");
    }

    #[test]
    fn out_of_range_is_error() {
        let model = default_model();
        let (lo, hi) = model.valid_range();
        assert!(matches!(model.k_at(hi * 1.0001), Err(Error::OutOfRange { .. })));
        assert!(matches!(model.beta2_at(lo * 0.999), Err(Error::OutOfRange { .. })));
        assert!(model.k_at(lo).is_ok() && model.k_at(hi).is_ok());
    }

    #[test]
    fn gauge_shifts_k() {
        let model = default_model();
        let w = nm_to_omega(700.0);
        let base = model.k_at(w).unwrap();
        let shifted = model.clone().with_gauge(3.0, 2e-9).k_at(w).unwrap();
        assert!((shifted - base - 3.0 - 2e-9 * w).abs() < 1e-6);
    }
}
