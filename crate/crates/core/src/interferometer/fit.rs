//! Sinusoidal fits of measured fringes.
//!
//! The fixed-period fit is linear: `y = A + C·cos θ − S·sin θ` with
//! `θ = 2πx/P`, giving `V = √(C²+S²)/A` and phase `atan2(S, C)`. Points are
//! weighted `1/max(y, 1)` (Poisson counts) and the covariance is scaled by
//! the reduced χ². The free-period fit refines `P` as well by
//! Levenberg–Marquardt.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{format_csv, parse_numeric_csv};

pub const SCAN_CSV_HEADER: &[&str] = &["delta_x_nm", "counts"];

/// Fewest scan points accepted by the fits.
pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub visibility: f64,
    pub visibility_stderr: f64,
    pub phase_rad: f64,
    pub offset: f64,
    pub amplitude: f64,
    /// Fringe period, same unit as the scan axis (nm for scan files).
    #[serde(rename = "period_nm")]
    pub period: f64,
    /// Zero when the period was held fixed.
    #[serde(rename = "period_stderr_nm")]
    pub period_stderr: f64,
    pub reduced_chi2: f64,
}

pub fn scan_from_csv_str(text: &str, source: &str) -> Result<Vec<(f64, f64)>> {
    let t = parse_numeric_csv(text, source, SCAN_CSV_HEADER)?;
    t.rows
        .into_iter()
        .map(|(line, r)| {
            if r.iter().all(|v| v.is_finite()) {
                Ok((r[0], r[1]))
            } else {
                Err(Error::NonFinite { row: line })
            }
        })
        .collect()
}

pub fn scan_to_csv(scan: &[(f64, f64)]) -> String {
    let rows: Vec<[f64; 2]> = scan.iter().map(|&(x, y)| [x, y]).collect();
    format_csv(&[], SCAN_CSV_HEADER, rows.iter().map(|r| &r[..]))
}

fn check_scan(scan: &[(f64, f64)], period: f64) -> Result<()> {
    if scan.len() < MIN_POINTS {
        return Err(Error::InvalidParameter(format!(
            "fringe fit needs at least {MIN_POINTS} points, got {}",
            scan.len()
        )));
    }
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidParameter("fringe period must be > 0".into()));
    }
    if scan.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidParameter("scan contains non-finite values".into()));
    }
    let (lo, hi) = scan
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(x, _)| (l.min(x), h.max(x)));
    // n evenly spaced samples cover n·step, one step more than their span.
    let n = scan.len() as f64;
    if (hi - lo) * n / (n - 1.0) < period * (1.0 - 1e-9) {
        return Err(Error::InvalidParameter("scan must cover at least one fringe period".into()));
    }
    Ok(())
}

fn weight(y: f64) -> f64 {
    1.0 / y.max(1.0)
}

struct Linear {
    params: [f64; 3],
    cov: DMatrix<f64>,
    chi2: f64,
}

fn linear_fit(scan: &[(f64, f64)], period: f64, n_params: usize) -> Result<Linear> {
    let n = scan.len();
    let mut design = DMatrix::zeros(n, 3);
    let mut rhs = DVector::zeros(n);
    for (r, &(x, y)) in scan.iter().enumerate() {
        let sw = weight(y).sqrt();
        let th = TAU * x / period;
        design[(r, 0)] = sw;
        design[(r, 1)] = sw * th.cos();
        design[(r, 2)] = -sw * th.sin();
        rhs[r] = sw * y;
    }
    let normal = design.transpose() * &design;
    let inv = normal
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::FitNonConvergence("singular design matrix".into()))?;
    let p = &inv * design.transpose() * &rhs;
    let resid = &rhs - &design * &p;
    let chi2 = resid.norm_squared();
    let dof = (n - n_params).max(1) as f64;
    Ok(Linear {
        params: [p[0], p[1], p[2]],
        cov: inv * (chi2 / dof),
        chi2,
    })
}

fn summarize(a: f64, c: f64, s: f64, cov3: &DMatrix<f64>, period: f64, period_stderr: f64, chi2: f64, dof: usize) -> Result<FringeFit> {
    if !(a > 0.0) {
        return Err(Error::FitNonConvergence(format!("fitted offset {a} is not positive")));
    }
    let b = c.hypot(s);
    let grad = if b > 0.0 {
        [-b / (a * a), c / (b * a), s / (b * a)]
    } else {
        [0.0, 0.0, 0.0]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov3[(i, j)] * grad[j];
        }
    }
    Ok(FringeFit {
        visibility: b / a,
        visibility_stderr: var.max(0.0).sqrt(),
        phase_rad: s.atan2(c),
        offset: a,
        amplitude: b,
        period,
        period_stderr,
        reduced_chi2: chi2 / dof.max(1) as f64,
    })
}

/// Fit `A·(1 + V·cos(2πx/period + φ))` with the period held fixed.
pub fn fit_visibility(scan: &[(f64, f64)], period: f64) -> Result<FringeFit> {
    check_scan(scan, period)?;
    let lin = linear_fit(scan, period, 3)?;
    let [a, c, s] = lin.params;
    summarize(a, c, s, &lin.cov, period, 0.0, lin.chi2, scan.len() - 3)
}

/// As [`fit_visibility`] but with the period free, starting from
/// `initial_period`.
///
/// Starts from offset = mean, amplitude = (max − min)/2 and the phase of the
/// discrete Fourier component at `initial_period`.
pub fn fit_visibility_free_period(scan: &[(f64, f64)], initial_period: f64) -> Result<FringeFit> {
    check_scan(scan, initial_period)?;
    let n = scan.len();
    let mean = scan.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let (ymin, ymax) = scan
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(_, y)| (l.min(y), h.max(y)));
    let (mut re, mut im) = (0.0, 0.0);
    for &(x, y) in scan {
        let th = TAU * x / initial_period;
        re += (y - mean) * th.cos();
        im += (y - mean) * th.sin();
    }
    // Σ (y−ȳ)e^{-iθ} ∝ e^{iφ} for y = A + B cos(θ + φ)
    let phi = (-im).atan2(re);
    let amp = 0.5 * (ymax - ymin);
    let mut p = DVector::from_vec(vec![mean, amp * phi.cos(), amp * phi.sin(), initial_period]);

    let residuals = |p: &DVector<f64>| -> (DVector<f64>, DMatrix<f64>) {
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 4);
        for (i, &(x, y)) in scan.iter().enumerate() {
            let sw = weight(y).sqrt();
            let th = TAU * x / p[3];
            let (sn, cs) = th.sin_cos();
            let model = p[0] + p[1] * cs - p[2] * sn;
            r[i] = sw * (y - model);
            let dth = -TAU * x / (p[3] * p[3]);
            j[(i, 0)] = sw;
            j[(i, 1)] = sw * cs;
            j[(i, 2)] = -sw * sn;
            j[(i, 3)] = sw * (-p[1] * sn - p[2] * cs) * dth;
        }
        (r, j)
    };

    let mut lambda = 1e-3;
    let (mut r, mut jac) = residuals(&p);
    let mut cost = r.norm_squared();
    let mut converged = false;
    for _ in 0..200 {
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut damped = jtj.clone();
        for d in 0..4 {
            damped[(d, d)] += lambda * jtj[(d, d)].max(1e-300);
        }
        let Some(step) = damped.lu().solve(&g) else {
            lambda *= 10.0;
            continue;
        };
        let trial = &p + &step;
        if !(trial[3] > 0.0) {
            lambda *= 10.0;
            continue;
        }
        let (tr, tj) = residuals(&trial);
        let tcost = tr.norm_squared();
        if tcost <= cost {
            let rel_step = step.iter().zip(trial.iter()).map(|(s, v)| (s / v.abs().max(1e-300)).abs()).fold(0.0, f64::max);
            let small_gain = cost - tcost <= 1e-15 * cost.max(1e-300);
            p = trial;
            r = tr;
            jac = tj;
            cost = tcost;
            lambda = (lambda * 0.3).max(1e-12);
            if rel_step < 1e-12 || small_gain || cost == 0.0 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                converged = true; // stationary: no descent direction left
                break;
            }
        }
    }
    if !converged {
        return Err(Error::FitNonConvergence("Levenberg-Marquardt iteration limit reached".into()));
    }
    let dof = n - 4;
    let jtj = jac.transpose() * &jac;
    let cov = jtj
        .try_inverse()
        .ok_or_else(|| Error::FitNonConvergence("singular Jacobian at solution".into()))?
        * (cost / dof as f64);
    let cov3 = cov.view((0, 0), (3, 3)).into_owned();
    let (a, c, s, period) = (p[0], p[1], p[2], p[3]);
    // Fold a negative amplitude into the phase.
    summarize(a, c, s, &cov3, period, cov[(3, 3)].max(0.0).sqrt(), cost, dof)
}
