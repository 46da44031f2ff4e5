//! Separation of output spectra into a pair part (rate ∝ P²) and a linear
//! background (Raman scattering and residual pump, rate ∝ P).
//!
//! Each bin is solved independently from spectra taken at two or more pump
//! powers: `S(P) = a·P + b·P²`. Bins inside the notch-filter stop band carry
//! no data (`None`), never zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub const SPECTRUM_CSV_HEADER: &[&str] = &["lambda_nm", "counts_per_s"];
pub const DECOMPOSITION_CSV_HEADER: &[&str] = &["lambda_nm", "counts_per_s", "pair", "linear", "clamped"];

/// Smallest relative power difference accepted by [`decompose`].
pub const MIN_POWER_SEPARATION: f64 = 0.2;

/// Components smaller than this fraction of the bin's scale are rounding
/// noise and reported as exact zeros.
const ZERO_SNAP: f64 = 1e-12;

/// An output spectrum at one pump power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSpectrum {
    /// Bin centres, nm, strictly increasing.
    pub lambda_axis: Vec<f64>,
    /// Count rate per bin, 1/s. `None` inside the stop band.
    pub counts: Vec<Option<f64>>,
    /// Pump power, W.
    pub pump_power: f64,
    /// Notch-filter stop band `(lo, hi)` in nm.
    pub stop_band: Option<(f64, f64)>,
}

fn in_band(l: f64, band: Option<(f64, f64)>) -> bool {
    band.is_some_and(|(lo, hi)| l >= lo && l <= hi)
}

fn check_axis(axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::InvalidParameter("empty wavelength axis".into()));
    }
    for (row, w) in axis.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotone { row: row + 1 });
        }
    }
    Ok(())
}

impl MeasuredSpectrum {
    /// Builds a spectrum; bins inside `stop_band` are blanked.
    pub fn new(lambda_axis: Vec<f64>, counts: Vec<f64>, pump_power: f64, stop_band: Option<(f64, f64)>) -> Result<Self> {
        if lambda_axis.len() != counts.len() {
            return Err(Error::InvalidParameter("axis and counts differ in length".into()));
        }
        check_axis(&lambda_axis)?;
        if !(pump_power > 0.0) {
            return Err(Error::InvalidParameter(format!("pump power must be > 0, got {pump_power}")));
        }
        let counts = lambda_axis
            .iter()
            .zip(counts)
            .enumerate()
            .map(|(row, (&l, c))| {
                if in_band(l, stop_band) {
                    Ok(None)
                } else if !c.is_finite() || c < 0.0 {
                    Err(Error::InvalidParameter(format!("bin {row} at {l} nm has invalid count rate {c}")))
                } else {
                    Ok(Some(c))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lambda_axis,
            counts,
            pump_power,
            stop_band,
        })
    }

    /// Parses `lambda_nm,counts_per_s` with `# pump_power_W=` and optional
    /// `# stop_band_nm=lo,hi` comments. `nan` marks a missing bin.
    pub fn from_csv_str(text: &str, source: &str) -> Result<Self> {
        let csv = io::parse_numeric_csv(text, source, SPECTRUM_CSV_HEADER)?;
        let (line, p) = csv
            .comment_value("pump_power_W")
            .ok_or_else(|| Error::parse(source, 1, "missing `# pump_power_W=` comment"))?;
        let pump_power: f64 = p
            .parse()
            .map_err(|_| Error::parse(source, line, format!("bad pump power `{p}`")))?;
        if !(pump_power > 0.0) {
            return Err(Error::parse(source, line, "pump power must be > 0"));
        }
        let stop_band = match csv.comment_value("stop_band_nm") {
            None => None,
            Some((line, v)) => {
                let parts: Vec<f64> = v
                    .split(',')
                    .map(|x| x.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(source, line, format!("bad stop band `{v}`")))?;
                if parts.len() != 2 || !(parts[1] > parts[0]) {
                    return Err(Error::parse(source, line, format!("bad stop band `{v}`")));
                }
                Some((parts[0], parts[1]))
            }
        };
        let mut axis = Vec::with_capacity(csv.rows.len());
        let mut counts = Vec::with_capacity(csv.rows.len());
        for (line, values) in &csv.rows {
            let (l, c) = (values[0], values[1]);
            if !l.is_finite() || axis.last().is_some_and(|&prev| l <= prev) {
                return Err(Error::parse(source, *line, "wavelengths must be strictly increasing"));
            }
            if in_band(l, stop_band) || c.is_nan() {
                counts.push(None);
            } else if !c.is_finite() || c < 0.0 {
                return Err(Error::parse(source, *line, format!("invalid count rate {c}")));
            } else {
                counts.push(Some(c));
            }
            axis.push(l);
        }
        if axis.is_empty() {
            return Err(Error::parse(source, 1, "no data rows"));
        }
        Ok(Self {
            lambda_axis: axis,
            counts,
            pump_power,
            stop_band,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut comments = vec![format!("pump_power_W={}", self.pump_power)];
        if let Some((lo, hi)) = self.stop_band {
            comments.push(format!("stop_band_nm={lo},{hi}"));
        }
        let rows: Vec<[f64; 2]> = self
            .lambda_axis
            .iter()
            .zip(&self.counts)
            .map(|(&l, c)| [l, c.unwrap_or(f64::NAN)])
            .collect();
        io::format_csv(&comments, SPECTRUM_CSV_HEADER, rows.iter().map(|r| r.as_slice()))
    }

    /// Rate through a band-pass filter; see [`band_integrate`].
    pub fn band_rate(&self, center: f64, fwhm: f64, shape: FilterShape) -> Result<f64> {
        band_integrate(&self.lambda_axis, &self.counts, self.stop_band, center, fwhm, shape)
    }
}

/// Per-bin decomposition `S(P) = a·P + b·P²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposedSpectrum {
    pub lambda_axis: Vec<f64>,
    /// Power at which the components are expressed (highest input power), W.
    pub reference_power: f64,
    /// Measured rate at the reference power.
    pub reference_counts: Vec<Option<f64>>,
    /// `b·P_ref²`, the pair part.
    pub pair_component: Vec<Option<f64>>,
    /// `a·P_ref`, the background part.
    pub linear_component: Vec<Option<f64>>,
    /// Bins where the unconstrained solve produced a negative component.
    pub clamped: Vec<bool>,
    pub stop_band: Option<(f64, f64)>,
}

impl DecomposedSpectrum {
    /// Pair rate per bin at pump power `power`.
    pub fn pair_at(&self, power: f64) -> Vec<Option<f64>> {
        let s = (power / self.reference_power).powi(2);
        self.pair_component.iter().map(|v| v.map(|x| x * s)).collect()
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 5]> = (0..self.lambda_axis.len())
            .map(|j| {
                [
                    self.lambda_axis[j],
                    self.reference_counts[j].unwrap_or(f64::NAN),
                    self.pair_component[j].unwrap_or(f64::NAN),
                    self.linear_component[j].unwrap_or(f64::NAN),
                    if self.clamped[j] { 1.0 } else { 0.0 },
                ]
            })
            .collect();
        let mut comments = vec![format!("reference_power_W={}", self.reference_power)];
        if let Some((lo, hi)) = self.stop_band {
            comments.push(format!("stop_band_nm={lo},{hi}"));
        }
        io::format_csv(&comments, DECOMPOSITION_CSV_HEADER, rows.iter().map(|r| r.as_slice()))
    }
}

/// Per-bin coefficients `(a, b, clamped)` from `(P_k, S_k)` samples.
fn solve_bin(samples: &[(f64, f64)]) -> (f64, f64, bool) {
    let (mut a, mut b) = if samples.len() == 2 {
        // Exact solve of S/P = a + b·P through two points.
        let (p1, s1) = samples[0];
        let (p2, s2) = samples[1];
        let (y1, y2) = (s1 / p1, s2 / p2);
        ((y1 * p2 - y2 * p1) / (p2 - p1), (y2 - y1) / (p2 - p1))
    } else {
        // Least squares on S = a·P + b·P².
        let (mut s22, mut s23, mut s24, mut r2, mut r3) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(p, s) in samples {
            s22 += p * p;
            s23 += p * p * p;
            s24 += p * p * p * p;
            r2 += s * p;
            r3 += s * p * p;
        }
        let det = s22 * s24 - s23 * s23;
        ((r2 * s24 - r3 * s23) / det, (s22 * r3 - s23 * r2) / det)
    };
    let p_max = samples.iter().map(|s| s.0).fold(0.0, f64::max);
    let scale: f64 = samples.iter().map(|&(p, s)| (s / p).abs()).sum();
    if a.abs() <= ZERO_SNAP * scale {
        a = 0.0;
    }
    if (b * p_max).abs() <= ZERO_SNAP * scale {
        b = 0.0;
    }
    if a >= 0.0 && b >= 0.0 {
        return (a, b, false);
    }
    // Non-negative refit with the offending component pinned to zero.
    let (mut pp, mut p4, mut sp, mut sp2) = (0.0, 0.0, 0.0, 0.0);
    for &(p, s) in samples {
        pp += p * p;
        p4 += p.powi(4);
        sp += s * p;
        sp2 += s * p * p;
    }
    if a < 0.0 {
        (0.0, (sp2 / p4).max(0.0), true)
    } else {
        ((sp / pp).max(0.0), 0.0, true)
    }
}

/// Decomposes two spectra taken at different pump powers.
pub fn decompose(spec1: &MeasuredSpectrum, spec2: &MeasuredSpectrum) -> Result<DecomposedSpectrum> {
    decompose_many(&[spec1.clone(), spec2.clone()])
}

/// Decomposes two or more spectra sharing one wavelength axis. With more
/// than two the per-bin fit is least squares.
pub fn decompose_many(spectra: &[MeasuredSpectrum]) -> Result<DecomposedSpectrum> {
    if spectra.len() < 2 {
        return Err(Error::InvalidParameter("decomposition needs at least two spectra".into()));
    }
    // Canonical order makes the result independent of input order.
    let mut ordered: Vec<&MeasuredSpectrum> = spectra.iter().collect();
    ordered.sort_by(|a, b| a.pump_power.total_cmp(&b.pump_power));
    let first = ordered[0];
    for s in &ordered[1..] {
        if s.lambda_axis != first.lambda_axis {
            return Err(Error::AxisMismatch);
        }
    }
    for w in ordered.windows(2) {
        let (p1, p2) = (w[0].pump_power, w[1].pump_power);
        if (p2 - p1) < MIN_POWER_SEPARATION * p2 {
            return Err(Error::IllConditioned { p1, p2 });
        }
    }
    let reference = ordered[ordered.len() - 1];
    let p_ref = reference.pump_power;
    let n = first.lambda_axis.len();
    let mut pair = Vec::with_capacity(n);
    let mut linear = Vec::with_capacity(n);
    let mut clamped = Vec::with_capacity(n);
    for j in 0..n {
        let samples: Option<Vec<(f64, f64)>> = ordered.iter().map(|s| s.counts[j].map(|c| (s.pump_power, c))).collect();
        match samples {
            Some(samples) => {
                let (a, b, flag) = solve_bin(&samples);
                linear.push(Some(a * p_ref));
                pair.push(Some(b * p_ref * p_ref));
                clamped.push(flag);
            }
            None => {
                linear.push(None);
                pair.push(None);
                clamped.push(false);
            }
        }
    }
    let stop_band = ordered.iter().find_map(|s| s.stop_band);
    Ok(DecomposedSpectrum {
        lambda_axis: first.lambda_axis.clone(),
        reference_power: p_ref,
        reference_counts: reference.counts.clone(),
        pair_component: pair,
        linear_component: linear,
        clamped,
        stop_band,
    })
}

/// Background (linear) rate per bin rescaled to pump power `power`.
pub fn background_model(decomposed: &DecomposedSpectrum, power: f64) -> Result<Vec<Option<f64>>> {
    if !(power > 0.0) {
        return Err(Error::InvalidParameter(format!("pump power must be > 0, got {power}")));
    }
    let s = power / decomposed.reference_power;
    Ok(decomposed.linear_component.iter().map(|v| v.map(|x| x * s)).collect())
}

/// Band-pass filter transmission shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterShape {
    /// Flat top of width FWHM.
    #[default]
    Rectangular,
    /// Gaussian with the given FWHM, peak transmission 1.
    Gaussian,
}

/// Rate transmitted by a filter centred at `center` nm with width `fwhm` nm.
///
/// Bins extend halfway to their neighbours. A rectangular filter weights each
/// bin by the fraction of it inside the passband; a Gaussian weights it by
/// the transmission at its centre and is evaluated over ±2 FWHM.
pub fn band_integrate(
    axis: &[f64],
    values: &[Option<f64>],
    stop_band: Option<(f64, f64)>,
    center: f64,
    fwhm: f64,
    shape: FilterShape,
) -> Result<f64> {
    if !(fwhm > 0.0) {
        return Err(Error::InvalidParameter(format!("fwhm must be > 0, got {fwhm}")));
    }
    if axis.len() != values.len() || axis.is_empty() {
        return Err(Error::InvalidParameter("axis and values differ in length".into()));
    }
    check_axis(axis)?;
    let half = match shape {
        FilterShape::Rectangular => 0.5 * fwhm,
        FilterShape::Gaussian => 2.0 * fwhm,
    };
    let (lo, hi) = (center - half, center + half);
    let n = axis.len();
    let edge = |j: usize| -> f64 {
        // Lower edge of bin j; j == n gives the upper edge of the last bin.
        if n == 1 {
            return if j == 0 { axis[0] - 0.5 } else { axis[0] + 0.5 };
        }
        match j {
            0 => axis[0] - 0.5 * (axis[1] - axis[0]),
            j if j == n => axis[n - 1] + 0.5 * (axis[n - 1] - axis[n - 2]),
            j => 0.5 * (axis[j - 1] + axis[j]),
        }
    };
    if lo < edge(0) || hi > edge(n) {
        return Err(Error::BandOutsideAxis { lo, hi });
    }
    if let Some((s_lo, s_hi)) = stop_band {
        if lo <= s_hi && hi >= s_lo {
            return Err(Error::StopBandOverlap {
                lo,
                hi,
                stop_lo: s_lo,
                stop_hi: s_hi,
            });
        }
    }
    let mut total = 0.0;
    for j in 0..n {
        let (b_lo, b_hi) = (edge(j), edge(j + 1));
        let overlap = (hi.min(b_hi) - lo.max(b_lo)).max(0.0);
        if overlap <= 0.0 {
            continue;
        }
        let v = values[j].ok_or(Error::StopBandOverlap {
            lo,
            hi,
            stop_lo: b_lo,
            stop_hi: b_hi,
        })?;
        let weight = match shape {
            FilterShape::Rectangular => overlap / (b_hi - b_lo),
            FilterShape::Gaussian => {
                let x = (axis[j] - center) / fwhm;
                (-4.0 * std::f64::consts::LN_2 * x * x).exp()
            }
        };
        total += weight * v;
    }
    Ok(total)
}
