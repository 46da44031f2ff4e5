//! Event-level Monte Carlo of the coincidence experiment.
//!
//! Pairs are born at Poisson times. Each pair lands in one of three
//! arrival-time-difference classes: central (both photons took the same arm,
//! weight `(1 + μcosφ)/2`) or ±τ (different arms, weight ¼ each). The class
//! weights sum to `1 + (μ/2)cosφ`; the emission rate is modulated by that
//! total and the class draw normalised by it, which reproduces the ungated
//! fringe `1 + (μ/2)cosφ` and the gated fringe `1 + μcosφ` at once.
//!
//! Photons are then thinned by detector efficiency and given Gaussian timing
//! jitter; dark and background counts are independent Poisson streams.
//! Coincidences pair each signal event with the nearest unused idler event
//! inside the TAC range (start–stop style); a gate of width `T` keeps pairs
//! with `|t_idler − t_signal| ≤ T/2`. Dead time is not modelled.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::format_csv;
use crate::units::{nm_to_k, C};

pub const SCAN_CSV_HEADER: &[&str] = &["delta_x_nm", "coincidences", "duration_s"];
pub const TAC_CSV_HEADER: &[&str] = &["dt_ns", "counts"];

/// Detector timing jitter assumed when none is given, s.
pub const DEFAULT_JITTER_SIGMA: f64 = 150e-12;

/// Lumped pair-level transmission from fiber output to detectors (coupling,
/// band-pass filters, pump rejection). Not a measured value; see
/// [`detected_rate_estimate`].
pub const DEFAULT_OPTICS_THROUGHPUT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// Fringe-averaged pair rate arriving at the detectors, 1/s.
    pub pair_rate: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub dark_s: f64,
    pub dark_i: f64,
    pub background_s: f64,
    pub background_i: f64,
    pub mu: f64,
    /// Arm delay, s.
    pub tau: f64,
    /// Per-detector Gaussian timing jitter (standard deviation), s.
    pub jitter_sigma: f64,
}

impl Default for SourceParams {
    fn default() -> Self {
        Self {
            pair_rate: 2000.0,
            eta_s: 0.32,
            eta_i: 0.33,
            dark_s: 0.0,
            dark_i: 0.0,
            background_s: 0.0,
            background_i: 0.0,
            mu: 0.83,
            tau: 0.6 / C,
            jitter_sigma: DEFAULT_JITTER_SIGMA,
        }
    }
}

impl SourceParams {
    /// Unit efficiencies, no dark or background counts.
    pub fn ideal(pair_rate: f64, mu: f64, tau: f64) -> Self {
        Self {
            pair_rate,
            eta_s: 1.0,
            eta_i: 1.0,
            mu,
            tau,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("pair_rate", self.pair_rate),
            ("dark_s", self.dark_s),
            ("dark_i", self.dark_i),
            ("background_s", self.background_s),
            ("background_i", self.background_i),
            ("jitter_sigma", self.jitter_sigma),
        ];
        for (name, v) in rates {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("eta_s", self.eta_s), ("eta_i", self.eta_i), ("mu", self.mu)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter("tau must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    /// Coincidence window width `T`, s.
    pub t_gate: f64,
    /// TAC histogram bin width, s.
    pub tac_bin: f64,
    /// TAC half-range: events further apart are never paired, s.
    pub tac_range: f64,
}

impl GateConfig {
    pub fn new(t_gate: f64) -> Result<Self> {
        let g = Self {
            t_gate,
            ..Self::default()
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_gate(mut self, t_gate: f64) -> Self {
        self.t_gate = t_gate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_gate > 0.0) {
            return Err(Error::InvalidParameter("gate width must be > 0".into()));
        }
        if !(self.tac_bin > 0.0) || self.tac_bin > 0.25 * self.t_gate {
            return Err(Error::InvalidParameter("TAC bin must be > 0 and at most a quarter of the gate".into()));
        }
        if !(self.tac_range >= 0.5 * self.t_gate) {
            return Err(Error::InvalidParameter("TAC range must cover the gate".into()));
        }
        Ok(())
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            t_gate: 6e-9,
            tac_bin: 50e-12,
            tac_range: 10e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    Signal,
    Idler,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub detector: Detector,
}

/// Arrival-time-difference histogram, bins centred on multiples of `bin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TacHistogram {
    pub bin: f64,
    /// Index of the bin centred on zero.
    pub zero_index: usize,
    pub counts: Vec<u64>,
}

impl TacHistogram {
    pub fn new(bin: f64, range: f64) -> Self {
        let half = (range / bin).ceil() as usize;
        Self {
            bin,
            zero_index: half,
            counts: vec![0; 2 * half + 1],
        }
    }

    pub fn center(&self, index: usize) -> f64 {
        (index as f64 - self.zero_index as f64) * self.bin
    }

    pub fn add(&mut self, dt: f64) {
        let idx = (dt / self.bin).round() + self.zero_index as f64;
        if idx >= 0.0 && (idx as usize) < self.counts.len() {
            self.counts[idx as usize] += 1;
        }
    }

    fn bins_within(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, u64)> + '_ {
        (0..self.counts.len())
            .map(|i| (self.center(i), self.counts[i]))
            .filter(move |&(t, _)| t >= lo && t <= hi)
    }

    /// Counts in bins centred within `[lo, hi]`.
    pub fn window_sum(&self, lo: f64, hi: f64) -> u64 {
        self.bins_within(lo, hi).map(|(_, c)| c).sum()
    }

    /// Count-weighted mean of bin centres within `[lo, hi]`.
    pub fn centroid(&self, lo: f64, hi: f64) -> Option<f64> {
        let (mut w, mut m) = (0.0, 0.0);
        for (t, c) in self.bins_within(lo, hi) {
            w += c as f64;
            m += c as f64 * t;
        }
        (w > 0.0).then(|| m / w)
    }

    pub fn merge(&mut self, other: &TacHistogram) {
        assert_eq!(self.counts.len(), other.counts.len());
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<[f64; 2]> = (0..self.counts.len())
            .map(|i| [self.center(i) * 1e9, self.counts[i] as f64])
            .collect();
        format_csv(&[], TAC_CSV_HEADER, rows.iter().map(|r| &r[..]))
    }
}

/// Output of [`count_coincidences`].
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceCount {
    pub count: u64,
    pub histogram: TacHistogram,
    /// `t_idler − t_signal` of every paired event inside the TAC range.
    pub matched_dt: Vec<f64>,
}

fn gated(dts: &[f64], t_gate: f64) -> u64 {
    dts.iter().filter(|dt| dt.abs() <= 0.5 * t_gate).count() as u64
}

/// Pair each signal event with the nearest unused idler event within the
/// TAC range, in signal-time order, and count pairs inside the gate.
pub fn count_coincidences(events: &[Event], gate: &GateConfig) -> Result<CoincidenceCount> {
    gate.validate()?;
    if let Some(i) = events.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(Error::Unsorted(i + 1));
    }
    let idlers: Vec<f64> = events
        .iter()
        .filter(|e| e.detector == Detector::Idler)
        .map(|e| e.time)
        .collect();
    let mut used = vec![false; idlers.len()];
    let mut start = 0;
    let mut histogram = TacHistogram::new(gate.tac_bin, gate.tac_range);
    let mut matched_dt = Vec::new();
    for s in events.iter().filter(|e| e.detector == Detector::Signal).map(|e| e.time) {
        while start < idlers.len() && idlers[start] < s - gate.tac_range {
            start += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        for (j, &t) in idlers.iter().enumerate().skip(start) {
            if t > s + gate.tac_range {
                break;
            }
            let dt = t - s;
            if !used[j] && best.is_none_or(|(_, b)| dt.abs() < b.abs()) {
                best = Some((j, dt));
            }
        }
        if let Some((j, dt)) = best {
            used[j] = true;
            histogram.add(dt);
            matched_dt.push(dt);
        }
    }
    Ok(CoincidenceCount {
        count: gated(&matched_dt, gate.t_gate),
        histogram,
        matched_dt,
    })
}

/// SplitMix64 finaliser, used to derive independent per-point seeds.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of scan point `index` under master seed `seed`.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(seed) ^ index as u64)
}

fn poisson_times<R: Rng>(rng: &mut R, rate: f64, duration: f64, detector: Detector, out: &mut Vec<Event>) {
    if rate <= 0.0 {
        return;
    }
    let n = Poisson::new(rate * duration).map(|p| p.sample(rng) as usize).unwrap_or(0);
    out.extend((0..n).map(|_| Event {
        time: rng.random::<f64>() * duration,
        detector,
    }));
}

/// Detector events over `duration` s at interferometer phase `phi`, sorted
/// by time.
pub fn emit_events(params: &SourceParams, phi: f64, duration: f64, seed: u64) -> Result<Vec<Event>> {
    params.validate()?;
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidParameter("duration must be > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cos = phi.rem_euclid(TAU).cos();
    let total = 1.0 + 0.5 * params.mu * cos;
    let p_central = 0.5 * (1.0 + params.mu * cos) / total;
    let p_side = 0.25 / total;
    let rate = params.pair_rate * total;
    let jitter = Normal::new(0.0, params.jitter_sigma)
        .map_err(|e| Error::InvalidParameter(format!("jitter: {e}")))?;

    let mut events = Vec::new();
    if rate > 0.0 {
        let gap = Exp::new(rate).map_err(|e| Error::InvalidParameter(format!("rate: {e}")))?;
        let mut t = gap.sample(&mut rng);
        while t < duration {
            let u: f64 = rng.random();
            // Signal through the long arm puts the idler first (dt = −τ).
            let (ds, di) = if u < p_central {
                (0.0, 0.0)
            } else if u < p_central + p_side {
                (params.tau, 0.0)
            } else {
                (0.0, params.tau)
            };
            let keep_s = rng.random::<f64>() < params.eta_s;
            let keep_i = rng.random::<f64>() < params.eta_i;
            let js = jitter.sample(&mut rng);
            let ji = jitter.sample(&mut rng);
            if keep_s {
                events.push(Event {
                    time: t + ds + js,
                    detector: Detector::Signal,
                });
            }
            if keep_i {
                events.push(Event {
                    time: t + di + ji,
                    detector: Detector::Idler,
                });
            }
            t += gap.sample(&mut rng);
        }
    }
    poisson_times(&mut rng, params.dark_s + params.background_s, duration, Detector::Signal, &mut events);
    poisson_times(&mut rng, params.dark_i + params.background_i, duration, Detector::Idler, &mut events);
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(events)
}

/// Interferometer settings of a fringe scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub pump_nm: f64,
    pub delta_l_m: f64,
    pub delta_x_nm: Vec<f64>,
    pub duration_per_point: f64,
}

impl ScanSpec {
    /// `n` points evenly covering `periods` coincidence fringe periods
    /// (`λp/2` each), starting at zero offset.
    pub fn evenly_spaced(pump_nm: f64, delta_l_m: f64, n: usize, periods: f64, duration_per_point: f64) -> Self {
        let step = periods * 0.5 * pump_nm / n as f64;
        Self {
            pump_nm,
            delta_l_m,
            delta_x_nm: (0..n).map(|i| i as f64 * step).collect(),
            duration_per_point,
        }
    }

    /// Two-photon phase `2kp(ΔL + Δx)` of point `index`, reduced so the large
    /// ΔL term does not swamp the scan offset.
    pub fn phase(&self, index: usize) -> f64 {
        let k_p = nm_to_k(self.pump_nm);
        (2.0 * k_p * self.delta_l_m).rem_euclid(TAU) + 2.0 * k_p * self.delta_x_nm[index] * 1e-9
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceScan {
    pub delta_x_nm: Vec<f64>,
    pub counts: Vec<u64>,
    pub duration_per_point: f64,
    pub tac_histograms: Vec<TacHistogram>,
    pub seed: u64,
    pub gate: GateConfig,
    #[serde(skip)]
    matched_dt: Vec<Vec<f64>>,
}

impl CoincidenceScan {
    /// Counts per point for another gate width on the same event streams.
    pub fn counts_for_gate(&self, t_gate: f64) -> Vec<u64> {
        self.matched_dt.iter().map(|d| gated(d, t_gate)).collect()
    }

    /// `(Δx nm, counts)` pairs ready for fringe fitting.
    pub fn fringe(&self, t_gate: f64) -> Vec<(f64, f64)> {
        self.delta_x_nm
            .iter()
            .zip(self.counts_for_gate(t_gate))
            .map(|(&x, c)| (x, c as f64))
            .collect()
    }

    /// Sum of the per-point TAC histograms.
    pub fn total_histogram(&self) -> TacHistogram {
        let mut h = TacHistogram::new(self.gate.tac_bin, self.gate.tac_range);
        for t in &self.tac_histograms {
            h.merge(t);
        }
        h
    }

    pub fn to_csv(&self) -> String {
        self.to_csv_for_gate(self.gate.t_gate)
    }

    pub fn to_csv_for_gate(&self, t_gate: f64) -> String {
        let rows: Vec<[f64; 3]> = self
            .delta_x_nm
            .iter()
            .zip(self.counts_for_gate(t_gate))
            .map(|(&x, c)| [x, c as f64, self.duration_per_point])
            .collect();
        format_csv(&[], SCAN_CSV_HEADER, rows.iter().map(|r| &r[..]))
    }
}

/// Simulate every point of `spec`; point `i` uses seed
/// [`point_seed`]`(seed, i)`, so the parallel and serial paths agree exactly.
pub fn scan_fringe(params: &SourceParams, gate: &GateConfig, spec: &ScanSpec, seed: u64, parallel: bool) -> Result<CoincidenceScan> {
    params.validate()?;
    gate.validate()?;
    let expect_tau = spec.delta_l_m / C;
    if ((params.tau - expect_tau) / expect_tau).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "tau {} s does not match path difference {} m",
            params.tau, spec.delta_l_m
        )));
    }
    if spec.delta_x_nm.is_empty() {
        return Err(Error::InvalidParameter("scan has no points".into()));
    }
    let run = |i: usize| -> Result<CoincidenceCount> {
        let events = emit_events(params, spec.phase(i), spec.duration_per_point, point_seed(seed, i))?;
        count_coincidences(&events, gate)
    };
    let results: Vec<CoincidenceCount> = if parallel {
        (0..spec.delta_x_nm.len()).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..spec.delta_x_nm.len()).map(run).collect::<Result<_>>()?
    };
    let mut scan = CoincidenceScan {
        delta_x_nm: spec.delta_x_nm.clone(),
        counts: Vec::with_capacity(results.len()),
        duration_per_point: spec.duration_per_point,
        tac_histograms: Vec::with_capacity(results.len()),
        seed,
        gate: *gate,
        matched_dt: Vec::with_capacity(results.len()),
    };
    for r in results {
        scan.counts.push(r.count);
        scan.tac_histograms.push(r.histogram);
        scan.matched_dt.push(r.matched_dt);
    }
    Ok(scan)
}

/// Product-chain estimate of the detected coincidence rate: source pair
/// rate × pair-level optics throughput × both detector efficiencies.
pub fn detected_rate_estimate(source_rate: f64, optics_throughput: f64, eta_s: f64, eta_i: f64) -> Result<f64> {
    for (name, v) in [("optics_throughput", optics_throughput), ("eta_s", eta_s), ("eta_i", eta_i)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    if !(source_rate >= 0.0) {
        return Err(Error::InvalidParameter("source rate must be >= 0".into()));
    }
    Ok(source_rate * optics_throughput * eta_s * eta_i)
}

/// Inputs and result of a detected-rate estimate, for provenance records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub source_pair_rate: f64,
    pub optics_throughput: f64,
    pub eta_s: f64,
    pub eta_i: f64,
    pub detected_rate: f64,
}

impl RateEstimate {
    pub fn new(source_pair_rate: f64, optics_throughput: f64, eta_s: f64, eta_i: f64) -> Result<Self> {
        Ok(Self {
            source_pair_rate,
            optics_throughput,
            eta_s,
            eta_i,
            detected_rate: detected_rate_estimate(source_pair_rate, optics_throughput, eta_s, eta_i)?,
        })
    }
}
