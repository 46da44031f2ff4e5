//! `pcfpair` command-line interface.
//!
//! Every subcommand writes its outputs plus `provenance.json` (the fully
//! resolved configuration, tool version and headline results) into `--out`.
//! Exit codes: 0 success, 2 input or parse error, 3 numerical failure.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::dispersion::{default_model, DispersionModel, GvdTable};
use crate::error::{Error, Result};
use crate::interferometer::{
    coincidence_full, coincidence_oracle, coincidence_postselected, fit_visibility, scan_to_csv, FilteredBiphotonSpectrum,
    InterferometerGeometry,
};
use crate::io::read_text;
use crate::mcsim::{scan_fringe, GateConfig, RateEstimate, ScanSpec, SourceParams, DEFAULT_OPTICS_THROUGHPUT};
use crate::phasematch::{band_pair_rate, solutions_over_pump, solutions_to_csv, spectral_map, CellAggregate, FwmConfig, MapGrid};
use crate::spectrum::{decompose_many, FilterShape, MeasuredSpectrum};
use crate::svg;
use crate::units::{nm_to_k, C, PER_W_KM};

#[derive(Debug, Parser)]
#[command(name = "pcfpair", version, about = "Photon pairs from fiber four-wave mixing and their two-photon interference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Zero-dispersion wavelength of a dispersion model.
    Zdw(ZdwArgs),
    /// Pair spectral-density map over pump and photon wavelength.
    Map(MapArgs),
    /// Split spectra at two or more pump powers into pair and linear parts.
    Decompose(DecomposeArgs),
    /// Analytic or spectrally averaged two-photon fringe.
    Fringe(FringeArgs),
    /// Monte Carlo coincidence scan.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FiberArgs {
    /// Dispersion table, CSV `wavelength_nm,D_ps_nm_km`.
    #[arg(long, conflicts_with = "default_fiber")]
    pub gvd: Option<PathBuf>,
    /// Use the built-in calibrated fiber model (the default).
    #[arg(long)]
    pub default_fiber: bool,
}

impl FiberArgs {
    fn model(&self) -> Result<DispersionModel> {
        match &self.gvd {
            Some(path) => DispersionModel::build_from_gvd(&GvdTable::from_csv_path(path)?),
            None => Ok(default_model()),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Output directory.
    #[arg(long, default_value = "pcfpair-out")]
    pub out: PathBuf,
    /// Print results as JSON on standard output.
    #[arg(long)]
    pub json: bool,
    /// Worker threads; without it everything runs serially.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PumpArgs {
    #[arg(long, default_value_t = 760.4)]
    pub pump_nm: f64,
    #[arg(long, default_value_t = 1.93)]
    pub length_m: f64,
    #[arg(long, default_value_t = 102.0)]
    pub gamma_per_w_km: f64,
    #[arg(long, default_value_t = 50.0)]
    pub loss_db_per_km: f64,
}

impl PumpArgs {
    fn config(&self, power_mw: f64) -> FwmConfig {
        FwmConfig {
            gamma: self.gamma_per_w_km * PER_W_KM,
            power: power_mw * 1e-3,
            length: self.length_m,
            lambda_p_nm: self.pump_nm,
            loss_db_per_km: self.loss_db_per_km,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ZdwArgs {
    #[command(flatten)]
    pub fiber: FiberArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MapArgs {
    #[command(flatten)]
    pub fiber: FiberArgs,
    #[command(flatten)]
    pub pump: PumpArgs,
    #[arg(long, default_value_t = 100.0)]
    pub power_mw: f64,
    #[arg(long, default_value_t = 755.0)]
    pub pump_min_nm: f64,
    #[arg(long, default_value_t = 770.0)]
    pub pump_max_nm: f64,
    #[arg(long, default_value_t = 200)]
    pub n_pump: usize,
    #[arg(long, default_value_t = 560.0)]
    pub lambda_min_nm: f64,
    #[arg(long, default_value_t = 1100.0)]
    pub lambda_max_nm: f64,
    #[arg(long, default_value_t = 200)]
    pub n_lambda: usize,
    /// Sub-samples per photon-wavelength cell.
    #[arg(long, default_value_t = 64)]
    pub oversample: usize,
    /// Report the cell mean, or the cell's peak sub-sample.
    #[arg(long, value_enum, default_value_t = AggregateArg::Mean)]
    pub aggregate: AggregateArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecomposeArgs {
    /// Spectrum CSV (`lambda_nm,counts_per_s` with a `# pump_power_W=` line); repeat for each power.
    #[arg(long = "spectrum", required = true, num_args = 1)]
    pub spectra: Vec<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FringeMode {
    Full,
    Postselected,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateArg {
    Mean,
    Peak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeArg {
    Rectangular,
    Gaussian,
}

impl From<ShapeArg> for FilterShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Rectangular => FilterShape::Rectangular,
            ShapeArg::Gaussian => FilterShape::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FringeArgs {
    #[arg(long, default_value_t = 760.4)]
    pub pump_nm: f64,
    #[arg(long, default_value_t = 60.0)]
    pub delta_l_cm: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
    #[arg(long, value_enum, default_value_t = FringeMode::Full)]
    pub mode: FringeMode,
    #[arg(long, default_value_t = 48)]
    pub points: usize,
    /// Scan length in two-photon fringe periods (λp/2 each).
    #[arg(long, default_value_t = 2.0)]
    pub periods: f64,
    /// Signal filter centre (oracle mode); the idler filter sits at the conjugate.
    #[arg(long, default_value_t = 660.0)]
    pub signal_nm: f64,
    #[arg(long, default_value_t = 10.0)]
    pub filter_fwhm_nm: f64,
    #[arg(long, value_enum, default_value_t = ShapeArg::Rectangular)]
    pub filter_shape: ShapeArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    /// Source parameters as JSON (fields of the simulation's source model);
    /// individual flags below override it.
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[command(flatten)]
    pub fiber: FiberArgs,
    #[command(flatten)]
    pub pump: PumpArgs,
    #[arg(long, default_value_t = 4.0)]
    pub power_mw: f64,
    #[arg(long, default_value_t = 60.0)]
    pub delta_l_cm: f64,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Pair rate at the detectors; default: estimated from the fiber model.
    #[arg(long)]
    pub pair_rate: Option<f64>,
    #[arg(long)]
    pub eta_s: Option<f64>,
    #[arg(long)]
    pub eta_i: Option<f64>,
    /// Dark count rate of each detector, 1/s.
    #[arg(long)]
    pub dark: Option<f64>,
    #[arg(long)]
    pub jitter_ps: Option<f64>,
    /// Coincidence gate widths, ns; the first is the primary gate.
    #[arg(long = "gate-ns", num_args = 1, default_values_t = vec![6.0, 1.5])]
    pub gate_ns: Vec<f64>,
    #[arg(long, default_value_t = 50.0)]
    pub tac_bin_ps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tac_range_ns: f64,
    #[arg(long, default_value_t = 24)]
    pub points: usize,
    #[arg(long, default_value_t = 1.0)]
    pub periods: f64,
    #[arg(long, default_value_t = 1.0)]
    pub duration_s: f64,
    /// Signal filter centre and width used for the source-rate estimate.
    #[arg(long, default_value_t = 660.0)]
    pub signal_nm: f64,
    #[arg(long, default_value_t = 10.0)]
    pub filter_fwhm_nm: f64,
    #[arg(long, default_value_t = DEFAULT_OPTICS_THROUGHPUT)]
    pub optics_throughput: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Parse arguments, run, report errors on stderr; returns the exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Zdw(a) => &a.common,
        Command::Map(a) => &a.common,
        Command::Decompose(a) => &a.common,
        Command::Fringe(a) => &a.common,
        Command::Simulate(a) => &a.common,
    };
    match common.threads {
        Some(n) if n > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(|| dispatch(cli)),
        _ => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Zdw(a) => cmd_zdw(a),
        Command::Map(a) => cmd_map(a),
        Command::Decompose(a) => cmd_decompose(a),
        Command::Fringe(a) => cmd_fringe(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish<A: Serialize>(mut self, subcommand: &str, args: &A, results: Value) -> Result<Value> {
        self.files.push("provenance.json".into());
        let record = json!({
            "tool": "pcfpair",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": subcommand,
            "config": args,
            "outputs": self.files,
            "results": results,
        });
        std::fs::write(self.dir.join("provenance.json"), serde_json::to_string_pretty(&record)? + "\n")?;
        Ok(results)
    }
}

fn report(common: &CommonArgs, results: &Value, text: String) -> Result<()> {
    let body = if common.json {
        serde_json::to_string_pretty(results)?
    } else {
        text
    };
    match writeln!(std::io::stdout().lock(), "{body}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn parallel(common: &CommonArgs) -> bool {
    common.threads.is_some_and(|n| n > 1)
}

fn cmd_zdw(a: &ZdwArgs) -> Result<()> {
    let model = a.fiber.model()?;
    let roots = model.zero_dispersion_wavelengths()?;
    let out = Outputs::new(&a.common.out)?;
    let results = json!({
        "model": model.label(),
        "zdw_nm": roots[0],
        "all_zero_crossings_nm": roots,
    });
    let results = out.finish("zdw", a, results)?;
    report(&a.common, &results, format!("{:.6}", roots[0]))
}

fn cmd_map(a: &MapArgs) -> Result<()> {
    let model = a.fiber.model()?;
    let config = a.pump.config(a.power_mw);
    let grid = MapGrid::new(
        (a.pump_min_nm, a.pump_max_nm),
        (a.lambda_min_nm, a.lambda_max_nm),
        a.n_pump,
        a.n_lambda,
    )
    .with_oversample(a.oversample)
    .with_aggregate(match a.aggregate {
        AggregateArg::Mean => CellAggregate::Mean,
        AggregateArg::Peak => CellAggregate::Peak,
    });
    let map = spectral_map(&model, &config, &grid, parallel(&a.common))?;
    let solutions = solutions_over_pump(&model, &config, &map.lambda_p_axis)?;
    let mut out = Outputs::new(&a.common.out)?;
    out.write("map.csv", &map.to_csv(1.0))?;
    out.write("map.svg", &map.to_svg(&solutions))?;
    out.write("solutions.csv", &solutions_to_csv(&solutions))?;
    let branch_pumps: Vec<f64> = {
        let mut v: Vec<f64> = solutions
            .iter()
            .filter(|p| p.kind == crate::phasematch::SolutionKind::Branch)
            .map(|p| p.lambda_p)
            .collect();
        v.dedup();
        v
    };
    let results = json!({
        "model": model.label(),
        "peak_density": map.peak_density,
        "solutions": solutions.len(),
        "branch_pump_min_nm": branch_pumps.first(),
    });
    let results = out.finish("map", a, results)?;
    let text = match branch_pumps.first() {
        Some(lp) => format!("map written; branch solutions from pump {lp:.3} nm"),
        None => "map written; no branch solutions in range".to_string(),
    };
    report(&a.common, &results, text)
}

fn cmd_decompose(a: &DecomposeArgs) -> Result<()> {
    let spectra = a
        .spectra
        .iter()
        .map(|p| {
            let text = read_text(p)?;
            MeasuredSpectrum::from_csv_str(&text, &p.display().to_string())
        })
        .collect::<Result<Vec<_>>>()?;
    let d = decompose_many(&spectra)?;
    let mut out = Outputs::new(&a.common.out)?;
    out.write("decomposition.csv", &d.to_csv())?;
    let series = |v: &[Option<f64>]| -> Vec<(f64, f64)> {
        d.lambda_axis
            .iter()
            .zip(v)
            .filter_map(|(&l, c)| c.map(|c| (l, c)))
            .collect()
    };
    let plot = svg::line_plot(
        &[
            ("measured", series(&d.reference_counts)),
            ("pairs", series(&d.pair_component)),
            ("linear", series(&d.linear_component)),
        ],
        "Spectrum decomposition",
        "wavelength (nm)",
        "counts/s",
    );
    out.write("decomposition.svg", &plot)?;
    let clamped = d.clamped.iter().filter(|c| **c).count();
    let results = json!({
        "bins": d.lambda_axis.len(),
        "reference_power_W": d.reference_power,
        "clamped_bins": clamped,
    });
    let results = out.finish("decompose", a, results)?;
    report(
        &a.common,
        &results,
        format!("decomposed {} bins ({} clamped)", d.lambda_axis.len(), clamped),
    )
}

fn scan_axis(pump_nm: f64, points: usize, periods: f64) -> Vec<f64> {
    let step = periods * 0.5 * pump_nm / points as f64;
    (0..points).map(|i| i as f64 * step).collect()
}

fn cmd_fringe(a: &FringeArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.mu) {
        return Err(Error::InvalidParameter(format!("mu must lie in [0, 1], got {}", a.mu)));
    }
    if a.points == 0 {
        return Err(Error::InvalidParameter("points must be > 0".into()));
    }
    let delta_l = a.delta_l_cm * 1e-2;
    let k_p = nm_to_k(a.pump_nm);
    let xs = scan_axis(a.pump_nm, a.points, a.periods);
    let ys: Vec<f64> = match a.mode {
        FringeMode::Full => xs.iter().map(|x| coincidence_full(k_p, delta_l + x * 1e-9, a.mu)).collect(),
        FringeMode::Postselected => xs
            .iter()
            .map(|x| coincidence_postselected(k_p, delta_l + x * 1e-9, a.mu))
            .collect(),
        FringeMode::Oracle => {
            let g = InterferometerGeometry::from_path_difference(delta_l)?;
            let s = FilteredBiphotonSpectrum::new(a.pump_nm, a.signal_nm, a.filter_fwhm_nm, a.filter_shape.into())?;
            let dx: Vec<f64> = xs.iter().map(|x| x * 1e-9).collect();
            coincidence_oracle(&g, &s, a.mu, &dx)?
        }
    };
    let scan: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
    let fit = fit_visibility(&scan, 0.5 * a.pump_nm)?;
    let mut out = Outputs::new(&a.common.out)?;
    out.write("fringe.csv", &scan_to_csv(&scan))?;
    out.write("fit.json", &(serde_json::to_string_pretty(&fit)? + "\n"))?;
    out.write(
        "fringe.svg",
        &svg::line_plot(&[("o fringe", scan.clone())], "Two-photon fringe", "delta x (nm)", "coincidence (rel.)"),
    )?;
    let results = json!({ "fit": fit, "tau_s": delta_l / C });
    let results = out.finish("fringe", a, results)?;
    report(
        &a.common,
        &results,
        format!("visibility {:.6} ± {:.2e}", fit.visibility, fit.visibility_stderr),
    )
}

fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let mut params = match &a.params {
        Some(p) => serde_json::from_str::<SourceParams>(&read_text(p)?)?,
        None => SourceParams::default(),
    };
    let delta_l = a.delta_l_cm * 1e-2;
    params.tau = delta_l / C;
    if let Some(v) = a.mu {
        params.mu = v;
    }
    if let Some(v) = a.eta_s {
        params.eta_s = v;
    }
    if let Some(v) = a.eta_i {
        params.eta_i = v;
    }
    if let Some(v) = a.dark {
        params.dark_s = v;
        params.dark_i = v;
    }
    if let Some(v) = a.jitter_ps {
        params.jitter_sigma = v * 1e-12;
    }

    let model = a.fiber.model()?;
    let config = a.pump.config(a.power_mw);
    let source_rate = band_pair_rate(&model, &config, a.signal_nm, a.filter_fwhm_nm, 2000)?;
    let estimate = RateEstimate::new(source_rate, a.optics_throughput, params.eta_s, params.eta_i)?;
    params.pair_rate = match (a.pair_rate, &a.params) {
        (Some(r), _) => r,
        (None, Some(_)) => params.pair_rate,
        (None, None) => source_rate * a.optics_throughput,
    };

    let gates: Vec<f64> = a.gate_ns.iter().map(|g| g * 1e-9).collect();
    let primary = *gates
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one gate is required".into()))?;
    let gate = GateConfig {
        t_gate: primary,
        tac_bin: a.tac_bin_ps * 1e-12,
        tac_range: a.tac_range_ns * 1e-9,
    };
    for &g in &gates {
        gate.with_gate(g).validate()?;
    }
    if a.points == 0 {
        return Err(Error::InvalidParameter("points must be > 0".into()));
    }
    let spec = ScanSpec::evenly_spaced(a.pump.pump_nm, delta_l, a.points, a.periods, a.duration_s);
    let scan = scan_fringe(&params, &gate, &spec, a.seed, parallel(&a.common))?;

    let mut out = Outputs::new(&a.common.out)?;
    out.write("tac.csv", &scan.total_histogram().to_csv())?;
    let mut fits = serde_json::Map::new();
    let mut text = Vec::new();
    let mut plot = Vec::new();
    for (&g, g_ns) in gates.iter().zip(&a.gate_ns) {
        let tag = format!("T{g_ns}ns");
        out.write(&format!("scan_{tag}.csv"), &scan.to_csv_for_gate(g))?;
        let fringe = scan.fringe(g);
        let fit = fit_visibility(&fringe, 0.5 * a.pump.pump_nm);
        let entry = match &fit {
            Ok(f) => {
                out.write(&format!("fit_{tag}.json"), &(serde_json::to_string_pretty(f)? + "\n"))?;
                text.push(format!("T = {g_ns} ns: visibility {:.4} ± {:.4}", f.visibility, f.visibility_stderr));
                serde_json::to_value(f)?
            }
            Err(e) => {
                text.push(format!("T = {g_ns} ns: fit failed: {e}"));
                json!({ "error": e.to_string() })
            }
        };
        fits.insert(tag.clone(), entry);
        plot.push((format!("o {tag}"), fringe));
    }
    let series: Vec<(&str, Vec<(f64, f64)>)> = plot.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
    out.write(
        "scan.svg",
        &svg::line_plot(&series, "Simulated coincidence fringes", "delta x (nm)", "coincidences"),
    )?;
    text.push(format!(
        "estimated detected pair rate {:.0}/s (source {:.3e}/s, optics throughput {}, eta {}/{})",
        estimate.detected_rate, estimate.source_pair_rate, estimate.optics_throughput, estimate.eta_s, estimate.eta_i
    ));
    let results = json!({
        "source_params": params,
        "gate": gate,
        "scan": spec,
        "fits": fits,
        "rate_estimate": estimate,
        "seed": a.seed,
    });
    let results = out.finish("simulate", a, results)?;
    report(&a.common, &results, text.join("\n"))
}
