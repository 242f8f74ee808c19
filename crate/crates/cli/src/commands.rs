//! One function per subcommand. Each takes its parsed flags, does all file
//! io through `util::write_atomic`, and maps failures onto the exit-code
//! buckets in `error`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use probe_core::analysis::{
    self, fit_stiffness, segment_regimes, Regime, SegmentationConfig, Trace, TracePoint,
    VariationReport,
};
use probe_core::contact::{run_sweep, EventKind, PlacementSpec, SimTrace};
use probe_core::instrument::{run_virtual_measurement, MeasurementTrace};
use probe_core::mechanics::{hertz_contact_radius, hertz_peak_pressure, MaterialProps};
use probe_core::trace::{micro_string, TraceFile};

use crate::config;
use crate::error::CliError;
use crate::plot::{self, Mark, Series};
use crate::report::{
    AnalysisReport, Corrections, EventsFile, RegimesOut, StiffnessOut, VariationOut,
    ANALYSIS_SCHEMA, VARIATION_SCHEMA,
};
use crate::util::{derive_seed, write_atomic};

// ── simulate ─────────────────────────────────────────────────────────────

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Run-config JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Trace CSV destination; overrides outputs.trace (default trace.csv).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Events JSON destination; overrides outputs.events (default events.json).
    #[arg(long)]
    pub events: Option<PathBuf>,
    /// Optional SVG chart; overrides outputs.plot.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = config::load_config(&args.config)?;
    let run = config::resolve(&cfg)?;
    if run.z_grid[0] != 0.0 {
        return Err(CliError::input(
            "z_grid.start: simulate sweeps from first touch, start must be 0",
        ));
    }
    let sim = run_sweep(&run.device, &run.stylus, run.placement, &run.z_grid, &run.solver)?;

    let meta = json!({
        "schema": "stylus-trace-meta v1",
        "kind": "simulation",
        "device": run.device,
        "stylus": run.stylus,
        "placement": run.placement,
    });
    let trace_path = pick(&args.trace, &cfg.outputs.trace, "trace.csv");
    write_atomic(&trace_path, TraceFile::from_sim(&sim, meta).render()?.as_bytes())?;

    let events_path = pick(&args.events, &cfg.outputs.events, "events.json");
    write_atomic(&events_path, pretty(&EventsFile::from_sim(&sim))?.as_bytes())?;

    if let Some(p) = args.plot.as_ref().or(cfg.outputs.plot.as_ref()) {
        plot_sim(p, &sim);
    }
    println!(
        "simulate: {} points, {} events -> {}, {}",
        sim.states.len(),
        sim.events.len(),
        trace_path.display(),
        events_path.display()
    );
    Ok(())
}

fn plot_sim(path: &Path, sim: &SimTrace) {
    let pts: Vec<(f64, f64)> = sim
        .states
        .iter()
        .map(|s| (s.z_act * 1e6, s.f_z * 1e6))
        .collect();
    let marks: Vec<Mark<'_>> = sim
        .events
        .iter()
        .map(|e| Mark {
            x: e.z_act * 1e6,
            label: event_label(e.kind),
        })
        .collect();
    warn_plot(plot::write_chart(
        path,
        "simulated force vs actuator depth",
        "z (um)",
        "F_z (uN)",
        &[Series {
            label: "F_z",
            color: "#1f77b4",
            points: &pts,
        }],
        &marks,
    ));
}

fn event_label(kind: EventKind) -> &'static str {
    match kind {
        EventKind::SlideOff => "slide-off",
        EventKind::EdgeContactBegin => "edge contact",
        EventKind::FlankContactBegin => "flank contact",
        EventKind::Fracture => "fracture",
    }
}

// ── measure ──────────────────────────────────────────────────────────────

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Run-config JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Trace CSV destination; overrides outputs.trace (default measurement.csv).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Optional SVG chart; overrides outputs.plot.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

pub fn measure(args: &MeasureArgs) -> Result<(), CliError> {
    let cfg = config::load_config(&args.config)?;
    let run = config::resolve(&cfg)?;
    let m = run_virtual_measurement(
        &run.device,
        &run.stylus,
        run.placement,
        run.placement_error,
        &run.instrument,
        &run.z_grid,
        run.seed,
    )?;
    let trace_path = pick(&args.trace, &cfg.outputs.trace, "measurement.csv");
    write_atomic(&trace_path, TraceFile::from_measurement(&m).render()?.as_bytes())?;

    if let Some(p) = args.plot.as_ref().or(cfg.outputs.plot.as_ref()) {
        let pts: Vec<(f64, f64)> = m
            .steps
            .iter()
            .map(|s| (s.z_cmd * 1e6, s.f_readout * 1e6))
            .collect();
        warn_plot(plot::write_chart(
            p,
            "virtual measurement",
            "z commanded (um)",
            "F readout (uN)",
            &[Series {
                label: "F readout",
                color: "#d62728",
                points: &pts,
            }],
            &[],
        ));
    }
    println!(
        "measure: {} points, seed {} -> {}",
        m.steps.len(),
        run.seed,
        trace_path.display()
    );
    Ok(())
}

// ── analyze ──────────────────────────────────────────────────────────────

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Trace CSV to analyze.
    #[arg(long)]
    pub trace: PathBuf,
    /// Report JSON destination (default: <trace>.report.json).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Optional annotated SVG chart.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Known multiplicative gain error to divide out before fitting.
    #[arg(long)]
    pub calibration_bias: Option<f64>,
    /// Apparatus frame stiffness to remove from the fitted slope, N/m.
    #[arg(long)]
    pub apparatus_stiffness: Option<f64>,
    /// Stiffness fit window lower edge, m.
    #[arg(long, default_value_t = 5e-6)]
    pub fit_lo: f64,
    /// Stiffness fit window upper edge, m.
    #[arg(long, default_value_t = 50e-6)]
    pub fit_hi: f64,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    if !(args.fit_lo.is_finite() && args.fit_hi.is_finite()) || args.fit_hi <= args.fit_lo {
        return Err(CliError::input(format!(
            "fit window: need finite lo < hi, got [{}, {}]",
            args.fit_lo, args.fit_hi
        )));
    }
    let tf = TraceFile::load(&args.trace)?;
    let mut trace = tf.to_analysis_trace()?;
    let mut warnings: Vec<String> = Vec::new();

    if let Some(bias) = args.calibration_bias {
        let pts = trace
            .points()
            .iter()
            .map(|p| {
                Ok(TracePoint {
                    z: p.z,
                    f: analysis::correct_calibration(p.f, bias)?,
                    std: p.std.map(|s| s / (1.0 + bias)),
                    mode: p.mode,
                })
            })
            .collect::<Result<Vec<_>, probe_core::error::AnalysisError>>()?;
        trace = Trace::new(pts, trace.meta.clone())?;
    }

    let fit = fit_stiffness(&trace, args.fit_lo, args.fit_hi)?;
    let k_device = match args.apparatus_stiffness {
        Some(k_app) => {
            if !k_app.is_finite() || k_app <= 0.0 {
                return Err(CliError::input(format!(
                    "apparatus-stiffness: must be a finite value > 0 N/m, got {k_app}"
                )));
            }
            analysis::correct_compliance(fit.k, k_app)?
        }
        None => fit.k,
    };

    let seg = match segment_regimes(&trace, &SegmentationConfig::default()) {
        Ok(s) => Some(s),
        Err(e) => {
            warnings.push(format!("regime segmentation skipped: {e}"));
            None
        }
    };

    let (z_min, z_max) = trace.z_span();
    let report = AnalysisReport {
        schema: ANALYSIS_SCHEMA,
        source: args.trace.display().to_string(),
        n_points: trace.len(),
        z_min_um: z_min * 1e6,
        z_max_um: z_max * 1e6,
        corrections: Corrections {
            calibration_bias: args.calibration_bias,
            apparatus_stiffness_n_per_m: args.apparatus_stiffness,
        },
        stiffness: StiffnessOut::new(&fit, k_device),
        regimes: seg.as_ref().map(RegimesOut::from_segmentation),
        warnings: warnings.clone(),
    };
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.trace.with_extension("report.json"));
    write_atomic(&report_path, pretty(&report)?.as_bytes())?;

    if let Some(p) = &args.plot {
        plot_analysis(p, &trace, &report, &fit);
    }
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "k = {} N/m over [{}, {}] um ({} points, residual std {} uN)",
        fit.k,
        fit.z_lo * 1e6,
        fit.z_hi * 1e6,
        fit.n_points,
        fit.residual_std * 1e6
    );
    if args.apparatus_stiffness.is_some() {
        println!("device k after apparatus correction = {k_device} N/m");
    }
    if let Some(r) = &report.regimes {
        let names: Vec<&str> = r.sequence.iter().map(|&x| regime_name(x)).collect();
        println!("regimes: {}", names.join(" -> "));
    }
    println!("report -> {}", report_path.display());
    Ok(())
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Linear => "linear",
        Regime::Geometric => "geometric",
        Regime::Contact => "contact",
    }
}

fn plot_analysis(path: &Path, trace: &Trace, report: &AnalysisReport, fit: &analysis::StiffnessFit) {
    let pts: Vec<(f64, f64)> = trace
        .points()
        .iter()
        .map(|p| (p.z * 1e6, p.f * 1e6))
        .collect();
    let fit_line = [
        (fit.z_lo * 1e6, (fit.intercept + fit.k * fit.z_lo) * 1e6),
        (fit.z_hi * 1e6, (fit.intercept + fit.k * fit.z_hi) * 1e6),
    ];
    let mut marks: Vec<(f64, String)> = Vec::new();
    if let Some(r) = &report.regimes {
        marks.push((r.linear_end_z_um, "linear end".into()));
        marks.push((r.fz_max.z_um, "F_z max".into()));
        if let Some(b) = &r.slide_off_bump {
            marks.push((b.z_um, "slide-off bump".into()));
        }
        if let Some(f) = &r.fracture {
            marks.push((f.z_um, "fracture".into()));
        }
    }
    let marks: Vec<Mark<'_>> = marks
        .iter()
        .map(|(x, l)| Mark { x: *x, label: l })
        .collect();
    warn_plot(plot::write_chart(
        path,
        "trace with stiffness fit",
        "z (um)",
        "F (uN)",
        &[
            Series {
                label: "trace",
                color: "#1f77b4",
                points: &pts,
            },
            Series {
                label: "fit",
                color: "#ff7f0e",
                points: &fit_line,
            },
        ],
        &marks,
    ));
}

// ── sweep-position ───────────────────────────────────────────────────────

#[derive(Debug, Args)]
pub struct SweepPositionArgs {
    /// Run-config JSON file; must carry a `positions` list.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV destination; overrides outputs.csv (default sweep.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional SVG chart; overrides outputs.plot.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Extra support rotation compliance added to the simulated device
    /// only, rad/(N m). The analytic column keeps the configured device.
    #[arg(long)]
    pub inject_support_compliance: Option<f64>,
    /// Fit window lower edge, m (default: 10% into the sweep span).
    #[arg(long)]
    pub fit_lo: Option<f64>,
    /// Fit window upper edge, m (default: 80% into the sweep span).
    #[arg(long)]
    pub fit_hi: Option<f64>,
}

pub fn sweep_position(args: &SweepPositionArgs) -> Result<(), CliError> {
    let cfg = config::load_config(&args.config)?;
    let run = config::resolve(&cfg)?;
    let positions = run
        .positions
        .clone()
        .filter(|p| !p.is_empty())
        .ok_or_else(|| CliError::input("positions: sweep-position needs a non-empty list"))?;

    let mut sim_device = run.device;
    if let Some(cs) = args.inject_support_compliance {
        if !cs.is_finite() || cs < 0.0 {
            return Err(CliError::input(format!(
                "inject-support-compliance: must be a finite value >= 0, got {cs}"
            )));
        }
        sim_device.support_rot_compliance += cs;
        sim_device.validate()?;
    }

    let z0 = run.z_grid[0];
    let span = run.z_grid[run.z_grid.len() - 1] - z0;
    let lo = args.fit_lo.unwrap_or(z0 + 0.1 * span);
    let hi = args.fit_hi.unwrap_or(z0 + 0.8 * span);
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(CliError::input(format!(
            "fit window: need finite lo < hi, got [{lo}, {hi}]"
        )));
    }

    let mut rows: Vec<(f64, f64, f64)> = Vec::with_capacity(positions.len());
    for (i, &x) in positions.iter().enumerate() {
        let analytic = run.device.point_load_stiffness(x);
        let m = run_virtual_measurement(
            &sim_device,
            &run.stylus,
            PlacementSpec::new(x),
            0.0,
            &run.instrument,
            &run.z_grid,
            derive_seed(run.seed, i as u64),
        )?;
        let fit = fit_stiffness(&Trace::from_measurement(&m)?, lo, hi)?;
        rows.push((x, analytic, fit.k));
    }

    let mut csv = String::from("# position-sweep v1\n");
    csv.push_str("x_s_um,k_analytic_n_per_m,k_measured_n_per_m\n");
    for (x, ka, km) in &rows {
        let _ = writeln!(csv, "{},{ka},{km}", micro_string(*x));
    }
    let out_path = pick(&args.out, &cfg.outputs.csv, "sweep.csv");
    write_atomic(&out_path, csv.as_bytes())?;

    if let Some(p) = args.plot.as_ref().or(cfg.outputs.plot.as_ref()) {
        let a: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 * 1e6, r.1)).collect();
        let m: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 * 1e6, r.2)).collect();
        warn_plot(plot::write_chart(
            p,
            "stiffness vs landing position",
            "x_s (um)",
            "k (N/m)",
            &[
                Series {
                    label: "analytic",
                    color: "#2ca02c",
                    points: &a,
                },
                Series {
                    label: "measured",
                    color: "#d62728",
                    points: &m,
                },
            ],
            &[],
        ));
    }
    println!("{:>12} {:>20} {:>20}", "x_s (um)", "k analytic (N/m)", "k measured (N/m)");
    for (x, ka, km) in &rows {
        println!("{:>12.3} {:>20.6} {:>20.6}", x * 1e6, ka, km);
    }
    println!("sweep-position: {} positions -> {}", rows.len(), out_path.display());
    Ok(())
}

// ── hertz ────────────────────────────────────────────────────────────────

#[derive(Debug, Args)]
pub struct HertzArgs {
    /// Normal force, N.
    #[arg(long)]
    pub force: f64,
    /// Tip sphere radius, m.
    #[arg(long)]
    pub radius: f64,
    /// Sphere Young's modulus, Pa (default: diamond).
    #[arg(long, default_value_t = 1141e9)]
    pub sphere_modulus: f64,
    /// Sphere Poisson ratio (default: diamond).
    #[arg(long, default_value_t = 0.07)]
    pub sphere_poisson: f64,
    /// Flat Young's modulus, Pa (default: silicon).
    #[arg(long, default_value_t = 170e9)]
    pub flat_modulus: f64,
    /// Flat Poisson ratio (default: silicon).
    #[arg(long, default_value_t = 0.28)]
    pub flat_poisson: f64,
}

pub fn hertz(args: &HertzArgs) -> Result<(), CliError> {
    // fracture_strength is irrelevant to elastic contact; any valid value.
    let sphere = MaterialProps {
        youngs_modulus: args.sphere_modulus,
        poisson_ratio: args.sphere_poisson,
        fracture_strength: 1e9,
    };
    let flat = MaterialProps {
        youngs_modulus: args.flat_modulus,
        poisson_ratio: args.flat_poisson,
        fracture_strength: 1e9,
    };
    sphere.validate()?;
    flat.validate()?;
    let (p0, a) = if args.force == 0.0 {
        if !args.radius.is_finite() || args.radius <= 0.0 {
            return Err(CliError::input(format!(
                "radius: must be a finite value > 0 m, got {}",
                args.radius
            )));
        }
        // Zero-load limit: no pressure, point contact.
        (0.0, 0.0)
    } else {
        (
            hertz_peak_pressure(args.force, args.radius, &sphere, &flat)?,
            hertz_contact_radius(args.force, args.radius, &sphere, &flat)?,
        )
    };
    println!("p0 = {p0} Pa ({} GPa)", p0 / 1e9);
    println!("a = {a} m ({} um)", a * 1e6);
    Ok(())
}

// ── montecarlo ───────────────────────────────────────────────────────────

#[derive(Debug, Args)]
pub struct MontecarloArgs {
    /// Run-config JSON file.
    #[arg(long)]
    pub config: PathBuf,
    /// Number of repeated measurements.
    #[arg(long)]
    pub runs: usize,
    /// Half-width of the uniform landing-point scatter, m.
    #[arg(long, default_value_t = 0.0)]
    pub placement_error_std: f64,
    /// Per-run force columns CSV; overrides outputs.csv (default variation.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report JSON; overrides outputs.report (default variation.json).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn montecarlo(args: &MontecarloArgs) -> Result<(), CliError> {
    let cfg = config::load_config(&args.config)?;
    let run = config::resolve(&cfg)?;
    if args.runs == 0 {
        return Err(CliError::input("runs: must be at least 1"));
    }
    let w = args.placement_error_std;
    if !w.is_finite() || w < 0.0 {
        return Err(CliError::input(format!(
            "placement-error-std: must be a finite value >= 0 m, got {w}"
        )));
    }
    if run.z_grid[0] != 0.0 {
        return Err(CliError::input(
            "z_grid.start: montecarlo compares traces from first touch, start must be 0",
        ));
    }

    // Every run draws its placement error and measurement seed from its
    // own generator, so the fan-out is order-independent and adding runs
    // never perturbs earlier ones.
    let traces: Vec<MeasurementTrace> = (0..args.runs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run.seed, i as u64));
            let err = if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 };
            let seed: u64 = rng.gen();
            run_virtual_measurement(
                &run.device,
                &run.stylus,
                run.placement,
                err,
                &run.instrument,
                &run.z_grid,
                seed,
            )
            .map_err(CliError::from)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    // Two traces can differ by the placement effect at both extremes plus
    // readout noise on each. 8 sigma covers the worst pairwise noise gap
    // across every grid row for batches up to roughly a thousand runs.
    let noise_allowance = 8.0 * run.instrument.load_cell.readout_std();
    let envelope = if w > 0.0 {
        let s = analysis::placement_sensitivity(
            &run.device,
            &run.stylus,
            run.placement,
            &[w, -w],
            &run.z_grid,
        )?;
        s[0] + s[1] + noise_allowance
    } else {
        noise_allowance
    };

    let atraces: Vec<Trace> = traces
        .iter()
        .map(Trace::from_measurement)
        .collect::<Result<_, _>>()?;
    let vr: VariationReport = if args.runs == 1 {
        let t = &atraces[0];
        let (z_lo, z_hi) = t.z_span();
        VariationReport {
            fits: vec![fit_stiffness(t, z_lo, z_hi)?],
            max_pairwise_deviation: 0.0,
            envelope,
            within_envelope: true,
        }
    } else {
        analysis::compare_samples(&atraces, envelope)?
    };

    let n_rows = traces.iter().map(|t| t.steps.len()).min().unwrap_or(0);
    let mut csv = String::from("# variation v1\n");
    csv.push_str("z_cmd_um");
    for i in 0..args.runs {
        let _ = write!(csv, ",f_run{i}_uN");
    }
    csv.push('\n');
    for row in 0..n_rows {
        csv.push_str(&micro_string(traces[0].steps[row].z_cmd));
        for t in &traces {
            let _ = write!(csv, ",{}", micro_string(t.steps[row].f_readout));
        }
        csv.push('\n');
    }
    let csv_path = pick(&args.out, &cfg.outputs.csv, "variation.csv");
    write_atomic(&csv_path, csv.as_bytes())?;

    let out = VariationOut {
        schema: VARIATION_SCHEMA,
        n_runs: args.runs,
        seed: run.seed,
        placement_scatter_um: w * 1e6,
        fits_k_n_per_m: vr.fits.iter().map(|f| f.k).collect(),
        max_pairwise_deviation_un: vr.max_pairwise_deviation * 1e6,
        envelope_un: vr.envelope * 1e6,
        within_envelope: vr.within_envelope,
    };
    let report_path = pick(&args.report, &cfg.outputs.report, "variation.json");
    write_atomic(&report_path, pretty(&out)?.as_bytes())?;

    println!(
        "montecarlo: {} runs, max pairwise deviation {:.3} uN vs envelope {:.3} uN -> within_envelope = {}",
        args.runs,
        vr.max_pairwise_deviation * 1e6,
        vr.envelope * 1e6,
        vr.within_envelope
    );
    println!("columns -> {}, report -> {}", csv_path.display(), report_path.display());
    Ok(())
}

// ── shared helpers ───────────────────────────────────────────────────────

fn pick(flag: &Option<PathBuf>, cfg: &Option<PathBuf>, default: &str) -> PathBuf {
    flag.clone()
        .or_else(|| cfg.clone())
        .unwrap_or_else(|| PathBuf::from(default))
}

fn pretty<T: Serialize>(v: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn warn_plot(r: Result<(), String>) {
    if let Err(e) = r {
        eprintln!("warning: plot not written: {e}");
    }
}
