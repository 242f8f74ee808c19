//! Instrument-agnostic analysis of force-deflection traces: stiffness
//! fits, calibration and series-compliance corrections, regime
//! segmentation, placement sensitivity, and sample-to-sample comparison.
//!
//! Everything here operates on immutable [`Trace`] values in SI units and
//! is a pure function of its inputs.

use serde::{Deserialize, Serialize};

use crate::contact::{run_sweep, ContactMode, PlacementSpec, SimTrace, SolverConfig};
use crate::error::AnalysisError;
use crate::instrument::MeasurementTrace;
use crate::mechanics::{DeviceSpec, StylusSpec};

/// One analysed sample: deflection (m), vertical force (N), and optionally
/// the readout std and the simulator's contact-regime label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub z: f64,
    pub f: f64,
    pub std: Option<f64>,
    pub mode: Option<ContactMode>,
}

/// An ordered force-deflection record. Construction validates shape:
/// strictly increasing finite z, finite forces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    points: Vec<TracePoint>,
    /// Free-form provenance carried along from the source file or run.
    pub meta: serde_json::Value,
}

impl Trace {
    pub fn new(points: Vec<TracePoint>, meta: serde_json::Value) -> Result<Self, AnalysisError> {
        if points.is_empty() {
            return Err(AnalysisError::EmptyTrace);
        }
        for (i, p) in points.iter().enumerate() {
            if !p.z.is_finite() || !p.f.is_finite() || p.std.is_some_and(|s| !s.is_finite()) {
                return Err(AnalysisError::NonFinite { index: i });
            }
            if i > 0 && p.z <= points[i - 1].z {
                return Err(AnalysisError::NonMonotonicZ { index: i });
            }
        }
        Ok(Self { points, meta })
    }

    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn z_span(&self) -> (f64, f64) {
        (self.points[0].z, self.points[self.points.len() - 1].z)
    }

    /// View of a simulated sweep: z is the actuator depth, F the vertical
    /// contact force.
    pub fn from_sim(sim: &SimTrace) -> Result<Self, AnalysisError> {
        Self::new(
            sim.states
                .iter()
                .map(|s| TracePoint {
                    z: s.z_act,
                    f: s.f_z,
                    std: None,
                    mode: Some(s.mode),
                })
                .collect(),
            serde_json::Value::Null,
        )
    }

    /// View of a virtual measurement as the experimenter sees it: z is the
    /// commanded position, F the load-cell readout.
    pub fn from_measurement(m: &MeasurementTrace) -> Result<Self, AnalysisError> {
        Self::new(
            m.steps
                .iter()
                .map(|s| TracePoint {
                    z: s.z_cmd,
                    f: s.f_readout,
                    std: Some(s.f_readout_std),
                    mode: Some(s.mode),
                })
                .collect(),
            serde_json::to_value(ProvenanceMeta {
                seed: m.seed,
                placement_x_s: m.placement.x_s,
            })
            .unwrap_or(serde_json::Value::Null),
        )
    }
}

#[derive(Serialize)]
struct ProvenanceMeta {
    seed: u64,
    placement_x_s: f64,
}

/// Ordinary least-squares line through a z window of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StiffnessFit {
    /// Fitted slope, N/m.
    pub k: f64,
    /// Fitted force at z = 0, N.
    pub intercept: f64,
    /// Realized window: first and last z actually used, m.
    pub z_lo: f64,
    pub z_hi: f64,
    /// Scatter of the residuals around the line, N.
    pub residual_std: f64,
    pub n_points: usize,
}

/// Least-squares stiffness over the points with z in [z_lo, z_hi].
pub fn fit_stiffness(trace: &Trace, z_lo: f64, z_hi: f64) -> Result<StiffnessFit, AnalysisError> {
    let pts: Vec<&TracePoint> = trace
        .points()
        .iter()
        .filter(|p| p.z >= z_lo && p.z <= z_hi)
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(AnalysisError::TooFewPoints { found: n });
    }
    let nf = n as f64;
    let mean_z = pts.iter().map(|p| p.z).sum::<f64>() / nf;
    let mean_f = pts.iter().map(|p| p.f).sum::<f64>() / nf;
    let mut szz = 0.0;
    let mut szf = 0.0;
    for p in &pts {
        szz += (p.z - mean_z) * (p.z - mean_z);
        szf += (p.z - mean_z) * (p.f - mean_f);
    }
    let z_scale = pts[n - 1].z.abs().max(pts[0].z.abs()).max(1e-30);
    if szz <= (4.0 * f64::EPSILON * z_scale).powi(2) * nf {
        return Err(AnalysisError::DegenerateZ { spread: szz.sqrt() });
    }
    let k = szf / szz;
    let intercept = mean_f - k * mean_z;
    let mut ssr = 0.0;
    for p in &pts {
        let r = p.f - (k * p.z + intercept);
        ssr += r * r;
    }
    let residual_std = if n > 2 {
        (ssr / (nf - 2.0)).sqrt()
    } else {
        0.0
    };
    Ok(StiffnessFit {
        k,
        intercept,
        z_lo: pts[0].z,
        z_hi: pts[n - 1].z,
        residual_std,
        n_points: n,
    })
}

/// Undo the load cell's multiplicative gain error: F / (1 + bias).
pub fn correct_calibration(f: f64, bias: f64) -> Result<f64, AnalysisError> {
    if !bias.is_finite() || bias <= -1.0 {
        return Err(AnalysisError::BadBias { bias });
    }
    Ok(f / (1.0 + bias))
}

/// Undo the apparatus series compliance: the device stiffness is
/// (1/k_meas - 1/k_app)^-1. Requires 0 < k_meas < k_app; a series
/// measurement can never be stiffer than the apparatus alone.
pub fn correct_compliance(k_meas: f64, k_app: f64) -> Result<f64, AnalysisError> {
    let ordered = k_meas > 0.0 && k_meas < k_app;
    if !ordered {
        return Err(AnalysisError::ComplianceOrder { k_meas, k_app });
    }
    Ok(1.0 / (1.0 / k_meas - 1.0 / k_app))
}

/// Per-point regime label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Force still follows the low-deflection line.
    Linear,
    /// Large-rotation geometry bends the curve, contact still sliding on
    /// the surface.
    Geometric,
    /// Corner or flank contact (or whatever follows the slide-off bump on
    /// unlabeled data).
    Contact,
}

/// Knobs for [`segment_regimes`]. The defaults encode the working rules:
/// the linear regime ends when the force leaves the low-z line by 3% for 3
/// consecutive points; the low-z line is fitted over the first 5% of the z
/// span (at least 5 points); a slide-off bump must recover by 1%; an
/// unlabeled fracture is a terminal collapse losing 80% of the running
/// peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentationConfig {
    pub lin_tol: f64,
    pub lin_consecutive: usize,
    pub lin_fit_span_frac: f64,
    pub lin_fit_min_points: usize,
    pub bump_min_rise: f64,
    pub collapse_frac: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            lin_tol: 0.03,
            lin_consecutive: 3,
            lin_fit_span_frac: 0.05,
            lin_fit_min_points: 5,
            bump_min_rise: 0.01,
            collapse_frac: 0.8,
        }
    }
}

/// A landmark on the trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceMark {
    pub z: f64,
    pub f: f64,
}

/// Decomposition of a trace into its characteristic regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSegmentation {
    /// Last depth at which the force still follows the low-z line, m.
    pub linear_end_z: f64,
    /// Global force maximum.
    pub fz_max: TraceMark,
    /// Local dip after the maximum where contact jumps to the corner.
    pub slide_off_bump: Option<TraceMark>,
    /// Fracture point, from mode labels when present, otherwise from the
    /// terminal-collapse detector.
    pub fracture: Option<TraceMark>,
    /// One label per trace point.
    pub labels: Vec<Regime>,
}

/// Split a trace into linear, geometric and contact regimes and locate its
/// landmarks. Landmark ordering linear_end <= fz_max.z <= bump.z <=
/// fracture.z holds by construction.
pub fn segment_regimes(
    trace: &Trace,
    config: &SegmentationConfig,
) -> Result<RegimeSegmentation, AnalysisError> {
    let pts = trace.points();
    let n = pts.len();
    const MIN_POINTS: usize = 10;
    if n < MIN_POINTS {
        return Err(AnalysisError::TraceTooShort {
            len: n,
            min: MIN_POINTS,
        });
    }

    // Low-z reference line over the opening slice of the z span.
    let (z_min, z_max) = trace.z_span();
    let fit_end_z = z_min + config.lin_fit_span_frac * (z_max - z_min);
    let mut fit_count = pts.iter().take_while(|p| p.z <= fit_end_z).count();
    fit_count = fit_count.max(config.lin_fit_min_points).min(n);
    let base = fit_stiffness(trace, z_min, pts[fit_count - 1].z)?;

    // March forward until the force leaves the line for good.
    let mut linear_end_idx = n - 1;
    let mut run = 0;
    for (i, p) in pts.iter().enumerate().skip(fit_count) {
        let predicted = base.k * p.z + base.intercept;
        let dev = (p.f - predicted).abs() / predicted.abs().max(1e-12);
        if dev > config.lin_tol {
            run += 1;
            if run >= config.lin_consecutive {
                linear_end_idx = i - config.lin_consecutive;
                break;
            }
        } else {
            run = 0;
        }
    }
    let linear_end_z = pts[linear_end_idx].z;

    // The force peak; on every physical trace it falls past the linear
    // span, where the softening geometry takes over.
    let max_idx = (0..n).max_by(|&a, &b| pts[a].f.total_cmp(&pts[b].f)).unwrap();
    let fz_max = TraceMark {
        z: pts[max_idx].z,
        f: pts[max_idx].f,
    };

    // Slide-off bump: first local minimum after the peak that the trace
    // climbs back out of.
    let mut slide_off_bump = None;
    for i in (max_idx + 1).max(1)..n.saturating_sub(1) {
        if pts[i].f <= pts[i - 1].f && pts[i].f <= pts[i + 1].f {
            let recovers = pts[i + 1..]
                .iter()
                .any(|p| p.f >= pts[i].f * (1.0 + config.bump_min_rise));
            if recovers {
                slide_off_bump = Some(TraceMark {
                    z: pts[i].z,
                    f: pts[i].f,
                });
                break;
            }
        }
    }

    // Fracture: trust the simulator's labels when present; otherwise look
    // for a terminal collapse of the force.
    let has_labels = pts.iter().any(|p| p.mode.is_some());
    let fracture = if has_labels {
        pts.iter()
            .rev()
            .find(|p| p.mode == Some(ContactMode::Fractured))
            .map(|p| TraceMark { z: p.z, f: p.f })
    } else {
        let mut running_max = f64::MIN;
        let mut hit = None;
        for p in pts {
            running_max = running_max.max(p.f);
            if running_max > 0.0 && p.f < (1.0 - config.collapse_frac) * running_max {
                hit = Some(TraceMark { z: p.z, f: p.f });
                break;
            }
        }
        hit
    };

    // Labels: linear up to linear_end, contact from the first labeled
    // corner/flank point (or the bump on unlabeled data), geometric
    // between.
    let contact_start_z = pts
        .iter()
        .find(|p| {
            matches!(
                p.mode,
                Some(ContactMode::EdgeContact) | Some(ContactMode::FlankContact)
            )
        })
        .map(|p| p.z)
        .or(slide_off_bump.map(|b| b.z));
    let labels = pts
        .iter()
        .map(|p| {
            if p.z <= linear_end_z {
                Regime::Linear
            } else if contact_start_z.is_some_and(|cz| p.z >= cz) {
                Regime::Contact
            } else {
                Regime::Geometric
            }
        })
        .collect();

    Ok(RegimeSegmentation {
        linear_end_z,
        fz_max,
        slide_off_bump,
        fracture,
        labels,
    })
}

/// How much the vertical force moves when the landing point moves.
///
/// Runs a noiseless sweep at the base placement and at each offset, then
/// reports, per offset, the largest |delta F_z| across depths where both
/// sweeps still slide on the surface (the span a careful measurement would
/// use).
pub fn placement_sensitivity(
    device: &DeviceSpec,
    stylus: &StylusSpec,
    base: PlacementSpec,
    deltas: &[f64],
    z_grid: &[f64],
) -> Result<Vec<f64>, AnalysisError> {
    let config = SolverConfig::default();
    let base_trace = run_sweep(device, stylus, base, z_grid, &config)?;
    let mut out = Vec::with_capacity(deltas.len());
    for &d in deltas {
        let shifted = run_sweep(
            device,
            stylus,
            PlacementSpec::new(base.x_s + d),
            z_grid,
            &config,
        )?;
        let mut worst: Option<f64> = None;
        for (a, b) in base_trace.states.iter().zip(&shifted.states) {
            if a.mode == ContactMode::SurfaceSliding && b.mode == ContactMode::SurfaceSliding {
                let dev = (a.f_z - b.f_z).abs();
                worst = Some(worst.map_or(dev, |w: f64| w.max(dev)));
            }
        }
        out.push(worst.ok_or(AnalysisError::NoCommonSurfaceSpan)?);
    }
    Ok(out)
}

/// Cross-sample comparison result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    /// Per-trace least-squares line over the common window.
    pub fits: Vec<StiffnessFit>,
    /// Largest force disagreement between any two traces at matched z, N.
    pub max_pairwise_deviation: f64,
    /// Budget the deviation is judged against, N.
    pub envelope: f64,
    pub within_envelope: bool,
}

fn interpolate(points: &[TracePoint], z: f64) -> f64 {
    debug_assert!(z >= points[0].z && z <= points[points.len() - 1].z);
    let idx = points.partition_point(|p| p.z < z);
    if idx == 0 {
        return points[0].f;
    }
    if idx >= points.len() {
        return points[points.len() - 1].f;
    }
    let (a, b) = (&points[idx - 1], &points[idx]);
    if a.z == b.z {
        return a.f;
    }
    a.f + (b.f - a.f) * (z - a.z) / (b.z - a.z)
}

/// Compare traces of nominally identical samples: interpolate everything
/// onto the first trace's grid over the common z range and report the
/// worst pairwise force deviation against an allowed envelope. Every trace
/// must overlap the common range by at least half its own span.
pub fn compare_samples(traces: &[Trace], envelope: f64) -> Result<VariationReport, AnalysisError> {
    if traces.len() < 2 {
        return Err(AnalysisError::TooFewTraces { n: traces.len() });
    }
    let lo = traces
        .iter()
        .map(|t| t.z_span().0)
        .fold(f64::MIN, f64::max);
    let hi = traces
        .iter()
        .map(|t| t.z_span().1)
        .fold(f64::MAX, f64::min);
    let mut worst_percent = 100.0f64;
    for t in traces {
        let (a, b) = t.z_span();
        let span = b - a;
        let overlap = ((hi - lo) / span * 100.0).max(0.0);
        worst_percent = worst_percent.min(overlap);
    }
    if hi <= lo || worst_percent < 50.0 {
        return Err(AnalysisError::InsufficientOverlap { worst_percent });
    }

    let grid: Vec<f64> = traces[0]
        .points()
        .iter()
        .map(|p| p.z)
        .filter(|&z| z >= lo && z <= hi)
        .collect();
    if grid.len() < 2 {
        return Err(AnalysisError::InsufficientOverlap { worst_percent });
    }
    let curves: Vec<Vec<f64>> = traces
        .iter()
        .map(|t| grid.iter().map(|&z| interpolate(t.points(), z)).collect())
        .collect();
    let mut max_dev = 0.0f64;
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            for (a, b) in curves[i].iter().zip(&curves[j]) {
                max_dev = max_dev.max((a - b).abs());
            }
        }
    }
    let fits = traces
        .iter()
        .map(|t| fit_stiffness(t, lo, hi))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(VariationReport {
        fits,
        max_pairwise_deviation: max_dev,
        envelope,
        within_envelope: max_dev <= envelope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_trace(k: f64, n: usize, step: f64) -> Trace {
        Trace::new(
            (0..n)
                .map(|i| {
                    let z = i as f64 * step;
                    TracePoint {
                        z,
                        f: k * z,
                        std: None,
                        mode: None,
                    }
                })
                .collect(),
            serde_json::Value::Null,
        )
        .unwrap()
    }

    #[test]
    fn trace_construction_validates_shape() {
        assert!(matches!(
            Trace::new(vec![], serde_json::Value::Null),
            Err(AnalysisError::EmptyTrace)
        ));
        let bad_z = vec![
            TracePoint { z: 0.0, f: 0.0, std: None, mode: None },
            TracePoint { z: 0.0, f: 1.0, std: None, mode: None },
        ];
        assert!(matches!(
            Trace::new(bad_z, serde_json::Value::Null),
            Err(AnalysisError::NonMonotonicZ { index: 1 })
        ));
        let bad_f = vec![TracePoint { z: 0.0, f: f64::NAN, std: None, mode: None }];
        assert!(matches!(
            Trace::new(bad_f, serde_json::Value::Null),
            Err(AnalysisError::NonFinite { index: 0 })
        ));
    }

    #[test]
    fn fit_recovers_an_exact_line() {
        let t = linear_trace(10.0, 50, 1e-6);
        let fit = fit_stiffness(&t, 0.0, 1.0).unwrap();
        assert!((fit.k - 10.0).abs() < 1e-9);
        assert!(fit.intercept.abs() < 1e-12);
        assert!(fit.residual_std < 1e-12);
        assert_eq!(fit.n_points, 50);
    }

    #[test]
    fn uniform_z_offset_leaves_the_slope_untouched() {
        let base: Vec<TracePoint> = (0..80)
            .map(|i| {
                let z = i as f64 * 1.3e-6;
                TracePoint { z, f: 12.0 * z + 5e-7 * (z * 1e6).sin(), std: None, mode: None }
            })
            .collect();
        let offset = 2.5e-4;
        let shifted: Vec<TracePoint> = base
            .iter()
            .map(|p| TracePoint { z: p.z + offset, ..*p })
            .collect();
        let a = fit_stiffness(
            &Trace::new(base, serde_json::Value::Null).unwrap(),
            0.0,
            1.0,
        )
        .unwrap();
        let b = fit_stiffness(
            &Trace::new(shifted, serde_json::Value::Null).unwrap(),
            0.0,
            1.0,
        )
        .unwrap();
        assert!((a.k - b.k).abs() <= 1e-12 * a.k.abs());
        assert!((a.residual_std - b.residual_std).abs() <= 1e-10 * a.residual_std.max(1e-30));
    }

    #[test]
    fn fit_rejects_thin_or_degenerate_windows() {
        let t = linear_trace(10.0, 50, 1e-6);
        assert!(matches!(
            fit_stiffness(&t, 0.0, 1.5e-6),
            Err(AnalysisError::TooFewPoints { found: 2 })
        ));
        assert!(matches!(
            fit_stiffness(&t, 100.0, 200.0),
            Err(AnalysisError::TooFewPoints { found: 0 })
        ));
        // Distinct but numerically indistinguishable z values.
        let squeezed: Vec<TracePoint> = (0..3)
            .map(|i| TracePoint {
                z: 1.0 + i as f64 * 3e-16,
                f: i as f64,
                std: None,
                mode: None,
            })
            .collect();
        let t = Trace::new(squeezed, serde_json::Value::Null).unwrap();
        assert!(matches!(
            fit_stiffness(&t, 0.0, 2.0),
            Err(AnalysisError::DegenerateZ { .. })
        ));
    }

    #[test]
    fn calibration_correction_divides_the_gain_out() {
        assert_eq!(correct_calibration(5e-3, 0.0).unwrap(), 5e-3);
        let f = correct_calibration(1.025e-3, 0.025).unwrap();
        assert!((f - 1e-3).abs() < 1e-18);
        let roundtrip = correct_calibration(7.7e-4 * 1.025, 0.025).unwrap();
        assert!((roundtrip - 7.7e-4).abs() <= 1e-12 * 7.7e-4);
        assert!(matches!(
            correct_calibration(1.0, -1.0),
            Err(AnalysisError::BadBias { .. })
        ));
    }

    #[test]
    fn compliance_correction_inverts_the_series_combination() {
        let series = 1.0 / (1.0 / 10.0 + 1.0 / 4635.0);
        let k = correct_compliance(series, 4635.0).unwrap();
        assert!((k - 10.0).abs() <= 1e-9 * 10.0);
        assert_eq!(correct_compliance(10.0, f64::INFINITY).unwrap(), 10.0);
        assert!(matches!(
            correct_compliance(4635.0, 4635.0),
            Err(AnalysisError::ComplianceOrder { .. })
        ));
        assert!(matches!(
            correct_compliance(5000.0, 4635.0),
            Err(AnalysisError::ComplianceOrder { .. })
        ));
        assert!(correct_compliance(0.0, 10.0).is_err());
    }

    #[test]
    fn pure_linear_trace_segments_as_all_linear() {
        let t = linear_trace(10.0, 100, 1e-6);
        let seg = segment_regimes(&t, &SegmentationConfig::default()).unwrap();
        assert!((seg.linear_end_z - 99e-6).abs() < 1e-12);
        assert!(seg.slide_off_bump.is_none());
        assert!(seg.fracture.is_none());
        assert!(seg.labels.iter().all(|&l| l == Regime::Linear));
    }

    #[test]
    fn constructed_boundaries_are_recovered_within_one_step() {
        // Piecewise curve with known landmarks: line at k = 10 to 50 um,
        // softened rise to a peak at 150 um, fall to a dip at 230 um,
        // partial recovery to 270 um, then a crash.
        let step = 2e-6;
        let pts: Vec<TracePoint> = (0..=150)
            .map(|i| {
                let z = i as f64 * step;
                let f = if z <= 50e-6 {
                    10.0 * z
                } else if z <= 150e-6 {
                    5e-4 + 3.0 * (z - 50e-6)
                } else if z <= 230e-6 {
                    8e-4 - 8.0 * (z - 150e-6)
                } else if z <= 270e-6 {
                    1.6e-4 + 2.0 * (z - 230e-6)
                } else {
                    2.4e-4 - 7.0 * (z - 270e-6)
                };
                TracePoint { z, f, std: None, mode: None }
            })
            .collect();
        let trace = Trace::new(pts, serde_json::Value::Null).unwrap();
        let seg = segment_regimes(&trace, &SegmentationConfig::default()).unwrap();

        // Slope 10 -> 3 leaves the 3% tube two points past the knee.
        assert!(
            (seg.linear_end_z - 50e-6).abs() <= step + 1e-12,
            "linear end at {}",
            seg.linear_end_z
        );
        assert!((seg.fz_max.z - 150e-6).abs() <= step + 1e-12);
        assert!((seg.fz_max.f - 8e-4).abs() < 1e-9);
        let bump = seg.slide_off_bump.expect("dip must be found");
        assert!((bump.z - 230e-6).abs() <= step + 1e-12, "bump at {}", bump.z);
        let fracture = seg.fracture.expect("collapse must be found");
        assert!(fracture.z > bump.z);
        assert!(seg.linear_end_z <= seg.fz_max.z);
        assert!(seg.fz_max.z <= bump.z);
        // Labels respect the same ordering.
        let first_contact = seg.labels.iter().position(|&l| l == Regime::Contact);
        let last_linear = seg
            .labels
            .iter()
            .rposition(|&l| l == Regime::Linear)
            .unwrap();
        assert!(first_contact.unwrap() > last_linear);
    }

    #[test]
    fn labeled_fracture_wins_over_the_collapse_detector() {
        let mut pts: Vec<TracePoint> = (0..30)
            .map(|i| {
                let z = i as f64 * 1e-6;
                TracePoint { z, f: 10.0 * z, std: None, mode: Some(ContactMode::SurfaceSliding) }
            })
            .collect();
        pts.last_mut().unwrap().mode = Some(ContactMode::Fractured);
        let t = Trace::new(pts, serde_json::Value::Null).unwrap();
        let seg = segment_regimes(&t, &SegmentationConfig::default()).unwrap();
        let fr = seg.fracture.unwrap();
        assert!((fr.z - 29e-6).abs() < 1e-12);
    }

    #[test]
    fn segmentation_needs_enough_points() {
        let t = linear_trace(10.0, 9, 1e-6);
        assert!(matches!(
            segment_regimes(&t, &SegmentationConfig::default()),
            Err(AnalysisError::TraceTooShort { len: 9, min: 10 })
        ));
    }

    #[test]
    fn identical_traces_compare_clean() {
        let a = linear_trace(10.0, 60, 1e-6);
        let b = linear_trace(10.0, 60, 1e-6);
        let rep = compare_samples(&[a, b], 1e-6).unwrap();
        assert_eq!(rep.max_pairwise_deviation, 0.0);
        assert!(rep.within_envelope);
        assert_eq!(rep.fits.len(), 2);
    }

    #[test]
    fn scaled_trace_breaks_any_small_envelope() {
        let a = linear_trace(10.0, 60, 1e-6);
        let b = linear_trace(20.0, 60, 1e-6);
        let max_f = 10.0 * 59e-6;
        let rep = compare_samples(&[a, b], max_f * 0.99).unwrap();
        assert!(!rep.within_envelope);
        assert!((rep.max_pairwise_deviation - max_f).abs() < 1e-12);
    }

    #[test]
    fn comparison_rejects_disjoint_or_thin_overlap() {
        let a = linear_trace(10.0, 60, 1e-6);
        let far: Vec<TracePoint> = (0..60)
            .map(|i| {
                let z = 1e-3 + i as f64 * 1e-6;
                TracePoint { z, f: 10.0 * z, std: None, mode: None }
            })
            .collect();
        let b = Trace::new(far, serde_json::Value::Null).unwrap();
        assert!(matches!(
            compare_samples(&[a.clone(), b], 1.0),
            Err(AnalysisError::InsufficientOverlap { .. })
        ));
        assert!(matches!(
            compare_samples(&[a], 1.0),
            Err(AnalysisError::TooFewTraces { n: 1 })
        ));
    }

    #[test]
    fn placement_sensitivity_is_zero_at_zero_offset_and_grows() {
        let device = DeviceSpec::ref_cantilever();
        let stylus = StylusSpec::conical_reference();
        let base = PlacementSpec::from_center_offset(&device, 0.0);
        let grid: Vec<f64> = (0..=60).map(|i| i as f64 * 5e-6).collect();
        let vals = placement_sensitivity(
            &device,
            &stylus,
            base,
            &[0.0, 5e-6, 10e-6, 20e-6],
            &grid,
        )
        .unwrap();
        assert_eq!(vals[0], 0.0);
        assert!(vals[1] > 0.0);
        assert!(vals[2] > vals[1]);
        assert!(vals[3] > vals[2]);
    }
}
