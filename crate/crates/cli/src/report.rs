//! JSON documents the CLI writes. Like the CSV traces these live at the
//! file boundary, so lengths are micrometres and forces micronewtons;
//! stiffness stays N/m, which is numerically identical to uN/um.

use serde::Serialize;

use probe_core::analysis::{Regime, RegimeSegmentation, StiffnessFit};
use probe_core::contact::{EventKind, SimTrace};

pub const ANALYSIS_SCHEMA: &str = "analysis-report v1";
pub const EVENTS_SCHEMA: &str = "sim-events v1";
pub const VARIATION_SCHEMA: &str = "variation-report v1";

const M_TO_UM: f64 = 1e6;
const N_TO_UN: f64 = 1e6;

#[derive(Serialize)]
pub struct EventsFile {
    pub schema: &'static str,
    pub n_points: usize,
    pub fractured: bool,
    pub events: Vec<EventOut>,
}

#[derive(Serialize)]
pub struct EventOut {
    pub kind: EventKind,
    pub z_um: f64,
}

impl EventsFile {
    pub fn from_sim(sim: &SimTrace) -> Self {
        Self {
            schema: EVENTS_SCHEMA,
            n_points: sim.states.len(),
            fractured: sim.events.iter().any(|e| e.kind == EventKind::Fracture),
            events: sim
                .events
                .iter()
                .map(|e| EventOut {
                    kind: e.kind,
                    z_um: e.z_act * M_TO_UM,
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct AnalysisReport {
    pub schema: &'static str,
    pub source: String,
    pub n_points: usize,
    pub z_min_um: f64,
    pub z_max_um: f64,
    pub corrections: Corrections,
    pub stiffness: StiffnessOut,
    pub regimes: Option<RegimesOut>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
pub struct Corrections {
    /// Gain error divided out of every force before fitting.
    pub calibration_bias: Option<f64>,
    /// Series frame stiffness removed from the fitted slope, N/m.
    pub apparatus_stiffness_n_per_m: Option<f64>,
}

#[derive(Serialize)]
pub struct StiffnessOut {
    /// Slope of the fit as measured.
    pub k_measured_n_per_m: f64,
    /// Slope after the apparatus-compliance correction; equals
    /// `k_measured_n_per_m` when no apparatus stiffness was given.
    pub k_device_n_per_m: f64,
    pub intercept_un: f64,
    pub window_um: [f64; 2],
    pub residual_std_un: f64,
    pub n_points: usize,
}

impl StiffnessOut {
    pub fn new(fit: &StiffnessFit, k_device: f64) -> Self {
        Self {
            k_measured_n_per_m: fit.k,
            k_device_n_per_m: k_device,
            intercept_un: fit.intercept * N_TO_UN,
            window_um: [fit.z_lo * M_TO_UM, fit.z_hi * M_TO_UM],
            residual_std_un: fit.residual_std * N_TO_UN,
            n_points: fit.n_points,
        }
    }
}

#[derive(Serialize)]
pub struct MarkOut {
    pub z_um: f64,
    pub f_un: f64,
}

#[derive(Serialize)]
pub struct RegimesOut {
    /// Distinct regimes in sweep order, consecutive repeats collapsed.
    pub sequence: Vec<Regime>,
    pub linear_end_z_um: f64,
    pub fz_max: MarkOut,
    pub slide_off_bump: Option<MarkOut>,
    pub fracture: Option<MarkOut>,
    pub n_linear: usize,
    pub n_geometric: usize,
    pub n_contact: usize,
}

impl RegimesOut {
    pub fn from_segmentation(seg: &RegimeSegmentation) -> Self {
        let mut sequence: Vec<Regime> = Vec::new();
        for &r in &seg.labels {
            if sequence.last() != Some(&r) {
                sequence.push(r);
            }
        }
        let count = |r: Regime| seg.labels.iter().filter(|&&l| l == r).count();
        let mark = |m: &probe_core::analysis::TraceMark| MarkOut {
            z_um: m.z * M_TO_UM,
            f_un: m.f * N_TO_UN,
        };
        Self {
            sequence,
            linear_end_z_um: seg.linear_end_z * M_TO_UM,
            fz_max: mark(&seg.fz_max),
            slide_off_bump: seg.slide_off_bump.as_ref().map(mark),
            fracture: seg.fracture.as_ref().map(mark),
            n_linear: count(Regime::Linear),
            n_geometric: count(Regime::Geometric),
            n_contact: count(Regime::Contact),
        }
    }
}

#[derive(Serialize)]
pub struct VariationOut {
    pub schema: &'static str,
    pub n_runs: usize,
    pub seed: u64,
    /// Half-width of the uniform landing-point scatter, um.
    pub placement_scatter_um: f64,
    pub fits_k_n_per_m: Vec<f64>,
    pub max_pairwise_deviation_un: f64,
    pub envelope_un: f64,
    pub within_envelope: bool,
}
