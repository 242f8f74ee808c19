//! On-disk trace format shared by the simulator and the CLI.
//!
//! A trace file is plain UTF-8 CSV with two comment headers:
//!
//! ```text
//! # stylus-trace v1
//! # meta: {"kind":"simulation",...}
//! z_cmd_um,z_dut_um,force_uN,force_std_uN,mode
//! 0,0,0,,no_contact
//! 10,9.978...,99.78...,4.08...,surface_sliding
//! ```
//!
//! Columns are commanded position, device deflection, vertical force, the
//! readout std and the contact mode. The std and mode fields may be empty.
//! Files store micrometres and micronewtons; everything in memory is SI.
//! The meta line is one JSON object carrying whatever provenance the
//! writer had (specs are embedded in SI units).
//!
//! Numbers are written with the shortest representation that parses back
//! to the identical double, so read-then-write reproduces a file we wrote
//! byte for byte.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use crate::analysis::{Trace, TracePoint};
use crate::contact::{ContactMode, SimTrace};
use crate::error::{AnalysisError, TraceError};
use crate::instrument::MeasurementTrace;

pub const VERSION_HEADER: &str = "# stylus-trace v1";
pub const COLUMN_HEADER: &str = "z_cmd_um,z_dut_um,force_uN,force_std_uN,mode";
const META_PREFIX: &str = "# meta: ";

/// Move the decimal point of a plain decimal string (no exponent) by
/// `shift` digits to the right. Exact, so scaling SI to micro units and
/// back never rounds. Garbage in gives garbage out; the caller's parse
/// catches it.
fn shift_decimal_point(s: &str, shift: i32) -> String {
    let (sign, body) = match s.as_bytes().first() {
        Some(b'-') => ("-", &s[1..]),
        Some(b'+') => ("", &s[1..]),
        _ => ("", s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    let mut digits: Vec<u8> = Vec::with_capacity(int_part.len() + frac_part.len());
    digits.extend(int_part.bytes());
    digits.extend(frac_part.bytes());
    let mut point = int_part.len() as i64 + shift as i64;
    let lead = digits.iter().take_while(|&&d| d == b'0').count();
    digits.drain(..lead);
    point -= lead as i64;
    while digits.last() == Some(&b'0') {
        digits.pop();
    }
    let digits = String::from_utf8(digits).expect("ASCII in, ASCII out");
    if digits.is_empty() {
        return format!("{sign}0");
    }
    let n = digits.len() as i64;
    if point >= n {
        let zeros = "0".repeat((point - n) as usize);
        format!("{sign}{digits}{zeros}")
    } else if point <= 0 {
        let zeros = "0".repeat((-point) as usize);
        format!("{sign}0.{zeros}{digits}")
    } else {
        let (a, b) = digits.split_at(point as usize);
        format!("{sign}{a}.{b}")
    }
}

/// Render an SI metres or newtons value as micrometres or micronewtons.
/// The shift is textual, so `micro_parse` recovers the exact bits; every
/// CSV written by this crate or the CLI goes through this one function.
pub fn micro_string(v: f64) -> String {
    shift_decimal_point(&format!("{v}"), 6)
}

/// Parse a micrometre or micronewton field back to SI. Exponent forms are
/// accepted for hand-written files but scale by float math.
pub fn micro_parse(field: &str) -> Result<f64, std::num::ParseFloatError> {
    let t = field.trim();
    if t.contains(['e', 'E']) {
        t.parse::<f64>().map(|v| v * 1e-6)
    } else {
        shift_decimal_point(t, -6).parse()
    }
}

/// One record, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub z_cmd: f64,
    pub z_dut: f64,
    pub force: f64,
    pub force_std: Option<f64>,
    pub mode: Option<ContactMode>,
}

/// In-memory image of a trace file.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub meta: serde_json::Value,
    pub rows: Vec<TraceRow>,
}

impl TraceFile {
    /// Rows of an ideal sweep: commanded and device positions coincide and
    /// there is no readout scatter.
    pub fn from_sim(sim: &SimTrace, meta: serde_json::Value) -> Self {
        Self {
            meta,
            rows: sim
                .states
                .iter()
                .map(|s| TraceRow {
                    z_cmd: s.z_act,
                    z_dut: s.z_act,
                    force: s.f_z,
                    force_std: None,
                    mode: Some(s.mode),
                })
                .collect(),
        }
    }

    /// Rows of a virtual measurement, with the full run recipe embedded in
    /// the meta object so the file is self-describing.
    pub fn from_measurement(m: &MeasurementTrace) -> Self {
        let meta = serde_json::json!({
            "kind": "measurement",
            "seed": m.seed,
            "device": m.device,
            "stylus": m.stylus,
            "placement": m.placement,
            "placement_error": m.placement_error,
            "instrument": m.instrument,
        });
        Self {
            meta,
            rows: m
                .steps
                .iter()
                .map(|s| TraceRow {
                    z_cmd: s.z_cmd,
                    z_dut: s.z_dut,
                    force: s.f_readout,
                    force_std: Some(s.f_readout_std),
                    mode: Some(s.mode),
                })
                .collect(),
        }
    }

    /// The experimenter's view for analysis: commanded position against
    /// readout force.
    pub fn to_analysis_trace(&self) -> Result<Trace, AnalysisError> {
        Trace::new(
            self.rows
                .iter()
                .map(|r| TracePoint {
                    z: r.z_cmd,
                    f: r.force,
                    std: r.force_std,
                    mode: r.mode,
                })
                .collect(),
            self.meta.clone(),
        )
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<(), TraceError> {
        let meta = serde_json::to_string(&self.meta).map_err(|e| TraceError::Meta {
            reason: e.to_string(),
        })?;
        writeln!(w, "{VERSION_HEADER}")?;
        writeln!(w, "{META_PREFIX}{meta}")?;
        writeln!(w, "{COLUMN_HEADER}")?;
        for (i, r) in self.rows.iter().enumerate() {
            let line = i + 4;
            for (name, v) in [
                ("z_cmd", r.z_cmd),
                ("z_dut", r.z_dut),
                ("force", r.force),
            ] {
                if !v.is_finite() {
                    return Err(TraceError::Row {
                        line,
                        reason: format!("{name} is not finite"),
                    });
                }
            }
            write!(
                w,
                "{},{},{},",
                micro_string(r.z_cmd),
                micro_string(r.z_dut),
                micro_string(r.force)
            )?;
            match r.force_std {
                Some(s) if !s.is_finite() => {
                    return Err(TraceError::Row {
                        line,
                        reason: "force_std is not finite".into(),
                    })
                }
                Some(s) => write!(w, "{}", micro_string(s))?,
                None => {}
            }
            match r.mode {
                Some(m) => writeln!(w, ",{m}")?,
                None => writeln!(w, ",")?,
            }
        }
        Ok(())
    }

    pub fn render(&self) -> Result<String, TraceError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(String::from_utf8(buf).expect("writer emits UTF-8"))
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, TraceError> {
        let mut lines = r.lines();
        let version = lines.next().ok_or(TraceError::Header)??;
        if version.trim_end() != VERSION_HEADER {
            return Err(TraceError::Header);
        }
        let meta_line = lines.next().ok_or(TraceError::Meta {
            reason: "missing line".into(),
        })??;
        let meta_json = meta_line
            .trim_end()
            .strip_prefix(META_PREFIX)
            .ok_or_else(|| TraceError::Meta {
                reason: "line does not start with the meta prefix".into(),
            })?;
        let meta: serde_json::Value =
            serde_json::from_str(meta_json).map_err(|e| TraceError::Meta {
                reason: e.to_string(),
            })?;
        let header = lines.next().ok_or(TraceError::Row {
            line: 3,
            reason: "missing column header".into(),
        })??;
        if header.trim_end() != COLUMN_HEADER {
            return Err(TraceError::Row {
                line: 3,
                reason: format!("expected column header {COLUMN_HEADER:?}"),
            });
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let line_no = i + 4;
            let line = line?;
            let text = line.trim_end();
            if text.is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split(',').collect();
            if fields.len() != 5 {
                return Err(TraceError::Row {
                    line: line_no,
                    reason: format!("expected 5 fields, found {}", fields.len()),
                });
            }
            let num = |field: &str, what: &str| -> Result<f64, TraceError> {
                let v = micro_parse(field).map_err(|_| TraceError::Row {
                    line: line_no,
                    reason: format!("{what}: cannot parse {field:?} as a number"),
                })?;
                if !v.is_finite() {
                    return Err(TraceError::Row {
                        line: line_no,
                        reason: format!("{what} is not finite"),
                    });
                }
                Ok(v)
            };
            let z_cmd = num(fields[0], "z_cmd_um")?;
            let z_dut = num(fields[1], "z_dut_um")?;
            let force = num(fields[2], "force_uN")?;
            let force_std = if fields[3].trim().is_empty() {
                None
            } else {
                Some(num(fields[3], "force_std_uN")?)
            };
            let mode_field = fields[4].trim();
            let mode = if mode_field.is_empty() {
                None
            } else {
                Some(
                    ContactMode::from_str(mode_field).map_err(|_| TraceError::Row {
                        line: line_no,
                        reason: format!("unknown mode {mode_field:?}"),
                    })?,
                )
            };
            rows.push(TraceRow {
                z_cmd,
                z_dut,
                force,
                force_std,
                mode,
            });
        }
        Ok(Self { meta, rows })
    }

    pub fn save(&self, path: &Path) -> Result<(), TraceError> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, TraceError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::{run_sweep, PlacementSpec, SolverConfig};
    use crate::instrument::{run_virtual_measurement, InstrumentModel};
    use crate::mechanics::{DeviceSpec, StylusSpec};

    fn sample_file() -> TraceFile {
        let device = DeviceSpec::ref_cantilever();
        let stylus = StylusSpec::conical_reference();
        let placement = PlacementSpec::from_center_offset(&device, 0.0);
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 2.5e-6).collect();
        let m = run_virtual_measurement(
            &device,
            &stylus,
            placement,
            0.0,
            &InstrumentModel::reference(),
            &grid,
            0xC0FFEE,
        )
        .unwrap();
        TraceFile::from_measurement(&m)
    }

    #[test]
    fn read_then_write_reproduces_the_bytes() {
        let original = sample_file().render().unwrap();
        let parsed = TraceFile::read_from(original.as_bytes()).unwrap();
        let rewritten = parsed.render().unwrap();
        assert_eq!(original, rewritten);
    }

    #[test]
    fn sim_rows_have_no_std_and_duplicate_the_position() {
        let device = DeviceSpec::ref_cantilever();
        let stylus = StylusSpec::conical_reference();
        let placement = PlacementSpec::from_center_offset(&device, 0.0);
        let grid: Vec<f64> = (0..20).map(|i| i as f64 * 5e-6).collect();
        let sim = run_sweep(
            &device,
            &stylus,
            placement,
            &grid,
            &SolverConfig::default(),
        )
        .unwrap();
        let f = TraceFile::from_sim(&sim, serde_json::json!({"kind": "simulation"}));
        assert_eq!(f.rows.len(), 20);
        for r in &f.rows {
            assert_eq!(r.z_cmd, r.z_dut);
            assert!(r.force_std.is_none());
            assert!(r.mode.is_some());
        }
        let text = f.render().unwrap();
        let back = TraceFile::read_from(text.as_bytes()).unwrap();
        assert_eq!(back.render().unwrap(), text);
    }

    #[test]
    fn columns_are_micrometres_and_micronewtons() {
        let f = TraceFile {
            meta: serde_json::Value::Null,
            rows: vec![TraceRow {
                z_cmd: 1.5e-5,
                z_dut: 1.25e-5,
                force: 2e-4,
                force_std: Some(4e-6),
                mode: Some(ContactMode::SurfaceSliding),
            }],
        };
        let text = f.render().unwrap();
        let row = text.lines().nth(3).unwrap();
        assert_eq!(row, "15,12.5,200,4,surface_sliding");
    }

    #[test]
    fn empty_std_and_mode_fields_survive_a_round_trip() {
        let f = TraceFile {
            meta: serde_json::json!({"kind": "imported"}),
            rows: vec![TraceRow {
                z_cmd: 0.0,
                z_dut: 0.0,
                force: 0.0,
                force_std: None,
                mode: None,
            }],
        };
        let text = f.render().unwrap();
        let back = TraceFile::read_from(text.as_bytes()).unwrap();
        assert_eq!(back.rows[0].force_std, None);
        assert_eq!(back.rows[0].mode, None);
        assert_eq!(back.render().unwrap(), text);
    }

    #[test]
    fn malformed_inputs_fail_with_the_offending_line() {
        let good = sample_file().render().unwrap();

        let bad_version = good.replacen("v1", "v2", 1);
        assert!(matches!(
            TraceFile::read_from(bad_version.as_bytes()),
            Err(TraceError::Header)
        ));

        let bad_meta = good.replacen("# meta: {", "# meta: {oops", 1);
        assert!(matches!(
            TraceFile::read_from(bad_meta.as_bytes()),
            Err(TraceError::Meta { .. })
        ));

        let bad_header = good.replacen("force_uN", "force_n", 1);
        assert!(matches!(
            TraceFile::read_from(bad_header.as_bytes()),
            Err(TraceError::Row { line: 3, .. })
        ));

        let with_row = |idx: usize, row: &str| -> String {
            let mut lines: Vec<&str> = good.lines().collect();
            lines[idx] = row;
            lines.join("\n")
        };

        match TraceFile::read_from(with_row(5, "1,2,3,4").as_bytes()) {
            Err(TraceError::Row { line, reason }) => {
                assert_eq!(line, 6);
                assert!(reason.contains("5 fields"), "{reason}");
            }
            other => panic!("expected a row error, got {other:?}"),
        }

        match TraceFile::read_from(with_row(6, "1,2,abc,,").as_bytes()) {
            Err(TraceError::Row { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected a row error, got {other:?}"),
        }

        let inf_row = format!(
            "{VERSION_HEADER}\n# meta: null\n{COLUMN_HEADER}\n1,2,inf,,\n"
        );
        assert!(matches!(
            TraceFile::read_from(inf_row.as_bytes()),
            Err(TraceError::Row { line: 4, .. })
        ));

        let bad_mode = format!(
            "{VERSION_HEADER}\n# meta: null\n{COLUMN_HEADER}\n1,2,3,,sideways\n"
        );
        match TraceFile::read_from(bad_mode.as_bytes()) {
            Err(TraceError::Row { line, reason }) => {
                assert_eq!(line, 4);
                assert!(reason.contains("sideways"));
            }
            other => panic!("expected a row error, got {other:?}"),
        }
    }

    #[test]
    fn writer_rejects_non_finite_values() {
        let f = TraceFile {
            meta: serde_json::Value::Null,
            rows: vec![TraceRow {
                z_cmd: f64::NAN,
                z_dut: 0.0,
                force: 0.0,
                force_std: None,
                mode: None,
            }],
        };
        assert!(matches!(f.render(), Err(TraceError::Row { line: 4, .. })));
    }

    #[test]
    fn save_and_load_through_a_real_file() {
        let f = sample_file();
        let path = std::env::temp_dir().join(format!("stylus-trace-test-{}.csv", std::process::id()));
        f.save(&path).unwrap();
        let back = TraceFile::load(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(back.render().unwrap(), f.render().unwrap());
        assert_eq!(back.rows.len(), f.rows.len());
    }

    #[test]
    fn unit_scaling_is_exact_in_both_directions() {
        let awkward = [
            0.0,
            -0.0,
            1.5e-5,
            1.25e-5,
            2e-4,
            4e-6,
            1.0 / 3.0 * 1e-3,
            -7.23e-7,
            4.082482904638631e-6,
            f64::MIN_POSITIVE * 1e8,
            123456.789e-6,
            0.1e-6,
        ];
        for &v in &awkward {
            let text = micro_string(v);
            let back = micro_parse(&text).unwrap();
            assert_eq!(
                v.to_bits(),
                back.to_bits(),
                "{v:e} -> {text:?} -> {back:e}"
            );
        }
        assert_eq!(micro_string(1.5e-5), "15");
        assert_eq!(micro_string(-2.5e-7), "-0.25");
        assert_eq!(micro_string(0.0), "0");
    }

    #[test]
    fn exponent_form_fields_are_accepted() {
        let text = format!(
            "{VERSION_HEADER}\n# meta: null\n{COLUMN_HEADER}\n1.5e1,15,150,,\n"
        );
        let f = TraceFile::read_from(text.as_bytes()).unwrap();
        assert!((f.rows[0].z_cmd - 15e-6).abs() < 1e-18);
        assert!((f.rows[0].z_dut - 15e-6).abs() < 1e-18);
    }

    #[test]
    fn analysis_view_uses_commanded_position_and_readout() {
        let f = sample_file();
        let t = f.to_analysis_trace().unwrap();
        assert_eq!(t.len(), f.rows.len());
        let p = &t.points()[5];
        assert_eq!(p.z, f.rows[5].z_cmd);
        assert_eq!(p.f, f.rows[5].force);
        assert_eq!(p.std, f.rows[5].force_std);
    }
}
