//! JSON and CSV artifact schemas. Floats are written in serde_json's
//! shortest round-trip form, so reading an artifact back is lossless.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use phonon_core::boson_stats::{OccupationVector, OutcomeDistribution, Provenance};
use phonon_core::dd_compiler::{PhaseEvent, PulseSchedule, Step};
use phonon_core::detection::ReadoutRecord;
use phonon_core::ion_chain::CouplingMatrix;
use phonon_core::linalg::{CMatrix, C64};
use phonon_core::linear_optics::{BsElement, Element, ElementSequence, ModeUnitary, PhaseElement};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const POSITIONS: &str = "positions.json";
pub const COUPLINGS: &str = "couplings.json";
pub const TARGET: &str = "target.json";
pub const DECOMPOSITION: &str = "decomposition.json";
pub const SCHEDULE: &str = "schedule.json";
pub const COMPILED_UNITARY: &str = "compiled_unitary.json";
pub const DISTRIBUTION: &str = "distribution.json";
pub const SAMPLES: &str = "samples.csv";
pub const DETECTION: &str = "detection.csv";
pub const VERIFY_REPORT: &str = "verify_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionsFile {
    pub positions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsFile {
    pub positions: Vec<f64>,
    pub rates_rad_per_s: Vec<Vec<f64>>,
}

impl CouplingsFile {
    pub fn new(positions: &[f64], k: &CouplingMatrix) -> Self {
        CouplingsFile { positions: positions.to_vec(), rates_rad_per_s: k.to_rows() }
    }

    pub fn couplings(&self, omega_x: f64) -> Result<CouplingMatrix, String> {
        let dim = self.rates_rad_per_s.len();
        if self.rates_rad_per_s.iter().any(|r| r.len() != dim) {
            return Err("rates_rad_per_s must be square".into());
        }
        let flat = self.rates_rad_per_s.concat();
        CouplingMatrix::from_rates(dim, flat, omega_x).map_err(|e| e.to_string())
    }
}

/// Complex matrix as separate real and imaginary row arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitaryFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl UnitaryFile {
    pub fn new(u: &ModeUnitary) -> Self {
        let m = u.matrix();
        let dim = u.dim();
        let part = |f: fn(&C64) -> f64| (0..dim).map(|i| (0..dim).map(|j| f(&m[(i, j)])).collect()).collect();
        UnitaryFile { dim, re: part(|z| z.re), im: part(|z| z.im) }
    }

    pub fn unitary(&self, tol: f64) -> Result<ModeUnitary, String> {
        let shaped = |rows: &Vec<Vec<f64>>| rows.len() == self.dim && rows.iter().all(|r| r.len() == self.dim);
        if !shaped(&self.re) || !shaped(&self.im) {
            return Err(format!("re and im must both be {0}x{0}", self.dim));
        }
        let m = CMatrix::from_fn(self.dim, |i, j| C64::new(self.re[i][j], self.im[i][j]));
        ModeUnitary::with_tolerance(m, tol).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ElementJson {
    Bs { j: usize, theta: f64 },
    Phase { i: usize, phi: f64 },
}

pub fn elements_to_json(seq: &ElementSequence) -> Vec<ElementJson> {
    seq.elements()
        .iter()
        .map(|e| match e {
            Element::Bs(b) => ElementJson::Bs { j: b.pair(), theta: b.theta() },
            Element::Phase(p) => ElementJson::Phase { i: p.mode(), phi: p.phi() },
        })
        .collect()
}

pub fn elements_from_json(dim: usize, items: &[ElementJson]) -> Result<ElementSequence, String> {
    let elements = items
        .iter()
        .map(|e| match *e {
            ElementJson::Bs { j, theta } => BsElement::new(j, theta).map(Element::Bs).map_err(|e| e.to_string()),
            ElementJson::Phase { i, phi } => Ok(Element::Phase(PhaseElement::new(i, phi))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    ElementSequence::new(dim, elements).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleFile {
    pub dim: usize,
    pub steps: Vec<StepJson>,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StepJson {
    Segment(SegmentJson),
    Phase(PhaseStepJson),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentJson {
    pub segment_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseStepJson {
    pub phase: PhaseJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseJson {
    pub t_s: f64,
    pub mode: usize,
    pub phi: f64,
}

impl ScheduleFile {
    pub fn new(s: &PulseSchedule) -> Self {
        let steps = s
            .steps()
            .iter()
            .map(|st| match *st {
                Step::Evolve(dt) => StepJson::Segment(SegmentJson { segment_s: dt }),
                Step::Phase(ev) => {
                    StepJson::Phase(PhaseStepJson { phase: PhaseJson { t_s: ev.time, mode: ev.mode, phi: ev.phi } })
                }
            })
            .collect();
        ScheduleFile { dim: s.dim(), steps, total_s: s.total_duration() }
    }

    pub fn schedule(&self) -> Result<PulseSchedule, String> {
        let steps = self
            .steps
            .iter()
            .map(|st| match st {
                StepJson::Segment(seg) => Step::Evolve(seg.segment_s),
                StepJson::Phase(p) => {
                    Step::Phase(PhaseEvent { time: p.phase.t_s, mode: p.phase.mode, phi: p.phase.phi })
                }
            })
            .collect();
        let s = PulseSchedule::from_steps(self.dim, steps).map_err(|e| e.to_string())?;
        if (s.total_duration() - self.total_s).abs() > 1e-12 * self.total_s.abs().max(1e-300) {
            return Err(format!("total_s {} disagrees with the segments ({})", self.total_s, s.total_duration()));
        }
        Ok(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionFile {
    pub m: usize,
    pub n: usize,
    pub provenance: String,
    pub outcomes: Vec<OutcomeJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeJson {
    pub s: Vec<usize>,
    pub p: f64,
}

impl DistributionFile {
    pub fn new(d: &OutcomeDistribution) -> Self {
        DistributionFile {
            m: d.modes(),
            n: d.bosons(),
            provenance: d.provenance().as_str().to_string(),
            outcomes: d.entries().iter().map(|(s, p)| OutcomeJson { s: s.occupations().to_vec(), p: *p }).collect(),
        }
    }

    pub fn distribution(&self) -> Result<OutcomeDistribution, String> {
        let provenance =
            Provenance::parse(&self.provenance).ok_or_else(|| format!("unknown provenance {:?}", self.provenance))?;
        let entries = self.outcomes.iter().map(|o| (OccupationVector::new(o.s.clone()), o.p)).collect();
        OutcomeDistribution::from_entries(self.m, self.n, provenance, entries).map_err(|e| e.to_string())
    }
}

/// Verification summary; a field is omitted when its stage did not run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub unitary_distance_achieved_vs_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tvd_exact_vs_oracle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tvd_compiled_vs_ideal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tvd_empirical_vs_exact: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub normalization_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detection_exact_fraction: Option<f64>,
    /// Wall-clock seconds per stage executed in this invocation.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact types serialize");
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Reads an upstream artifact; a missing file names the stage that makes it.
pub fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> Result<T, CliError> {
    let text = read_artifact(path, stage)?;
    serde_json::from_str(&text).map_err(|e| artifact_error(path, e))
}

fn read_artifact(path: &Path, stage: &'static str) -> Result<String, CliError> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(t),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(CliError::MissingArtifact { path: path.to_path_buf(), stage })
        }
        Err(source) => Err(CliError::Io { path: path.to_path_buf(), source }),
    }
}

pub fn artifact_error(path: &Path, msg: impl ToString) -> CliError {
    CliError::Artifact { path: PathBuf::from(path), msg: msg.to_string() }
}

pub fn write_samples(path: &Path, samples: &[OccupationVector]) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for s in samples {
        w.serialize(s.occupations()).map_err(|e| artifact_error(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| artifact_error(path, e))?;
    fs::File::create(path).and_then(|mut f| f.write_all(&bytes)).map_err(io)
}

pub fn read_samples(path: &Path, stage: &'static str) -> Result<Vec<OccupationVector>, CliError> {
    let text = read_artifact(path, stage)?;
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    r.deserialize::<Vec<usize>>()
        .map(|row| row.map(OccupationVector::new).map_err(|e| artifact_error(path, e)))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct DetectionRow {
    trial: u64,
    mode: usize,
    true_n: u32,
    reported_n: u32,
    repetitions: u32,
    overflow_flag: u8,
}

pub fn write_detection(path: &Path, records: &[ReadoutRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| artifact_error(path, e))?;
    for r in records {
        w.serialize(DetectionRow {
            trial: r.trial,
            mode: r.mode,
            true_n: r.true_n,
            reported_n: r.reported_n,
            repetitions: r.repetitions,
            overflow_flag: u8::from(r.overflow),
        })
        .map_err(|e| artifact_error(path, e))?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub fn read_detection(path: &Path, stage: &'static str) -> Result<Vec<ReadoutRecord>, CliError> {
    let text = read_artifact(path, stage)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize::<DetectionRow>()
        .map(|row| {
            let row = row.map_err(|e| artifact_error(path, e))?;
            Ok(ReadoutRecord {
                trial: row.trial,
                mode: row.mode,
                true_n: row.true_n,
                reported_n: row.reported_n,
                repetitions: row.repetitions,
                overflow: row.overflow_flag != 0,
            })
        })
        .collect()
}
