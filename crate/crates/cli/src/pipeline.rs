//! Stage runner. Every stage reads its inputs from the output directory and
//! writes exactly one artifact family back into it.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use phonon_core::boson_stats::{
    empirical_distribution, enumerate_outcomes, exact_distribution, fock_oracle_distribution, outcome_probability,
    sample_outcomes, total_variation_distance, FockSource, OccupationVector, OutcomeDistribution, Provenance,
    StatsError,
};
use phonon_core::dd_compiler::{compile_sequence, simulate_schedule, CompileOptions};
use phonon_core::detection::{simulate_detection_trial, ReadoutRecord};
use phonon_core::ion_chain::{coupling_matrix, CouplingMatrix, IonChain};
use phonon_core::linear_optics::{haar_unitary, reck_decompose, unitary_distance, ModeUnitary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{RunConfig, TargetSection};
use crate::error::CliError;
use crate::formats::*;

/// Angle below which Reck treats an entry as already nulled.
const RECK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Positions,
    Couplings,
    Decompose,
    Compile,
    Simulate,
    Distribution,
    Sample,
    Detect,
    Verify,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::Positions,
        Stage::Couplings,
        Stage::Decompose,
        Stage::Compile,
        Stage::Simulate,
        Stage::Distribution,
        Stage::Sample,
        Stage::Detect,
        Stage::Verify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Positions => "positions",
            Stage::Couplings => "couplings",
            Stage::Decompose => "decompose",
            Stage::Compile => "compile",
            Stage::Simulate => "simulate",
            Stage::Distribution => "distribution",
            Stage::Sample => "sample",
            Stage::Detect => "detect",
            Stage::Verify => "verify",
        }
    }

    fn needs_dd(self) -> bool {
        matches!(self, Stage::Compile | Stage::Simulate)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub struct Pipeline {
    config: RunConfig,
    out: PathBuf,
    timings: Vec<StageTiming>,
}

impl Pipeline {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Result<Self, CliError> {
        let out = out.into();
        std::fs::create_dir_all(&out).map_err(|source| CliError::Io { path: out.clone(), source })?;
        Ok(Pipeline { config, out, timings: Vec::new() })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn output_dir(&self) -> &Path {
        &self.out
    }

    /// Runs one stage and returns its one-line summary.
    pub fn run(&mut self, stage: Stage) -> Result<String, CliError> {
        let start = Instant::now();
        let summary = match stage {
            Stage::Positions => self.positions(),
            Stage::Couplings => self.couplings(),
            Stage::Decompose => self.decompose(),
            Stage::Compile => self.compile(),
            Stage::Simulate => self.simulate(),
            Stage::Distribution => self.distribution(),
            Stage::Sample => self.sample(),
            Stage::Detect => self.detect(),
            Stage::Verify => self.verify(),
        }?;
        self.timings.push(StageTiming { stage: stage.name().into(), seconds: start.elapsed().as_secs_f64() });
        Ok(summary)
    }

    /// Every stage in order; pulse compilation only when `dd` is configured.
    pub fn run_all(&mut self) -> Result<Vec<String>, CliError> {
        let dd = self.config.dd.is_some();
        let mut lines = Vec::new();
        for stage in Stage::ALL.into_iter().filter(|s| dd || !s.needs_dd()) {
            lines.push(self.run(stage)?);
        }
        Ok(lines)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn num_ions(&self) -> usize {
        self.config.chain.num_ions
    }

    fn dd_options(&self, stage: Stage) -> Result<CompileOptions, CliError> {
        self.config
            .compile_options()
            .ok_or_else(|| CliError::Config(format!("dd: section required for the {stage} stage")))
    }

    fn positions(&self) -> Result<String, CliError> {
        let chain = IonChain::solve(self.config.trap_params()?, self.config.tolerances.solver)?;
        write_json(&self.path(POSITIONS), &PositionsFile { positions: chain.positions().to_vec() })?;
        Ok(format!("positions: {} ions solved", chain.len()))
    }

    fn couplings(&self) -> Result<String, CliError> {
        let path = self.path(POSITIONS);
        let file: PositionsFile = read_json(&path, "positions")?;
        let chain = IonChain::from_positions(self.config.trap_params()?, file.positions)
            .map_err(|e| artifact_error(&path, e))?;
        let k = coupling_matrix(&chain)?;
        write_json(&self.path(COUPLINGS), &CouplingsFile::new(chain.positions(), &k))?;
        Ok(format!("couplings: max K/omega_x = {:.3e}", k.validity_ratio()))
    }

    fn load_couplings(&self) -> Result<CouplingMatrix, CliError> {
        let path = self.path(COUPLINGS);
        let file: CouplingsFile = read_json(&path, "couplings")?;
        let k = file.couplings(self.config.trap_params()?.omega_x()).map_err(|e| artifact_error(&path, e))?;
        if k.dim() != self.num_ions() {
            return Err(artifact_error(&path, format!("{} modes, config has {}", k.dim(), self.num_ions())));
        }
        Ok(k)
    }

    fn build_target(&self) -> Result<ModeUnitary, CliError> {
        let m = self.num_ions();
        let u = match &self.config.target {
            TargetSection::Identity => ModeUnitary::identity(m),
            TargetSection::Fourier => ModeUnitary::fourier(m),
            TargetSection::Haar { seed } => haar_unitary(m, &mut ChaCha8Rng::seed_from_u64(*seed)),
            TargetSection::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("target.path: {}: {e}", path.display())))?;
                let file: UnitaryFile = serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("target.path: {}: {e}", path.display())))?;
                file.unitary(self.config.tolerances.unitarity)
                    .map_err(|e| CliError::Config(format!("target.path: {e}")))?
            }
        };
        if u.dim() != m {
            return Err(CliError::Config(format!("target: dimension {} does not match chain.num_ions {m}", u.dim())));
        }
        Ok(u)
    }

    fn load_unitary(&self, name: &str, stage: &'static str) -> Result<ModeUnitary, CliError> {
        let path = self.path(name);
        let file: UnitaryFile = read_json(&path, stage)?;
        let u = file.unitary(self.config.tolerances.unitarity).map_err(|e| artifact_error(&path, e))?;
        if u.dim() != self.num_ions() {
            return Err(artifact_error(&path, format!("{} modes, config has {}", u.dim(), self.num_ions())));
        }
        Ok(u)
    }

    fn decompose(&self) -> Result<String, CliError> {
        let target = self.build_target()?;
        let seq = reck_decompose(&target, RECK_TOL)?;
        write_json(&self.path(TARGET), &UnitaryFile::new(&target))?;
        write_json(&self.path(DECOMPOSITION), &elements_to_json(&seq))?;
        Ok(format!("decompose: {} beam splitters, {} phases", seq.beam_splitters().count(), seq.phases().count()))
    }

    fn compile(&self) -> Result<String, CliError> {
        let opts = self.dd_options(Stage::Compile)?;
        let k = self.load_couplings()?;
        let path = self.path(DECOMPOSITION);
        let items: Vec<ElementJson> = read_json(&path, "decompose")?;
        let seq = elements_from_json(self.num_ions(), &items).map_err(|e| artifact_error(&path, e))?;
        let sched = compile_sequence(&k, &seq, &opts)?;
        write_json(&self.path(SCHEDULE), &ScheduleFile::new(&sched))?;
        Ok(format!("compile: {} steps over {:.6e} s", sched.steps().len(), sched.total_duration()))
    }

    fn simulate(&self) -> Result<String, CliError> {
        self.dd_options(Stage::Simulate)?;
        let k = self.load_couplings()?;
        let path = self.path(SCHEDULE);
        let file: ScheduleFile = read_json(&path, "compile")?;
        let sched = file.schedule().map_err(|e| artifact_error(&path, e))?;
        let u = simulate_schedule(&k, &sched)?;
        write_json(&self.path(COMPILED_UNITARY), &UnitaryFile::new(&u))?;
        Ok(format!("simulate: unitarity defect {:.3e}", u.unitarity_defect()))
    }

    /// The interferometer the bosons see: compiled when `dd` is set,
    /// otherwise the ideal target.
    fn driving_unitary(&self) -> Result<ModeUnitary, CliError> {
        if self.config.dd.is_some() {
            self.load_unitary(COMPILED_UNITARY, "simulate")
        } else {
            self.load_unitary(TARGET, "decompose")
        }
    }

    fn distribution(&self) -> Result<String, CliError> {
        let u = self.driving_unitary()?;
        let d = parallel_exact_distribution(&u, &self.config.input_state())?;
        write_json(&self.path(DISTRIBUTION), &DistributionFile::new(&d))?;
        Ok(format!(
            "distribution: {} outcomes, normalization residual {:.3e}",
            d.entries().len(),
            d.normalization_residual()
        ))
    }

    fn load_distribution(&self, stage: &'static str) -> Result<OutcomeDistribution, CliError> {
        let path = self.path(DISTRIBUTION);
        let file: DistributionFile = read_json(&path, stage)?;
        let d = file.distribution().map_err(|e| artifact_error(&path, e))?;
        let input = self.config.input_state();
        if d.modes() != input.modes() || d.bosons() != input.total() {
            return Err(artifact_error(
                &path,
                format!(
                    "covers M={} N={}, config input has M={} N={}",
                    d.modes(),
                    d.bosons(),
                    input.modes(),
                    input.total()
                ),
            ));
        }
        Ok(d)
    }

    fn sample(&self) -> Result<String, CliError> {
        let d = self.load_distribution("distribution")?;
        let s = &self.config.sampling;
        let samples = sample_outcomes(&d, s.num_samples, s.seed)?;
        write_samples(&self.path(SAMPLES), &samples)?;
        Ok(format!("sample: {} samples", samples.len()))
    }

    fn detect(&self) -> Result<String, CliError> {
        let samples = self.load_samples()?;
        let params = self.config.detection_params()?;
        let seed = self.config.detection.seed;
        let records: Vec<ReadoutRecord> = samples
            .par_iter()
            .enumerate()
            .map(|(trial, occ)| simulate_detection_trial(occ, &params, seed, trial as u64))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .collect();
        write_detection(&self.path(DETECTION), &records)?;
        let overflows = records.iter().filter(|r| r.overflow).count();
        Ok(format!("detect: {} readouts, {} overflows", records.len(), overflows))
    }

    fn load_samples(&self) -> Result<Vec<OccupationVector>, CliError> {
        let path = self.path(SAMPLES);
        let samples = read_samples(&path, "sample")?;
        if let Some(bad) = samples.iter().find(|s| s.modes() != self.num_ions()) {
            return Err(artifact_error(&path, format!("row {:?} has the wrong number of modes", bad.occupations())));
        }
        Ok(samples)
    }

    fn verify(&self) -> Result<String, CliError> {
        let tol = &self.config.tolerances;
        let d = self.load_distribution("distribution")?;
        let input = self.config.input_state();
        let mut report =
            VerifyReport { normalization_residual: Some(d.normalization_residual()), ..Default::default() };
        let mut notes = Vec::new();

        let target = self.optional(TARGET, |p| p.load_unitary(TARGET, "decompose"))?;
        let driving =
            self.optional(if self.config.dd.is_some() { COMPILED_UNITARY } else { TARGET }, |p| p.driving_unitary())?;

        if let Some(u) = &driving {
            match fock_oracle_distribution(FockSource::Unitary(u), &input) {
                Ok(oracle) => report.tvd_exact_vs_oracle = Some(total_variation_distance(&d, &oracle)?),
                Err(StatsError::FockBasisTooLarge { size, .. }) => {
                    notes.push(format!("Fock oracle skipped: basis of {size} states"));
                }
                Err(e) => return Err(e.into()),
            }
        }
        if let (true, Some(t), Some(c)) = (self.config.dd.is_some(), &target, &driving) {
            report.unitary_distance_achieved_vs_target = Some(unitary_distance(c, t)?);
            let ideal = parallel_exact_distribution(t, &input)?;
            report.tvd_compiled_vs_ideal = Some(total_variation_distance(&d, &ideal)?);
        }
        if self.path(SAMPLES).exists() {
            let samples = self.load_samples()?;
            let e = empirical_distribution(d.modes(), &samples)?;
            report.tvd_empirical_vs_exact = Some(total_variation_distance(&e, &d)?);
        }
        if self.path(DETECTION).exists() {
            let records = read_detection(&self.path(DETECTION), "detect")?;
            if !records.is_empty() {
                let exact = records.iter().filter(|r| !r.overflow && r.reported_n == r.true_n).count();
                report.detection_exact_fraction = Some(exact as f64 / records.len() as f64);
            }
        }
        report.timings = self.timings.clone();
        write_json(&self.path(VERIFY_REPORT), &report)?;

        let mut violations = Vec::new();
        let mut check = |name: &str, value: Option<f64>, limit: f64| {
            if let Some(v) = value {
                if v.is_nan() || v >= limit {
                    violations.push(format!("{name} = {v:.3e} (limit {limit:.1e})"));
                }
            }
        };
        check("normalization_residual", report.normalization_residual, tol.normalization);
        check("tvd_exact_vs_oracle", report.tvd_exact_vs_oracle, tol.oracle_tvd);
        check("tvd_compiled_vs_ideal", report.tvd_compiled_vs_ideal, tol.compiled_tvd);
        if !violations.is_empty() {
            return Err(CliError::Tolerance(violations));
        }

        let mut summary = String::from("verify: ok");
        let fields = [
            ("unitary distance", report.unitary_distance_achieved_vs_target),
            ("oracle tvd", report.tvd_exact_vs_oracle),
            ("compiled tvd", report.tvd_compiled_vs_ideal),
            ("empirical tvd", report.tvd_empirical_vs_exact),
        ];
        for (label, v) in fields {
            if let Some(v) = v {
                summary.push_str(&format!(", {label} {v:.3e}"));
            }
        }
        for n in notes {
            summary.push_str(&format!(" ({n})"));
        }
        Ok(summary)
    }

    /// Loads an artifact if it exists; other failures still surface.
    fn optional<T>(&self, name: &str, load: impl FnOnce(&Self) -> Result<T, CliError>) -> Result<Option<T>, CliError> {
        if self.path(name).exists() {
            load(self).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// Same result as [`exact_distribution`], with outcomes evaluated in parallel.
pub fn parallel_exact_distribution(u: &ModeUnitary, t: &OccupationVector) -> Result<OutcomeDistribution, StatsError> {
    if t.modes() != u.dim() {
        return exact_distribution(u, t);
    }
    let entries = enumerate_outcomes(u.dim(), t.total())
        .into_par_iter()
        .map(|s| outcome_probability(u, &s, t).map(|p| (s, p)))
        .collect::<Result<Vec<_>, _>>()?;
    OutcomeDistribution::from_entries(u.dim(), t.total(), Provenance::Exact, entries)
}
