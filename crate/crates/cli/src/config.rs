//! Experiment configuration: a JSON file with one section per module, every
//! field optional, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use wlcnet::dynamics::{DEFAULT_DT, DEFAULT_EPSILON, DEFAULT_WARMUP_PERIODS};
use wlcnet::graph::CyclePermutation;
use wlcnet::learning::{StructureOptions, DEFAULT_TOL_ABS, DEFAULT_TOL_REL};
use wlcnet::motifsim::{MotifLibrary, DEFAULT_RADIUS, DEFAULT_SPEED};
use wlcnet::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub graph: GraphSection,
    pub dynamics: DynamicsSection,
    pub learning: LearningSection,
    pub motifsim: MotifSection,
    pub metrics: MetricsSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub n: usize,
    /// Teacher motif order; drawn from the seed when absent.
    pub teacher: Option<Vec<usize>>,
    /// Learner's initial motif order; drawn from the seed when absent.
    pub learner: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsSection {
    pub epsilon: f64,
    pub dt: f64,
    pub warmup_periods: f64,
    /// Teacher couplings. Mutually exclusive with `durations`.
    pub alpha: Option<Vec<f64>>,
    /// Target on-state durations in seconds; couplings are calibrated to them.
    pub durations: Option<Vec<f64>>,
    pub x0: Option<Vec<f64>>,
    /// Periods of teacher activity written by the `teacher` command.
    pub periods: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnMode {
    /// Graph only.
    Structure,
    /// Couplings only, with the learner wired like the teacher.
    Durations,
    /// Graph, then couplings.
    Behavior,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningSection {
    pub mode: LearnMode,
    pub gamma0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    /// Duration learning after the graph is found, in teacher periods.
    pub periods: f64,
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_iters: Option<usize>,
    /// Keep every `record_stride`-th integration step in written series.
    pub record_stride: usize,
    /// Accepted final `‖γ − α‖` for duration learning.
    pub gamma_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LibraryKind {
    /// Two straight, two left, two right motifs; six neurons only.
    Six,
    /// Straight, left, right, repeating.
    Cyclic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotifSection {
    pub library: Option<LibraryKind>,
    pub speed: f64,
    pub radius: f64,
    /// Model time units per second.
    pub time_scale: f64,
    pub decimate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Gaussian smoothing of path coordinates, in seconds.
    pub smoothing: Option<f64>,
    pub trace_per_period: usize,
    /// Lag grid step in seconds; one sample when absent.
    pub tau_step: Option<f64>,
    /// Accepted final-over-first distance ratio.
    pub distance_ratio: f64,
    /// Accepted relative duration mismatch between learner and teacher.
    pub duration_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub sizes: Vec<usize>,
    /// Random trials per size; sizes up to `exhaustive_max` are enumerated instead.
    pub trials: usize,
    pub exhaustive_max: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            out_dir: PathBuf::from("wlcnet-out"),
            graph: GraphSection::default(),
            dynamics: DynamicsSection::default(),
            learning: LearningSection::default(),
            motifsim: MotifSection::default(),
            metrics: MetricsSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            n: 6,
            teacher: None,
            learner: None,
        }
    }
}

impl Default for DynamicsSection {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            dt: DEFAULT_DT,
            warmup_periods: DEFAULT_WARMUP_PERIODS,
            alpha: None,
            durations: None,
            x0: None,
            periods: 4.0,
        }
    }
}

impl Default for LearningSection {
    fn default() -> Self {
        Self {
            mode: LearnMode::Behavior,
            gamma0: None,
            y0: None,
            periods: 10.0,
            tol_abs: DEFAULT_TOL_ABS,
            tol_rel: DEFAULT_TOL_REL,
            max_iters: None,
            record_stride: 10,
            gamma_tol: 1e-4,
        }
    }
}

impl Default for MotifSection {
    fn default() -> Self {
        Self {
            library: None,
            speed: DEFAULT_SPEED,
            radius: DEFAULT_RADIUS,
            time_scale: 1.0,
            decimate: 10,
        }
    }
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            smoothing: None,
            trace_per_period: 20,
            tau_step: None,
            distance_ratio: 0.1,
            duration_tol: 0.05,
        }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            sizes: vec![3, 4, 5, 6, 8, 13],
            trials: 1000,
            exhaustive_max: 5,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    ensure!(v > 0.0 && v.is_finite(), "{name} must be positive, got {v}");
    Ok(())
}

fn sized(name: &str, v: &Option<Vec<f64>>, n: usize) -> Result<()> {
    if let Some(v) = v {
        ensure!(v.len() == n, "{name} has {} entries, expected {n}", v.len());
    }
    Ok(())
}

/// Raw JSON of a config file; fields are checked once all layers are merged.
pub fn load_json(path: &Path) -> Result<serde_json::Value> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl ExperimentConfig {
    /// Size implied by explicit sequences, falling back to `graph.n`.
    pub fn n(&self) -> usize {
        self.graph.teacher.as_ref().map_or(self.graph.n, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        ensure!(n >= 3, "networks need at least 3 neurons, got {n}");
        if let Some(l) = &self.graph.learner {
            ensure!(
                l.len() == n,
                "learner sequence has {} entries, teacher has {n}",
                l.len()
            );
        }
        positive("epsilon", self.dynamics.epsilon)?;
        positive("dt", self.dynamics.dt)?;
        positive("periods", self.dynamics.periods)?;
        ensure!(
            self.dynamics.warmup_periods >= 0.0,
            "warm-up periods must be non-negative"
        );
        if self.dynamics.alpha.is_some() && self.dynamics.durations.is_some() {
            bail!("give either alpha or durations, not both");
        }
        sized("alpha", &self.dynamics.alpha, n)?;
        sized("durations", &self.dynamics.durations, n)?;
        sized("x0", &self.dynamics.x0, n)?;
        sized("gamma0", &self.learning.gamma0, n)?;
        sized("y0", &self.learning.y0, n)?;
        ensure!(
            self.learning.periods >= 0.0,
            "learning periods must be non-negative"
        );
        positive("tol-abs", self.learning.tol_abs)?;
        positive("tol-rel", self.learning.tol_rel)?;
        positive("gamma-tol", self.learning.gamma_tol)?;
        ensure!(
            self.learning.record_stride > 0,
            "record stride must be positive"
        );
        positive("speed", self.motifsim.speed)?;
        positive("radius", self.motifsim.radius)?;
        positive("time-scale", self.motifsim.time_scale)?;
        ensure!(self.motifsim.decimate > 0, "decimation must be positive");
        ensure!(
            self.metrics.trace_per_period > 0,
            "trace density must be positive"
        );
        if let Some(s) = self.metrics.smoothing {
            positive("smoothing", s)?;
        }
        if let Some(s) = self.metrics.tau_step {
            positive("tau-step", s)?;
        }
        positive("distance-ratio", self.metrics.distance_ratio)?;
        positive("duration-tol", self.metrics.duration_tol)?;
        ensure!(
            self.sweep.sizes.iter().all(|&n| n >= 3),
            "sweep sizes must be at least 3"
        );
        if self.motifsim.library == Some(LibraryKind::Six) {
            ensure!(n == 6, "the six-motif library needs 6 neurons, got {n}");
        }
        Ok(())
    }

    pub fn teacher_graph(&self) -> Result<CyclePermutation> {
        Ok(match &self.graph.teacher {
            Some(seq) => CyclePermutation::from_sequence(seq)?,
            None => CyclePermutation::random_hamiltonian_with(
                self.n(),
                &mut stream(self.seed, Stream::Graph),
            )?,
        })
    }

    pub fn learner_graph(&self) -> Result<CyclePermutation> {
        Ok(match &self.graph.learner {
            Some(seq) => CyclePermutation::from_sequence(seq)?,
            None => CyclePermutation::random_hamiltonian_with(
                self.n(),
                &mut stream(self.seed, Stream::LearnerGraph),
            )?,
        })
    }

    pub fn structure_options(&self) -> StructureOptions {
        StructureOptions {
            max_iters: self.learning.max_iters,
            tol_abs: self.learning.tol_abs,
            tol_rel: self.learning.tol_rel,
        }
    }

    pub fn library(&self) -> Result<MotifLibrary> {
        let m = &self.motifsim;
        let kind = m.library.unwrap_or(if self.n() == 6 {
            LibraryKind::Six
        } else {
            LibraryKind::Cyclic
        });
        Ok(match kind {
            LibraryKind::Six => MotifLibrary::six(m.speed, m.radius, m.time_scale)?,
            LibraryKind::Cyclic => MotifLibrary::cyclic(self.n(), m.speed, m.radius, m.time_scale)?,
        })
    }
}
