//! End-to-end imitation: a calibrated teacher drives a simulated robot, a
//! learner watches only the teacher's neurons, and the two robots' paths are
//! compared with the curvature distance.

use crate::dynamics::{
    calibrate_alpha, switching_report, CouplingVector, LimitCycle, WlcNetwork, DEFAULT_DT,
    DEFAULT_EPSILON, DEFAULT_WARMUP_PERIODS,
};
use crate::error::{Error, Result};
use crate::graph::{pathway_matrix, CyclePermutation};
use crate::learning::{
    learn_behavior, BehaviorOptions, LearnOutcome, LearnerState, StructureOptions,
};
use crate::metrics::{curvature_series, distance_trace, mean_distance, DistanceResult};
use crate::motifsim::{
    simulate_pose_path, MotifLibrary, Pose, PosePath, DEFAULT_RADIUS, DEFAULT_SPEED,
};
use crate::rng::{stream, uniform_vec, Stream, GAMMA0_RANGE, X0_RANGE};
use crate::series::NeuralTrajectory;

/// Motif durations of the six-motif demonstration, in seconds.
pub const DEMO_DURATIONS: [f64; 6] = [7.0, 7.1, 4.1, 4.1, 9.4, 11.0];
/// Model time units per second used by the demonstration.
pub const DEMO_TIME_SCALE: f64 = 3.0;
/// Motif succession of the demonstration.
pub const DEMO_SEQUENCE: [usize; 6] = [1, 3, 6, 4, 2, 5];

#[derive(Debug, Clone)]
pub struct ImitationConfig {
    pub teacher: CyclePermutation,
    /// Target on-state durations in seconds; multiplied by the library's time scale.
    pub durations: Vec<f64>,
    pub epsilon: f64,
    pub dt: f64,
    pub warmup_periods: f64,
    /// Seeds the teacher's start and the learner's graph, γ₀ and y₀.
    pub seed: u64,
    /// Duration learning after the graph is found, in teacher periods.
    pub horizon_periods: f64,
    pub library: MotifLibrary,
    /// Keep every `decimate`-th pose before computing curvature.
    pub decimate: usize,
    /// Gaussian smoothing of pose coordinates, in seconds.
    pub smoothing: Option<f64>,
    /// Distance evaluations per teacher period.
    pub trace_per_period: usize,
    pub structure: StructureOptions,
}

impl ImitationConfig {
    /// The six-motif demonstration with a given seed.
    pub fn demo(seed: u64) -> Self {
        Self {
            teacher: CyclePermutation::from_sequence(&DEMO_SEQUENCE).expect("valid demo sequence"),
            durations: DEMO_DURATIONS.to_vec(),
            epsilon: DEFAULT_EPSILON,
            dt: DEFAULT_DT,
            warmup_periods: DEFAULT_WARMUP_PERIODS,
            seed,
            horizon_periods: 10.0,
            library: MotifLibrary::six(DEFAULT_SPEED, DEFAULT_RADIUS, DEMO_TIME_SCALE)
                .expect("valid library"),
            decimate: 10,
            smoothing: None,
            trace_per_period: 20,
            structure: StructureOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImitationReport {
    pub alpha: CouplingVector,
    pub teacher: LimitCycle,
    pub learned: LearnOutcome,
    /// Durations measured over the last periods of the run, in model time.
    pub teacher_durations: Vec<f64>,
    pub learner_durations: Vec<f64>,
    pub teacher_order: Vec<usize>,
    pub learner_order: Vec<usize>,
    pub teacher_path: PosePath,
    pub learner_path: PosePath,
    pub trace: Vec<DistanceResult>,
    /// Mean distance over the first admissible period and over the last one.
    pub first_distance: f64,
    pub final_distance: f64,
}

impl ImitationReport {
    /// Largest relative gap between learner and teacher durations.
    pub fn duration_error(&self) -> f64 {
        self.teacher_durations
            .iter()
            .zip(&self.learner_durations)
            .map(|(t, l)| (l - t).abs() / t)
            .fold(0.0, f64::max)
    }

    pub fn sequence_matches(&self) -> bool {
        self.teacher_order == self.learner_order
    }

    pub fn distance_ratio(&self) -> f64 {
        self.final_distance / self.first_distance
    }

    /// Same graph, durations within `duration_tol`, final distance below `ratio` of the first.
    pub fn passed(&self, duration_tol: f64, ratio: f64) -> bool {
        self.learned.structure.sigma == *self.teacher.net.permutation()
            && self.duration_error() < duration_tol
            && self.sequence_matches()
            && self.distance_ratio() < ratio
    }
}

fn tail_report(
    traj: &NeuralTrajectory,
    periods: f64,
    period: f64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let keep = ((periods * period / traj.dt()).ceil() as usize).min(traj.len());
    let report = switching_report(&traj.slice(traj.len() - keep, traj.len()), 0.0)?;
    Ok((report.complete_durations()?, report.cycle_order()))
}

pub fn run_imitation(cfg: &ImitationConfig) -> Result<ImitationReport> {
    let n = cfg.teacher.n();
    if cfg.durations.len() != n || cfg.library.len() != n {
        return Err(Error::Size(format!(
            "{n} neurons need {n} durations and motifs, got {} and {}",
            cfg.durations.len(),
            cfg.library.len()
        )));
    }
    if cfg.decimate == 0 || cfg.trace_per_period == 0 {
        return Err(Error::Numeric(
            "decimation and trace density must be positive".into(),
        ));
    }
    let scale = cfg.library.time_scale();
    let targets: Vec<f64> = cfg.durations.iter().map(|d| d * scale).collect();
    let w = pathway_matrix(&cfg.teacher);
    let alpha = calibrate_alpha(&w, &targets, cfg.epsilon, cfg.dt)?;
    let net = WlcNetwork::from_permutation(cfg.teacher.clone(), alpha.clone(), cfg.epsilon)?;
    let x0 = uniform_vec(&mut stream(cfg.seed, Stream::TeacherInit), n, X0_RANGE);
    let teacher = LimitCycle::settle(&net, &x0, cfg.dt, cfg.warmup_periods)?;

    let sigma =
        CyclePermutation::random_hamiltonian_with(n, &mut stream(cfg.seed, Stream::LearnerGraph))?;
    let gamma0 = uniform_vec(
        &mut stream(cfg.seed, Stream::LearnerCoupling),
        n,
        GAMMA0_RANGE,
    );
    let y0 = uniform_vec(&mut stream(cfg.seed, Stream::LearnerInit), n, X0_RANGE);
    let initial = LearnerState::new(sigma, CouplingVector::new(gamma0)?)?.with_learner(y0)?;
    let opts = BehaviorOptions {
        structure: cfg.structure.clone(),
        horizon: cfg.horizon_periods * teacher.period,
        record_stride: 1,
    };
    let learned = learn_behavior(&teacher, initial, &opts)?;
    let y = learned.y.as_ref().expect("learner activity was requested");

    let (teacher_durations, teacher_order) = tail_report(&learned.x, 3.5, teacher.period)?;
    let (learner_durations, learner_order) = tail_report(y, 3.5, teacher.period)?;

    let teacher_path =
        simulate_pose_path(&learned.x, &cfg.library, Pose::default())?.decimate(cfg.decimate);
    let learner_path = simulate_pose_path(y, &cfg.library, Pose::default())?.decimate(cfg.decimate);
    let ct = curvature_series(&teacher_path, cfg.smoothing)?;
    let cl = curvature_series(&learner_path, cfg.smoothing)?;
    // The metric runs on the robot's clock.
    let period = teacher.period / scale;
    let start = ct.time(0) + 2.0 * period;
    let end = ct.time(ct.len() - 1);
    let trace = distance_trace(
        &ct,
        &cl,
        period,
        start,
        end,
        period / cfg.trace_per_period as f64,
        None,
    )?;
    let window = |from: f64, to: f64| {
        mean_distance(&trace, from, to)
            .ok_or_else(|| Error::Window(format!("no distance samples in [{from}, {to}]")))
    };
    let first_distance = window(start, start + period)?;
    let final_distance = window(end - period, end)?;
    Ok(ImitationReport {
        alpha,
        teacher,
        learned,
        teacher_durations,
        learner_durations,
        teacher_order,
        learner_order,
        teacher_path,
        learner_path,
        trace,
        first_distance,
        final_distance,
    })
}
