//! Commands: each one writes CSVs into the output directory, records its
//! embedded checks and finishes with `summary.txt` and `manifest.json`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use wlcnet::dynamics::{
    calibrate_alpha, switching_report, CouplingVector, LimitCycle, SwitchingReport, WlcNetwork,
};
use wlcnet::graph::{pathway_matrix, CyclePermutation};
use wlcnet::learning::{
    convergence_exponent, duration_learning_run_with_learner, fitted_decay_slope, learn_behavior,
    learn_structure, write_diagnostics_csv, BehaviorOptions, LearnerState,
};
use wlcnet::metrics::{curvature_series, distance_trace, mean_distance, write_distance_csv};
use wlcnet::motifsim::{simulate_pose_path, Pose, PosePath};
use wlcnet::pipeline::{run_imitation, ImitationConfig};
use wlcnet::rng::{stream, uniform_vec, Stream, ALPHA_RANGE, GAMMA0_RANGE, X0_RANGE};
use wlcnet::series::TimeSeries;
use wlcnet::sweep::{exhaustive_specs, random_specs, run_trials, summarize};

use crate::config::{ExperimentConfig, LearnMode};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    versions: Versions,
    files: &'a [String],
    checks: &'a [Check],
    config: &'a ExperimentConfig,
}

#[derive(Serialize)]
struct Versions {
    wlcnet: &'static str,
    cli: &'static str,
}

/// Output directory plus everything recorded so far.
pub struct Artifacts {
    dir: PathBuf,
    command: String,
    files: Vec<String>,
    checks: Vec<Check>,
    summary: String,
}

impl Artifacts {
    pub fn create(dir: &Path, command: &str) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.into(),
            files: Vec::new(),
            checks: Vec::new(),
            summary: String::new(),
        })
    }

    fn write<F>(&mut self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> wlcnet::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        f(&mut out).with_context(|| format!("writing {}", path.display()))?;
        out.flush()?;
        self.files.push(name.into());
        Ok(())
    }

    fn series(&mut self, name: &str, s: &TimeSeries, prefix: &str) -> Result<()> {
        self.write(name, |out| s.write_csv(out, prefix))
    }

    fn path(&mut self, name: &str, p: &PosePath) -> Result<()> {
        self.write(name, |out| p.write_csv(out))
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn note(&mut self, line: impl AsRef<str>) {
        self.summary.push_str(line.as_ref());
        self.summary.push('\n');
    }

    /// Writes the summary and manifest; true when every check passed.
    pub fn finish(mut self, cfg: &ExperimentConfig) -> Result<bool> {
        let all = self.checks.iter().all(|c| c.passed);
        let mut text = format!("wlcnet {}\n", self.command);
        text.push_str(&self.summary);
        for c in &self.checks {
            let _ = writeln!(
                text,
                "check {}: {} ({})",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.detail
            );
        }
        let _ = writeln!(
            text,
            "result: {}",
            if all {
                "all checks passed"
            } else {
                "some checks FAILED"
            }
        );
        fs::write(self.dir.join("summary.txt"), &text)?;
        self.files.push("summary.txt".into());
        let manifest = Manifest {
            command: &self.command,
            seed: cfg.seed,
            versions: Versions {
                wlcnet: wlcnet::VERSION,
                cli: env!("CARGO_PKG_VERSION"),
            },
            files: &self.files,
            checks: &self.checks,
            config: cfg,
        };
        let json = serde_json::to_string_pretty(&manifest)?;
        fs::write(self.dir.join("manifest.json"), json + "\n")?;
        print!("{text}");
        Ok(all)
    }
}

fn fmt_vec(v: &[f64], digits: usize) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.digits$}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Motif order starting at neuron 1, e.g. `1 -> 3 -> 2`.
fn order(p: &CyclePermutation) -> String {
    let parts: Vec<String> = p.sequence().iter().map(usize::to_string).collect();
    parts.join(" -> ")
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}

/// The settled teacher network and how its couplings were chosen.
struct Teacher {
    cycle: LimitCycle,
    /// Calibration targets in model time, when durations were given.
    targets: Option<Vec<f64>>,
}

fn teacher(cfg: &ExperimentConfig) -> Result<Teacher> {
    let d = &cfg.dynamics;
    let n = cfg.n();
    let sigma = cfg.teacher_graph()?;
    let (alpha, targets) = match (&d.alpha, &d.durations) {
        (Some(a), _) => (CouplingVector::new(a.clone())?, None),
        (None, Some(secs)) => {
            let targets: Vec<f64> = secs.iter().map(|s| s * cfg.motifsim.time_scale).collect();
            let alpha = calibrate_alpha(&pathway_matrix(&sigma), &targets, d.epsilon, d.dt)
                .context("calibrating couplings to the target durations")?;
            (alpha, Some(targets))
        }
        (None, None) => (
            CouplingVector::new(uniform_vec(
                &mut stream(cfg.seed, Stream::TeacherCoupling),
                n,
                ALPHA_RANGE,
            ))?,
            None,
        ),
    };
    let x0 = d
        .x0
        .clone()
        .unwrap_or_else(|| uniform_vec(&mut stream(cfg.seed, Stream::TeacherInit), n, X0_RANGE));
    let net = WlcNetwork::from_permutation(sigma, alpha, d.epsilon)?;
    let cycle =
        LimitCycle::settle(&net, &x0, d.dt, d.warmup_periods).context("settling the teacher")?;
    Ok(Teacher { cycle, targets })
}

fn gamma0(cfg: &ExperimentConfig) -> Result<CouplingVector> {
    let g = cfg.learning.gamma0.clone().unwrap_or_else(|| {
        uniform_vec(
            &mut stream(cfg.seed, Stream::LearnerCoupling),
            cfg.n(),
            GAMMA0_RANGE,
        )
    });
    Ok(CouplingVector::new(g)?)
}

fn y0(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.learning.y0.clone().unwrap_or_else(|| {
        uniform_vec(
            &mut stream(cfg.seed, Stream::LearnerInit),
            cfg.n(),
            X0_RANGE,
        )
    })
}

fn positive_check(art: &mut Artifacts, what: &str, s: &TimeSeries) {
    let ok = s
        .samples()
        .all(|x| x.iter().all(|v| *v > 0.0 && v.is_finite()));
    art.check(
        &format!("{what} positive"),
        ok,
        format!("{} samples", s.len()),
    );
}

/// `teacher`: settle, record, report durations.
pub fn run_teacher(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<SwitchingReport> {
    let t = teacher(cfg)?;
    let cycle = &t.cycle;
    let traj = cycle.trajectory(cfg.dynamics.periods * cycle.period)?;
    let report = switching_report(&traj, 0.0)?;
    let durations = report.complete_durations()?;
    let scale = cfg.motifsim.time_scale;
    let alpha = cycle.net.coupling().values().to_vec();
    art.write("durations.csv", |out| {
        writeln!(out, "neuron,alpha,duration,seconds")?;
        for (j, (a, d)) in alpha.iter().zip(&durations).enumerate() {
            writeln!(out, "{},{a:e},{d:e},{:e}", j + 1, d / scale)?;
        }
        Ok(())
    })?;
    art.series(
        "teacher.csv",
        &traj.decimate(cfg.learning.record_stride),
        "x",
    )?;
    let path = simulate_pose_path(&traj, &cfg.library()?, Pose::default())?
        .decimate(cfg.motifsim.decimate);
    art.path("teacher_path.csv", &path)?;

    art.note(format!("graph: {}", order(cycle.net.permutation())));
    art.note(format!("alpha: {}", fmt_vec(&alpha, 6)));
    art.note(format!("period: {:.6}", cycle.period));
    art.note(format!("durations: {}", fmt_vec(&durations, 4)));
    let expected = cycle.net.permutation().sequence();
    let seen = report.cycle_order();
    art.check(
        "cycle order follows the graph",
        seen == expected,
        format!("{seen:?}"),
    );
    positive_check(art, "teacher", &traj);
    let defect = cycle.periodicity_defect(1)?;
    art.check("periodic", defect < 1e-5, format!("defect {defect:.2e}"));
    if let Some(targets) = &t.targets {
        let worst = durations
            .iter()
            .zip(targets)
            .map(|(d, t)| (d - t).abs() / t)
            .fold(0.0, f64::max);
        art.check(
            "durations match targets",
            worst < cfg.metrics.duration_tol,
            format!("worst relative error {worst:.2e}"),
        );
    }
    Ok(report)
}

/// `learn`: structure, durations or both, depending on the configured mode.
pub fn run_learn(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let t = teacher(cfg)?;
    let cycle = &t.cycle;
    let n = cfg.n();
    let alpha = cycle.net.coupling().values().to_vec();
    let stride = cfg.learning.record_stride;
    art.note(format!(
        "teacher: {} (period {:.6})",
        order(cycle.net.permutation()),
        cycle.period
    ));
    art.note(format!("alpha: {}", fmt_vec(&alpha, 6)));
    match cfg.learning.mode {
        LearnMode::Structure => {
            let sigma = cfg.learner_graph()?;
            art.note(format!("learner start: {}", order(&sigma)));
            let out = learn_structure(
                cycle,
                LearnerState::new(sigma, gamma0(cfg)?)?,
                &cfg.structure_options(),
            )?;
            art.write("diagnostics.csv", |w| {
                write_diagnostics_csv(&out.diagnostics, w)
            })?;
            art.note(format!(
                "learned: {} after {} iterations ({} periods)",
                order(&out.sigma),
                out.iterations,
                out.periods
            ));
            art.check(
                "graph recovered",
                out.sigma == *cycle.net.permutation(),
                order(&out.sigma),
            );
            art.check(
                "at most n-1 iterations",
                out.iterations < n,
                format!("{} iterations for n = {n}", out.iterations),
            );
        }
        LearnMode::Durations => {
            let g0 = gamma0(cfg)?;
            let y = y0(cfg);
            let horizon = cfg.learning.periods * cycle.period;
            let run = duration_learning_run_with_learner(
                &cycle.net,
                &cycle.state,
                &cycle.net.pathway(),
                &g0,
                horizon,
                cfg.dynamics.dt,
                Some(&y),
            )?;
            art.series("gamma.csv", &run.gamma.decimate(stride), "gamma")?;
            art.series("teacher.csv", &run.x.decimate(stride), "x")?;
            let ys = run.y.as_ref().expect("learner activity requested");
            art.series("learner.csv", &ys.decimate(stride), "y")?;
            write_paths(cfg, art, &run.x, ys)?;
            let last = run.gamma.last().expect("non-empty");
            let err = distance(last, &alpha);
            art.note(format!("gamma0: {}", fmt_vec(g0.values(), 4)));
            art.note(format!("final gamma: {}", fmt_vec(last, 6)));
            let kappa = convergence_exponent(
                &cycle.trajectory(1.2 * cycle.period)?,
                &cycle.net.pathway(),
                cycle.period,
            )?;
            art.note(format!("convergence exponent: {kappa:.6}"));
            if horizon >= 2.0 * cycle.period {
                let slope = fitted_decay_slope(&run.gamma, &alpha, cycle.period, 1e-12)?;
                art.note(format!("fitted decay slope: {slope:.6}"));
                art.check(
                    "decay at least the exponent",
                    slope <= -0.9 * kappa,
                    format!("slope {slope:.5}, kappa {kappa:.5}"),
                );
            }
            art.check(
                "gamma converged",
                err < cfg.learning.gamma_tol,
                format!("|gamma - alpha| = {err:.2e}"),
            );
            positive_check(art, "learner", ys);
        }
        LearnMode::Behavior => {
            let sigma = cfg.learner_graph()?;
            let initial = LearnerState::new(sigma.clone(), gamma0(cfg)?)?.with_learner(y0(cfg))?;
            let opts = BehaviorOptions {
                structure: cfg.structure_options(),
                horizon: cfg.learning.periods * cycle.period,
                record_stride: 1,
            };
            let out = learn_behavior(cycle, initial, &opts)?;
            let ys = out.y.as_ref().expect("learner activity requested");
            art.write("diagnostics.csv", |w| {
                write_diagnostics_csv(&out.structure.diagnostics, w)
            })?;
            art.series("gamma.csv", &out.gamma.decimate(stride), "gamma")?;
            art.series("teacher.csv", &out.x.decimate(stride), "x")?;
            art.series("learner.csv", &ys.decimate(stride), "y")?;
            write_paths(cfg, art, &out.x, ys)?;
            let last = out.gamma.last().expect("non-empty");
            let err = distance(last, &alpha);
            art.note(format!("learner start: {}", order(&sigma)));
            art.note(format!(
                "learned: {} after {} iterations",
                order(&out.structure.sigma),
                out.structure.iterations
            ));
            art.note(format!("final gamma: {}", fmt_vec(last, 6)));
            art.check(
                "graph recovered",
                out.structure.sigma == *cycle.net.permutation(),
                order(&out.structure.sigma),
            );
            art.check(
                "gamma converged",
                err < cfg.learning.gamma_tol,
                format!("|gamma - alpha| = {err:.2e}"),
            );
            positive_check(art, "learner", ys);
        }
    }
    Ok(())
}

fn write_paths(
    cfg: &ExperimentConfig,
    art: &mut Artifacts,
    x: &TimeSeries,
    y: &TimeSeries,
) -> Result<()> {
    let lib = cfg.library()?;
    let k = cfg.motifsim.decimate;
    art.path(
        "teacher_path.csv",
        &simulate_pose_path(x, &lib, Pose::default())?.decimate(k),
    )?;
    art.path(
        "learner_path.csv",
        &simulate_pose_path(y, &lib, Pose::default())?.decimate(k),
    )?;
    Ok(())
}

fn read_path(p: &Path) -> Result<PosePath> {
    let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
    PosePath::read_csv(BufReader::new(f)).with_context(|| format!("reading {}", p.display()))
}

/// `metric`: distance trace between two recorded paths; `period` in seconds.
pub fn run_metric(
    cfg: &ExperimentConfig,
    art: &mut Artifacts,
    teacher: &Path,
    learner: &Path,
    period: f64,
) -> Result<()> {
    if !(period > 0.0) {
        bail!("period must be positive, got {period}");
    }
    let (pt, pl) = (read_path(teacher)?, read_path(learner)?);
    let ct = curvature_series(&pt, cfg.metrics.smoothing)?;
    let cl = curvature_series(&pl, cfg.metrics.smoothing)?;
    let start = ct.time(0) + 2.0 * period;
    let end = ct.time(ct.len().min(cl.len()) - 1);
    if end < start {
        bail!(
            "paths span {:.3} s, the metric needs at least two periods ({:.3} s)",
            end - ct.time(0),
            2.0 * period
        );
    }
    let step = period / cfg.metrics.trace_per_period as f64;
    let trace = distance_trace(&ct, &cl, period, start, end, step, cfg.metrics.tau_step)?;
    art.write("distance.csv", |w| write_distance_csv(&trace, w))?;
    let first = mean_distance(&trace, start, start + period).unwrap_or(f64::NAN);
    let last = mean_distance(&trace, end - period, end).unwrap_or(f64::NAN);
    art.note(format!("evaluations: {}", trace.len()));
    art.note(format!("mean distance, first period: {first:.6}"));
    art.note(format!("mean distance, final period: {last:.6}"));
    art.check(
        "distance decreased",
        last < cfg.metrics.distance_ratio * first,
        format!("final / first = {:.4}", last / first),
    );
    Ok(())
}

/// `sweep`: structure-learning trials for every configured size, in trial order.
pub fn run_sweep(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let mut rows = Vec::new();
    let mut per_size = Vec::new();
    for &n in &cfg.sweep.sizes {
        let specs = if n <= cfg.sweep.exhaustive_max {
            exhaustive_specs(n, cfg.seed)?
        } else {
            random_specs(n, cfg.sweep.trials, cfg.seed)?
        };
        let opts = wlcnet::sweep::TrialOptions {
            epsilon: cfg.dynamics.epsilon,
            dt: cfg.dynamics.dt,
            warmup_periods: cfg.dynamics.warmup_periods,
            structure: cfg.structure_options(),
        };
        let results = run_trials(&specs, &opts);
        for (i, (s, r)) in specs.iter().zip(&results).enumerate() {
            rows.push(format!(
                "{n},{i},{},{},{},{},{},{},{:e},{:e},{},{}",
                r.seed,
                order(&s.teacher).replace(" -> ", " "),
                order(&s.learner).replace(" -> ", " "),
                r.iterations.map_or(String::new(), |k| k.to_string()),
                r.periods,
                u8::from(r.recovered),
                r.max_matched_rel,
                r.min_mismatched_rel,
                r.misclassified,
                r.error.as_deref().unwrap_or("").replace(',', ";"),
            ));
        }
        per_size.push(summarize(n, &results));
    }
    art.write("sweep.csv", |w| {
        writeln!(w, "n,trial,seed,teacher,learner,iterations,periods,recovered,max_matched_rel,min_mismatched_rel,misclassified,error")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })?;
    for s in &per_size {
        art.note(format!(
            "n = {}: {} trials, {} within n-1, max iterations {}, separation {:.2e}, misclassified {}",
            s.n,
            s.trials,
            s.within_bound,
            s.max_iterations,
            s.separation(),
            s.misclassified
        ));
        art.check(
            &format!("n = {} within n-1 iterations", s.n),
            s.all_within_bound(),
            format!("{}/{}", s.within_bound, s.trials),
        );
    }
    Ok(())
}

/// `pipeline6`-style end-to-end imitation.
pub fn run_pipeline(cfg: &ExperimentConfig, art: &mut Artifacts) -> Result<()> {
    let durations = cfg
        .dynamics
        .durations
        .clone()
        .context("the imitation pipeline needs target durations")?;
    let icfg = ImitationConfig {
        teacher: cfg.teacher_graph()?,
        durations,
        epsilon: cfg.dynamics.epsilon,
        dt: cfg.dynamics.dt,
        warmup_periods: cfg.dynamics.warmup_periods,
        seed: cfg.seed,
        horizon_periods: cfg.learning.periods,
        library: cfg.library()?,
        decimate: cfg.motifsim.decimate,
        smoothing: cfg.metrics.smoothing,
        trace_per_period: cfg.metrics.trace_per_period,
        structure: cfg.structure_options(),
    };
    let rep = run_imitation(&icfg)?;
    let stride = cfg.learning.record_stride;
    let y = rep.learned.y.as_ref().expect("learner activity requested");
    art.series("teacher.csv", &rep.learned.x.decimate(stride), "x")?;
    art.series("learner.csv", &y.decimate(stride), "y")?;
    art.series("gamma.csv", &rep.learned.gamma.decimate(stride), "gamma")?;
    art.write("diagnostics.csv", |w| {
        write_diagnostics_csv(&rep.learned.structure.diagnostics, w)
    })?;
    art.path("teacher_path.csv", &rep.teacher_path)?;
    art.path("learner_path.csv", &rep.learner_path)?;
    art.write("distance.csv", |w| write_distance_csv(&rep.trace, w))?;

    let scale = cfg.motifsim.time_scale;
    art.note(format!(
        "calibrated alpha: {}",
        fmt_vec(rep.alpha.values(), 6)
    ));
    art.note(format!(
        "teacher period: {:.4} s",
        rep.teacher.period / scale
    ));
    art.note(format!(
        "teacher durations (s): {}",
        fmt_vec(
            &rep.teacher_durations
                .iter()
                .map(|d| d / scale)
                .collect::<Vec<_>>(),
            4
        )
    ));
    art.note(format!(
        "learner durations (s): {}",
        fmt_vec(
            &rep.learner_durations
                .iter()
                .map(|d| d / scale)
                .collect::<Vec<_>>(),
            4
        )
    ));
    art.note(format!(
        "graph learned after {} iterations",
        rep.learned.structure.iterations
    ));
    art.note(format!(
        "mean distance, first period: {:.6}",
        rep.first_distance
    ));
    art.note(format!(
        "mean distance, final period: {:.6}",
        rep.final_distance
    ));
    art.check(
        "graph recovered",
        rep.learned.structure.sigma == *rep.teacher.net.permutation(),
        order(&rep.learned.structure.sigma),
    );
    art.check(
        "durations match",
        rep.duration_error() < cfg.metrics.duration_tol,
        format!("worst relative error {:.2e}", rep.duration_error()),
    );
    art.check(
        "motif sequence matches",
        rep.sequence_matches(),
        format!("{:?} vs {:?}", rep.learner_order, rep.teacher_order),
    );
    art.check(
        "distance decreased",
        rep.distance_ratio() < cfg.metrics.distance_ratio,
        format!("final / first = {:.4}", rep.distance_ratio()),
    );
    positive_check(art, "learner", y);
    Ok(())
}

/// Checks specific to the six-neuron ring preset.
pub fn fig2_checks(
    art: &mut Artifacts,
    cfg: &ExperimentConfig,
    report: &SwitchingReport,
) -> Result<()> {
    let d = report.complete_durations()?;
    let alpha = cfg.dynamics.alpha.clone().unwrap_or_default();
    let by = |v: &[f64]| {
        let mut idx: Vec<usize> = (1..=v.len()).collect();
        idx.sort_by(|&a, &b| v[a - 1].total_cmp(&v[b - 1]));
        idx
    };
    let (dur_order, alpha_order) = (by(&d), by(&alpha));
    art.check(
        "duration order follows coupling order",
        dur_order == alpha_order,
        format!("{dur_order:?} vs {alpha_order:?}"),
    );
    Ok(())
}
