//! `wlcnet`: teacher-learner experiments on winner-less competition networks.
//!
//! Exit status: 0 when every embedded check passes, 1 when a check fails,
//! 2 on errors (bad configuration, I/O, numerical failure).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod presets;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use config::{ExperimentConfig, LearnMode, LibraryKind};
use run::Artifacts;

#[derive(Parser)]
#[command(
    name = "wlcnet",
    version,
    about = "Teacher-learner experiments on winner-less competition networks"
)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Settle a teacher network and record its activity, durations and robot path.
    Teacher,
    /// Learn the teacher's graph, durations or both.
    Learn {
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Distance trace between two recorded robot paths.
    Metric {
        #[arg(long)]
        teacher_path: PathBuf,
        #[arg(long)]
        learner_path: PathBuf,
        /// Teacher period in seconds.
        #[arg(long)]
        period: f64,
    },
    /// Run a named reproduction: fig2, fig3, learn13 or pipeline6.
    Preset { name: String },
    /// Structure-learning trials over several network sizes.
    Sweep,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Structure,
    Durations,
    Behavior,
}

#[derive(Clone, Copy, ValueEnum)]
enum Library {
    Six,
    Cyclic,
}

/// Flags override the config file, which overrides preset defaults.
#[derive(Args, Default)]
struct Overrides {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Teacher motif order, e.g. 1,3,2.
    #[arg(long, global = true, value_delimiter = ',')]
    teacher: Option<Vec<usize>>,
    #[arg(long, global = true, value_delimiter = ',')]
    learner: Option<Vec<usize>>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    warmup_periods: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    alpha: Option<Vec<f64>>,
    /// Target durations in seconds; couplings are calibrated to them.
    #[arg(long, global = true, value_delimiter = ',')]
    durations: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
    /// Teacher periods written by `teacher`.
    #[arg(long, global = true)]
    periods: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    gamma0: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    y0: Option<Vec<f64>>,
    /// Duration-learning horizon in teacher periods.
    #[arg(long, global = true)]
    learn_periods: Option<f64>,
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    #[arg(long, global = true)]
    tol_rel: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    #[arg(long, global = true)]
    record_stride: Option<usize>,
    #[arg(long, global = true, value_enum)]
    library: Option<Library>,
    #[arg(long, global = true)]
    time_scale: Option<f64>,
    #[arg(long, global = true)]
    decimate: Option<usize>,
    #[arg(long, global = true)]
    smoothing: Option<f64>,
    #[arg(long, global = true)]
    trace_per_period: Option<usize>,
    #[arg(long, global = true)]
    tau_step: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
}

fn set<T: serde::Serialize>(
    root: &mut Map<String, Value>,
    section: Option<&str>,
    key: &str,
    v: &Option<T>,
) {
    let Some(v) = v else { return };
    let v = serde_json::to_value(v).expect("flag values serialize");
    match section {
        None => {
            root.insert(key.into(), v);
        }
        Some(s) => {
            let entry = root.entry(s).or_insert_with(|| json!({}));
            entry
                .as_object_mut()
                .expect("section object")
                .insert(key.into(), v);
        }
    }
}

impl Overrides {
    fn to_json(&self) -> Value {
        let mut m = Map::new();
        set(&mut m, None, "seed", &self.seed);
        set(&mut m, None, "out_dir", &self.out_dir);
        set(&mut m, Some("graph"), "n", &self.n);
        set(&mut m, Some("graph"), "teacher", &self.teacher);
        set(&mut m, Some("graph"), "learner", &self.learner);
        let d = Some("dynamics");
        set(&mut m, d, "epsilon", &self.epsilon);
        set(&mut m, d, "dt", &self.dt);
        set(&mut m, d, "warmup_periods", &self.warmup_periods);
        set(&mut m, d, "alpha", &self.alpha);
        set(&mut m, d, "durations", &self.durations);
        set(&mut m, d, "x0", &self.x0);
        set(&mut m, d, "periods", &self.periods);
        let l = Some("learning");
        set(&mut m, l, "gamma0", &self.gamma0);
        set(&mut m, l, "y0", &self.y0);
        set(&mut m, l, "periods", &self.learn_periods);
        set(&mut m, l, "tol_abs", &self.tol_abs);
        set(&mut m, l, "tol_rel", &self.tol_rel);
        set(&mut m, l, "max_iters", &self.max_iters);
        set(&mut m, l, "record_stride", &self.record_stride);
        let lib = self.library.map(|k| match k {
            Library::Six => LibraryKind::Six,
            Library::Cyclic => LibraryKind::Cyclic,
        });
        set(&mut m, Some("motifsim"), "library", &lib);
        set(&mut m, Some("motifsim"), "time_scale", &self.time_scale);
        set(&mut m, Some("motifsim"), "decimate", &self.decimate);
        set(&mut m, Some("metrics"), "smoothing", &self.smoothing);
        set(
            &mut m,
            Some("metrics"),
            "trace_per_period",
            &self.trace_per_period,
        );
        set(&mut m, Some("metrics"), "tau_step", &self.tau_step);
        set(&mut m, Some("sweep"), "trials", &self.trials);
        set(&mut m, Some("sweep"), "sizes", &self.sizes);
        Value::Object(m)
    }
}

/// Preset base, then the config file, then flags.
fn resolve(preset: Option<&str>, o: &Overrides) -> Result<ExperimentConfig> {
    let mut v = match preset {
        Some(name) => presets::base(name)?,
        None => json!({}),
    };
    if let Some(path) = &o.config {
        // Merge only what the file spelled out, so its defaults don't mask the preset.
        presets::merge(&mut v, config::load_json(path)?);
    }
    presets::merge(&mut v, o.to_json());
    let cfg: ExperimentConfig = serde_json::from_value(v).context("invalid configuration")?;
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<bool> {
    let preset = match &cli.command {
        Command::Preset { name } => Some(name.as_str()),
        _ => None,
    };
    let mut cfg = resolve(preset, &cli.overrides)?;
    let label = match &cli.command {
        Command::Teacher => "teacher".to_string(),
        Command::Learn { mode } => {
            if let Some(m) = mode {
                cfg.learning.mode = match m {
                    Mode::Structure => LearnMode::Structure,
                    Mode::Durations => LearnMode::Durations,
                    Mode::Behavior => LearnMode::Behavior,
                };
            }
            "learn".to_string()
        }
        Command::Metric { .. } => "metric".to_string(),
        Command::Preset { name } => format!("preset {name}"),
        Command::Sweep => "sweep".to_string(),
    };
    if cfg.learning.mode == LearnMode::Durations {
        ensure!(
            cfg.graph.learner.is_none(),
            "duration learning wires the learner like the teacher; drop the learner sequence"
        );
    }
    let mut art = Artifacts::create(&cfg.out_dir, &label)?;
    match &cli.command {
        Command::Teacher => {
            run::run_teacher(&cfg, &mut art)?;
        }
        Command::Learn { .. } => run::run_learn(&cfg, &mut art)?,
        Command::Metric {
            teacher_path,
            learner_path,
            period,
        } => run::run_metric(&cfg, &mut art, teacher_path, learner_path, *period)?,
        Command::Preset { name } => presets::run(name, &cfg, &mut art)?,
        Command::Sweep => run::run_sweep(&cfg, &mut art)?,
    }
    art.finish(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
