//! Batches of seeded structure-learning trials.
//!
//! A trial pairs a teacher graph with a learner's initial graph, draws the
//! continuous parameters from its own seed, and records how many rewirings
//! the learner needed and how cleanly the edge regressions separated
//! correct edges from wrong ones.

use rayon::prelude::*;

use crate::dynamics::{
    CouplingVector, LimitCycle, WlcNetwork, DEFAULT_DT, DEFAULT_EPSILON, DEFAULT_WARMUP_PERIODS,
};
use crate::error::Result;
use crate::graph::{hamiltonian_cycles, CyclePermutation};
use crate::learning::{
    learn_structure, IterationDiagnostics, LearnerState, StructureOptions, StructureOutcome,
};
use crate::rng::{stream, uniform_vec, Stream, ALPHA_RANGE, GAMMA0_RANGE, X0_RANGE};

/// Everything that determines one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub seed: u64,
    pub teacher: CyclePermutation,
    pub learner: CyclePermutation,
    pub alpha: Vec<f64>,
    pub gamma0: Vec<f64>,
    pub x0: Vec<f64>,
}

impl TrialSpec {
    /// Given graphs, continuous parameters drawn from `seed`.
    pub fn with_graphs(teacher: CyclePermutation, learner: CyclePermutation, seed: u64) -> Self {
        let n = teacher.n();
        Self {
            seed,
            alpha: uniform_vec(&mut stream(seed, Stream::TeacherCoupling), n, ALPHA_RANGE),
            gamma0: uniform_vec(&mut stream(seed, Stream::LearnerCoupling), n, GAMMA0_RANGE),
            x0: uniform_vec(&mut stream(seed, Stream::TeacherInit), n, X0_RANGE),
            teacher,
            learner,
        }
    }

    /// Both graphs uniformly random hamiltonian cycles.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        let teacher =
            CyclePermutation::random_hamiltonian_with(n, &mut stream(seed, Stream::Graph))?;
        let learner =
            CyclePermutation::random_hamiltonian_with(n, &mut stream(seed, Stream::LearnerGraph))?;
        Ok(Self::with_graphs(teacher, learner, seed))
    }
}

/// Seed of trial `index` in a batch seeded by `seed` (splitmix64 finalizer).
pub fn trial_seed(seed: u64, n: usize, index: usize) -> u64 {
    let mut z = seed
        .wrapping_add((n as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add((index as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Every (teacher, learner) pair of hamiltonian cycles on `n` vertices.
pub fn exhaustive_specs(n: usize, seed: u64) -> Result<Vec<TrialSpec>> {
    let cycles: Vec<CyclePermutation> = hamiltonian_cycles(n)?.collect();
    let mut specs = Vec::with_capacity(cycles.len() * cycles.len());
    for t in &cycles {
        for l in &cycles {
            let s = trial_seed(seed, n, specs.len());
            specs.push(TrialSpec::with_graphs(t.clone(), l.clone(), s));
        }
    }
    Ok(specs)
}

pub fn random_specs(n: usize, trials: usize, seed: u64) -> Result<Vec<TrialSpec>> {
    (0..trials)
        .map(|i| TrialSpec::random(n, trial_seed(seed, n, i)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TrialOptions {
    pub epsilon: f64,
    pub dt: f64,
    pub warmup_periods: f64,
    pub structure: StructureOptions,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            dt: DEFAULT_DT,
            warmup_periods: DEFAULT_WARMUP_PERIODS,
            structure: StructureOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub seed: u64,
    pub n: usize,
    /// Rewirings until every edge fitted; `None` if the run failed.
    pub iterations: Option<usize>,
    pub periods: usize,
    /// Final learner graph equals the teacher's.
    pub recovered: bool,
    /// Largest `e_j / Var[γ_j]` over edges present in the teacher.
    pub max_matched_rel: f64,
    /// Smallest `e_j / Var[γ_j]` over absent edges with a valid regression.
    pub min_mismatched_rel: f64,
    /// Regressions whose verdict disagrees with the teacher's graph.
    pub misclassified: usize,
    pub degenerate: usize,
    /// `e_j / Var[γ_j]` of every valid regression on an absent edge, in visit order.
    pub mismatched_rel: Vec<f64>,
    pub error: Option<String>,
}

fn summarize_diagnostics(
    spec: &TrialSpec,
    diagnostics: &[IterationDiagnostics],
    r: &mut TrialResult,
) {
    for it in diagnostics {
        for v in &it.vertices {
            let truth = spec.teacher.succ(v.j) == v.sigma_j;
            match v.relative_error() {
                None => r.degenerate += 1,
                Some(e) if truth => r.max_matched_rel = r.max_matched_rel.max(e),
                Some(e) => {
                    r.min_mismatched_rel = r.min_mismatched_rel.min(e);
                    r.mismatched_rel.push(e);
                }
            }
            if v.regression.is_some() && v.matched != truth {
                r.misclassified += 1;
            }
        }
    }
}

/// Settles the teacher from `x0`, then runs structure learning.
pub fn run_trial(spec: &TrialSpec, opts: &TrialOptions) -> TrialResult {
    let n = spec.teacher.n();
    let mut r = TrialResult {
        seed: spec.seed,
        n,
        iterations: None,
        periods: 0,
        recovered: false,
        max_matched_rel: 0.0,
        min_mismatched_rel: f64::INFINITY,
        misclassified: 0,
        degenerate: 0,
        mismatched_rel: Vec::new(),
        error: None,
    };
    let outcome = (|| -> Result<StructureOutcome> {
        let net = WlcNetwork::from_permutation(
            spec.teacher.clone(),
            CouplingVector::new(spec.alpha.clone())?,
            opts.epsilon,
        )?;
        let cycle = LimitCycle::settle(&net, &spec.x0, opts.dt, opts.warmup_periods)?;
        let state = LearnerState::new(
            spec.learner.clone(),
            CouplingVector::new(spec.gamma0.clone())?,
        )?;
        learn_structure(&cycle, state, &opts.structure)
    })();
    match outcome {
        Ok(out) => {
            summarize_diagnostics(spec, &out.diagnostics, &mut r);
            r.iterations = Some(out.iterations);
            r.periods = out.periods;
            r.recovered = out.sigma == spec.teacher;
        }
        Err(crate::Error::NonConvergence {
            diagnostics,
            max_iters,
        }) => {
            summarize_diagnostics(spec, &diagnostics, &mut r);
            r.periods = diagnostics.len();
            r.error = Some(format!("no convergence within {max_iters} rewirings"));
        }
        Err(e) => r.error = Some(e.to_string()),
    }
    r
}

/// Runs every trial in parallel; results keep the order of `specs`.
pub fn run_trials(specs: &[TrialSpec], opts: &TrialOptions) -> Vec<TrialResult> {
    specs.par_iter().map(|s| run_trial(s, opts)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub n: usize,
    pub trials: usize,
    pub converged: usize,
    pub recovered: usize,
    pub max_iterations: usize,
    pub max_periods: usize,
    /// Trials that converged within `n − 1` rewirings and recovered the teacher.
    pub within_bound: usize,
    pub max_matched_rel: f64,
    pub min_mismatched_rel: f64,
    pub misclassified: usize,
    pub degenerate: usize,
}

impl SweepSummary {
    pub fn all_within_bound(&self) -> bool {
        self.within_bound == self.trials
    }

    /// Smallest wrong-edge error over largest right-edge error.
    pub fn separation(&self) -> f64 {
        if self.max_matched_rel > 0.0 {
            self.min_mismatched_rel / self.max_matched_rel
        } else {
            f64::INFINITY
        }
    }
}

pub fn summarize(n: usize, results: &[TrialResult]) -> SweepSummary {
    let mut s = SweepSummary {
        n,
        trials: results.len(),
        converged: 0,
        recovered: 0,
        max_iterations: 0,
        max_periods: 0,
        within_bound: 0,
        max_matched_rel: 0.0,
        min_mismatched_rel: f64::INFINITY,
        misclassified: 0,
        degenerate: 0,
    };
    for r in results {
        if let Some(k) = r.iterations {
            s.converged += 1;
            s.max_iterations = s.max_iterations.max(k);
            if k < n && r.recovered {
                s.within_bound += 1;
            }
        }
        s.recovered += usize::from(r.recovered);
        s.max_periods = s.max_periods.max(r.periods);
        s.max_matched_rel = s.max_matched_rel.max(r.max_matched_rel);
        s.min_mismatched_rel = s.min_mismatched_rel.min(r.min_mismatched_rel);
        s.misclassified += r.misclassified;
        s.degenerate += r.degenerate;
    }
    s
}
