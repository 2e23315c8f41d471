//! WLC Lotka–Volterra dynamics.
//!
//! The network state obeys `ẋ = x ⊙ (1 − ρ x) + ε·1`, where the coupling
//! matrix `ρ` has ones on the diagonal, the weak coupling `c_j` at
//! `(σ(j), j)` and the strong inhibition `2` everywhere else. For `c ∈ (0,1)ⁿ`
//! and a hamiltonian `σ` the attractor is a stable limit cycle that activates
//! the neurons one at a time in the order of `σ`; the on-state of neuron `j`
//! lasts longer the closer `c_j` is to one.

use crate::error::{Error, Result};
use crate::graph::{pathway_matrix, permutation_of, CyclePermutation, PathwayMatrix};
use crate::ode::Rk4;
use crate::series::NeuralTrajectory;

pub const DEFAULT_EPSILON: f64 = 1e-4;
pub const DEFAULT_DT: f64 = 1e-2;
/// Periods discarded after the coarse pre-run before anything is measured.
pub const DEFAULT_WARMUP_PERIODS: f64 = 3.0;
/// Upper edge of the admissible state box used as a divergence guard.
pub const STATE_BOUND: f64 = 2.0;

/// Per-neuron duration parameters (`α` for a teacher, `γ` for a learner).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingVector(Vec<f64>);

impl CouplingVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Numeric(format!(
                "coupling {v} must be finite and nonnegative"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Value for the 1-based neuron `j`.
    pub fn get(&self, j: usize) -> f64 {
        self.0[j - 1]
    }

    /// Every entry lies in `(0, 1)`, the range that yields WLC switching.
    pub fn is_wlc_admissible(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0 && v < 1.0)
    }
}

/// Dense coupling matrix `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    n: usize,
    rho: Vec<f64>,
}

impl CouplingMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `ρ_ij` for 1-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rho[(i - 1) * self.n + (j - 1)]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.rho.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.rho[i * self.n..(i + 1) * self.n]
    }
}

/// `ρ_ij = 1` if `i = j`, `c_j` if `w_ij = 1`, `2` otherwise.
pub fn build_coupling_matrix(w: &PathwayMatrix, c: &CouplingVector) -> Result<CouplingMatrix> {
    if w.n() != c.len() {
        return Err(Error::Size(format!(
            "pathway matrix is {0}x{0} but the coupling vector has {1} entries",
            w.n(),
            c.len()
        )));
    }
    let perm = permutation_of(w)?;
    Ok(coupling_matrix_of(&perm, c.values()))
}

/// Dense `ρ` for any permutation; a self-loop keeps the diagonal at 1.
pub(crate) fn coupling_matrix_of(perm: &CyclePermutation, c: &[f64]) -> CouplingMatrix {
    let n = perm.n();
    let mut rho = vec![2.0; n * n];
    for (j, &i) in perm.succ0().iter().enumerate() {
        rho[i * n + j] = c[j];
    }
    for i in 0..n {
        rho[i * n + i] = 1.0;
    }
    CouplingMatrix { n, rho }
}

/// Right-hand side `x ⊙ (1 − ρ x) + ε·1` evaluated with the dense matrix.
pub fn wlc_rhs(x: &[f64], rho: &CouplingMatrix, epsilon: f64) -> Result<Vec<f64>> {
    if x.len() != rho.n {
        return Err(Error::Size(format!(
            "state has {} entries, ρ is {}x{}",
            x.len(),
            rho.n,
            rho.n
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("state is not finite".into()));
    }
    Ok((0..rho.n)
        .map(|i| {
            let r: f64 = rho.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
            x[i] * (1.0 - r) + epsilon
        })
        .collect())
}

/// O(n) evaluation of the same right-hand side, exploiting that row `i` of
/// `ρ` differs from `2` only at the diagonal and at the predecessor of `i`.
#[inline]
pub(crate) fn ring_rhs(x: &[f64], pred: &[usize], c: &[f64], epsilon: f64, out: &mut [f64]) {
    let total: f64 = x.iter().sum();
    for i in 0..x.len() {
        let p = pred[i];
        let r = if p == i {
            x[i] + 2.0 * (total - x[i])
        } else {
            x[i] + 2.0 * (total - x[i] - x[p]) + c[p] * x[p]
        };
        out[i] = x[i] * (1.0 - r) + epsilon;
    }
}

/// A teacher-style network: hamiltonian-or-not pathway, couplings and ε.
#[derive(Debug, Clone, PartialEq)]
pub struct WlcNetwork {
    perm: CyclePermutation,
    coupling: CouplingVector,
    epsilon: f64,
}

impl WlcNetwork {
    pub fn new(w: &PathwayMatrix, coupling: CouplingVector, epsilon: f64) -> Result<Self> {
        Self::from_permutation(permutation_of(w)?, coupling, epsilon)
    }

    pub fn from_permutation(
        perm: CyclePermutation,
        coupling: CouplingVector,
        epsilon: f64,
    ) -> Result<Self> {
        if perm.n() != coupling.len() {
            return Err(Error::Size(format!(
                "{} neurons but {} couplings",
                perm.n(),
                coupling.len()
            )));
        }
        if !perm.fixed_points().is_empty() {
            return Err(Error::InvalidMatrix(format!(
                "self-loops at {:?}",
                perm.fixed_points()
            )));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Numeric(format!(
                "epsilon = {epsilon} must be positive"
            )));
        }
        Ok(Self {
            perm,
            coupling,
            epsilon,
        })
    }

    pub fn n(&self) -> usize {
        self.perm.n()
    }

    pub fn permutation(&self) -> &CyclePermutation {
        &self.perm
    }

    pub fn pathway(&self) -> PathwayMatrix {
        pathway_matrix(&self.perm)
    }

    pub fn coupling(&self) -> &CouplingVector {
        &self.coupling
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn coupling_matrix(&self) -> CouplingMatrix {
        coupling_matrix_of(&self.perm, self.coupling.values())
    }

    pub(crate) fn rhs_into(&self, x: &[f64], out: &mut [f64]) {
        ring_rhs(
            x,
            self.perm.pred0(),
            self.coupling.values(),
            self.epsilon,
            out,
        );
    }
}

pub(crate) fn check_state(x: &[f64], t: f64) -> Result<()> {
    if x.iter()
        .all(|&v| v.is_finite() && v > 0.0 && v <= STATE_BOUND)
    {
        Ok(())
    } else {
        Err(Error::Divergence { t })
    }
}

/// RK4 integration of the network from `x0` over `duration` with step `dt`.
pub fn integrate(net: &WlcNetwork, x0: &[f64], duration: f64, dt: f64) -> Result<NeuralTrajectory> {
    let n = net.n();
    if x0.len() != n {
        return Err(Error::Size(format!(
            "initial state has {} entries, network has {n}",
            x0.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(duration >= dt) {
        return Err(Error::Numeric(format!(
            "need dt > 0 and duration >= dt (dt = {dt}, duration = {duration})"
        )));
    }
    check_state(x0, 0.0)?;
    let steps = (duration / dt).round() as usize;
    let mut traj = NeuralTrajectory::with_capacity(0.0, dt, n, steps + 1);
    let mut x = x0.to_vec();
    let mut rk = Rk4::new(n);
    traj.push(&x);
    for k in 1..=steps {
        rk.step(&mut x, dt, |z, out| net.rhs_into(z, out));
        check_state(&x, k as f64 * dt)?;
        traj.push(&x);
    }
    Ok(traj)
}

/// Integrates in place without recording; for warm-ups.
pub fn advance(net: &WlcNetwork, x: &mut [f64], duration: f64, dt: f64) -> Result<()> {
    if x.len() != net.n() {
        return Err(Error::Size(format!(
            "state has {} entries, network has {}",
            x.len(),
            net.n()
        )));
    }
    let mut rk = Rk4::new(x.len());
    for k in 1..=(duration / dt).round() as usize {
        rk.step(x, dt, |z, out| net.rhs_into(z, out));
        check_state(x, k as f64 * dt)?;
    }
    Ok(())
}

/// Index of the largest component; ties go to the lower index. 0-based.
pub(crate) fn argmax(x: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in x.iter().enumerate().skip(1) {
        if v > x[best] {
            best = j;
        }
    }
    best
}

/// One uninterrupted stretch during which `neuron` (1-based) is the argmax.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Run {
    pub neuron: usize,
    pub start: f64,
    pub end: f64,
}

impl Run {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingReport {
    /// Complete argmax runs; the partial first and last runs are dropped.
    pub runs: Vec<Run>,
    /// Smallest neuron label appearing in `runs`; its onsets define cycles.
    pub reference: usize,
    pub onsets: Vec<f64>,
    pub period: f64,
    /// Mean on-state duration per neuron over complete cycles.
    pub durations: Vec<Option<f64>>,
}

impl SwitchingReport {
    /// `(neuron, duration)` pairs in temporal order.
    pub fn active_sequence(&self) -> Vec<(usize, f64)> {
        self.runs.iter().map(|r| (r.neuron, r.duration())).collect()
    }

    pub fn neuron_sequence(&self) -> Vec<usize> {
        self.runs.iter().map(|r| r.neuron).collect()
    }

    /// Number of complete reference cycles covered.
    pub fn cycles(&self) -> usize {
        self.onsets.len().saturating_sub(1)
    }

    /// One cycle of the activation order, starting at the reference neuron.
    pub fn cycle_order(&self) -> Vec<usize> {
        let start = self.onsets[0];
        self.runs
            .iter()
            .filter(|r| r.start >= start && r.start < self.onsets[1])
            .map(|r| r.neuron)
            .collect()
    }

    /// Durations with absent neurons reported as an error.
    pub fn complete_durations(&self) -> Result<Vec<f64>> {
        self.durations
            .iter()
            .enumerate()
            .map(|(j, d)| {
                d.ok_or_else(|| Error::NoPeriod(format!("neuron {} never became active", j + 1)))
            })
            .collect()
    }
}

/// Argmax switching structure of a trajectory after discarding `discard` time units.
///
/// Switch instants are placed where the two competing components cross,
/// by linear interpolation between the bracketing samples.
pub fn switching_report(traj: &NeuralTrajectory, discard: f64) -> Result<SwitchingReport> {
    let n = traj.dim();
    let k0 = (((discard.max(0.0)) / traj.dt()).ceil() as usize).min(traj.len());
    if traj.len() < k0 + 2 {
        return Err(Error::NoPeriod(
            "trajectory shorter than the warm-up".into(),
        ));
    }
    let mut switches: Vec<(f64, usize)> = Vec::new();
    let mut prev = argmax(traj.sample(k0));
    for k in k0 + 1..traj.len() {
        let x = traj.sample(k);
        let cur = argmax(x);
        if cur != prev {
            let xp = traj.sample(k - 1);
            let before = xp[cur] - xp[prev];
            let after = x[cur] - x[prev];
            let s = if before < after {
                (before / (before - after)).clamp(0.0, 1.0)
            } else {
                1.0
            };
            switches.push((traj.time(k - 1) + s * traj.dt(), cur));
            prev = cur;
        }
    }
    let runs: Vec<Run> = switches
        .windows(2)
        .map(|w| Run {
            neuron: w[0].1 + 1,
            start: w[0].0,
            end: w[1].0,
        })
        .collect();
    let reference = runs
        .iter()
        .map(|r| r.neuron)
        .min()
        .ok_or_else(|| Error::NoPeriod("no complete activation run".into()))?;
    let onsets: Vec<f64> = switches
        .iter()
        .filter(|s| s.1 + 1 == reference)
        .map(|s| s.0)
        .collect();
    if onsets.len() < 2 {
        return Err(Error::NoPeriod(format!(
            "reference neuron {reference} switched on {} time(s)",
            onsets.len()
        )));
    }
    let (first, last) = (onsets[0], onsets[onsets.len() - 1]);
    let period = (last - first) / (onsets.len() - 1) as f64;

    let mut sums = vec![0.0; n];
    let mut counts = vec![0usize; n];
    for r in runs.iter().filter(|r| r.start >= first && r.start < last) {
        sums[r.neuron - 1] += r.duration();
        counts[r.neuron - 1] += 1;
    }
    let durations = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    Ok(SwitchingReport {
        runs,
        reference,
        onsets,
        period,
        durations,
    })
}

/// A network parked on its limit cycle, ready to be observed.
#[derive(Debug, Clone)]
pub struct LimitCycle {
    pub net: WlcNetwork,
    /// State on the attractor; observation starts here at `t = 0`.
    pub state: Vec<f64>,
    pub period: f64,
    pub dt: f64,
}

impl LimitCycle {
    /// Runs the network from `x0` through a coarse pre-run and `warmup_periods`
    /// periods, then measures the period over the next two and a half.
    pub fn settle(net: &WlcNetwork, x0: &[f64], dt: f64, warmup_periods: f64) -> Result<Self> {
        let n = net.n() as f64;
        let mut x = x0.to_vec();
        let mut horizon = 60.0 * n;
        let mut coarse = None;
        for _ in 0..6 {
            let traj = integrate(net, &x, horizon, dt)?;
            x = traj.last().expect("non-empty").to_vec();
            if let Ok(r) = switching_report(&traj, horizon / 3.0) {
                coarse = Some(r.period);
                break;
            }
            horizon *= 2.0;
        }
        let coarse = coarse
            .ok_or_else(|| Error::NoPeriod("network does not switch (equilibrium?)".into()))?;
        advance(net, &mut x, warmup_periods.max(0.0) * coarse, dt)?;
        let traj = integrate(net, &x, 2.5 * coarse, dt)?;
        let report = switching_report(&traj, 0.0)?;
        Ok(Self {
            net: net.clone(),
            state: traj.last().expect("non-empty").to_vec(),
            period: report.period,
            dt,
        })
    }

    pub fn trajectory(&self, duration: f64) -> Result<NeuralTrajectory> {
        integrate(&self.net, &self.state, duration, self.dt)
    }

    /// Largest `‖x(t+T) − x(t)‖∞` over one period sampled along `periods + 1` periods.
    pub fn periodicity_defect(&self, periods: usize) -> Result<f64> {
        let steps = (self.period / self.dt).ceil() as usize;
        let dt = self.period / steps as f64;
        let traj = integrate(
            &self.net,
            &self.state,
            (periods + 1) as f64 * self.period,
            dt,
        )?;
        let mut worst: f64 = 0.0;
        for k in 0..traj.len().saturating_sub(steps) {
            let (a, b) = (traj.sample(k), traj.sample(k + steps));
            for (u, v) in a.iter().zip(b) {
                worst = worst.max((u - v).abs());
            }
        }
        Ok(worst)
    }
}

/// Measured mean on-state durations of a network started from `x0`.
/// Returns the durations and a state on the attractor for warm restarts.
pub fn measured_durations(net: &WlcNetwork, x0: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let cycle = LimitCycle::settle(net, x0, dt, 1.0)?;
    let traj = cycle.trajectory(4.2 * cycle.period)?;
    let report = switching_report(&traj, 0.0)?;
    Ok((report.complete_durations()?, cycle.state))
}

#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    /// Accepted relative duration error per neuron.
    pub tol_rel: f64,
    pub max_sweeps: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub initial_alpha: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            tol_rel: 0.01,
            max_sweeps: 8,
            alpha_min: 0.01,
            alpha_max: 0.99,
            initial_alpha: 0.5,
        }
    }
}

/// Finds `α` whose simulated on-state durations match `targets`.
pub fn calibrate_alpha(
    w: &PathwayMatrix,
    targets: &[f64],
    epsilon: f64,
    dt: f64,
) -> Result<CouplingVector> {
    calibrate_alpha_with(w, targets, epsilon, dt, &CalibrationOptions::default())
}

/// Per-coordinate bisection on the measured durations, repeated in full
/// sweeps because each `α_j` slightly shifts its neighbours' durations.
pub fn calibrate_alpha_with(
    w: &PathwayMatrix,
    targets: &[f64],
    epsilon: f64,
    dt: f64,
    opts: &CalibrationOptions,
) -> Result<CouplingVector> {
    let perm = permutation_of(w)?;
    let n = perm.n();
    if targets.len() != n {
        return Err(Error::Size(format!(
            "{} targets for {n} neurons",
            targets.len()
        )));
    }
    if !perm.is_hamiltonian() {
        return Err(Error::InvalidMatrix(
            "calibration needs a hamiltonian pathway".into(),
        ));
    }
    if let Some(t) = targets.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::Numeric(format!(
            "target duration {t} must be positive"
        )));
    }

    let mut alpha = vec![opts.initial_alpha; n];
    let mut state: Vec<f64> = (0..n).map(|j| 0.1 + 0.6 * j as f64 / n as f64).collect();
    let measure = |alpha: &[f64], state: &mut Vec<f64>| -> Result<Vec<f64>> {
        let net = WlcNetwork::from_permutation(
            perm.clone(),
            CouplingVector::new(alpha.to_vec())?,
            epsilon,
        )?;
        let (d, s) = measured_durations(&net, state, dt)?;
        *state = s;
        Ok(d)
    };
    let rel_err =
        |d: &[f64]| -> Vec<f64> { d.iter().zip(targets).map(|(d, t)| d / t - 1.0).collect() };

    let mut durations = measure(&alpha, &mut state)?;
    let mut worst = f64::INFINITY;
    for sweep in 0..opts.max_sweeps {
        for j in 0..n {
            if rel_err(&durations)[j].abs() <= opts.tol_rel {
                continue;
            }
            let (mut lo, mut hi) = if sweep == 0 {
                (opts.alpha_min, opts.alpha_max)
            } else {
                (
                    (alpha[j] - 0.1).max(opts.alpha_min),
                    (alpha[j] + 0.1).min(opts.alpha_max),
                )
            };
            // Make sure [lo, hi] brackets the target, widening to the full range if not.
            let probe = |a: f64, alpha: &mut Vec<f64>, state: &mut Vec<f64>| -> Result<f64> {
                alpha[j] = a;
                Ok(measure(alpha, state)?[j])
            };
            let saved = alpha[j];
            let d_lo = probe(lo, &mut alpha, &mut state)?;
            if d_lo > targets[j] {
                if lo > opts.alpha_min {
                    lo = opts.alpha_min;
                }
                let d_min = if lo == opts.alpha_min {
                    probe(lo, &mut alpha, &mut state)?
                } else {
                    d_lo
                };
                if d_min > targets[j] {
                    alpha[j] = saved;
                    return Err(Error::CalibrationRange {
                        neuron: j + 1,
                        target: targets[j],
                        min: d_min,
                        max: f64::NAN,
                    });
                }
            }
            let d_hi = probe(hi, &mut alpha, &mut state)?;
            if d_hi < targets[j] {
                if hi < opts.alpha_max {
                    hi = opts.alpha_max;
                }
                let d_max = probe(hi, &mut alpha, &mut state)?;
                if d_max < targets[j] {
                    return Err(Error::CalibrationRange {
                        neuron: j + 1,
                        target: targets[j],
                        min: f64::NAN,
                        max: d_max,
                    });
                }
            }
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                let d = probe(mid, &mut alpha, &mut state)?;
                if (d / targets[j] - 1.0).abs() <= 0.25 * opts.tol_rel || hi - lo < 1e-7 {
                    break;
                }
                if d < targets[j] {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        durations = measure(&alpha, &mut state)?;
        worst = rel_err(&durations)
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()));
        if worst <= opts.tol_rel {
            return CouplingVector::new(alpha);
        }
    }
    Err(Error::CalibrationFailure {
        sweeps: opts.max_sweeps,
        worst_rel_error: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::CyclePermutation;

    fn eq12() -> PathwayMatrix {
        pathway_matrix(&CyclePermutation::from_sequence(&[1, 3, 2]).unwrap())
    }

    #[test]
    fn coupling_matrix_for_three_neurons() {
        let rho =
            build_coupling_matrix(&eq12(), &CouplingVector::new(vec![0.2, 0.6, 0.8]).unwrap())
                .unwrap();
        assert_eq!(
            rho.rows(),
            vec![
                vec![1.0, 0.6, 2.0],
                vec![2.0, 1.0, 0.8],
                vec![0.2, 2.0, 1.0]
            ]
        );
    }

    #[test]
    fn coupling_of_two_collapses_to_uniform_inhibition() {
        let w = pathway_matrix(&CyclePermutation::random_hamiltonian(7, 3).unwrap());
        let rho = build_coupling_matrix(&w, &CouplingVector::new(vec![2.0; 7]).unwrap()).unwrap();
        for i in 1..=7 {
            for j in 1..=7 {
                assert_eq!(rho.get(i, j), if i == j { 1.0 } else { 2.0 });
            }
        }
    }

    #[test]
    fn six_neuron_ring_has_alpha_on_the_wrapped_subdiagonal() {
        let w = pathway_matrix(&CyclePermutation::from_sequence(&[1, 2, 3, 4, 5, 6]).unwrap());
        let alpha = [0.6, 0.5, 0.7, 0.1, 0.8, 0.3];
        let rho = build_coupling_matrix(&w, &CouplingVector::new(alpha.to_vec()).unwrap()).unwrap();
        for j in 1..=6 {
            let i = j % 6 + 1;
            assert_eq!(rho.get(i, j), alpha[j - 1]);
            for k in (1..=6).filter(|&k| k != i && k != j) {
                assert_eq!(rho.get(k, j), 2.0);
            }
        }
    }

    #[test]
    fn coupling_matrix_errors() {
        let c = CouplingVector::new(vec![0.5; 4]).unwrap();
        assert!(matches!(
            build_coupling_matrix(&eq12(), &c),
            Err(Error::Size(_))
        ));
        let id: Vec<Vec<u8>> = (0..3)
            .map(|i| (0..3).map(|j| u8::from(i == j)).collect())
            .collect();
        let id = PathwayMatrix::from_rows(&id).unwrap();
        let c = CouplingVector::new(vec![0.5; 3]).unwrap();
        assert!(matches!(
            build_coupling_matrix(&id, &c),
            Err(Error::InvalidMatrix(_))
        ));
        assert!(CouplingVector::new(vec![0.1, -0.2, 0.3]).is_err());
    }

    #[test]
    fn rhs_at_zero_and_unit_states() {
        let c = CouplingVector::new(vec![0.2, 0.6, 0.8]).unwrap();
        let rho = build_coupling_matrix(&eq12(), &c).unwrap();
        let eps = 1e-4;
        assert_eq!(wlc_rhs(&[0.0; 3], &rho, eps).unwrap(), vec![eps; 3]);
        // At a saddle e_j every component reduces to ε: x_j(1 − ρ_jj) = 0 and x_i = 0 elsewhere.
        for j in 0..3 {
            let mut e = [0.0; 3];
            e[j] = 1.0;
            let d = wlc_rhs(&e, &rho, eps).unwrap();
            for v in d {
                assert!((v - eps).abs() < 1e-15);
            }
        }
        assert!(matches!(
            wlc_rhs(&[f64::NAN, 0.0, 0.0], &rho, eps),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn ring_rhs_matches_dense_rhs() {
        for seed in 0..20 {
            let perm = CyclePermutation::random_hamiltonian(3 + (seed as usize % 9), seed).unwrap();
            let n = perm.n();
            let c: Vec<f64> = (0..n)
                .map(|j| 0.05 + 0.9 * ((j * 7 + seed as usize) % 11) as f64 / 11.0)
                .collect();
            let x: Vec<f64> = (0..n)
                .map(|j| 0.01 + ((j * 13 + 5) % 17) as f64 / 17.0)
                .collect();
            let dense = wlc_rhs(&x, &coupling_matrix_of(&perm, &c), 1e-3).unwrap();
            let mut fast = vec![0.0; n];
            ring_rhs(&x, perm.pred0(), &c, 1e-3, &mut fast);
            for (a, b) in dense.iter().zip(&fast) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
        // self-loop: ρ keeps 1 on the diagonal and 2 elsewhere in that row
        let perm = CyclePermutation::from_successors_allow_loops(&[1, 3, 2]).unwrap();
        let c = [0.3, 0.4, 0.5];
        let x = [0.2, 0.5, 0.7];
        let dense = wlc_rhs(&x, &coupling_matrix_of(&perm, &c), 0.0).unwrap();
        let mut fast = [0.0; 3];
        ring_rhs(&x, perm.pred0(), &c, 0.0, &mut fast);
        for (a, b) in dense.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn integration_rejects_bad_input() {
        let net = WlcNetwork::new(
            &eq12(),
            CouplingVector::new(vec![0.2, 0.6, 0.8]).unwrap(),
            1e-4,
        )
        .unwrap();
        assert!(matches!(
            integrate(&net, &[0.1, 0.2], 1.0, 0.01),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            integrate(&net, &[0.1, 0.2, 0.3], 1.0, 0.0),
            Err(Error::Numeric(_))
        ));
        assert!(matches!(
            integrate(&net, &[0.1, 0.0, 0.3], 1.0, 0.01),
            Err(Error::Divergence { .. })
        ));
        // An explicit step far too large for the dynamics blows up and reports when.
        match integrate(&net, &[1.9, 1.9, 1.9], 100.0, 3.0) {
            Err(Error::Divergence { t }) => assert!(t > 0.0),
            other => panic!("expected divergence, got {other:?}"),
        }
        assert!(WlcNetwork::new(
            &eq12(),
            CouplingVector::new(vec![0.2, 0.6, 0.8]).unwrap(),
            0.0
        )
        .is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.9, 0.05, 0.02]), 0);
        assert_eq!(argmax(&[0.1, 0.5, 0.2, 0.3, 0.5]), 1);
    }

    #[test]
    fn switching_report_on_a_synthetic_square_wave() {
        // Neuron order 2 → 1 → 3 with durations 2, 1, 3.
        let dt = 0.01;
        let pattern = [(2usize, 2.0), (1, 1.0), (3, 3.0)];
        let mut rows = Vec::new();
        let mut t = 0.0;
        while t < 60.0 {
            let mut phase = t % 6.0;
            let mut active = 0;
            for (j, d) in pattern {
                if phase < d {
                    active = j;
                    break;
                }
                phase -= d;
            }
            let mut x = vec![0.01; 3];
            x[active - 1] = 0.9;
            rows.push(x);
            t += dt;
        }
        let traj = NeuralTrajectory::from_rows(0.0, dt, &rows).unwrap();
        let r = switching_report(&traj, 0.0).unwrap();
        assert_eq!(r.reference, 1);
        assert!((r.period - 6.0).abs() < 0.02);
        let d = r.complete_durations().unwrap();
        for (got, want) in d.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 0.02, "{got} vs {want}");
        }
        assert_eq!(r.cycle_order(), vec![1, 3, 2]);
    }
}
