//! Teacher–learner learning.
//!
//! The learner watches the teacher's activity `x(t)` and nothing else. Its
//! control variable `θ` obeys the teacher's equation with the learner's own
//! couplings, `θ̇ = x ⊙ (1 − ρ_γ x) + ε`, and the couplings are read off as
//! `γ = γ_k + W_yᵀ(θ − θ_k − x + x_k)`. With the right graph this makes
//! `γ − α` decay like `exp(−∫ p)`, `p = W_yᵀx ⊙ x`; with a wrong edge `j` the
//! series `γ_j` stops being an affine function of `f_j = exp(−∫ p_j)`, which a
//! one-period linear regression detects. Vertices whose regression does not
//! fit exactly get their successors cyclically shifted, period after period,
//! until every edge fits.

use std::collections::BTreeSet;
use std::io::Write;

use crate::dynamics::{check_state, ring_rhs, CouplingVector, LimitCycle, WlcNetwork};
use crate::error::{Error, Result};
use crate::graph::{pathway_matrix, permutation_of, CyclePermutation, PathwayMatrix};
use crate::ode::Rk4;
use crate::series::{cumulative_trapezoid, trapezoid_mean, TimeSeries};

pub const DEFAULT_TOL_ABS: f64 = 1e-8;
pub const DEFAULT_TOL_REL: f64 = 1e-6;
/// Below this `Var[f_j]` a regression carries no edge information.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// `p = W_yᵀx ⊙ x`, i.e. `p_j = x_{σ(j)} x_j`.
pub fn observation_p(x: &[f64], w_y: &PathwayMatrix) -> Result<Vec<f64>> {
    if x.len() != w_y.n() {
        return Err(Error::Size(format!(
            "state has {} entries, W_y is {}x{}",
            x.len(),
            w_y.n(),
            w_y.n()
        )));
    }
    Ok(w_y
        .transpose_mul(x)
        .iter()
        .zip(x)
        .map(|(a, b)| a * b)
        .collect())
}

/// `p(t)` along a trajectory for the successor map `sigma` (self-loops allowed).
pub fn observation_series(x: &TimeSeries, sigma: &CyclePermutation) -> TimeSeries {
    let succ = sigma.succ0();
    let mut p = TimeSeries::with_capacity(x.t0(), x.dt(), x.dim(), x.len());
    let mut row = vec![0.0; x.dim()];
    for s in x.samples() {
        for (j, r) in row.iter_mut().enumerate() {
            *r = s[succ[j]] * s[j];
        }
        p.push(&row);
    }
    p
}

/// Componentwise running integral of a series, starting from zero.
fn running_integral(v: &TimeSeries) -> TimeSeries {
    let cols: Vec<Vec<f64>> = (0..v.dim())
        .map(|j| cumulative_trapezoid(&v.component(j), v.dt()))
        .collect();
    columns_to_series(v.t0(), v.dt(), &cols)
}

fn columns_to_series(t0: f64, dt: f64, cols: &[Vec<f64>]) -> TimeSeries {
    let len = cols.first().map_or(0, Vec::len);
    let mut s = TimeSeries::with_capacity(t0, dt, cols.len(), len);
    let mut row = vec![0.0; cols.len()];
    for k in 0..len {
        for (r, c) in row.iter_mut().zip(cols) {
            *r = c[k];
        }
        s.push(&row);
    }
    s
}

/// `f_j(t) = exp(−∫ p_j)` with the integral taken from the first sample of
/// `x`, so `f = 1` there.
pub fn f_series(x: &TimeSeries, sigma: &CyclePermutation) -> TimeSeries {
    let integral = running_integral(&observation_series(x, sigma));
    let mut f = TimeSeries::with_capacity(x.t0(), x.dt(), x.dim(), x.len());
    for s in integral.samples() {
        f.push(&s.iter().map(|v| (-v).exp()).collect::<Vec<_>>());
    }
    f
}

/// Period averages `⟨p_j⟩` over the first period of `teacher`.
pub fn mean_observation(
    teacher: &TimeSeries,
    w_y: &PathwayMatrix,
    period: f64,
) -> Result<Vec<f64>> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::NoPeriod(format!("invalid period {period}")));
    }
    let steps = (period / teacher.dt()).round() as usize;
    if steps < 2 || teacher.len() <= steps {
        return Err(Error::NoPeriod(format!(
            "trajectory of {} samples does not cover a period of {steps} steps",
            teacher.len()
        )));
    }
    let sigma = permutation_of(w_y)?;
    let p = observation_series(&teacher.slice(0, steps + 1), &sigma);
    Ok((0..p.dim())
        .map(|j| trapezoid_mean(&p.component(j)))
        .collect())
}

/// Guaranteed decay rate `κ = min_j ⟨p_j⟩` of `‖γ − α‖`.
pub fn convergence_exponent(teacher: &TimeSeries, w_y: &PathwayMatrix, period: f64) -> Result<f64> {
    Ok(mean_observation(teacher, w_y, period)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Least-squares slope of `ln‖γ(t) − α‖₂` sampled once per period. Samples
/// at or below `floor` are dropped so the integration noise floor does not
/// flatten the fit.
pub fn fitted_decay_slope(
    gamma: &TimeSeries,
    alpha: &[f64],
    period: f64,
    floor: f64,
) -> Result<f64> {
    let mut pts = Vec::new();
    let mut m = 0usize;
    loop {
        let t = gamma.t0() + m as f64 * period;
        if t > gamma.end_time() + 0.5 * gamma.dt() {
            break;
        }
        let g = gamma.sample(gamma.index_of(t));
        let norm = g
            .iter()
            .zip(alpha)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if norm > floor {
            pts.push((gamma.time(gamma.index_of(t)), norm.ln()));
        }
        m += 1;
    }
    if pts.len() < 3 {
        return Err(Error::Window(format!(
            "only {} period samples above the floor",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let (mt, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / k,
        pts.iter().map(|p| p.1).sum::<f64>() / k,
    );
    let cov: f64 = pts.iter().map(|(t, y)| (t - mt) * (y - my)).sum();
    let var: f64 = pts.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    Ok(cov / var)
}

/// One-period least-squares fit `γ_j ≈ δ₁ + δ₂ f_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionResult {
    pub delta_star: (f64, f64),
    /// `e_j(δ*) = ½⟨(δ₁ + δ₂ f_j − γ_j)²⟩`.
    pub error: f64,
    pub beta: f64,
    pub variance_f: f64,
    pub variance_gamma: f64,
}

/// Mean squared deviation `½⟨(δ₁ + δ₂ f − γ)²⟩` for arbitrary `δ`.
pub fn regression_error(gamma: &[f64], f: &[f64], delta: (f64, f64)) -> f64 {
    let r: Vec<f64> = gamma
        .iter()
        .zip(f)
        .map(|(g, f)| delta.0 + delta.1 * f - g)
        .map(|r| r * r)
        .collect();
    0.5 * trapezoid_mean(&r)
}

/// Minimizes the mean squared deviation with trapezoid-weighted time averages.
pub fn regress_delta(gamma: &[f64], f: &[f64]) -> Result<RegressionResult> {
    if gamma.len() != f.len() {
        return Err(Error::Size(format!(
            "γ has {} samples, f has {}",
            gamma.len(),
            f.len()
        )));
    }
    if gamma.len() < 3 {
        return Err(Error::Size(
            "a regression needs at least three samples".into(),
        ));
    }
    let mg = trapezoid_mean(gamma);
    let mf = trapezoid_mean(f);
    let dev_f: Vec<f64> = f.iter().map(|v| v - mf).collect();
    let dev_g: Vec<f64> = gamma.iter().map(|v| v - mg).collect();
    let variance_f = trapezoid_mean(&dev_f.iter().map(|d| d * d).collect::<Vec<_>>());
    let variance_gamma = trapezoid_mean(&dev_g.iter().map(|d| d * d).collect::<Vec<_>>());
    if !variance_f.is_finite() || !variance_gamma.is_finite() {
        return Err(Error::Numeric("non-finite regression input".into()));
    }
    if variance_f < VARIANCE_FLOOR {
        return Err(Error::DegenerateRegression { variance_f });
    }
    let cov = trapezoid_mean(
        &dev_f
            .iter()
            .zip(&dev_g)
            .map(|(a, b)| a * b)
            .collect::<Vec<_>>(),
    );
    let beta = cov / variance_f;
    let delta_star = (mg - beta * mf, beta);
    Ok(RegressionResult {
        delta_star,
        error: regression_error(gamma, f, delta_star),
        beta,
        variance_f,
        variance_gamma,
    })
}

/// Numerical stand-in for `e_j(δ*) = 0`.
pub fn edge_matches(r: &RegressionResult, gamma_variance: f64, tol_abs: f64, tol_rel: f64) -> bool {
    r.error == 0.0 || r.error < tol_abs + tol_rel * gamma_variance
}

/// Simultaneously sets `σ(ω_i) ← σ(ω_{i+1})` over the ascending set `omega`,
/// wrapping around at its end. May create self-loops.
pub fn rewire(sigma: &CyclePermutation, omega: &[usize]) -> Result<CyclePermutation> {
    if omega.is_empty() {
        return Err(Error::Invariant("rewiring needs a nonempty Ω".into()));
    }
    if omega.windows(2).any(|w| w[0] >= w[1]) || omega[0] == 0 || omega[omega.len() - 1] > sigma.n()
    {
        return Err(Error::Invariant(format!(
            "Ω = {omega:?} must be strictly ascending labels in 1..={}",
            sigma.n()
        )));
    }
    let mut succ = sigma.succ0().to_vec();
    let m = omega.len();
    for i in 0..m {
        succ[omega[i] - 1] = sigma.succ0()[omega[(i + 1) % m] - 1];
    }
    Ok(CyclePermutation::from_succ0(succ))
}

/// Borrowed view of the coupled state after a step.
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub theta: &'a [f64],
    pub gamma: &'a [f64],
    pub y: Option<&'a [f64]>,
}

/// Teacher, control variable and (optionally) learner integrated as one
/// system, with the interval bookkeeping `γ_k, θ_k, x_k` held fixed between
/// calls to [`rebase`](Self::rebase).
pub(crate) struct CoupledRun<'a> {
    teacher: &'a WlcNetwork,
    sigma: CyclePermutation,
    n: usize,
    z: Vec<f64>,
    gamma_k: Vec<f64>,
    theta_k: Vec<f64>,
    x_k: Vec<f64>,
    gamma: Vec<f64>,
    rk: Rk4,
}

fn gamma_of(
    z: &[f64],
    n: usize,
    succ: &[usize],
    gk: &[f64],
    thk: &[f64],
    xk: &[f64],
    out: &mut [f64],
) {
    let (x, th) = (&z[..n], &z[n..2 * n]);
    for j in 0..n {
        let s = succ[j];
        out[j] = gk[j] + th[s] - thk[s] - x[s] + xk[s];
    }
}

impl<'a> CoupledRun<'a> {
    pub(crate) fn new(
        teacher: &'a WlcNetwork,
        sigma: CyclePermutation,
        gamma0: &[f64],
        theta0: &[f64],
        x0: &[f64],
        y0: Option<&[f64]>,
    ) -> Result<Self> {
        let n = teacher.n();
        if sigma.n() != n
            || gamma0.len() != n
            || theta0.len() != n
            || x0.len() != n
            || y0.is_some_and(|y| y.len() != n)
        {
            return Err(Error::Size(format!(
                "learner and teacher sizes disagree (teacher has {n} neurons)"
            )));
        }
        check_state(x0, 0.0)?;
        let mut z = Vec::with_capacity(3 * n);
        z.extend_from_slice(x0);
        z.extend_from_slice(theta0);
        if let Some(y) = y0 {
            check_learner(y, 0.0)?;
            z.extend_from_slice(y);
        }
        let mut run = Self {
            teacher,
            sigma,
            n,
            rk: Rk4::new(z.len()),
            z,
            gamma_k: gamma0.to_vec(),
            theta_k: theta0.to_vec(),
            x_k: x0.to_vec(),
            gamma: vec![0.0; n],
        };
        run.refresh_gamma();
        Ok(run)
    }

    fn refresh_gamma(&mut self) {
        gamma_of(
            &self.z,
            self.n,
            self.sigma.succ0(),
            &self.gamma_k,
            &self.theta_k,
            &self.x_k,
            &mut self.gamma,
        );
    }

    pub(crate) fn sample(&self) -> Sample<'_> {
        let n = self.n;
        Sample {
            x: &self.z[..n],
            theta: &self.z[n..2 * n],
            gamma: &self.gamma,
            y: (self.z.len() > 2 * n).then(|| &self.z[2 * n..]),
        }
    }

    pub(crate) fn sigma(&self) -> &CyclePermutation {
        &self.sigma
    }

    /// Starts a new interval: the current γ, θ and x become the bookkeeping values.
    pub(crate) fn rebase(&mut self) {
        self.gamma_k.copy_from_slice(&self.gamma);
        self.theta_k.copy_from_slice(&self.z[self.n..2 * self.n]);
        self.x_k.copy_from_slice(&self.z[..self.n]);
    }

    /// Replaces the learner graph; call right after [`rebase`](Self::rebase) so γ is continuous.
    pub(crate) fn set_sigma(&mut self, sigma: CyclePermutation) {
        self.sigma = sigma;
        self.refresh_gamma();
    }

    pub(crate) fn bookkeeping(&self) -> (&[f64], &[f64], &[f64]) {
        (&self.gamma_k, &self.theta_k, &self.x_k)
    }

    /// Takes `steps` RK4 steps of size `dt`, calling `visit` after each one.
    /// `t0` only labels divergence errors.
    pub(crate) fn advance<F>(&mut self, steps: usize, dt: f64, t0: f64, mut visit: F) -> Result<()>
    where
        F: FnMut(&Sample<'_>),
    {
        let n = self.n;
        let eps = self.teacher.epsilon();
        let with_y = self.z.len() > 2 * n;
        let (succ, pred) = (self.sigma.succ0(), self.sigma.pred0());
        let (gk, thk, xk) = (&self.gamma_k, &self.theta_k, &self.x_k);
        let teacher = self.teacher;
        let mut g = vec![0.0; n];
        let mut gy = vec![0.0; n];
        for k in 1..=steps {
            self.rk.step(&mut self.z, dt, |z, out| {
                teacher.rhs_into(&z[..n], &mut out[..n]);
                gamma_of(z, n, succ, gk, thk, xk, &mut g);
                let (head, tail) = out.split_at_mut(2 * n);
                ring_rhs(&z[..n], pred, &g, eps, &mut head[n..]);
                if with_y {
                    // Negative couplings would make the motor network explode; clamping
                    // keeps (ρy)_i ≥ y_i and never touches γ.
                    for (c, v) in gy.iter_mut().zip(&g) {
                        *c = v.max(0.0);
                    }
                    ring_rhs(&z[2 * n..], pred, &gy, eps, tail);
                }
            });
            let t = t0 + k as f64 * dt;
            check_state(&self.z[..n], t)?;
            if with_y {
                check_learner(&self.z[2 * n..], t)?;
            }
            gamma_of(&self.z, n, succ, gk, thk, xk, &mut self.gamma);
            if self
                .gamma
                .iter()
                .chain(&self.z[n..2 * n])
                .any(|v| !v.is_finite())
            {
                return Err(Error::Numeric(format!(
                    "γ or θ became non-finite at t = {t}"
                )));
            }
            visit(&Sample {
                x: &self.z[..n],
                theta: &self.z[n..2 * n],
                gamma: &self.gamma,
                y: with_y.then(|| &self.z[2 * n..]),
            });
        }
        Ok(())
    }
}

// The learner's own couplings can leave (0, 1) mid-learning, so only
// positivity and finiteness are enforced on y.
fn check_learner(y: &[f64], t: f64) -> Result<()> {
    if y.iter().all(|&v| v.is_finite() && v > 0.0) {
        Ok(())
    } else {
        Err(Error::Divergence { t })
    }
}

/// Samples of `x`, `γ` and optionally `y`, keeping every `stride`-th step.
#[derive(Debug, Clone)]
pub struct Recording {
    pub x: TimeSeries,
    pub gamma: TimeSeries,
    pub y: Option<TimeSeries>,
    stride: usize,
    counter: usize,
}

impl Recording {
    fn new(t0: f64, dt: f64, n: usize, stride: usize, with_y: bool) -> Self {
        let stride = stride.max(1);
        let sdt = dt * stride as f64;
        Self {
            x: TimeSeries::new(t0, sdt, n),
            gamma: TimeSeries::new(t0, sdt, n),
            y: with_y.then(|| TimeSeries::new(t0, sdt, n)),
            stride,
            counter: 0,
        }
    }

    fn offer(&mut self, s: &Sample<'_>) {
        if self.counter.is_multiple_of(self.stride) {
            self.x.push(s.x);
            self.gamma.push(s.gamma);
            if let (Some(rec), Some(y)) = (self.y.as_mut(), s.y) {
                rec.push(y);
            }
        }
        self.counter += 1;
    }
}

/// Output of a fixed-graph duration learning run.
#[derive(Debug, Clone)]
pub struct DurationRun {
    pub x: TimeSeries,
    pub gamma: TimeSeries,
    pub y: Option<TimeSeries>,
}

/// Integrates the learning rule with `W_y` fixed, from `θ(0) = 0`.
pub fn duration_learning_run(
    teacher: &WlcNetwork,
    x0: &[f64],
    w_y: &PathwayMatrix,
    gamma0: &CouplingVector,
    horizon: f64,
    dt: f64,
) -> Result<DurationRun> {
    duration_learning_run_with_learner(teacher, x0, w_y, gamma0, horizon, dt, None)
}

/// As [`duration_learning_run`], also integrating the learner's own activity
/// from `y0`. The learner state never feeds back into `γ`.
pub fn duration_learning_run_with_learner(
    teacher: &WlcNetwork,
    x0: &[f64],
    w_y: &PathwayMatrix,
    gamma0: &CouplingVector,
    horizon: f64,
    dt: f64,
    y0: Option<&[f64]>,
) -> Result<DurationRun> {
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::Numeric(format!(
            "need dt > 0 and horizon >= dt (dt = {dt}, horizon = {horizon})"
        )));
    }
    let n = teacher.n();
    let sigma = permutation_of(w_y)?;
    let mut run = CoupledRun::new(teacher, sigma, gamma0.values(), &vec![0.0; n], x0, y0)?;
    let mut rec = Recording::new(0.0, dt, n, 1, y0.is_some());
    rec.offer(&run.sample());
    run.advance((horizon / dt).round() as usize, dt, 0.0, |s| rec.offer(s))?;
    Ok(DurationRun {
        x: rec.x,
        gamma: rec.gamma,
        y: rec.y,
    })
}

/// `γ(t) = α + (γ₀ − α) ⊙ exp(−∫₀ᵗ p)`, with the integral by trapezoids over
/// the samples of `p` and linear interpolation between them.
pub fn closed_form_gamma(
    gamma0: &[f64],
    alpha: &[f64],
    p: &TimeSeries,
    t: f64,
) -> Result<Vec<f64>> {
    if gamma0.len() != p.dim() || alpha.len() != p.dim() {
        return Err(Error::Size("γ₀, α and p must have the same width".into()));
    }
    let integral = running_integral(p)
        .interpolate(t)
        .ok_or_else(|| Error::Window(format!("t = {t} outside the sampled p series")))?;
    Ok(closed_form(gamma0, alpha, &integral))
}

/// [`closed_form_gamma`] at every sample of `p`.
pub fn closed_form_gamma_series(
    gamma0: &[f64],
    alpha: &[f64],
    p: &TimeSeries,
) -> Result<TimeSeries> {
    if gamma0.len() != p.dim() || alpha.len() != p.dim() {
        return Err(Error::Size("γ₀, α and p must have the same width".into()));
    }
    let integral = running_integral(p);
    let mut out = TimeSeries::with_capacity(p.t0(), p.dt(), p.dim(), p.len());
    for s in integral.samples() {
        out.push(&closed_form(gamma0, alpha, s));
    }
    Ok(out)
}

fn closed_form(gamma0: &[f64], alpha: &[f64], integral: &[f64]) -> Vec<f64> {
    gamma0
        .iter()
        .zip(alpha)
        .zip(integral)
        .map(|((g, a), i)| a + (g - a) * (-i).exp())
        .collect()
}

/// Forcing term of `γ̇_j = −p_j γ_j + q_j` for a learner graph that may
/// disagree with the teacher: `q_j = x_i (2x_j + (α_l − 2) x_l)` with
/// `i = σ_y(j)` and `l = σ_x⁻¹(i)`.
pub fn q_series(
    x: &TimeSeries,
    sigma_x: &CyclePermutation,
    sigma_y: &CyclePermutation,
    alpha: &[f64],
) -> Result<TimeSeries> {
    let n = x.dim();
    if sigma_x.n() != n || sigma_y.n() != n || alpha.len() != n {
        return Err(Error::Size("q needs matching sizes".into()));
    }
    if !sigma_y.fixed_points().is_empty() || !sigma_x.fixed_points().is_empty() {
        return Err(Error::InvalidMatrix(
            "q is defined for fixed-point-free graphs".into(),
        ));
    }
    let (sy, px) = (sigma_y.succ0(), sigma_x.pred0());
    let mut q = TimeSeries::with_capacity(x.t0(), x.dt(), n, x.len());
    let mut row = vec![0.0; n];
    for s in x.samples() {
        for j in 0..n {
            let i = sy[j];
            let l = px[i];
            row[j] = s[i] * (2.0 * s[j] + (alpha[l] - 2.0) * s[l]);
        }
        q.push(&row);
    }
    Ok(q)
}

/// `g(t) = ∫₀ᵗ q ⊘ f`.
pub fn g_series(q: &TimeSeries, f: &TimeSeries) -> Result<TimeSeries> {
    if q.dim() != f.dim() || q.len() != f.len() {
        return Err(Error::Size("q and f must have the same shape".into()));
    }
    let mut ratio = TimeSeries::with_capacity(q.t0(), q.dt(), q.dim(), q.len());
    for (a, b) in q.samples().zip(f.samples()) {
        ratio.push(&a.iter().zip(b).map(|(a, b)| a / b).collect::<Vec<_>>());
    }
    Ok(running_integral(&ratio))
}

/// `C = γ₀ − A ⊙ B ⊘ (1 − A)`, the limit offset of the γ series.
pub fn corollary1_constant(a: &[f64], b: &[f64], gamma0: &[f64]) -> Result<Vec<f64>> {
    if let Some(v) = a.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
        return Err(Error::Numeric(format!("A = {v} must lie in (0, 1)")));
    }
    Ok(gamma0
        .iter()
        .zip(a)
        .zip(b)
        .map(|((g, a), b)| g - a * b / (1.0 - a))
        .collect())
}

fn check_window(
    gamma: &TimeSeries,
    f: &TimeSeries,
    k: usize,
    samples_per_period: usize,
) -> Result<()> {
    if gamma.dim() != f.dim() {
        return Err(Error::Size("γ and f must have the same width".into()));
    }
    let need = (k + 1) * samples_per_period + 1;
    if gamma.len() < need || f.len() <= samples_per_period {
        return Err(Error::Window(format!(
            "need {need} samples of γ, have {}",
            gamma.len()
        )));
    }
    Ok(())
}

/// `sup_{t∈[0,T]} ‖γ(t+kT) − γ(t) + (1 − A^k) ⊙ C ⊙ f(t)‖∞` where one period
/// spans exactly `samples_per_period` steps and `f` uses the global convention.
pub fn lemma1_residual(
    gamma: &TimeSeries,
    f: &TimeSeries,
    a: &[f64],
    b: &[f64],
    gamma0: &[f64],
    k: usize,
    samples_per_period: usize,
) -> Result<f64> {
    check_window(gamma, f, k, samples_per_period)?;
    let c = corollary1_constant(a, b, gamma0)?;
    let factor: Vec<f64> = a
        .iter()
        .zip(&c)
        .map(|(a, c)| (1.0 - a.powi(k as i32)) * c)
        .collect();
    Ok(sup_deviation(gamma, f, &factor, k, samples_per_period))
}

/// `sup_{t∈[0,T]} ‖γ(t+kT) − γ(t) + C ⊙ f(t)‖∞`; shrinks like `(max_j A_j)^k`.
pub fn corollary1_gap(
    gamma: &TimeSeries,
    f: &TimeSeries,
    c: &[f64],
    k: usize,
    samples_per_period: usize,
) -> Result<f64> {
    check_window(gamma, f, k, samples_per_period)?;
    Ok(sup_deviation(gamma, f, c, k, samples_per_period))
}

fn sup_deviation(
    gamma: &TimeSeries,
    f: &TimeSeries,
    factor: &[f64],
    k: usize,
    steps: usize,
) -> f64 {
    let mut worst: f64 = 0.0;
    for m in 0..=steps {
        let (g0, gk, fm) = (gamma.sample(m), gamma.sample(m + k * steps), f.sample(m));
        for j in 0..gamma.dim() {
            worst = worst.max((gk[j] - (g0[j] - factor[j] * fm[j])).abs());
        }
    }
    worst
}

/// Everything needed to check the periodic structure of `γ` under a fixed,
/// possibly wrong learner graph.
#[derive(Debug, Clone)]
pub struct Lemma1Report {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    /// Residual for `k = 0, 1, …, periods − 1`.
    pub residuals: Vec<f64>,
    /// Gap for `k = 0, 1, …, periods − 1`.
    pub gaps: Vec<f64>,
    pub samples_per_period: usize,
    pub dt: f64,
    /// Largest gap between `γ` and its closed-form general solution `(γ₀ + g) ⊙ f`.
    pub general_solution_error: f64,
}

impl Lemma1Report {
    pub fn max_a(&self) -> f64 {
        self.a.iter().copied().fold(0.0, f64::max)
    }

    /// Successive gap ratios `gap_{k+1} / gap_k` for `k ≥ 1`.
    pub fn gap_ratios(&self) -> Vec<f64> {
        self.gaps.windows(2).skip(1).map(|w| w[1] / w[0]).collect()
    }
}

/// Runs the learning rule with `sigma_y` fixed for `periods` teacher periods,
/// starting on the teacher's limit cycle, and evaluates the periodic
/// structure of `γ`. The step is shrunk so one period is a whole number of steps.
pub fn lemma1_check(
    teacher: &LimitCycle,
    sigma_y: &CyclePermutation,
    gamma0: &CouplingVector,
    periods: usize,
) -> Result<Lemma1Report> {
    let net = &teacher.net;
    let n = net.n();
    if periods < 2 {
        return Err(Error::Window("need at least two periods".into()));
    }
    let steps = (teacher.period / teacher.dt).ceil() as usize;
    let dt = teacher.period / steps as f64;
    let mut run = CoupledRun::new(
        net,
        sigma_y.clone(),
        gamma0.values(),
        &vec![0.0; n],
        &teacher.state,
        None,
    )?;
    let mut rec = Recording::new(0.0, dt, n, 1, false);
    rec.offer(&run.sample());
    run.advance(periods * steps, dt, 0.0, |s| rec.offer(s))?;

    let f = f_series(&rec.x, sigma_y);
    let q = q_series(&rec.x, net.permutation(), sigma_y, net.coupling().values())?;
    let g = g_series(&q, &f)?;
    let general_solution_error = rec
        .gamma
        .samples()
        .zip(g.samples().zip(f.samples()))
        .flat_map(|(gm, (gg, ff))| {
            (0..n).map(move |j| (gm[j] - (gamma0.values()[j] + gg[j]) * ff[j]).abs())
        })
        .fold(0.0, f64::max);
    let a = f.sample(steps).to_vec();
    let b = g.sample(steps).to_vec();
    let c = corollary1_constant(&a, &b, gamma0.values())?;
    let mut residuals = Vec::with_capacity(periods);
    let mut gaps = Vec::with_capacity(periods);
    for k in 0..periods {
        residuals.push(lemma1_residual(
            &rec.gamma,
            &f,
            &a,
            &b,
            gamma0.values(),
            k,
            steps,
        )?);
        gaps.push(corollary1_gap(&rec.gamma, &f, &c, k, steps)?);
    }
    Ok(Lemma1Report {
        a,
        b,
        c,
        residuals,
        gaps,
        samples_per_period: steps,
        dt,
        general_solution_error,
    })
}

/// The learner: graph, couplings and the structure-search bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnerState {
    pub sigma: CyclePermutation,
    pub gamma0: CouplingVector,
    /// Control variable at the end of the last completed interval; starts at 0.
    pub theta: Vec<f64>,
    pub gamma_k: Vec<f64>,
    pub theta_k: Vec<f64>,
    /// Teacher state at the last interval boundary; empty before the first.
    pub x_k: Vec<f64>,
    /// Unresolved vertices, ascending.
    pub omega: Vec<usize>,
    /// Successors tried so far for each vertex (`tested[j-1]`).
    pub tested: Vec<BTreeSet<usize>>,
    /// Completed observation periods.
    pub k: usize,
    /// Initial learner activity; `None` skips integrating it.
    pub y0: Option<Vec<f64>>,
}

impl LearnerState {
    pub fn new(sigma: CyclePermutation, gamma0: CouplingVector) -> Result<Self> {
        let n = sigma.n();
        if gamma0.len() != n {
            return Err(Error::Size(format!(
                "{} couplings for {n} neurons",
                gamma0.len()
            )));
        }
        if !sigma.fixed_points().is_empty() {
            return Err(Error::InvalidMatrix(
                "the initial learner graph has self-loops".into(),
            ));
        }
        Ok(Self {
            gamma_k: gamma0.values().to_vec(),
            sigma,
            gamma0,
            theta: vec![0.0; n],
            theta_k: vec![0.0; n],
            x_k: Vec::new(),
            omega: (1..=n).collect(),
            tested: vec![BTreeSet::new(); n],
            k: 0,
            y0: None,
        })
    }

    pub fn with_learner(mut self, y0: Vec<f64>) -> Result<Self> {
        if y0.len() != self.sigma.n() {
            return Err(Error::Size("learner state has the wrong size".into()));
        }
        self.y0 = Some(y0);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.sigma.n()
    }

    pub fn pathway(&self) -> PathwayMatrix {
        pathway_matrix(&self.sigma)
    }
}

#[derive(Debug, Clone)]
pub struct StructureOptions {
    /// Maximum number of rewirings; `None` means `n`.
    pub max_iters: Option<usize>,
    pub tol_abs: f64,
    pub tol_rel: f64,
}

impl Default for StructureOptions {
    fn default() -> Self {
        Self {
            max_iters: None,
            tol_abs: DEFAULT_TOL_ABS,
            tol_rel: DEFAULT_TOL_REL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VertexDiagnostic {
    pub j: usize,
    pub sigma_j: usize,
    /// `None` when `Var[f_j]` fell below the floor.
    pub regression: Option<RegressionResult>,
    pub matched: bool,
}

impl VertexDiagnostic {
    /// `e_j(δ*) / Var[γ_j]`, the scale-free edge error.
    pub fn relative_error(&self) -> Option<f64> {
        self.regression.map(|r| {
            if r.variance_gamma > 0.0 {
                r.error / r.variance_gamma
            } else {
                0.0
            }
        })
    }
}

/// Regressions of one observation period.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationDiagnostics {
    /// 1-based period index.
    pub k: usize,
    pub vertices: Vec<VertexDiagnostic>,
}

pub fn write_diagnostics_csv<W: Write>(
    diagnostics: &[IterationDiagnostics],
    mut out: W,
) -> Result<()> {
    writeln!(out, "k,j,sigma_j,e_j,matched,delta1,delta2")?;
    for it in diagnostics {
        for v in &it.vertices {
            let (e, d1, d2) = v.regression.map_or((f64::NAN, f64::NAN, f64::NAN), |r| {
                (r.error, r.delta_star.0, r.delta_star.1)
            });
            writeln!(
                out,
                "{},{},{},{e:e},{},{d1:e},{d2:e}",
                it.k,
                v.j,
                v.sigma_j,
                u8::from(v.matched)
            )?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct StructureOutcome {
    pub sigma: CyclePermutation,
    pub pathway: PathwayMatrix,
    /// Rewirings performed.
    pub iterations: usize,
    /// Observation periods used; one more than `iterations`.
    pub periods: usize,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub state: LearnerState,
    pub period: f64,
    pub dt: f64,
}

/// Learns the teacher's graph by observing `teacher` one period at a time.
pub fn learn_structure(
    teacher: &LimitCycle,
    initial: LearnerState,
    opts: &StructureOptions,
) -> Result<StructureOutcome> {
    let ctx = Context::new(teacher)?;
    let mut run = ctx.start(&initial)?;
    let mut state = initial;
    let (iterations, diagnostics) = structure_phase(&ctx, &mut run, &mut state, opts, None)?;
    Ok(ctx.outcome(state, iterations, diagnostics))
}

struct Context<'a> {
    teacher: &'a LimitCycle,
    steps: usize,
    dt: f64,
}

impl<'a> Context<'a> {
    fn new(teacher: &'a LimitCycle) -> Result<Self> {
        if !(teacher.period > 0.0 && teacher.period.is_finite()) {
            return Err(Error::NoPeriod(format!(
                "invalid period {}",
                teacher.period
            )));
        }
        let steps = (teacher.period / teacher.dt).ceil().max(3.0) as usize;
        Ok(Self {
            teacher,
            steps,
            dt: teacher.period / steps as f64,
        })
    }

    fn start(&self, state: &LearnerState) -> Result<CoupledRun<'a>> {
        let x0 = if state.x_k.is_empty() {
            &self.teacher.state
        } else {
            &state.x_k
        };
        let mut run = CoupledRun::new(
            &self.teacher.net,
            state.sigma.clone(),
            &state.gamma_k,
            &state.theta_k,
            x0,
            state.y0.as_deref(),
        )?;
        if state.theta != state.theta_k {
            return Err(Error::Invariant(
                "learner state must sit on an interval boundary".into(),
            ));
        }
        run.rebase();
        Ok(run)
    }

    fn outcome(
        &self,
        state: LearnerState,
        iterations: usize,
        diagnostics: Vec<IterationDiagnostics>,
    ) -> StructureOutcome {
        StructureOutcome {
            sigma: state.sigma.clone(),
            pathway: state.pathway(),
            iterations,
            periods: diagnostics.len(),
            diagnostics,
            state,
            period: self.teacher.period,
            dt: self.dt,
        }
    }
}

fn structure_phase(
    ctx: &Context<'_>,
    run: &mut CoupledRun<'_>,
    state: &mut LearnerState,
    opts: &StructureOptions,
    mut outer: Option<&mut Recording>,
) -> Result<(usize, Vec<IterationDiagnostics>)> {
    let n = state.n();
    let max_iters = opts.max_iters.unwrap_or(n);
    let mut diagnostics = Vec::new();
    let mut rewirings = 0;
    let mut gam: Vec<Vec<f64>> = vec![Vec::with_capacity(ctx.steps + 1); n];
    let mut p: Vec<Vec<f64>> = vec![Vec::with_capacity(ctx.steps + 1); n];
    loop {
        let t0 = state.k as f64 * ctx.teacher.period;
        let succ = run.sigma().succ0().to_vec();
        for c in gam.iter_mut().chain(p.iter_mut()) {
            c.clear();
        }
        let mut collect = |s: &Sample<'_>| {
            for j in 0..n {
                gam[j].push(s.gamma[j]);
                p[j].push(s.x[succ[j]] * s.x[j]);
            }
        };
        collect(&run.sample());
        run.advance(ctx.steps, ctx.dt, t0, |s| {
            collect(s);
            if let Some(rec) = outer.as_deref_mut() {
                rec.offer(s);
            }
        })?;
        state.k += 1;

        let mut vertices = Vec::with_capacity(n);
        for j in 0..n {
            let f: Vec<f64> = cumulative_trapezoid(&p[j], ctx.dt)
                .iter()
                .map(|v| (-v).exp())
                .collect();
            let regression = match regress_delta(&gam[j], &f) {
                Ok(r) => Some(r),
                Err(Error::DegenerateRegression { .. }) => None,
                Err(e) => return Err(e),
            };
            let matched = regression
                .is_some_and(|r| edge_matches(&r, r.variance_gamma, opts.tol_abs, opts.tol_rel));
            state.tested[j].insert(succ[j] + 1);
            vertices.push(VertexDiagnostic {
                j: j + 1,
                sigma_j: succ[j] + 1,
                regression,
                matched,
            });
        }
        state.omega = vertices
            .iter()
            .filter(|v| !v.matched)
            .map(|v| v.j)
            .collect();
        diagnostics.push(IterationDiagnostics {
            k: state.k,
            vertices,
        });

        run.rebase();
        let (gk, thk, xk) = run.bookkeeping();
        state.gamma_k = gk.to_vec();
        state.theta_k = thk.to_vec();
        state.theta = thk.to_vec();
        state.x_k = xk.to_vec();

        if state.omega.is_empty() {
            return Ok((rewirings, diagnostics));
        }
        if rewirings >= max_iters {
            return Err(Error::NonConvergence {
                max_iters,
                diagnostics,
            });
        }
        state.sigma = rewire(&state.sigma, &state.omega)?;
        run.set_sigma(state.sigma.clone());
        rewirings += 1;
    }
}

#[derive(Debug, Clone)]
pub struct BehaviorOptions {
    pub structure: StructureOptions,
    /// Duration-learning time after the graph is found.
    pub horizon: f64,
    /// Keep every `record_stride`-th integration step in the returned series.
    pub record_stride: usize,
}

/// Full imitation: structure learning, then duration learning on the found graph.
#[derive(Debug, Clone)]
pub struct LearnOutcome {
    pub pathway: PathwayMatrix,
    pub structure: StructureOutcome,
    /// Teacher activity over both phases.
    pub x: TimeSeries,
    pub gamma: TimeSeries,
    /// Learner activity, present when the initial state carried `y0`.
    pub y: Option<TimeSeries>,
    /// Time at which duration learning with the final graph began.
    pub structure_end: f64,
}

pub fn learn_behavior(
    teacher: &LimitCycle,
    initial: LearnerState,
    opts: &BehaviorOptions,
) -> Result<LearnOutcome> {
    let ctx = Context::new(teacher)?;
    let mut run = ctx.start(&initial)?;
    let n = initial.n();
    let t_start = initial.k as f64 * teacher.period;
    let mut rec = Recording::new(t_start, ctx.dt, n, opts.record_stride, initial.y0.is_some());
    rec.offer(&run.sample());
    let mut state = initial;
    let (iterations, diagnostics) =
        structure_phase(&ctx, &mut run, &mut state, &opts.structure, Some(&mut rec))?;
    let structure_end = state.k as f64 * teacher.period;
    let steps = (opts.horizon / ctx.dt).round() as usize;
    run.advance(steps, ctx.dt, structure_end, |s| rec.offer(s))?;
    let structure = ctx.outcome(state, iterations, diagnostics);
    Ok(LearnOutcome {
        pathway: structure.pathway.clone(),
        structure,
        x: rec.x,
        gamma: rec.gamma,
        y: rec.y,
        structure_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_sigma() -> CyclePermutation {
        CyclePermutation::from_sequence(&[1, 3, 2]).unwrap()
    }

    #[test]
    fn observation_of_ones_and_symbolic_case() {
        let w = pathway_matrix(&paper_sigma());
        assert_eq!(observation_p(&[1.0; 3], &w).unwrap(), vec![1.0; 3]);
        let (a, b, c) = (0.3, 0.5, 0.7);
        let p = observation_p(&[a, b, c], &w).unwrap();
        assert_eq!(p, vec![c * a, a * b, b * c]);
        assert!(observation_p(&[1.0; 4], &w).is_err());
    }

    #[test]
    fn exact_affine_fit() {
        let f: Vec<f64> = (0..200).map(|k| (-0.01 * k as f64).exp()).collect();
        let g: Vec<f64> = f.iter().map(|f| 0.4 + 2.0 * f).collect();
        let r = regress_delta(&g, &f).unwrap();
        assert!((r.delta_star.0 - 0.4).abs() < 1e-10 && (r.delta_star.1 - 2.0).abs() < 1e-10);
        assert!(r.error <= 1e-12);
        assert!(edge_matches(
            &r,
            r.variance_gamma,
            DEFAULT_TOL_ABS,
            DEFAULT_TOL_REL
        ));

        let r = regress_delta(&vec![0.7; 200], &f).unwrap();
        assert!((r.delta_star.0 - 0.7).abs() < 1e-12 && r.delta_star.1.abs() < 1e-12);
        assert!(r.error < 1e-28);
    }

    #[test]
    fn degenerate_and_mismatched_regressions() {
        assert!(matches!(
            regress_delta(&[1.0, 2.0, 3.0], &[1.0; 3]),
            Err(Error::DegenerateRegression { .. })
        ));
        assert!(matches!(
            regress_delta(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::Size(_))
        ));
        let zero = RegressionResult {
            delta_star: (0.0, 0.0),
            error: 0.0,
            beta: 0.0,
            variance_f: 1.0,
            variance_gamma: 0.0,
        };
        assert!(edge_matches(&zero, 0.0, 0.0, 0.0));
    }

    #[test]
    fn rescaling_f_keeps_the_error_and_scales_the_slope() {
        let f: Vec<f64> = (0..300).map(|k| (-0.004 * k as f64).exp()).collect();
        let g: Vec<f64> = (0..300)
            .map(|k| (0.05 * k as f64).sin() + 0.3 * f[k])
            .collect();
        let r1 = regress_delta(&g, &f).unwrap();
        let scaled: Vec<f64> = f.iter().map(|v| 7.5 * v).collect();
        let r2 = regress_delta(&g, &scaled).unwrap();
        assert!((r1.error - r2.error).abs() < 1e-12 * r1.error.max(1.0));
        assert!((r2.delta_star.1 - r1.delta_star.1 / 7.5).abs() < 1e-12);
    }

    #[test]
    fn rewire_examples() {
        let sigma = CyclePermutation::from_successors(&[4, 6, 7, 5, 2, 1, 3]).unwrap();
        let out = rewire(&sigma, &[2, 5, 7]).unwrap();
        assert_eq!(out.succ(2), sigma.succ(5));
        assert_eq!(out.succ(5), sigma.succ(7));
        assert_eq!(out.succ(7), sigma.succ(2));
        for j in [1, 3, 4, 6] {
            assert_eq!(out.succ(j), sigma.succ(j));
        }
        let swapped = rewire(&sigma, &[1, 4]).unwrap();
        assert_eq!(
            (swapped.succ(1), swapped.succ(4)),
            (sigma.succ(4), sigma.succ(1))
        );
        assert!(rewire(&sigma, &[]).is_err());
        assert!(rewire(&sigma, &[3, 2]).is_err());
    }

    #[test]
    fn closed_form_edges() {
        let p = TimeSeries::from_rows(0.0, 0.1, &[vec![0.2, 0.3], vec![0.2, 0.3], vec![0.2, 0.3]])
            .unwrap();
        let g = closed_form_gamma(&[1.5, 0.1], &[0.4, 0.6], &p, 0.0).unwrap();
        assert!((g[0] - 1.5).abs() < 1e-15 && (g[1] - 0.1).abs() < 1e-15);
        let g = closed_form_gamma(&[0.4, 0.6], &[0.4, 0.6], &p, 0.2).unwrap();
        assert!((g[0] - 0.4).abs() < 1e-15 && (g[1] - 0.6).abs() < 1e-15);
        let g = closed_form_gamma(&[1.4, 0.6], &[0.4, 0.6], &p, 0.2).unwrap();
        assert!((g[0] - (0.4 + (-0.04f64).exp())).abs() < 1e-14);
        assert!(closed_form_gamma(&[1.4, 0.6], &[0.4, 0.6], &p, 0.5).is_err());
    }

    #[test]
    fn diagnostics_csv_layout() {
        let d = vec![IterationDiagnostics {
            k: 1,
            vertices: vec![VertexDiagnostic {
                j: 2,
                sigma_j: 3,
                regression: Some(RegressionResult {
                    delta_star: (0.5, 1.5),
                    error: 1e-3,
                    beta: 1.5,
                    variance_f: 0.1,
                    variance_gamma: 0.2,
                }),
                matched: false,
            }],
        }];
        let mut buf = Vec::new();
        write_diagnostics_csv(&d, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k,j,sigma_j,e_j,matched,delta1,delta2\n1,2,3,1e-3,0,5e-1,1.5e0\n"
        );
    }

    proptest! {
        #[test]
        fn rewire_is_a_cyclic_shift_of_values(seed in any::<u64>(), mask in 1u32..(1 << 9)) {
            let n = 9;
            let sigma = CyclePermutation::random_hamiltonian(n, seed).unwrap();
            let omega: Vec<usize> = (1..=n).filter(|j| mask & (1 << (j - 1)) != 0).collect();
            let out = rewire(&sigma, &omega).unwrap();
            let mut seen = out.successors();
            seen.sort_unstable();
            prop_assert_eq!(seen, (1..=n).collect::<Vec<_>>());
            let mut again = sigma.clone();
            for _ in 0..omega.len() {
                again = rewire(&again, &omega).unwrap();
            }
            prop_assert_eq!(again, sigma);
        }

        #[test]
        fn perturbing_the_optimum_never_helps(a in -2.0f64..2.0, b in -2.0f64..2.0, w in 0.01f64..0.5, rate in 0.001f64..0.05) {
            let f: Vec<f64> = (0..400).map(|k| (-rate * k as f64).exp()).collect();
            let g: Vec<f64> = (0..400).map(|k| a + b * f[k] + 0.1 * (w * k as f64).sin()).collect();
            let r = regress_delta(&g, &f).unwrap();
            for (d1, d2) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
                let e = regression_error(&g, &f, (r.delta_star.0 + d1, r.delta_star.1 + d2));
                prop_assert!(e >= r.error);
            }
        }
    }
}
