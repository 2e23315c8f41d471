//! Uniformly sampled vector time series and their CSV form.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Samples `v(t_k)` of an `n`-vector at `t_k = t0 + k·dt`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    n: usize,
    data: Vec<f64>,
}

/// Neural activity `x(t)`; produced by integration and componentwise positive.
pub type NeuralTrajectory = TimeSeries;

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, n: usize) -> Self {
        Self {
            t0,
            dt,
            n,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(t0: f64, dt: f64, n: usize, samples: usize) -> Self {
        Self {
            t0,
            dt,
            n,
            data: Vec::with_capacity(n * samples),
        }
    }

    pub fn from_rows(t0: f64, dt: f64, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let mut s = Self::with_capacity(t0, dt, n, rows.len());
        for r in rows {
            if r.len() != n {
                return Err(Error::Size(format!(
                    "row of length {} in a series of width {n}",
                    r.len()
                )));
            }
            s.push(r);
        }
        Ok(s)
    }

    pub fn push(&mut self, v: &[f64]) {
        debug_assert_eq!(v.len(), self.n);
        self.data.extend_from_slice(v);
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Width of each sample.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.n).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.n..(k + 1) * self.n]
    }

    pub fn last(&self) -> Option<&[f64]> {
        self.len().checked_sub(1).map(|k| self.sample(k))
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n.max(1))
    }

    /// Component `j` (0-based) as its own vector.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.samples().map(|s| s[j]).collect()
    }

    /// Samples `from..to` with the time origin kept consistent.
    pub fn slice(&self, from: usize, to: usize) -> Self {
        Self {
            t0: self.time(from),
            dt: self.dt,
            n: self.n,
            data: self.data[from * self.n..to * self.n].to_vec(),
        }
    }

    /// Every `stride`-th sample, starting with the first.
    pub fn decimate(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        let mut out = Self::with_capacity(
            self.t0,
            self.dt * stride as f64,
            self.n,
            self.len() / stride + 1,
        );
        for s in self.samples().step_by(stride) {
            out.push(s);
        }
        out
    }

    /// Index of the sample nearest to time `t`, clamped to the series.
    pub fn index_of(&self, t: f64) -> usize {
        let k = ((t - self.t0) / self.dt).round();
        (k.max(0.0) as usize).min(self.len().saturating_sub(1))
    }

    /// Linear interpolation at time `t` inside the sampled range.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let s = (t - self.t0) / self.dt;
        if s < -1e-9 || s > (self.len() - 1) as f64 + 1e-9 {
            return None;
        }
        let k = (s.floor().max(0.0) as usize).min(self.len().saturating_sub(2));
        let w = (s - k as f64).clamp(0.0, 1.0);
        let (a, b) = (self.sample(k), self.sample((k + 1).min(self.len() - 1)));
        Some(a.iter().zip(b).map(|(a, b)| a + w * (b - a)).collect())
    }

    /// Writes `header` then one row per sample: `t,v1,…,vn` at full precision.
    pub fn write_csv<W: Write>(&self, mut out: W, prefix: &str) -> Result<()> {
        write!(out, "t")?;
        for j in 1..=self.n {
            write!(out, ",{prefix}{j}")?;
        }
        writeln!(out)?;
        for (k, s) in self.samples().enumerate() {
            write!(out, "{:e}", self.time(k))?;
            for v in s {
                write!(out, ",{v:e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`write_csv`](Self::write_csv). The step is
    /// taken from the first two rows and checked on the rest.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))??;
        let n = header.split(',').count() - 1;
        let mut times = Vec::new();
        let mut rows = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{v:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            if vals.len() != n + 1 {
                return Err(Error::Parse(format!(
                    "expected {} fields, got {}",
                    n + 1,
                    vals.len()
                )));
            }
            times.push(vals[0]);
            rows.push(vals[1..].to_vec());
        }
        let (t0, dt) = uniform_step(&times)?;
        Self::from_rows(t0, dt, &rows)
    }
}

pub(crate) fn uniform_step(times: &[f64]) -> Result<(f64, f64)> {
    if times.len() < 2 {
        return Err(Error::Parse("need at least two samples".into()));
    }
    let t0 = times[0];
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(Error::Parse("time must increase".into()));
    }
    for (k, t) in times.iter().enumerate() {
        if (t - (t0 + k as f64 * dt)).abs() > 1e-6 * dt.max(1.0) {
            return Err(Error::Parse(format!(
                "sample {k} at t = {t} breaks uniform sampling"
            )));
        }
    }
    Ok((t0, dt))
}

/// Trapezoid-weighted mean of uniformly spaced samples.
pub fn trapezoid_mean(v: &[f64]) -> f64 {
    match v.len() {
        0 => f64::NAN,
        1 => v[0],
        m => {
            let inner: f64 = v[1..m - 1].iter().sum();
            (inner + 0.5 * (v[0] + v[m - 1])) / (m - 1) as f64
        }
    }
}

/// Running trapezoid integral; `out[0] = 0`.
pub fn cumulative_trapezoid(v: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in v.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(v.len());
    out
}
