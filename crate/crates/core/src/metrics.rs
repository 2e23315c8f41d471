//! Path curvature and the curvature distance between two robots.
//!
//! Curvature depends only on the shape of a path, so comparing curvature
//! series instead of positions ignores where the robots started and which
//! way they faced. Minimizing over a time shift also ignores phase lag.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::motifsim::PosePath;
use crate::series::trapezoid_mean;

/// Paths slower than this (length per second) have no defined curvature.
pub const SPEED_FLOOR: f64 = 1e-9;

/// Signed curvature samples; positive for left turns.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSeries {
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<f64>,
}

impl CurvatureSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

/// First and second derivatives of uniformly spaced samples, central in the
/// interior and second-order one-sided at the ends.
fn derivatives(v: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let m = v.len();
    let mut d1 = vec![0.0; m];
    let mut d2 = vec![0.0; m];
    for k in 1..m - 1 {
        d1[k] = (v[k + 1] - v[k - 1]) / (2.0 * h);
        d2[k] = (v[k + 1] - 2.0 * v[k] + v[k - 1]) / (h * h);
    }
    d1[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    d1[m - 1] = (3.0 * v[m - 1] - 4.0 * v[m - 2] + v[m - 3]) / (2.0 * h);
    d2[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h);
    d2[m - 1] = (2.0 * v[m - 1] - 5.0 * v[m - 2] + 4.0 * v[m - 3] - v[m - 4]) / (h * h);
    (d1, d2)
}

/// Gaussian smoothing with standard deviation `sigma` samples, truncated at
/// four sigma and renormalized near the ends.
fn gaussian_smooth(v: &[f64], sigma: f64) -> Vec<f64> {
    let half = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let m = v.len() as isize;
    (0..m)
        .map(|k| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (i, w) in (-half..=half).zip(&kernel) {
                let idx = k + i;
                if (0..m).contains(&idx) {
                    acc += w * v[idx as usize];
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect()
}

/// `c = (x'y'' − y'x'') / (x'² + y'²)^{3/2}` by finite differences.
/// `smoothing` is the Gaussian standard deviation in seconds; `None` disables it.
pub fn curvature_series(path: &PosePath, smoothing: Option<f64>) -> Result<CurvatureSeries> {
    if path.len() < 5 {
        return Err(Error::Size(format!(
            "curvature needs at least 5 samples, got {}",
            path.len()
        )));
    }
    let mut xs: Vec<f64> = path.poses.iter().map(|p| p.x).collect();
    let mut ys: Vec<f64> = path.poses.iter().map(|p| p.y).collect();
    if let Some(s) = smoothing.filter(|s| *s > 0.0) {
        xs = gaussian_smooth(&xs, s / path.dt);
        ys = gaussian_smooth(&ys, s / path.dt);
    }
    let (x1, x2) = derivatives(&xs, path.dt);
    let (y1, y2) = derivatives(&ys, path.dt);
    let mut values = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let speed = x1[k].hypot(y1[k]);
        if !(speed >= SPEED_FLOOR) {
            return Err(Error::DegeneratePath { index: k, speed });
        }
        values.push((x1[k] * y2[k] - y1[k] * x2[k]) / speed.powi(3));
    }
    Ok(CurvatureSeries {
        t0: path.t0,
        dt: path.dt,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceResult {
    pub t: f64,
    pub d: f64,
    /// Minimizing lag; ties resolve to the smaller lag.
    pub tau_star: f64,
}

/// `D(t) = min_τ sqrt(⟨(c_T(s) − c_L(s − τ))²⟩_{s∈[t−T,t]})` over `τ ∈ [0, T]`
/// on a grid of step `tau_step` (rounded to whole samples; `None` means one sample).
pub fn trajectory_distance(
    ct: &CurvatureSeries,
    cl: &CurvatureSeries,
    period: f64,
    t: f64,
    tau_step: Option<f64>,
) -> Result<DistanceResult> {
    let g = Grid::new(ct, cl, period, tau_step)?;
    g.eval(t)
}

/// [`trajectory_distance`] at `t = t_start, t_start + t_step, …` up to `t_end`.
pub fn distance_trace(
    ct: &CurvatureSeries,
    cl: &CurvatureSeries,
    period: f64,
    t_start: f64,
    t_end: f64,
    t_step: f64,
    tau_step: Option<f64>,
) -> Result<Vec<DistanceResult>> {
    if !(t_step > 0.0) {
        return Err(Error::Numeric(format!(
            "trace step {t_step} must be positive"
        )));
    }
    let g = Grid::new(ct, cl, period, tau_step)?;
    let count = ((t_end - t_start) / t_step + 1e-9).floor().max(-1.0) as i64 + 1;
    (0..count.max(0))
        .into_par_iter()
        .map(|i| g.eval(t_start + i as f64 * t_step))
        .collect()
}

pub fn write_distance_csv<W: Write>(trace: &[DistanceResult], mut out: W) -> Result<()> {
    writeln!(out, "t,D,tau_star")?;
    for r in trace {
        writeln!(out, "{:e},{:e},{:e}", r.t, r.d, r.tau_star)?;
    }
    Ok(())
}

/// Trapezoid mean of `D` over the trace samples with `t ∈ [from, to]`.
pub fn mean_distance(trace: &[DistanceResult], from: f64, to: f64) -> Option<f64> {
    let v: Vec<f64> = trace
        .iter()
        .filter(|r| r.t >= from - 1e-9 && r.t <= to + 1e-9)
        .map(|r| r.d)
        .collect();
    (!v.is_empty()).then(|| trapezoid_mean(&v))
}

struct Grid<'a> {
    ct: &'a CurvatureSeries,
    cl: &'a CurvatureSeries,
    window: usize,
    lag_stride: usize,
}

impl<'a> Grid<'a> {
    fn new(
        ct: &'a CurvatureSeries,
        cl: &'a CurvatureSeries,
        period: f64,
        tau_step: Option<f64>,
    ) -> Result<Self> {
        if (ct.dt - cl.dt).abs() > 1e-9 * ct.dt || (ct.t0 - cl.t0).abs() > 1e-9 * ct.dt.max(1.0) {
            return Err(Error::Size(
                "curvature series must share their time grid".into(),
            ));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::Numeric(format!("period {period} must be positive")));
        }
        // Floor keeps every t ≥ 2T admissible after rounding t to a sample.
        let window = (period / ct.dt + 1e-9).floor() as usize;
        if window < 2 {
            return Err(Error::Window(
                "the period spans fewer than two samples".into(),
            ));
        }
        let lag_stride = tau_step.map_or(1, |s| (s / ct.dt).round().max(1.0) as usize);
        Ok(Self {
            ct,
            cl,
            window,
            lag_stride,
        })
    }

    fn eval(&self, t: f64) -> Result<DistanceResult> {
        let end = ((t - self.ct.t0) / self.ct.dt).round();
        let m = self.window;
        if end < (2 * m) as f64 || end as usize >= self.ct.len().min(self.cl.len()) {
            return Err(Error::Window(format!(
                "D({t}) needs both curvature series on [t − 2T, t] inside the sampled range"
            )));
        }
        let end = end as usize;
        let a = &self.ct.values[end - m..=end];
        let mut best = DistanceResult {
            t,
            d: f64::INFINITY,
            tau_star: 0.0,
        };
        let mut sq = vec![0.0; m + 1];
        for lag in (0..=m).step_by(self.lag_stride) {
            let b = &self.cl.values[end - m - lag..=end - lag];
            for ((s, x), y) in sq.iter_mut().zip(a).zip(b) {
                *s = (x - y) * (x - y);
            }
            let d = trapezoid_mean(&sq).sqrt();
            if d < best.d {
                best.d = d;
                best.tau_star = lag as f64 * self.ct.dt;
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motifsim::Pose;

    fn path_from(f: impl Fn(f64) -> (f64, f64), dt: f64, samples: usize) -> PosePath {
        PosePath {
            t0: 0.0,
            dt,
            poses: (0..samples)
                .map(|k| {
                    let (x, y) = f(k as f64 * dt);
                    Pose::new(x, y, 0.0)
                })
                .collect(),
            motifs: vec![1; samples],
        }
    }

    #[test]
    fn straight_line_has_zero_curvature() {
        let p = path_from(|t| (3.0 + 10.0 * t * 0.6, -1.0 + 10.0 * t * 0.8), 0.05, 200);
        let c = curvature_series(&p, None).unwrap();
        assert!(c.values.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn counterclockwise_circle_of_radius_17() {
        let (r, w) = (17.0, 10.0 / 17.0);
        let p = path_from(|t| (r * (w * t).cos(), r * (w * t).sin()), 0.01, 2000);
        let c = curvature_series(&p, None).unwrap();
        for v in &c.values[2..c.len() - 2] {
            assert!((v * r - 1.0).abs() < 1e-3, "curvature {v}");
        }
        let mirrored = PosePath {
            poses: p.poses.iter().map(|q| Pose::new(q.x, -q.y, 0.0)).collect(),
            ..p.clone()
        };
        let cm = curvature_series(&mirrored, None).unwrap();
        for (a, b) in c.values.iter().zip(&cm.values) {
            assert!((a + b).abs() < 1e-9);
        }
        let smooth = curvature_series(&p, Some(0.05)).unwrap();
        for v in &smooth.values[100..smooth.len() - 100] {
            assert!((v * r - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn stationary_path_is_degenerate() {
        let p = path_from(|_| (1.0, 1.0), 0.1, 10);
        assert!(matches!(
            curvature_series(&p, None),
            Err(Error::DegeneratePath { .. })
        ));
        assert!(curvature_series(&path_from(|t| (t, 0.0), 0.1, 4), None).is_err());
    }

    fn synthetic(shift: f64, len: usize, dt: f64) -> CurvatureSeries {
        CurvatureSeries {
            t0: 0.0,
            dt,
            values: (0..len)
                .map(|k| {
                    let s = k as f64 * dt + shift;
                    (0.7 * s).sin() + 0.3 * (1.9 * s).cos()
                })
                .collect(),
        }
    }

    #[test]
    fn identical_series_have_zero_distance() {
        let c = synthetic(0.0, 3000, 0.01);
        let r = trajectory_distance(&c, &c, 5.0, 20.0, None).unwrap();
        assert_eq!(r.d, 0.0);
        assert_eq!(r.tau_star, 0.0);
    }

    #[test]
    fn shifted_series_are_matched_at_the_shift() {
        let ct = synthetic(0.0, 3000, 0.01);
        let cl = synthetic(1.37, 3000, 0.01);
        let r = trajectory_distance(&ct, &cl, 5.0, 20.0, None).unwrap();
        assert!(r.d < 1e-6, "D = {}", r.d);
        assert!((r.tau_star - 1.37).abs() <= 0.01 + 1e-9);
    }

    #[test]
    fn coverage_is_required() {
        let c = synthetic(0.0, 1001, 0.01);
        assert!(matches!(
            trajectory_distance(&c, &c, 5.0, 9.98, None),
            Err(Error::Window(_))
        ));
        assert!(matches!(
            trajectory_distance(&c, &c, 5.0, 10.02, None),
            Err(Error::Window(_))
        ));
        assert!(trajectory_distance(&c, &c, 5.0, 10.0, None).is_ok());
    }

    #[test]
    fn trace_and_csv() {
        let c = synthetic(0.0, 3000, 0.01);
        let trace = distance_trace(&c, &c, 5.0, 10.0, 29.0, 1.0, Some(0.05)).unwrap();
        assert_eq!(trace.len(), 20);
        let mut buf = Vec::new();
        write_distance_csv(&trace, &mut buf).unwrap();
        assert!(buf.starts_with(b"t,D,tau_star\n"));
        assert_eq!(mean_distance(&trace, 10.0, 15.0), Some(0.0));
    }
}
