//! Decoding neural activity into unicycle robot motion.
//!
//! At every sample the most active neuron selects a motif, and the motif's
//! constant linear and angular velocities move the robot along an exact
//! straight segment or circular arc until the next sample.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::dynamics::argmax;
use crate::error::{Error, Result};
use crate::series::{uniform_step, NeuralTrajectory};

/// Paper-scale robot speed, cm/s.
pub const DEFAULT_SPEED: f64 = 10.0;
/// Paper-scale turning radius, cm.
pub const DEFAULT_RADIUS: f64 = 17.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Motif {
    pub label: String,
    /// Linear velocity, length per second.
    pub v: f64,
    /// Angular velocity, rad/s; positive turns left.
    pub omega: f64,
}

impl Motif {
    pub fn straight(label: &str, v: f64) -> Self {
        Self {
            label: label.into(),
            v,
            omega: 0.0,
        }
    }

    pub fn left(label: &str, v: f64, radius: f64) -> Self {
        Self {
            label: label.into(),
            v,
            omega: v / radius,
        }
    }

    pub fn right(label: &str, v: f64, radius: f64) -> Self {
        Self {
            label: label.into(),
            v,
            omega: -v / radius,
        }
    }
}

/// Motifs bound one-to-one to neurons, plus the conversion from model time
/// to seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct MotifLibrary {
    motifs: Vec<Motif>,
    /// Model time units per second of robot motion.
    time_scale: f64,
}

impl MotifLibrary {
    pub fn new(motifs: Vec<Motif>, time_scale: f64) -> Result<Self> {
        if motifs.len() < 3 {
            return Err(Error::Size(format!(
                "a library needs at least 3 motifs, got {}",
                motifs.len()
            )));
        }
        if motifs
            .iter()
            .any(|m| !m.v.is_finite() || !m.omega.is_finite())
        {
            return Err(Error::Numeric("motif velocities must be finite".into()));
        }
        if !(time_scale > 0.0 && time_scale.is_finite()) {
            return Err(Error::Numeric(format!(
                "time scale {time_scale} must be positive"
            )));
        }
        Ok(Self { motifs, time_scale })
    }

    /// Two straight motifs, two left turns, two right turns.
    pub fn six(v: f64, radius: f64, time_scale: f64) -> Result<Self> {
        Self::new(
            vec![
                Motif::straight("straight", v),
                Motif::straight("straight", v),
                Motif::left("left", v, radius),
                Motif::left("left", v, radius),
                Motif::right("right", v, radius),
                Motif::right("right", v, radius),
            ],
            time_scale,
        )
    }

    /// `n` motifs cycling through straight, left turn, right turn.
    pub fn cyclic(n: usize, v: f64, radius: f64, time_scale: f64) -> Result<Self> {
        let motifs = (0..n)
            .map(|j| match j % 3 {
                0 => Motif::straight("straight", v),
                1 => Motif::left("left", v, radius),
                _ => Motif::right("right", v, radius),
            })
            .collect();
        Self::new(motifs, time_scale)
    }

    pub fn len(&self) -> usize {
        self.motifs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.motifs.is_empty()
    }

    /// Motif driven by the 1-based neuron `j`.
    pub fn get(&self, j: usize) -> &Motif {
        &self.motifs[j - 1]
    }

    pub fn motifs(&self) -> &[Motif] {
        &self.motifs
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }
}

impl Default for MotifLibrary {
    fn default() -> Self {
        Self::six(DEFAULT_SPEED, DEFAULT_RADIUS, 1.0).expect("valid default library")
    }
}

/// Maps an angle to `(−π, π]`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Radians in `(−π, π]`.
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}

/// Uniformly sampled poses and the motif active at each sample. Times are seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct PosePath {
    pub t0: f64,
    pub dt: f64,
    pub poses: Vec<Pose>,
    pub motifs: Vec<usize>,
}

impl PosePath {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> Self {
        let stride = stride.max(1);
        Self {
            t0: self.t0,
            dt: self.dt * stride as f64,
            poses: self.poses.iter().step_by(stride).copied().collect(),
            motifs: self.motifs.iter().step_by(stride).copied().collect(),
        }
    }

    /// Samples whose time lies in `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> Self {
        let a = ((from - self.t0) / self.dt).ceil().max(0.0) as usize;
        let b = (((to - self.t0) / self.dt).floor().max(0.0) as usize + 1).min(self.len());
        let a = a.min(b);
        Self {
            t0: self.time(a),
            dt: self.dt,
            poses: self.poses[a..b].to_vec(),
            motifs: self.motifs[a..b].to_vec(),
        }
    }

    /// Rotation by `angle` about the origin followed by translation.
    pub fn rigid_motion(&self, angle: f64, dx: f64, dy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            poses: self
                .poses
                .iter()
                .map(|p| {
                    Pose::new(
                        c * p.x - s * p.y + dx,
                        s * p.x + c * p.y + dy,
                        p.heading + angle,
                    )
                })
                .collect(),
            ..self.clone()
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,x,y,heading,motif")?;
        for (k, (p, m)) in self.poses.iter().zip(&self.motifs).enumerate() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{m}",
                self.time(k),
                p.x,
                p.y,
                p.heading
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty pose CSV".into()))??;
        if header.trim() != "t,x,y,heading,motif" {
            return Err(Error::Parse(format!("unexpected pose header {header:?}")));
        }
        let (mut times, mut poses, mut motifs) = (Vec::new(), Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("expected 5 fields in {line:?}")));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
            };
            times.push(num(f[0])?);
            poses.push(Pose {
                x: num(f[1])?,
                y: num(f[2])?,
                heading: num(f[3])?,
            });
            motifs.push(
                f[4].parse::<usize>()
                    .map_err(|e| Error::Parse(format!("{:?}: {e}", f[4])))?,
            );
        }
        let (t0, dt) = uniform_step(&times)?;
        Ok(Self {
            t0,
            dt,
            poses,
            motifs,
        })
    }
}

/// 1-based index of the most active neuron; ties go to the lower index.
pub fn decode_motif(x: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::Size("empty state".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("state is not finite".into()));
    }
    Ok(argmax(x) + 1)
}

/// Run-length encoding of a motif sequence: `(motif, samples)`.
pub fn run_lengths(motifs: &[usize]) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for &m in motifs {
        match runs.last_mut() {
            Some((last, count)) if *last == m => *count += 1,
            _ => runs.push((m, 1)),
        }
    }
    runs
}

/// Drives the robot with the decoded motifs of `traj`. Model time is divided
/// by the library's time scale to get seconds.
pub fn simulate_pose_path(
    traj: &NeuralTrajectory,
    lib: &MotifLibrary,
    pose0: Pose,
) -> Result<PosePath> {
    if traj.dim() != lib.len() {
        return Err(Error::Size(format!(
            "{} neurons but {} motifs",
            traj.dim(),
            lib.len()
        )));
    }
    let tau = traj.dt() / lib.time_scale();
    let mut poses = Vec::with_capacity(traj.len());
    let mut motifs = Vec::with_capacity(traj.len());
    let (mut x, mut y, mut phi) = (pose0.x, pose0.y, pose0.heading);
    for s in traj.samples() {
        let m = decode_motif(s)?;
        poses.push(Pose::new(x, y, phi));
        motifs.push(m);
        let Motif { v, omega, .. } = *lib.get(m);
        if omega == 0.0 {
            x += v * tau * phi.cos();
            y += v * tau * phi.sin();
        } else {
            let next = phi + omega * tau;
            let r = v / omega;
            x += r * (next.sin() - phi.sin());
            y -= r * (next.cos() - phi.cos());
            phi = normalize_angle(next);
        }
    }
    Ok(PosePath {
        t0: traj.t0() / lib.time_scale(),
        dt: tau,
        poses,
        motifs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::TimeSeries;

    fn constant(j: usize, n: usize, samples: usize, dt: f64) -> NeuralTrajectory {
        let mut row = vec![0.01; n];
        row[j - 1] = 0.9;
        TimeSeries::from_rows(0.0, dt, &vec![row; samples]).unwrap()
    }

    #[test]
    fn decoding() {
        assert_eq!(decode_motif(&[0.9, 0.05, 0.02]).unwrap(), 1);
        assert_eq!(decode_motif(&[0.1, 0.5, 0.2, 0.3, 0.5]).unwrap(), 2);
        assert!(decode_motif(&[0.1, f64::NAN]).is_err());
        assert_eq!(
            run_lengths(&[1, 1, 3, 3, 3, 2]),
            vec![(1, 2), (3, 3), (2, 1)]
        );
    }

    #[test]
    fn straight_motif_moves_along_the_heading() {
        let lib = MotifLibrary::default();
        let path =
            simulate_pose_path(&constant(1, 6, 501, 0.01), &lib, Pose::new(1.0, 2.0, 0.3)).unwrap();
        let last = path.poses.last().unwrap();
        assert!((last.x - (1.0 + 50.0 * 0.3f64.cos())).abs() < 1e-9);
        assert!((last.y - (2.0 + 50.0 * 0.3f64.sin())).abs() < 1e-9);
        assert!((last.heading - 0.3).abs() < 1e-15);
    }

    #[test]
    fn left_turn_follows_the_paper_circle() {
        let lib = MotifLibrary::default();
        let omega = DEFAULT_SPEED / DEFAULT_RADIUS;
        assert!((lib.get(3).omega - 0.588).abs() < 1e-3);
        // One full revolution in an integer number of steps.
        let steps = 10_000;
        let dt = 2.0 * PI / omega / steps as f64;
        let path =
            simulate_pose_path(&constant(3, 6, steps + 1, dt), &lib, Pose::default()).unwrap();
        let last = path.poses.last().unwrap();
        assert!(last.x.abs() < 1e-9 && last.y.abs() < 1e-9);
        assert!(normalize_angle(last.heading).abs() < 1e-9);
        for p in &path.poses {
            let r = (p.x.powi(2) + (p.y - DEFAULT_RADIUS).powi(2)).sqrt();
            assert!((r - DEFAULT_RADIUS).abs() < 1e-9);
        }
    }

    #[test]
    fn heading_stays_normalized() {
        for a in [-7.0, -PI, 0.0, PI, 3.5, 20.0] {
            let h = normalize_angle(a);
            assert!(h > -PI && h <= PI);
            assert!((h.sin() - a.sin()).abs() < 1e-12 && (h.cos() - a.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn pose_csv_round_trip() {
        let lib = MotifLibrary::default();
        let path = simulate_pose_path(&constant(5, 6, 20, 0.1), &lib, Pose::default()).unwrap();
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,x,y,heading,motif\n"));
        let back = PosePath::read_csv(&buf[..]).unwrap();
        assert_eq!(back.poses, path.poses);
        assert_eq!(back.motifs, path.motifs);
    }

    #[test]
    fn size_mismatch_is_rejected() {
        assert!(simulate_pose_path(
            &constant(1, 5, 10, 0.1),
            &MotifLibrary::default(),
            Pose::default()
        )
        .is_err());
        assert!(MotifLibrary::new(vec![Motif::straight("a", 1.0); 2], 1.0).is_err());
    }
}
