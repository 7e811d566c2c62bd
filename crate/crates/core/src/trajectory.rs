//! Input trajectory representation, resampling, smoothing, and speed
//! profile computation.

use crate::error::{KttError, Result};
use crate::geom::Point;

/// One timestamped 2D sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Seconds, strictly increasing within a trajectory.
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Sample {
    pub fn new(t: f64, x: f64, y: f64) -> Self {
        Sample { t, x, y }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// An ordered, validated sequence of samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<Sample>,
    /// Source identifier (file name, synthesis seed, ...).
    pub meta: String,
}

impl Trajectory {
    /// Build a trajectory, enforcing the type invariants: at least 4
    /// samples, finite coordinates, strictly increasing timestamps.
    pub fn new(samples: Vec<Sample>, meta: impl Into<String>) -> Result<Self> {
        if samples.len() < 4 {
            return Err(KttError::InvalidInput(format!(
                "trajectory needs at least 4 samples, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.x.is_finite() && s.y.is_finite()) {
                return Err(KttError::InvalidInput(format!(
                    "non-finite sample at index {i}"
                )));
            }
        }
        for w in samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err(KttError::InvalidInput(format!(
                    "timestamps not strictly increasing near t={}",
                    w[0].t
                )));
            }
        }
        Ok(Trajectory {
            samples,
            meta: meta.into(),
        })
    }

    /// Like [`Trajectory::new`] but collapses runs of duplicated
    /// timestamps to their mean position first (a common tablet
    /// artifact), logging a warning when that happens.
    pub fn from_raw_samples(samples: Vec<Sample>, meta: impl Into<String>) -> Result<Self> {
        let mut cleaned: Vec<Sample> = Vec::with_capacity(samples.len());
        let mut dupes = 0usize;
        for s in samples {
            match cleaned.last_mut() {
                Some(last) if s.t == last.t => {
                    // Running mean over the duplicate run.
                    dupes += 1;
                    last.x = 0.5 * (last.x + s.x);
                    last.y = 0.5 * (last.y + s.y);
                }
                _ => cleaned.push(s),
            }
        }
        if dupes > 0 {
            log::warn!("collapsed {dupes} duplicated timestamps to mean positions");
        }
        Trajectory::new(cleaned, meta)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().t - self.samples[0].t
    }

    /// Polyline length of the sample sequence.
    pub fn arc_length(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| w[1].point().dist(w[0].point()))
            .sum()
    }

    /// Mean sampling interval.
    pub fn dt(&self) -> f64 {
        self.duration() / (self.len() - 1) as f64
    }

    /// True when timestamps are uniform to 1e-9 relative.
    pub fn is_uniform(&self) -> bool {
        let h = self.dt();
        self.samples
            .windows(2)
            .all(|w| ((w[1].t - w[0].t) - h).abs() <= 1e-9 * h.max(1e-300))
    }
}

/// A speed (magnitude of velocity) profile on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedProfile {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

impl SpeedProfile {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(KttError::InvalidInput(
                "speed profile t and v lengths differ".into(),
            ));
        }
        if v.iter().any(|&s| s < 0.0 || !s.is_finite()) {
            return Err(KttError::InvalidInput(
                "speed profile contains negative or non-finite values".into(),
            ));
        }
        Ok(SpeedProfile { t, v })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

/// Natural cubic spline through (x_i, y_i), used for resampling.
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    y2: Vec<f64>,
}

impl CubicSpline {
    fn fit(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        let mut y2 = vec![0.0; n];
        let mut u = vec![0.0; n];
        // Natural boundary: y2[0] = y2[n-1] = 0.
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let p = sig * y2[i - 1] + 2.0;
            y2[i] = (sig - 1.0) / p;
            let d = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = (6.0 * d / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
        }
        for i in (0..n - 1).rev() {
            y2[i] = y2[i] * y2[i + 1] + u[i];
        }
        CubicSpline {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            y2,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        // Binary search for the containing interval.
        let j = match self
            .xs
            .binary_search_by(|probe| probe.partial_cmp(&x).unwrap())
        {
            Ok(i) => return self.ys[i],
            Err(i) => i.clamp(1, n - 1) - 1,
        };
        let h = self.xs[j + 1] - self.xs[j];
        let a = (self.xs[j + 1] - x) / h;
        let b = (x - self.xs[j]) / h;
        a * self.ys[j]
            + b * self.ys[j + 1]
            + ((a * a * a - a) * self.y2[j] + (b * b * b - b) * self.y2[j + 1]) * h * h / 6.0
    }
}

/// Resample onto a uniform grid spanning [t_first, t_last] at (close to)
/// the requested rate, interpolating each coordinate with a natural
/// cubic spline. Endpoints are preserved exactly.
pub fn resample_uniform(traj: &Trajectory, rate: f64) -> Result<Trajectory> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(KttError::InvalidInput(format!("invalid rate {rate}")));
    }
    let t0 = traj.samples()[0].t;
    let t1 = traj.samples().last().unwrap().t;
    let span = t1 - t0;
    let n = (span * rate).round() as usize + 1;
    if n < 4 {
        return Err(KttError::InvalidInput(format!(
            "rate {rate} yields only {n} samples over {span} s"
        )));
    }
    let h = span / (n - 1) as f64;
    let ts = traj.times();
    let xs: Vec<f64> = traj.samples().iter().map(|s| s.x).collect();
    let ys: Vec<f64> = traj.samples().iter().map(|s| s.y).collect();
    let sx = CubicSpline::fit(&ts, &xs);
    let sy = CubicSpline::fit(&ts, &ys);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let t = if i == n - 1 { t1 } else { t0 + i as f64 * h };
        out.push(Sample::new(t, sx.eval(t), sy.eval(t)));
    }
    // Endpoints exact by construction.
    out[0].x = xs[0];
    out[0].y = ys[0];
    let last = out.len() - 1;
    out[last].x = *xs.last().unwrap();
    out[last].y = *ys.last().unwrap();
    Trajectory::new(out, traj.meta.clone())
}

/// Second-order low-pass biquad coefficients (bilinear transform).
fn butter2(cutoff: f64, rate: f64) -> ([f64; 3], [f64; 2]) {
    let wc = (std::f64::consts::PI * cutoff / rate).tan();
    let k1 = std::f64::consts::SQRT_2 * wc;
    let k2 = wc * wc;
    let a0 = 1.0 + k1 + k2;
    let b = [k2 / a0, 2.0 * k2 / a0, k2 / a0];
    let a = [2.0 * (k2 - 1.0) / a0, (1.0 - k1 + k2) / a0];
    (b, a)
}

fn biquad(b: &[f64; 3], a: &[f64; 2], x: &[f64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let (mut s1, mut s2) = (0.0, 0.0);
    for &xi in x {
        // Direct form II transposed.
        let yi = b[0] * xi + s1;
        s1 = b[1] * xi - a[0] * yi + s2;
        s2 = b[2] * xi - a[1] * yi;
        y.push(yi);
    }
    y
}

/// Zero-phase low-pass: odd-reflect pad, filter forward and backward.
fn filtfilt(cutoff: f64, rate: f64, x: &[f64]) -> Vec<f64> {
    let (b, a) = butter2(cutoff, rate);
    let n = x.len();
    let pad = ((3.0 * rate / cutoff).ceil() as usize).min(n - 1);
    let mut ext = Vec::with_capacity(n + 2 * pad);
    for i in (1..=pad).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in 1..=pad {
        ext.push(2.0 * x[n - 1] - x[n - 1 - i]);
    }
    let base = ext[0];
    let shifted: Vec<f64> = ext.iter().map(|&v| v - base).collect();
    let mut fwd = biquad(&b, &a, &shifted);
    fwd.reverse();
    let mut back = biquad(&b, &a, &fwd);
    back.reverse();
    back[pad..pad + n].iter().map(|&v| v + base).collect()
}

/// Centered finite-difference velocity components (one-sided at the
/// endpoints). Requires uniform sampling; applies no smoothing.
pub fn velocity_components(traj: &Trajectory) -> Result<(Vec<f64>, Vec<f64>)> {
    if !traj.is_uniform() {
        return Err(KttError::InvalidInput(
            "velocity requires uniform sampling".into(),
        ));
    }
    let s = traj.samples();
    let h = traj.dt();
    let n = s.len();
    let mut vx = Vec::with_capacity(n);
    let mut vy = Vec::with_capacity(n);
    for i in 0..n {
        let (dx, dy) = if i == 0 {
            (s[1].x - s[0].x, s[1].y - s[0].y)
        } else if i == n - 1 {
            (s[n - 1].x - s[n - 2].x, s[n - 1].y - s[n - 2].y)
        } else {
            (
                0.5 * (s[i + 1].x - s[i - 1].x),
                0.5 * (s[i + 1].y - s[i - 1].y),
            )
        };
        vx.push(dx / h);
        vy.push(dy / h);
    }
    Ok((vx, vy))
}

/// Speed profile sqrt(vx^2 + vy^2) after zero-phase low-pass filtering of
/// x and y at `smooth_cutoff` Hz. Sampling must be uniform and the
/// cutoff must sit in (0, rate/2).
pub fn speed_profile(traj: &Trajectory, smooth_cutoff: f64) -> Result<SpeedProfile> {
    if !traj.is_uniform() {
        return Err(KttError::InvalidInput(
            "speed profile requires uniform sampling".into(),
        ));
    }
    let rate = 1.0 / traj.dt();
    if !(smooth_cutoff > 0.0 && smooth_cutoff < 0.5 * rate) {
        return Err(KttError::InvalidInput(format!(
            "cutoff {smooth_cutoff} Hz outside (0, {})",
            0.5 * rate
        )));
    }
    let xs: Vec<f64> = traj.samples().iter().map(|s| s.x).collect();
    let ys: Vec<f64> = traj.samples().iter().map(|s| s.y).collect();
    let xf = filtfilt(smooth_cutoff, rate, &xs);
    let yf = filtfilt(smooth_cutoff, rate, &ys);
    let smoothed = Trajectory::new(
        traj.times()
            .into_iter()
            .zip(xf.into_iter().zip(yf))
            .map(|(t, (x, y))| Sample::new(t, x, y))
            .collect(),
        traj.meta.clone(),
    )?;
    let (vx, vy) = velocity_components(&smoothed)?;
    let v: Vec<f64> = vx.iter().zip(&vy).map(|(a, b)| a.hypot(*b)).collect();
    SpeedProfile::new(traj.times(), v)
}
