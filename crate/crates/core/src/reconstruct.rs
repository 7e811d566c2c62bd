//! Forward synthesis: an action plan (chained strokes, each a link curve
//! plus a velocity kernel) is turned back into a trajectory and a speed
//! profile. Each stroke contributes the displacement along its own
//! segment at the arc-length position driven by its kernel's cumulative
//! integral; contributions from overlapping strokes add vectorially.

use crate::error::{KttError, Result};
use crate::geom::{wrap_angle, Point};
use crate::kernels::KernelParams;
use crate::links::{ClothoidSegment, LinkSpec};
use crate::trajectory::{Sample, SpeedProfile, Trajectory};

/// How the direction of a stroke's velocity contribution is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleMode {
    /// Tangent of the link at the stroke's current arc-length position
    /// (the default; consistent with differentiating the trajectory).
    LinkTangent,
    /// Linear interpolation from the start angle to the end angle in
    /// the kernel's cumulative fraction, as in some Sigma-Lognormal
    /// variants.
    Interpolated,
}

/// One stroke: a fitted link segment and the kernel that paces motion
/// along it. The kernel amplitude D always equals the segment length,
/// so the stroke comes to rest exactly at the link's end point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stroke {
    pub kernel: KernelParams,
    pub link: LinkSpec,
    pub segment: ClothoidSegment,
}

impl Stroke {
    /// Fit the link and slave the kernel amplitude to the realized
    /// segment length.
    pub fn new(kernel: KernelParams, link: LinkSpec) -> Result<Stroke> {
        let segment = link.fit()?;
        let mut kernel = kernel;
        kernel.d = segment.length;
        kernel.validate()?;
        Ok(Stroke {
            kernel,
            link,
            segment,
        })
    }

    /// Arc-length position along the segment at time `t`:
    /// `s(t) = min(L, cumulative(t) * L / D)`, monotone from 0 to L.
    pub fn arclength_position(&self, t: f64) -> f64 {
        let l = self.segment.length;
        let s = self.kernel.cumulative(t) * l / self.kernel.d;
        s.clamp(0.0, l)
    }

    /// Displacement from the link origin at time `t`.
    pub fn displacement_at(&self, t: f64) -> Point {
        self.segment.displacement(self.arclength_position(t))
    }

    /// Vector velocity contribution at time `t`.
    pub fn velocity_at(&self, t: f64, mode: AngleMode) -> Point {
        let v = self.kernel.eval(t);
        if v == 0.0 {
            return Point::ORIGIN;
        }
        let theta = match mode {
            AngleMode::LinkTangent => self.segment.tangent_at(self.arclength_position(t)),
            AngleMode::Interpolated => {
                let frac = (self.kernel.cumulative(t) / self.kernel.d).clamp(0.0, 1.0);
                self.link.theta_s + wrap_angle(self.link.theta_e - self.link.theta_s) * frac
            }
        };
        Point::unit(theta) * v
    }
}

/// An ordered sequence of chained strokes starting from a fixed point.
/// Consecutive links share a virtual target point: stroke j starts where
/// stroke j-1 ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionPlan {
    pub start_point: Point,
    pub strokes: Vec<Stroke>,
}

impl ActionPlan {
    pub fn new(start_point: Point, strokes: Vec<Stroke>) -> Result<ActionPlan> {
        if !start_point.is_finite() {
            return Err(KttError::InvalidInput("non-finite start point".into()));
        }
        let scale = strokes
            .iter()
            .map(|s| s.link.chord())
            .fold(1e-12, f64::max);
        let tol = 1e-7 * scale;
        if let Some(first) = strokes.first() {
            if first.link.p_start.dist(start_point) > tol {
                return Err(KttError::InvalidInput(format!(
                    "first stroke starts at {:?}, plan starts at {start_point:?}",
                    first.link.p_start
                )));
            }
        }
        for j in 1..strokes.len() {
            let gap = strokes[j].link.p_start.dist(strokes[j - 1].link.p_end);
            if gap > tol {
                return Err(KttError::InvalidInput(format!(
                    "strokes {} and {j} are not chained (gap {gap:.3e})",
                    j - 1
                )));
            }
        }
        Ok(ActionPlan {
            start_point,
            strokes,
        })
    }

    pub fn n_strokes(&self) -> usize {
        self.strokes.len()
    }

    /// The final virtual target point (start point for an empty plan).
    pub fn end_target(&self) -> Point {
        self.strokes
            .last()
            .map_or(self.start_point, |s| s.link.p_end)
    }

    /// Time window covering every kernel's effective support, or `None`
    /// for an empty plan.
    pub fn time_span(&self, eps: f64) -> Option<(f64, f64)> {
        let mut span: Option<(f64, f64)> = None;
        for s in &self.strokes {
            let (a, b) = s.kernel.effective_support(eps);
            span = Some(match span {
                None => (a, b),
                Some((lo, hi)) => (lo.min(a), hi.max(b)),
            });
        }
        span
    }

    /// Position at time `t`: start point plus the vector sum of every
    /// stroke's displacement along its own segment.
    pub fn position_at(&self, t: f64) -> Point {
        let mut p = self.start_point;
        for s in &self.strokes {
            p = p + s.displacement_at(t);
        }
        p
    }

    /// Vector velocity at time `t`.
    pub fn velocity_at(&self, t: f64, mode: AngleMode) -> Point {
        let mut v = Point::ORIGIN;
        for s in &self.strokes {
            v = v + s.velocity_at(t, mode);
        }
        v
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(KttError::InvalidInput(
            "need at least 2 evaluation times".into(),
        ));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(KttError::InvalidInput(format!(
                "times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Vector velocity of the plan on an explicit time grid.
pub fn reconstruct_velocity(
    plan: &ActionPlan,
    times: &[f64],
    mode: AngleMode,
) -> Result<Vec<Point>> {
    check_times(times)?;
    Ok(times.iter().map(|&t| plan.velocity_at(t, mode)).collect())
}

/// Speed (magnitude of the vector-summed velocity) on a time grid,
/// using link-tangent directions.
pub fn reconstruct_speed(plan: &ActionPlan, times: &[f64]) -> Result<SpeedProfile> {
    reconstruct_speed_with_mode(plan, times, AngleMode::LinkTangent)
}

pub fn reconstruct_speed_with_mode(
    plan: &ActionPlan,
    times: &[f64],
    mode: AngleMode,
) -> Result<SpeedProfile> {
    let v = reconstruct_velocity(plan, times, mode)?;
    SpeedProfile::new(times.to_vec(), v.into_iter().map(|p| p.norm()).collect())
}

/// Reconstructed trajectory on a time grid (displacement-sum synthesis).
pub fn reconstruct_trajectory(plan: &ActionPlan, times: &[f64]) -> Result<Trajectory> {
    check_times(times)?;
    if times.len() < 4 {
        return Err(KttError::InvalidInput(
            "need at least 4 evaluation times for a trajectory".into(),
        ));
    }
    let samples: Vec<Sample> = times
        .iter()
        .map(|&t| {
            let p = plan.position_at(t);
            Sample::new(t, p.x, p.y)
        })
        .collect();
    Trajectory::new(samples, "reconstruction")
}
