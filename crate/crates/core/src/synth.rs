//! Seeded synthetic ground truth: random chained plans in the unit box,
//! realized as trajectories by the forward reconstructor. Used as the
//! round-trip oracle for extraction tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{KttError, Result};
use crate::geom::{wrap_angle, Point};
use crate::kernels::{moments_to_params, KernelKind, KernelParams, Moments};
use crate::links::{LinkKind, LinkSpec};
use crate::reconstruct::{reconstruct_trajectory, ActionPlan, Stroke};
use crate::trajectory::Trajectory;

/// Parameters of one synthetic plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub n_strokes: usize,
    pub kernel_kind: KernelKind,
    pub link_kind: LinkKind,
    /// Fraction of each lobe's duration shared with its predecessor.
    pub overlap_fraction: f64,
    pub seed: u64,
}

const MIN_CHORD: f64 = 0.1;
const MAX_CHORD: f64 = 0.55;
const MAX_ATTEMPTS: usize = 100;

/// Draw a chained plan with virtual target points in the unit box and
/// synthesize its trajectory at 200 Hz. Deterministic in `spec.seed`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<(ActionPlan, Trajectory)> {
    if spec.n_strokes < 1 {
        return Err(KttError::InvalidInput("n_strokes must be >= 1".into()));
    }
    if !(0.0..=0.6).contains(&spec.overlap_fraction) {
        return Err(KttError::InvalidInput(format!(
            "overlap_fraction must be in [0, 0.6], got {}",
            spec.overlap_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Target points: rejection-sample each next point so the chord stays
    // in range, the point stays in the box, and turns stay moderate.
    let mut tps: Vec<Point> = vec![Point::new(
        rng.gen_range(0.2..0.8),
        rng.gen_range(0.2..0.8),
    )];
    let mut prev_dir: Option<f64> = None;
    for _ in 0..spec.n_strokes {
        let from = *tps.last().unwrap();
        let mut accepted = None;
        for attempt in 0..MAX_ATTEMPTS {
            let r = rng.gen_range(MIN_CHORD..MAX_CHORD);
            // Prefer moderate turns; give up on that preference for the
            // later attempts so walks cannot trap themselves in a corner.
            let ang = match prev_dir {
                Some(d) if attempt < 60 => d + rng.gen_range(-1.2..1.2),
                _ => rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
            };
            let cand = from + Point::unit(ang) * r;
            if (0.0..=1.0).contains(&cand.x) && (0.0..=1.0).contains(&cand.y) {
                accepted = Some((cand, ang));
                break;
            }
        }
        let (p, ang) = accepted.ok_or_else(|| {
            KttError::GenerationFailure(format!(
                "no feasible target point after {MAX_ATTEMPTS} attempts from {from:?}"
            ))
        })?;
        tps.push(p);
        prev_dir = Some(ang);
    }

    // Lobe windows: duration per stroke, consecutive windows overlapping
    // by the requested fraction.
    let mut strokes = Vec::with_capacity(spec.n_strokes);
    let mut lobe_start = 0.1;
    for j in 0..spec.n_strokes {
        let dur = rng.gen_range(0.25..0.45);
        let a = lobe_start;
        let b = a + dur;
        let p0 = tps[j];
        let p1 = tps[j + 1];
        let chord_ang = (p1 - p0).angle();
        let dev_s = rng.gen_range(-0.45..0.45);
        let dev_e = rng.gen_range(-0.45..0.45);
        let mut link = LinkSpec::new(
            spec.link_kind,
            p0,
            p1,
            chord_ang + dev_s,
            chord_ang + dev_e,
        )?;
        if spec.link_kind == LinkKind::Arc {
            // The arc realizes its own end tangent; record it so the
            // spec matches the fitted segment.
            let seg = link.fit()?;
            link = LinkSpec::new(
                spec.link_kind,
                p0,
                p1,
                link.theta_s,
                wrap_angle(seg.tangent_at(seg.length)),
            )?;
        }
        // Moments: mean mid-lobe, spread narrow enough that the lobe
        // effectively lives inside its window.
        let mean_abs = a + 0.5 * dur;
        let v = (dur / 7.0) * (dur / 7.0);
        let m = if spec.kernel_kind == KernelKind::Gaussian {
            Moments::new(mean_abs, v)
        } else {
            Moments::new(0.5 * dur, v)
        };
        let shape = moments_to_params(spec.kernel_kind, m, a, b)?;
        let kernel = KernelParams::new(a, 1.0, shape)?;
        strokes.push(Stroke::new(kernel, link)?);
        lobe_start = b - spec.overlap_fraction * dur;
    }
    let plan = ActionPlan::new(tps[0], strokes)?;

    // Realize the trajectory at 200 Hz over a padded span.
    let (t_lo, t_hi) = plan.time_span(1e-9).unwrap();
    let lo = t_lo.min(0.0) - 0.05;
    let hi = t_hi + 0.05;
    let n = ((hi - lo) * 200.0).round() as usize + 1;
    let times: Vec<f64> = (0..n).map(|i| lo + i as f64 / 200.0).collect();
    let traj = reconstruct_trajectory(&plan, &times)?;
    Ok((plan, traj))
}
