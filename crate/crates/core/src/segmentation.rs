//! Inverse-problem front end: salient points on the speed profile,
//! tangent-angle estimation via three-point circles, and per-stroke
//! seeds (timing, amplitude, moments).

use crate::error::{KttError, Result};
use crate::geom::Point;
use crate::kernels::Moments;
use crate::trajectory::{SpeedProfile, Trajectory};

/// A trajectory point at a speed minimum (or an endpoint), delimiting
/// strokes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SalientPoint {
    pub index: usize,
    pub t: f64,
    pub p: Point,
}

/// Everything needed to initialize one stroke: geometry anchors, tangent
/// angles, timing, amplitude, and lobe moments.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeSeed {
    pub sp_prev: SalientPoint,
    pub sp: SalientPoint,
    /// Trajectory point at half the stroke arc length.
    pub mp: Point,
    /// Quarter and three-quarter arc-length points.
    pub mp1: Point,
    pub mp2: Point,
    pub theta_s: f64,
    pub theta_e: f64,
    /// Stroke occurrence time (anticipates the lobe start).
    pub t0: f64,
    pub lobe_end: f64,
    /// Trapezoidal integral of speed over the lobe.
    pub d_raw: f64,
    /// Lobe moments in absolute time.
    pub moments: Moments,
    /// True when angle estimation fell back to finite differences.
    pub angle_fallback: bool,
}

/// Tuning for salient-point detection and stroke seeding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationConfig {
    /// Minimum prominence of an interior speed minimum, as a fraction of
    /// the maximum speed.
    pub min_prominence: f64,
    /// Minimum separation between salient points, seconds.
    pub min_gap: f64,
    /// t0 anticipation as a fraction of the lobe duration.
    pub t0_anticipation: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            min_prominence: 0.05,
            min_gap: 0.04,
            t0_anticipation: 0.2,
        }
    }
}

/// Detect salient points: the first sample, interior speed minima that
/// pass the prominence and gap filters, and the last sample.
pub fn find_salient_points(
    traj: &Trajectory,
    sp: &SpeedProfile,
    cfg: &SegmentationConfig,
) -> Result<Vec<SalientPoint>> {
    if sp.len() < 4 || traj.len() != sp.len() {
        return Err(KttError::InvalidInput(format!(
            "profile of {} samples does not match trajectory of {}",
            sp.len(),
            traj.len()
        )));
    }
    let v = &sp.v;
    let n = v.len();
    let vmax = v.iter().cloned().fold(0.0_f64, f64::max);
    let make = |i: usize| SalientPoint {
        index: i,
        t: sp.t[i],
        p: traj.samples()[i].point(),
    };
    if vmax <= 0.0 {
        return Ok(vec![make(0), make(n - 1)]);
    }
    // Strict-then-plateau local minima.
    let mut candidates: Vec<usize> = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if v[i] <= v[i - 1] && v[i] <= v[i + 1] && (v[i] < v[i - 1] || v[i] < v[i + 1]) {
            // Middle of a flat run.
            let mut j = i;
            while j + 1 < n - 1 && v[j + 1] == v[i] {
                j += 1;
            }
            candidates.push((i + j) / 2);
            i = j + 1;
        } else {
            i += 1;
        }
    }
    // Prominence: on each side walk to the nearest strictly lower sample
    // (or the boundary) and take the highest value seen on the way; the
    // prominence is the lower of the two flanking peaks minus the
    // minimum. Walking past equal-depth samples keeps every minimum of a
    // wide valley fully prominent; duplicates are thinned by the gap
    // filter and the zero-area lobe drop downstream.
    let mut passing: Vec<usize> = Vec::new();
    for &c in &candidates {
        let mut peak_l = v[c];
        let mut i = c;
        while i > 0 {
            i -= 1;
            if v[i] < v[c] {
                break;
            }
            peak_l = peak_l.max(v[i]);
        }
        let mut peak_r = v[c];
        let mut i = c;
        while i + 1 < n {
            i += 1;
            if v[i] < v[c] {
                break;
            }
            peak_r = peak_r.max(v[i]);
        }
        if peak_l.min(peak_r) - v[c] >= cfg.min_prominence * vmax {
            passing.push(c);
        }
    }
    // Gap filter: keep deeper minima first, deterministic tie-break on
    // index.
    let mut by_depth = passing.clone();
    by_depth.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap().then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in by_depth {
        let t = sp.t[c];
        let far = kept
            .iter()
            .all(|&k| (sp.t[k] - t).abs() >= cfg.min_gap)
            && (t - sp.t[0]) >= cfg.min_gap
            && (sp.t[n - 1] - t) >= cfg.min_gap;
        if far {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    let mut out = vec![make(0)];
    out.extend(kept.into_iter().map(make));
    out.push(make(n - 1));
    Ok(out)
}

/// Circle through three points; `None` when collinear within tolerance.
fn circumcenter(a: Point, b: Point, c: Point) -> Option<Point> {
    let ab = b - a;
    let ac = c - a;
    let cross = ab.cross(ac);
    let scale = ab.norm() * ac.norm();
    if cross.abs() < 1e-12 * scale.max(1e-300) {
        return None;
    }
    let ab2 = ab.dot(ab);
    let ac2 = ac.dot(ac);
    let d = 2.0 * cross;
    let ux = (ac.y * ab2 - ab.y * ac2) / d;
    let uy = (ab.x * ac2 - ac.x * ab2) / d;
    Some(a + Point::new(ux, uy))
}

/// Tangent angle at `p` of the circle through (p, q, r), oriented so the
/// tangent points along `motion`.
fn circle_tangent_at(p: Point, q: Point, r: Point, motion: Point) -> f64 {
    match circumcenter(p, q, r) {
        Some(center) => {
            let radial = p - center;
            let mut tangent = Point::new(-radial.y, radial.x);
            if tangent.dot(motion) < 0.0 {
                tangent = -tangent;
            }
            tangent.angle()
        }
        // Collinear: the chord direction is the tangent.
        None => {
            let mut dir = motion;
            if dir.norm() == 0.0 {
                dir = r - p;
            }
            dir.angle()
        }
    }
}

/// Interpolated trajectory point at a given fraction of the polyline arc
/// length between two sample indices.
fn point_at_arc_fraction(traj: &Trajectory, from: usize, to: usize, frac: f64) -> Point {
    let s = traj.samples();
    let total: f64 = (from..to).map(|i| s[i + 1].point().dist(s[i].point())).sum();
    if total <= 0.0 {
        return s[from].point();
    }
    let target = frac * total;
    let mut acc = 0.0;
    for i in from..to {
        let seg = s[i + 1].point().dist(s[i].point());
        if acc + seg >= target {
            let f = if seg > 0.0 { (target - acc) / seg } else { 0.0 };
            return s[i].point() + (s[i + 1].point() - s[i].point()) * f;
        }
        acc += seg;
    }
    s[to].point()
}

/// Estimate the start and end tangent angles of the stroke between two
/// salient points using the three-point-circle construction, returning
/// `(theta_s, theta_e, mp, mp1, mp2, used_fallback)`.
pub fn estimate_angles(
    traj: &Trajectory,
    sp_prev: &SalientPoint,
    sp: &SalientPoint,
) -> Result<(f64, f64, Point, Point, Point, bool)> {
    if sp.index <= sp_prev.index || sp.index >= traj.len() {
        return Err(KttError::InvalidInput(format!(
            "bad salient pair {} -> {}",
            sp_prev.index, sp.index
        )));
    }
    let interior = sp.index - sp_prev.index - 1;
    let mp = point_at_arc_fraction(traj, sp_prev.index, sp.index, 0.5);
    let mp1 = point_at_arc_fraction(traj, sp_prev.index, sp.index, 0.25);
    let mp2 = point_at_arc_fraction(traj, sp_prev.index, sp.index, 0.75);
    if interior < 5 {
        // Finite-difference fallback on the few samples we have.
        let s = traj.samples();
        let i0 = sp_prev.index;
        let i1 = sp.index;
        let theta_s = (s[(i0 + 1).min(i1)].point() - s[i0].point()).angle();
        let theta_e = (s[i1].point() - s[i1 - 1].point()).angle();
        log::warn!(
            "stroke {}..{} has {interior} interior samples; finite-difference tangents",
            i0,
            i1
        );
        return Ok((theta_s, theta_e, mp, mp1, mp2, true));
    }
    let theta_s = circle_tangent_at(sp_prev.p, mp1, mp, mp1 - sp_prev.p);
    let theta_e = circle_tangent_at(sp.p, mp2, mp, sp.p - mp2);
    Ok((theta_s, theta_e, mp, mp1, mp2, false))
}

/// Build one seed per stroke delimited by consecutive salient points.
/// Zero-area lobes are dropped with a warning.
pub fn seed_strokes(
    traj: &Trajectory,
    sp: &SpeedProfile,
    salient: &[SalientPoint],
    cfg: &SegmentationConfig,
) -> Result<Vec<StrokeSeed>> {
    if salient.len() < 2 {
        return Err(KttError::InvalidInput(
            "need at least 2 salient points".into(),
        ));
    }
    let mut seeds = Vec::with_capacity(salient.len() - 1);
    for j in 1..salient.len() {
        let a = salient[j - 1];
        let b = salient[j];
        // Trapezoidal lobe area and moments over [t_a, t_b].
        let mut area = 0.0;
        let mut m1 = 0.0;
        for i in a.index..b.index {
            let dt = sp.t[i + 1] - sp.t[i];
            let va = sp.v[i];
            let vb = sp.v[i + 1];
            area += 0.5 * (va + vb) * dt;
            m1 += 0.5 * (va * sp.t[i] + vb * sp.t[i + 1]) * dt;
        }
        let vmax_lobe = sp.v[a.index..=b.index].iter().cloned().fold(0.0, f64::max);
        if area <= 1e-12 * traj.arc_length().max(1e-300) || vmax_lobe <= 0.0 {
            log::warn!("dropping zero-area stroke between t={} and t={}", a.t, b.t);
            continue;
        }
        let mean = m1 / area;
        let mut m2 = 0.0;
        for i in a.index..b.index {
            let dt = sp.t[i + 1] - sp.t[i];
            let da = sp.t[i] - mean;
            let db = sp.t[i + 1] - mean;
            m2 += 0.5 * (sp.v[i] * da * da + sp.v[i + 1] * db * db) * dt;
        }
        let var = (m2 / area).max(1e-12);
        let duration = b.t - a.t;
        let mut t0 = a.t - cfg.t0_anticipation * duration;
        if j >= 2 {
            t0 = t0.max(salient[j - 2].t);
        }
        let (theta_s, theta_e, mp, mp1, mp2, fallback) = estimate_angles(traj, &a, &b)?;
        seeds.push(StrokeSeed {
            sp_prev: a,
            sp: b,
            mp,
            mp1,
            mp2,
            theta_s,
            theta_e,
            t0,
            lobe_end: b.t,
            d_raw: area,
            moments: Moments::new(mean, var),
            angle_fallback: fallback,
        });
    }
    Ok(seeds)
}
