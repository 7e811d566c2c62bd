//! Curves linking consecutive virtual target points: circular arcs and
//! clothoids, arc-length parameterized, with G1 Hermite fitting.

use crate::error::{KttError, Result};
use crate::geom::{wrap_angle, Point};
use crate::quad::composite_gl;
use std::f64::consts::PI;

pub use crate::special::fresnel;

/// Closed enumeration of supported link curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkKind {
    Arc,
    Clothoid,
}

impl LinkKind {
    pub fn name(&self) -> &'static str {
        match self {
            LinkKind::Arc => "arc",
            LinkKind::Clothoid => "clothoid",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "arc" => Ok(LinkKind::Arc),
            "clothoid" => Ok(LinkKind::Clothoid),
            other => Err(KttError::UnsupportedKind(other.to_string())),
        }
    }
}

/// Geometry of one stroke's link: endpoints and endpoint tangent angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub kind: LinkKind,
    pub p_start: Point,
    pub p_end: Point,
    /// Start tangent angle, radians in (-pi, pi].
    pub theta_s: f64,
    /// End tangent angle, radians in (-pi, pi].
    pub theta_e: f64,
}

impl LinkSpec {
    pub fn new(kind: LinkKind, p_start: Point, p_end: Point, theta_s: f64, theta_e: f64) -> Result<Self> {
        if !(p_start.is_finite() && p_end.is_finite() && theta_s.is_finite() && theta_e.is_finite()) {
            return Err(KttError::InvalidInput("non-finite link spec".into()));
        }
        if p_start == p_end {
            return Err(KttError::InvalidInput(
                "link endpoints must be distinct".into(),
            ));
        }
        Ok(LinkSpec {
            kind,
            p_start,
            p_end,
            theta_s: wrap_angle(theta_s),
            theta_e: wrap_angle(theta_e),
        })
    }

    pub fn chord(&self) -> f64 {
        self.p_start.dist(self.p_end)
    }

    /// Fit the segment this spec describes (dispatching on kind).
    pub fn fit(&self) -> Result<ClothoidSegment> {
        match self.kind {
            LinkKind::Arc => make_arc(self),
            LinkKind::Clothoid => fit_g1(self),
        }
    }
}

/// An arc-length parameterized curve with linearly varying curvature.
/// Arcs and straight lines are the `kappa_rate == 0` special cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClothoidSegment {
    pub origin: Point,
    /// Start tangent angle, radians.
    pub theta0: f64,
    /// Initial curvature, 1/length.
    pub kappa0: f64,
    /// Curvature derivative with respect to arc length, 1/length^2.
    pub kappa_rate: f64,
    /// Segment length.
    pub length: f64,
}

impl ClothoidSegment {
    pub fn validate(&self) -> Result<()> {
        let ok = self.origin.is_finite()
            && self.theta0.is_finite()
            && self.kappa0.is_finite()
            && self.kappa_rate.is_finite()
            && self.length.is_finite()
            && self.length > 0.0;
        if ok {
            Ok(())
        } else {
            Err(KttError::InvalidInput(format!("invalid segment {self:?}")))
        }
    }

    /// Tangent angle at arc length `s` (not wrapped).
    pub fn tangent_at(&self, s: f64) -> f64 {
        self.theta0 + self.kappa0 * s + 0.5 * self.kappa_rate * s * s
    }

    /// Curvature at arc length `s`.
    pub fn curvature_at(&self, s: f64) -> f64 {
        self.kappa0 + self.kappa_rate * s
    }

    /// Endpoint of the segment.
    pub fn end_point(&self) -> Point {
        self.displacement(self.length) + self.origin
    }

    /// Displacement from the origin after arc length `s` (no range
    /// check; used internally and by the reconstruction sum).
    pub fn displacement(&self, s: f64) -> Point {
        if s == 0.0 {
            return Point::ORIGIN;
        }
        if self.kappa_rate == 0.0 {
            if self.kappa0 == 0.0 {
                return Point::unit(self.theta0) * s;
            }
            // Circular arc closed form.
            let k = self.kappa0;
            let th1 = self.theta0 + k * s;
            return Point::new(
                (th1.sin() - self.theta0.sin()) / k,
                (self.theta0.cos() - th1.cos()) / k,
            );
        }
        let phase = self.kappa0.abs() * s + 0.5 * self.kappa_rate.abs() * s * s;
        let panels = ((phase / 1.2).ceil() as usize).clamp(2, 5000);
        let x = composite_gl(|u| self.tangent_at(u).cos(), 0.0, s, panels);
        let y = composite_gl(|u| self.tangent_at(u).sin(), 0.0, s, panels);
        Point::new(x, y)
    }

    /// Position and tangent angle at arc length `s` in [0, length].
    pub fn point_at(&self, s: f64) -> Result<(Point, f64)> {
        let tol = 1e-9 * self.length.max(1.0);
        if s < -tol || s > self.length + tol {
            return Err(KttError::OutOfRange(format!(
                "s={s} outside [0, {}]",
                self.length
            )));
        }
        let s = s.clamp(0.0, self.length);
        Ok((self.origin + self.displacement(s), self.tangent_at(s)))
    }
}

/// Segment length (the stroke amplitude D_j of the link).
pub fn length(seg: &ClothoidSegment) -> f64 {
    seg.length
}

/// Phase-scaled integrals of sin/cos(phi0 + (dtheta - a) tau + a tau^2)
/// over tau in [0, 1], used by the G1 fit.
fn g1_integrals(phi0: f64, dtheta: f64, a: f64) -> (f64, f64, f64) {
    let angle = move |tau: f64| phi0 + (dtheta - a) * tau + a * tau * tau;
    let panels = (((dtheta - a).abs() + a.abs()) / 1.2).ceil() as usize + 2;
    let panels = panels.clamp(2, 2000);
    let s = composite_gl(|t| angle(t).sin(), 0.0, 1.0, panels);
    let c = composite_gl(|t| angle(t).cos(), 0.0, 1.0, panels);
    // d/dA of the sine integral.
    let ds = composite_gl(|t| angle(t).cos() * (t * t - t), 0.0, 1.0, panels);
    (s, c, ds)
}

/// G1 Hermite clothoid fit: a segment from `p_start` to `p_end` whose
/// tangents match `theta_s` and `theta_e` and whose curvature varies
/// linearly with arc length.
///
/// Solves the one-dimensional root problem for the clothoid parameter by
/// damped Newton iteration, starting from the cubic small-angle guess.
pub fn fit_g1(spec: &LinkSpec) -> Result<ClothoidSegment> {
    let chord = spec.p_end - spec.p_start;
    let r = chord.norm();
    if r == 0.0 {
        return Err(KttError::InvalidInput("zero-length chord".into()));
    }
    let phi = chord.angle();
    let phi0 = wrap_angle(spec.theta_s - phi);
    let phi1 = wrap_angle(spec.theta_e - phi);
    if phi0.abs() >= PI * (1.0 - 1e-9) || phi1.abs() >= PI * (1.0 - 1e-9) {
        return Err(KttError::InvalidInput(format!(
            "tangents too far from chord: phi0={phi0} phi1={phi1}"
        )));
    }
    // Degenerate: both tangents along the chord.
    if phi0.abs() < 1e-12 && phi1.abs() < 1e-12 {
        return Ok(ClothoidSegment {
            origin: spec.p_start,
            theta0: spec.theta_s,
            kappa0: 0.0,
            kappa_rate: 0.0,
            length: r,
        });
    }
    let dtheta = phi1 - phi0;
    let mut a = 3.0 * (phi0 + phi1);
    let (mut g, mut h, mut dg) = g1_integrals(phi0, dtheta, a);
    let mut converged = false;
    for _ in 0..100 {
        if g.abs() < 1e-14 {
            converged = true;
            break;
        }
        if dg.abs() < 1e-300 {
            break;
        }
        let mut step = g / dg;
        // Damp: insist on residual reduction.
        let mut accepted = false;
        for _ in 0..40 {
            let cand = a - step;
            let (gn, hn, dgn) = g1_integrals(phi0, dtheta, cand);
            if gn.abs() < g.abs() {
                a = cand;
                g = gn;
                h = hn;
                dg = dgn;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if !converged && g.abs() >= 1e-12 {
        return Err(KttError::FitFailure(format!(
            "Newton residual {g:.3e} after iteration limit (phi0={phi0}, phi1={phi1})"
        )));
    }
    if h <= 0.0 {
        return Err(KttError::FitFailure(format!(
            "non-positive chord projection h={h}"
        )));
    }
    let l = r / h;
    Ok(ClothoidSegment {
        origin: spec.p_start,
        theta0: spec.theta_s,
        kappa0: (dtheta - a) / l,
        kappa_rate: 2.0 * a / (l * l),
        length: l,
    })
}

/// Constant-curvature segment through `p_start` and `p_end` with start
/// tangent `theta_s`. The end tangent of the spec is not used: endpoints
/// plus one tangent already determine the circle, so `theta_e` is
/// realized, not enforced.
pub fn make_arc(spec: &LinkSpec) -> Result<ClothoidSegment> {
    let chord = spec.p_end - spec.p_start;
    let r = chord.norm();
    if r == 0.0 {
        return Err(KttError::InvalidInput("zero-length chord".into()));
    }
    let delta = wrap_angle(chord.angle() - spec.theta_s);
    if delta.abs() < 1e-12 {
        return Ok(ClothoidSegment {
            origin: spec.p_start,
            theta0: spec.theta_s,
            kappa0: 0.0,
            kappa_rate: 0.0,
            length: r,
        });
    }
    if delta.sin().abs() < 1e-12 {
        return Err(KttError::InvalidInput(
            "start tangent opposes the chord; no single arc exists".into(),
        ));
    }
    // Inscribed-angle construction: the turn along the arc is twice the
    // tangent-to-chord angle.
    let kappa0 = 2.0 * delta.sin() / r;
    let length = r * delta / delta.sin();
    Ok(ClothoidSegment {
        origin: spec.p_start,
        theta0: spec.theta_s,
        kappa0,
        kappa_rate: 0.0,
        length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn spec(kind: LinkKind, a: (f64, f64), b: (f64, f64), ts: f64, te: f64) -> LinkSpec {
        LinkSpec::new(kind, Point::new(a.0, a.1), Point::new(b.0, b.1), ts, te).unwrap()
    }

    #[test]
    fn straight_line_fit() {
        let s = spec(LinkKind::Clothoid, (0.0, 0.0), (1.0, 0.0), 0.0, 0.0);
        let seg = fit_g1(&s).unwrap();
        assert_eq!(seg.kappa0, 0.0);
        assert_eq!(seg.kappa_rate, 0.0);
        assert!((seg.length - 1.0).abs() < 1e-15);
    }

    #[test]
    fn semicircle_fit_is_constant_curvature() {
        let s = spec(LinkKind::Clothoid, (0.0, 0.0), (0.0, 2.0), 0.0, PI);
        let seg = fit_g1(&s).unwrap();
        assert!(seg.kappa_rate.abs() < 1e-9, "rate={}", seg.kappa_rate);
        assert!((seg.length - PI).abs() < 1e-9, "L={}", seg.length);
        assert!((seg.kappa0.abs() - 1.0).abs() < 1e-9, "k={}", seg.kappa0);
    }

    #[test]
    fn s_shape_has_one_inflexion() {
        // Tangents at +0.6 relative to the chord on both ends wind in
        // opposite directions: curvature must cross zero exactly once.
        let s = spec(LinkKind::Clothoid, (0.0, 0.0), (2.0, 0.0), 0.6, 0.6);
        let seg = fit_g1(&s).unwrap();
        let k0 = seg.curvature_at(0.0);
        let k1 = seg.curvature_at(seg.length);
        assert!(k0 * k1 < 0.0, "k0={k0} k1={k1}");
        // Bisection for the crossing of the linear curvature.
        let (mut lo, mut hi) = (0.0, seg.length);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if seg.curvature_at(mid) * k0 > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let s_cross = 0.5 * (lo + hi);
        assert!(s_cross > 0.0 && s_cross < seg.length);
        assert!(seg.curvature_at(s_cross).abs() < 1e-9);
    }

    #[test]
    fn arc_straight_and_semicircle() {
        let seg = make_arc(&spec(LinkKind::Arc, (0.0, 0.0), (2.0, 0.0), 0.0, 0.0)).unwrap();
        assert_eq!(seg.kappa0, 0.0);
        assert!((seg.length - 2.0).abs() < 1e-15);

        let seg = make_arc(&spec(LinkKind::Arc, (0.0, 0.0), (0.0, 2.0), 0.0, PI)).unwrap();
        assert!((seg.kappa0 - 1.0).abs() < 1e-12);
        assert!((seg.length - PI).abs() < 1e-12);
        let end = seg.end_point();
        assert!(end.dist(Point::new(0.0, 2.0)) < 1e-12 * 2.0, "{end:?}");
    }

    #[test]
    fn arc_with_vertical_tangent() {
        let seg = make_arc(&spec(LinkKind::Arc, (0.0, 0.0), (1.0, 1.0), PI / 2.0, 0.0)).unwrap();
        assert!((seg.kappa0 + 1.0).abs() < 1e-12, "k={}", seg.kappa0);
        let end = seg.end_point();
        assert!(end.dist(Point::new(1.0, 1.0)) < 1e-12, "{end:?}");
    }

    #[test]
    fn arc_rejects_degenerate() {
        let s = LinkSpec::new(
            LinkKind::Arc,
            Point::new(1.0, 1.0),
            Point::new(1.0, 1.0),
            0.0,
            0.0,
        );
        assert!(s.is_err());
    }

    #[test]
    fn point_at_boundaries() {
        let s = spec(LinkKind::Clothoid, (0.5, -0.5), (1.5, 0.7), 0.4, -0.2);
        let seg = fit_g1(&s).unwrap();
        let (p0, t0) = seg.point_at(0.0).unwrap();
        assert!(p0.dist(s.p_start) < 1e-12);
        assert!((t0 - s.theta_s).abs() < 1e-12);
        let (p1, t1) = seg.point_at(seg.length).unwrap();
        assert!(p1.dist(s.p_end) < 1e-9, "end error {}", p1.dist(s.p_end));
        assert!(wrap_angle(t1 - s.theta_e).abs() < 1e-9);
        assert!(seg.point_at(-0.1).is_err());
        assert!(seg.point_at(seg.length + 0.1).is_err());
    }

    #[test]
    fn semicircle_midpoint_geometry() {
        // Unit semicircle from (0,0) to (0,2), center (0,1): the midpoint
        // sits at (1,1) with a vertical tangent.
        let seg = make_arc(&spec(LinkKind::Arc, (0.0, 0.0), (0.0, 2.0), 0.0, PI)).unwrap();
        let (p, th) = seg.point_at(seg.length / 2.0).unwrap();
        assert!(p.dist(Point::new(1.0, 1.0)) < 1e-9, "{p:?}");
        assert!((th - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn length_matches_quadrature_of_speed() {
        // A clothoid is arc-length parameterized: the polyline length of
        // dense samples must converge to `length`.
        let s = spec(LinkKind::Clothoid, (0.0, 0.0), (1.0, 0.4), 1.0, -0.5);
        let seg = fit_g1(&s).unwrap();
        let n = 10_000;
        let mut poly = 0.0;
        let mut prev = seg.point_at(0.0).unwrap().0;
        for i in 1..=n {
            let p = seg.point_at(seg.length * i as f64 / n as f64).unwrap().0;
            poly += p.dist(prev);
            prev = p;
        }
        assert!(
            ((poly - seg.length) / seg.length).abs() < 1e-6,
            "poly={poly} L={}",
            seg.length
        );
    }

    #[test]
    fn random_g1_round_trip() {
        let mut rng = StdRng::seed_from_u64(97);
        let mut failures = 0;
        for _ in 0..1000 {
            let p0 = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let mut p1 = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if p0.dist(p1) < 0.05 {
                p1 = p1 + Point::new(0.1, 0.1);
            }
            let phi = (p1 - p0).angle();
            let ts = wrap_angle(phi + rng.gen_range(-2.2..2.2));
            let te = wrap_angle(phi + rng.gen_range(-2.2..2.2));
            if wrap_angle(te - ts).abs() >= PI * (1.0 - 1e-6) {
                continue;
            }
            let s = LinkSpec::new(LinkKind::Clothoid, p0, p1, ts, te).unwrap();
            match fit_g1(&s) {
                Ok(seg) => {
                    let (pe, th) = seg.point_at(seg.length).unwrap();
                    assert!(pe.dist(p1) <= 1e-8 * s.chord(), "end error {}", pe.dist(p1));
                    assert!(wrap_angle(th - te).abs() <= 1e-8);
                    let (ps, th0) = seg.point_at(0.0).unwrap();
                    assert!(ps.dist(p0) < 1e-12);
                    assert!((th0 - ts).abs() < 1e-12);
                }
                Err(_) => failures += 1,
            }
        }
        assert!(failures <= 1, "{failures} fit failures");
    }

    #[test]
    fn rigid_invariance() {
        let base = spec(LinkKind::Clothoid, (0.0, 0.0), (1.2, 0.3), 0.7, -0.4);
        let seg = fit_g1(&base).unwrap();
        let phi = 0.9;
        let shift = Point::new(3.0, -2.0);
        let rot = LinkSpec::new(
            LinkKind::Clothoid,
            base.p_start.rotate(phi) + shift,
            base.p_end.rotate(phi) + shift,
            base.theta_s + phi,
            base.theta_e + phi,
        )
        .unwrap();
        let seg2 = fit_g1(&rot).unwrap();
        for i in 0..=20 {
            let s = seg.length * i as f64 / 20.0;
            let (p, _) = seg.point_at(s).unwrap();
            let expect = (p - base.p_start).rotate(phi) + base.p_start.rotate(phi) + shift;
            let s2 = seg2.length * i as f64 / 20.0;
            let (p2, _) = seg2.point_at(s2).unwrap();
            assert!(p2.dist(expect) < 1e-9, "i={i}: {p2:?} vs {expect:?}");
        }
    }

    #[test]
    fn arc_is_a_zero_rate_clothoid() {
        // When the spec is exactly circular the two constructors agree.
        let s_arc = spec(LinkKind::Arc, (0.0, 0.0), (0.0, 2.0), 0.0, PI);
        let s_clo = spec(LinkKind::Clothoid, (0.0, 0.0), (0.0, 2.0), 0.0, PI);
        let a = make_arc(&s_arc).unwrap();
        let c = fit_g1(&s_clo).unwrap();
        assert!((a.length - c.length).abs() < 1e-8);
        for i in 0..=16 {
            let f = i as f64 / 16.0;
            let pa = a.point_at(a.length * f).unwrap().0;
            let pc = c.point_at(c.length * f).unwrap().0;
            assert!(pa.dist(pc) < 1e-8, "f={f}");
        }
    }
}
