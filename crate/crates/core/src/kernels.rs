//! The six bell-shaped velocity kernels: evaluation, cumulative
//! integrals, and the moment relations used to initialize them from an
//! observed speed lobe.
//!
//! Moment conventions: for every kind except Gaussian the kernel is
//! anchored at its occurrence time `t0` and [`params_to_moments`] /
//! [`moments_to_params`] work with lobe moments measured *relative to
//! t0*. The Gaussian ignores `t0`, so its moments are absolute.
//! [`numeric_moments`] always returns absolute-time moments.

use crate::error::{KttError, Result};
use crate::optim::golden_min;
use crate::quad::{adaptive_simpson, composite_gl};
use crate::special::{beta_inc, erf, gamma, gamma_p, ln_beta, ln_gamma, normal_cdf};
use std::f64::consts::PI;

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Closed enumeration of the supported kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Gaussian,
    Lognormal,
    Gamma,
    Beta,
    DoubleBoundedLognormal,
    Gev,
}

impl KernelKind {
    pub const ALL: [KernelKind; 6] = [
        KernelKind::Gaussian,
        KernelKind::Lognormal,
        KernelKind::Gamma,
        KernelKind::Beta,
        KernelKind::DoubleBoundedLognormal,
        KernelKind::Gev,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Lognormal => "lognormal",
            KernelKind::Gamma => "gamma",
            KernelKind::Beta => "beta",
            KernelKind::DoubleBoundedLognormal => "dbl",
            KernelKind::Gev => "gev",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(KernelKind::Gaussian),
            "lognormal" => Ok(KernelKind::Lognormal),
            "gamma" => Ok(KernelKind::Gamma),
            "beta" => Ok(KernelKind::Beta),
            "dbl" => Ok(KernelKind::DoubleBoundedLognormal),
            "gev" => Ok(KernelKind::Gev),
            other => Err(KttError::UnsupportedKind(other.to_string())),
        }
    }
}

/// Shape parameters of one kernel family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelShape {
    /// mu in seconds (absolute), sigma2 in seconds^2.
    Gaussian { mu: f64, sigma2: f64 },
    /// mu in log-seconds, sigma2 in (log-seconds)^2; support t > t0.
    Lognormal { mu: f64, sigma2: f64 },
    /// Rate convention: density proportional to x^(alpha-1) e^(-beta x).
    Gamma { alpha: f64, beta: f64 },
    /// Support (t0, t0 + 1) on the stroke's time axis.
    Beta { alpha: f64, beta: f64 },
    /// Lognormal in the ratio (t - t0) / (te - t); support (t0, te).
    DoubleBoundedLognormal { mu: f64, sigma2: f64, te: f64 },
    /// Location mu and scale sigma on the t - t0 axis; xi < 0.5.
    Gev { xi: f64, mu: f64, sigma: f64 },
}

impl KernelShape {
    pub fn kind(&self) -> KernelKind {
        match self {
            KernelShape::Gaussian { .. } => KernelKind::Gaussian,
            KernelShape::Lognormal { .. } => KernelKind::Lognormal,
            KernelShape::Gamma { .. } => KernelKind::Gamma,
            KernelShape::Beta { .. } => KernelKind::Beta,
            KernelShape::DoubleBoundedLognormal { .. } => KernelKind::DoubleBoundedLognormal,
            KernelShape::Gev { .. } => KernelKind::Gev,
        }
    }
}

/// Full parameter set of one stroke's velocity kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Stroke occurrence time, seconds. Unused by the Gaussian.
    pub t0: f64,
    /// Area under the speed lobe (stroke amplitude D_j), length units.
    pub d: f64,
    pub shape: KernelShape,
}

/// First moment and variance of the normalized lobe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// First moment, seconds.
    pub m: f64,
    /// Variance, seconds^2.
    pub v: f64,
}

impl Moments {
    pub fn new(m: f64, v: f64) -> Self {
        Moments { m, v }
    }
}

impl KernelParams {
    pub fn new(t0: f64, d: f64, shape: KernelShape) -> Result<Self> {
        let p = KernelParams { t0, d, shape };
        p.validate()?;
        Ok(p)
    }

    pub fn kind(&self) -> KernelKind {
        self.shape.kind()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(KttError::InvalidInput(msg));
        if !(self.d > 0.0 && self.d.is_finite()) {
            return bad(format!("D must be positive, got {}", self.d));
        }
        if !self.t0.is_finite() {
            return bad("t0 must be finite".into());
        }
        match self.shape {
            KernelShape::Gaussian { sigma2, mu } | KernelShape::Lognormal { mu, sigma2 } => {
                if !(sigma2 > 0.0 && sigma2.is_finite() && mu.is_finite()) {
                    return bad(format!("sigma2 must be positive, got {sigma2}"));
                }
            }
            KernelShape::Gamma { alpha, beta } | KernelShape::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return bad(format!("alpha, beta must be positive, got {alpha}, {beta}"));
                }
            }
            KernelShape::DoubleBoundedLognormal { mu, sigma2, te } => {
                if !(sigma2 > 0.0 && sigma2.is_finite() && mu.is_finite()) {
                    return bad(format!("sigma2 must be positive, got {sigma2}"));
                }
                if !(te > self.t0) {
                    return bad(format!("te={te} must exceed t0={}", self.t0));
                }
            }
            KernelShape::Gev { xi, mu, sigma } => {
                if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
                    return bad(format!("sigma must be positive, got {sigma}"));
                }
                if !(xi < 0.5 && xi.is_finite()) {
                    return bad(format!("xi must be below 0.5, got {xi}"));
                }
            }
        }
        Ok(())
    }

    /// Support of the kernel as (lower, upper); either bound may be
    /// infinite.
    pub fn support(&self) -> (f64, f64) {
        match self.shape {
            KernelShape::Gaussian { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            KernelShape::Lognormal { .. } | KernelShape::Gamma { .. } => (self.t0, f64::INFINITY),
            KernelShape::Beta { .. } => (self.t0, self.t0 + 1.0),
            KernelShape::DoubleBoundedLognormal { te, .. } => (self.t0, te),
            KernelShape::Gev { xi, mu, sigma } => {
                if xi > 0.0 {
                    (self.t0 + mu - sigma / xi, f64::INFINITY)
                } else if xi < 0.0 {
                    (f64::NEG_INFINITY, self.t0 + mu - sigma / xi)
                } else {
                    (f64::NEG_INFINITY, f64::INFINITY)
                }
            }
        }
    }

    /// Finite interval containing all but `eps * D` of the lobe mass.
    /// Quantile-based even when the support bound is finite: a GEV with
    /// small positive xi has a support edge far from any mass, which
    /// would defeat downstream quadrature.
    pub fn effective_support(&self, eps: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        let lo_q = self.quantile(eps);
        let hi_q = self.quantile(1.0 - eps);
        let lo = if lo.is_finite() { lo.max(lo_q) } else { lo_q };
        let hi = if hi.is_finite() { hi.min(hi_q) } else { hi_q };
        (lo, hi)
    }

    /// Time at which the cumulative reaches `p * D`, by bisection.
    pub(crate) fn quantile(&self, p: f64) -> f64 {
        let target = p * self.d;
        // Expand a bracket around a central reference point.
        let center = match self.shape {
            KernelShape::Gaussian { mu, .. } => mu,
            _ => self.t0,
        };
        let mut step = match self.shape {
            KernelShape::Gaussian { sigma2, .. } | KernelShape::Lognormal { sigma2, .. } => {
                sigma2.sqrt().max(1e-6)
            }
            KernelShape::Gamma { alpha, beta } => (alpha.sqrt() / beta).max(1.0 / beta),
            KernelShape::Gev { sigma, .. } => sigma.max(1e-6),
            _ => 1.0,
        };
        let (mut lo, mut hi);
        if self.cumulative(center) >= target {
            hi = center;
            lo = center - step;
            while self.cumulative(lo) > target && step < 1e12 {
                step *= 2.0;
                lo = center - step;
            }
        } else {
            lo = center;
            hi = center + step;
            while self.cumulative(hi) < target && step < 1e12 {
                step *= 2.0;
                hi = center + step;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cumulative(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * (1.0 + hi.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Kernel value v_j(t). Total on valid parameters; exactly zero
    /// outside the support.
    pub fn eval(&self, t: f64) -> f64 {
        let d = self.d;
        match self.shape {
            KernelShape::Gaussian { mu, sigma2 } => {
                let s = sigma2.sqrt();
                let z = (t - mu) / s;
                d / (s * (2.0 * PI).sqrt()) * (-0.5 * z * z).exp()
            }
            KernelShape::Lognormal { mu, sigma2 } => {
                let x = t - self.t0;
                if x <= 0.0 {
                    return 0.0;
                }
                let s = sigma2.sqrt();
                let z = (x.ln() - mu) / s;
                d / (s * (2.0 * PI).sqrt() * x) * (-0.5 * z * z).exp()
            }
            KernelShape::Gamma { alpha, beta } => {
                let x = t - self.t0;
                if x <= 0.0 {
                    return 0.0;
                }
                // beta^alpha x^(alpha-1) e^(-beta x) / Gamma(alpha)
                let ln_pdf = alpha * beta.ln() + (alpha - 1.0) * x.ln() - beta * x - ln_gamma(alpha);
                d * ln_pdf.exp()
            }
            KernelShape::Beta { alpha, beta } => {
                let x = t - self.t0;
                if x <= 0.0 || x >= 1.0 {
                    return 0.0;
                }
                let ln_pdf =
                    (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_beta(alpha, beta);
                d * ln_pdf.exp()
            }
            KernelShape::DoubleBoundedLognormal { mu, sigma2, te } => {
                let t0 = self.t0;
                if t <= t0 || t >= te {
                    return 0.0;
                }
                let s = sigma2.sqrt();
                let zeta = (t - t0) / (te - t);
                let eta = (t - t0) * (te - t);
                let z = (zeta.ln() - mu) / s;
                d * (te - t0) / (s * eta * (2.0 * PI).sqrt()) * (-0.5 * z * z).exp()
            }
            KernelShape::Gev { xi, mu, sigma } => {
                let tau = t - self.t0;
                match gev_s(tau, xi, mu, sigma) {
                    // Log-space keeps the deep tails at exactly zero
                    // instead of overflowing s^(xi+1) * exp(-s).
                    Some(s) if s.is_finite() && s > 0.0 => {
                        d / sigma * ((xi + 1.0) * s.ln() - s).exp()
                    }
                    _ => 0.0,
                }
            }
        }
    }

    /// Cumulative integral of the kernel from -inf to `t`; nondecreasing
    /// with limit D. Closed forms throughout.
    pub fn cumulative(&self, t: f64) -> f64 {
        let d = self.d;
        match self.shape {
            KernelShape::Gaussian { mu, sigma2 } => {
                d * 0.5 * (1.0 + erf((t - mu) / (2.0 * sigma2).sqrt()))
            }
            KernelShape::Lognormal { mu, sigma2 } => {
                let x = t - self.t0;
                if x <= 0.0 {
                    return 0.0;
                }
                d * normal_cdf((x.ln() - mu) / sigma2.sqrt())
            }
            KernelShape::Gamma { alpha, beta } => {
                let x = t - self.t0;
                if x <= 0.0 {
                    return 0.0;
                }
                d * gamma_p(alpha, beta * x)
            }
            KernelShape::Beta { alpha, beta } => {
                let x = t - self.t0;
                d * beta_inc(alpha, beta, x.clamp(0.0, 1.0))
            }
            KernelShape::DoubleBoundedLognormal { mu, sigma2, te } => {
                let t0 = self.t0;
                if t <= t0 {
                    return 0.0;
                }
                if t >= te {
                    return d;
                }
                let zeta = (t - t0) / (te - t);
                d * normal_cdf((zeta.ln() - mu) / sigma2.sqrt())
            }
            KernelShape::Gev { xi, mu, sigma } => {
                let tau = t - self.t0;
                if xi < 0.0 && tau >= mu - sigma / xi {
                    return d;
                }
                match gev_s(tau, xi, mu, sigma) {
                    Some(s) => d * (-s).exp(),
                    None => 0.0,
                }
            }
        }
    }
}

/// GEV auxiliary s(tau); `None` outside the support.
fn gev_s(tau: f64, xi: f64, mu: f64, sigma: f64) -> Option<f64> {
    let z = (tau - mu) / sigma;
    if xi == 0.0 {
        Some((-z).exp())
    } else {
        let w = xi * z;
        if 1.0 + w <= 0.0 {
            None
        } else {
            // s = (1 + xi z)^(-1/xi), continuous in xi through 0.
            Some((-w.ln_1p() / xi).exp())
        }
    }
}

/// Closed-form lobe moments per the kernel family's standard relations.
/// Relative to `t0` for every kind except Gaussian (absolute there).
pub fn params_to_moments(params: &KernelParams) -> Result<Moments> {
    params.validate()?;
    match params.shape {
        KernelShape::Gaussian { mu, sigma2 } => Ok(Moments::new(mu, sigma2)),
        KernelShape::Lognormal { mu, sigma2 } => {
            let m = (mu + 0.5 * sigma2).exp();
            let v = (sigma2.exp() - 1.0) * (2.0 * mu + sigma2).exp();
            Ok(Moments::new(m, v))
        }
        KernelShape::Gamma { alpha, beta } => Ok(Moments::new(alpha / beta, alpha / (beta * beta))),
        KernelShape::Beta { alpha, beta } => {
            let s = alpha + beta;
            Ok(Moments::new(alpha / s, alpha * beta / (s * s * (s + 1.0))))
        }
        KernelShape::DoubleBoundedLognormal { mu, sigma2, .. } => {
            // The lognormal approximation of the bounded lobe; the exact
            // moments are only available numerically.
            let m = (mu + 0.5 * sigma2).exp();
            let v = (sigma2.exp() - 1.0) * (2.0 * mu + sigma2).exp();
            Ok(Moments::new(m, v))
        }
        KernelShape::Gev { xi, mu, sigma } => {
            if xi >= 0.5 {
                return Err(KttError::UndefinedVariance(format!(
                    "GEV variance undefined for xi={xi} >= 0.5"
                )));
            }
            if xi == 0.0 {
                Ok(Moments::new(
                    mu + sigma * EULER_GAMMA,
                    sigma * sigma * PI * PI / 6.0,
                ))
            } else {
                let g1 = gamma(1.0 - xi);
                let g2 = gamma(1.0 - 2.0 * xi);
                let m = mu + sigma * (g1 - 1.0) / xi;
                let v = sigma * sigma * (g2 - g1 * g1) / (xi * xi);
                Ok(Moments::new(m, v))
            }
        }
    }
}

/// Invert lobe moments to kernel shape parameters.
///
/// `m` follows the convention documented on the module: relative to
/// `t0` for every kind except Gaussian. `lobe_end` (absolute seconds)
/// bounds the observed lobe and fixes the DBL end time.
pub fn moments_to_params(
    kind: KernelKind,
    m: Moments,
    t0: f64,
    lobe_end: f64,
) -> Result<KernelShape> {
    if !(m.v > 0.0 && m.v.is_finite() && m.m.is_finite()) {
        return Err(KttError::InfeasibleMoments(format!(
            "need finite M and positive V, got M={} V={}",
            m.m, m.v
        )));
    }
    match kind {
        KernelKind::Gaussian => Ok(KernelShape::Gaussian {
            mu: m.m,
            sigma2: m.v,
        }),
        KernelKind::Lognormal => {
            if m.m <= 0.0 {
                return Err(KttError::InfeasibleMoments(format!(
                    "lognormal needs M > 0, got {}",
                    m.m
                )));
            }
            let mu = (m.m * m.m / (m.v + m.m * m.m).sqrt()).ln();
            let sigma2 = (m.v / (m.m * m.m) + 1.0).ln();
            Ok(KernelShape::Lognormal { mu, sigma2 })
        }
        KernelKind::Gamma => {
            if m.m <= 0.0 {
                return Err(KttError::InfeasibleMoments(format!(
                    "gamma needs M > 0, got {}",
                    m.m
                )));
            }
            Ok(KernelShape::Gamma {
                alpha: m.m * m.m / m.v,
                beta: m.m / m.v,
            })
        }
        KernelKind::Beta => {
            if !(m.m > 0.0 && m.m < 1.0) {
                return Err(KttError::InfeasibleMoments(format!(
                    "beta needs M in (0,1), got {}",
                    m.m
                )));
            }
            if m.v >= m.m * (1.0 - m.m) {
                return Err(KttError::InfeasibleMoments(format!(
                    "beta needs V < M(1-M): V={} bound={}",
                    m.v,
                    m.m * (1.0 - m.m)
                )));
            }
            let c = m.m * (1.0 - m.m) / m.v - 1.0;
            Ok(KernelShape::Beta {
                alpha: c * m.m,
                beta: c * (1.0 - m.m),
            })
        }
        KernelKind::Gev => {
            // Gumbel branch: sigma and mu invert the xi = 0 moment rows
            // exactly, so the moment match is already tight there. The
            // shape parameter is a residual degree of freedom that the
            // extractor's SNR hill-climbing adjusts (bounded below 0.5).
            let sigma = (6.0 * m.v).sqrt() / PI;
            let mu = m.m - sigma * EULER_GAMMA;
            Ok(KernelShape::Gev { xi: 0.0, mu, sigma })
        }
        KernelKind::DoubleBoundedLognormal => {
            let span = lobe_end - t0;
            if !(span > 0.0) {
                return Err(KttError::InfeasibleMoments(format!(
                    "DBL needs lobe_end > t0, got span {span}"
                )));
            }
            if !(m.m > 0.0 && m.m < span) {
                return Err(KttError::InfeasibleMoments(format!(
                    "DBL needs M in (0, {span}), got {}",
                    m.m
                )));
            }
            fit_dbl(m, span, lobe_end)
        }
    }
}

/// DBL lobe moments (relative to t0) from the latent lognormal
/// parameters, via Gauss-Legendre panels over the latent normal axis.
/// With w ~ N(mu, sigma2) and span = te - t0, t - t0 = span * sigmoid(w).
fn dbl_moments_fast(mu: f64, sigma2: f64, span: f64) -> Moments {
    let s = sigma2.sqrt();
    let lo = mu - 10.0 * s;
    let hi = mu + 10.0 * s;
    let norm = 1.0 / (s * (2.0 * PI).sqrt());
    let phi = move |w: f64| {
        let z = (w - mu) / s;
        norm * (-0.5 * z * z).exp()
    };
    let sigmoid = |w: f64| 1.0 / (1.0 + (-w).exp());
    let m1 = composite_gl(|w| phi(w) * sigmoid(w), lo, hi, 24);
    let m2 = composite_gl(
        |w| {
            let g = sigmoid(w);
            phi(w) * g * g
        },
        lo,
        hi,
        24,
    );
    let m = span * m1;
    Moments::new(m, (span * span * m2 - m * m).max(1e-300))
}

/// Coordinate-wise golden-section hill-climb for the DBL parameters,
/// starting from mu = 0.6, sigma2 = 0.2 with the end time pinned to the
/// lobe end, matching the target moments in relative error.
fn fit_dbl(target: Moments, span: f64, te: f64) -> Result<KernelShape> {
    let objective = |mu: f64, sigma2: f64| {
        let got = dbl_moments_fast(mu, sigma2, span);
        let em = (got.m - target.m) / target.m;
        let ev = (got.v - target.v) / target.v;
        em * em + ev * ev
    };
    let mut mu = 0.6;
    let mut sigma2 = 0.2;
    let mut best = objective(mu, sigma2);
    let mut width_mu = 3.0;
    let mut width_s = 4.0; // multiplicative half-range, in log2 units
    for _ in 0..200 {
        let (mu_new, f1) = golden_min(
            |m| objective(m, sigma2),
            mu - width_mu,
            mu + width_mu,
            1e-7,
            80,
        );
        if f1 < best {
            best = f1;
            mu = mu_new;
        }
        let (ls_new, f2) = golden_min(
            |ls: f64| objective(mu, ls.exp2()),
            sigma2.log2() - width_s,
            sigma2.log2() + width_s,
            1e-7,
            80,
        );
        if f2 < best {
            best = f2;
            sigma2 = ls_new.exp2();
        }
        width_mu *= 0.5;
        width_s *= 0.5;
        if best < 1e-12 || (width_mu < 1e-6 && width_s < 1e-6) {
            break;
        }
        width_mu = width_mu.max(1e-6);
        width_s = width_s.max(1e-6);
    }
    if best > 1e-6 {
        return Err(KttError::InfeasibleMoments(format!(
            "DBL hill-climb residual {best:.3e} for M={} V={} span={span}",
            target.m, target.v
        )));
    }
    Ok(KernelShape::DoubleBoundedLognormal { mu, sigma2, te })
}

/// Adaptive quadrature of `f` over the lobe, split at the quartiles so
/// a narrow lobe inside a wide (heavy-tailed) support cannot slip
/// between the probe points.
pub fn integrate_lobe<F: Fn(f64) -> f64>(params: &KernelParams, f: F, eps: f64, tol: f64) -> Result<f64> {
    let cuts = [eps, 0.25, 0.5, 0.75, 1.0 - eps];
    let pts: Vec<f64> = cuts.iter().map(|&p| params.quantile(p)).collect();
    let mut total = 0.0;
    for w in pts.windows(2) {
        if w[1] > w[0] {
            total += adaptive_simpson(&|t| f(t), w[0], w[1], 0.25 * tol)?;
        }
    }
    Ok(total)
}

/// Lobe moments by adaptive quadrature of the normalized kernel, in
/// absolute time. Relative error around 1e-8.
pub fn numeric_moments(params: &KernelParams) -> Result<Moments> {
    params.validate()?;
    let (lo, hi) = params.effective_support(1e-13);
    let d = params.d;
    let scale = (hi - lo).max(1e-12);
    let tol = 1e-11 * d * scale.max(1.0);
    let m1 = integrate_lobe(params, |t| t * params.eval(t), 1e-13, tol)? / d;
    let m2 = integrate_lobe(
        params,
        |t| (t - m1) * (t - m1) * params.eval(t),
        1e-13,
        tol * scale,
    )? / d;
    if !(m1.is_finite() && m2.is_finite() && m2 > 0.0) {
        return Err(KttError::NumericFailure(format!(
            "numeric moments diverged: M={m1} V={m2}"
        )));
    }
    Ok(Moments::new(m1, m2))
}
