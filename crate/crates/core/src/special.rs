//! Special functions implemented in-crate: log-gamma, regularized
//! incomplete gamma and beta, error function, and the Fresnel integrals.
//!
//! These back the closed-form kernel integrals, so each carries an
//! accuracy target around 1e-12 or better over the argument ranges the
//! rest of the crate uses.

use crate::quad::composite_gl;
use std::f64::consts::{FRAC_PI_2, PI};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection formula.
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for x not a non-positive integer.
pub fn gamma(x: f64) -> f64 {
    if x > 0.0 {
        ln_gamma(x).exp()
    } else {
        PI / ((PI * x).sin() * ln_gamma(1.0 - x).exp())
    }
}

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..1000 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    // Lentz's algorithm for the continued fraction.
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Error function, |error| below ~1e-15 relative.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x > 0.0 {
        gamma_p(0.5, x * x)
    } else {
        -gamma_p(0.5, x * x)
    }
}

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        1.0 + gamma_p(0.5, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta I_x(a, b) for a, b > 0, x in [0, 1].
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    // Use the continued fraction on the side where it converges fast.
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..500 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    h
}

/// Fresnel integrals C(u) = int_0^u cos(pi v^2 / 2) dv and
/// S(u) = int_0^u sin(pi v^2 / 2) dv.
///
/// Maclaurin series for small |u|; panelled Gauss-Legendre quadrature
/// otherwise. Absolute error stays below 1e-13 for |u| <= 10.
pub fn fresnel(u: f64) -> (f64, f64) {
    if u == 0.0 {
        return (0.0, 0.0);
    }
    let a = u.abs();
    let (c, s) = if a <= 1.5 {
        fresnel_series(a)
    } else {
        fresnel_quad(a)
    };
    if u < 0.0 {
        (-c, -s)
    } else {
        (c, s)
    }
}

fn fresnel_series(u: f64) -> (f64, f64) {
    // C: sum (-1)^n (pi/2)^{2n} u^{4n+1} / ((2n)! (4n+1))
    // S: sum (-1)^n (pi/2)^{2n+1} u^{4n+3} / ((2n+1)! (4n+3))
    let x = FRAC_PI_2 * u * u;
    let mut c = 0.0;
    let mut s = 0.0;
    // Running factor (-1)^n x^{2n} / (2n)! times u, advanced two factorial
    // steps per iteration.
    let mut term_c = u;
    let mut n = 0u32;
    loop {
        c += term_c / (4 * n + 1) as f64;
        let term_s = term_c * x / (2 * n + 1) as f64;
        s += term_s / (4 * n + 3) as f64;
        term_c = -term_s * x / (2 * n + 2) as f64;
        n += 1;
        if term_c.abs() < 1e-18 || n > 60 {
            break;
        }
    }
    (c, s)
}

fn fresnel_quad(u: f64) -> (f64, f64) {
    let panels = ((u * u / 1.5).ceil() as usize).clamp(2, 4000);
    let c = composite_gl(|v| (FRAC_PI_2 * v * v).cos(), 0.0, u, panels);
    let s = composite_gl(|v| (FRAC_PI_2 * v * v).sin(), 0.0, u, panels);
    (c, s)
}
