//! One-dimensional golden-section search, the line-search primitive used
//! by kernel hill-climbing and the extraction coordinate descent.

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (sqrt(5) - 1) / 2

/// Minimize `f` on `[a, b]` by golden-section search.
///
/// Deterministic; runs until the bracket is narrower than `tol` or
/// `max_iter` shrink steps have been taken. Returns the best abscissa
/// and its value.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximize `f` on `[a, b]`; see [`golden_min`].
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let (x, neg) = golden_min(|v| -f(v), a, b, tol, max_iter);
    (x, -neg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_minimum() {
        let (x, fx) = golden_min(|v| (v - 1.3) * (v - 1.3) + 2.0, -10.0, 10.0, 1e-10, 200);
        assert!((x - 1.3).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }

    #[test]
    fn maximization_wrapper() {
        let (x, fx) = golden_max(|v| -(v + 0.5) * (v + 0.5), -3.0, 3.0, 1e-10, 200);
        assert!((x + 0.5).abs() < 1e-7);
        assert!(fx.abs() < 1e-12);
    }

    #[test]
    fn reversed_bracket() {
        let (x, _) = golden_min(|v| v * v, 2.0, -2.0, 1e-10, 200);
        assert!(x.abs() < 1e-7);
    }
}
