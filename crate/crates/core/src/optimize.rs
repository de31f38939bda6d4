//! One-dimensional maximization used by the working-point search.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
///
/// Stops once the bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    // Each pass shrinks by 0.618; 200 passes is far beyond f64 resolution.
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Evaluates `f` at `n` interior points of `(a, b)` and brackets the best one
/// by its neighbours. Returns `(lo, hi)` containing the grid argmax.
pub fn grid_bracket_max(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (f64, f64) {
    assert!(n >= 3 && b > a);
    let h = (b - a) / (n + 1) as f64;
    let mut best = (1, f64::NEG_INFINITY);
    for i in 1..=n {
        let y = f(a + i as f64 * h);
        if y > best.1 {
            best = (i, y);
        }
    }
    let i = best.0 as f64;
    (a + (i - 1.0) * h, a + (i + 1.0) * h)
}
