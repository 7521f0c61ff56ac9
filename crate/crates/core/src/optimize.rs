//! One-dimensional maximisation and root finding on scalar objectives.

use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of a unimodal `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol` (absolute). Returns `(x, f(x))`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let tol = tol.max(f64::EPSILON * (a.abs() + b.abs()).max(1.0));
    while b - a > tol {
        // ties move towards the left end so the earliest maximum wins
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Dense scan of `f` at `steps + 1` evenly spaced points followed by golden-section
/// refinement between the neighbours of the best grid point. The earliest grid
/// point wins ties.
pub fn scan_then_refine_max<F>(mut f: F, lo: f64, hi: f64, steps: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(hi > lo) || steps == 0 {
        return Err(Error::EmptyWindow { start: lo, end: hi });
    }
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, f(lo));
    let mut best_k = 0;
    for k in 1..=steps {
        let x = lo + h * k as f64;
        let y = f(x);
        if y > best.1 {
            best = (x, y);
            best_k = k;
        }
    }
    let a = lo + h * best_k.saturating_sub(1) as f64;
    let b = (lo + h * (best_k + 1) as f64).min(hi);
    let refined = golden_section_max(&mut f, a, b, h * 1e-6);
    Ok(if refined.1 > best.1 { refined } else { best })
}

/// Bisection for a root of `f` on `[lo, hi]` to relative tolerance `rel_tol` in `x`.
pub fn bisect_root<F>(mut f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= rel_tol * m.abs().max(f64::MIN_POSITIVE) {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Sub-interval of `[lo, hi]` containing the first sign change of `f` on an even grid.
pub fn first_sign_change<F>(mut f: F, lo: f64, hi: f64, steps: usize) -> Option<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    let h = (hi - lo) / steps.max(1) as f64;
    let mut prev = (lo, f(lo));
    for k in 1..=steps.max(1) {
        let x = lo + h * k as f64;
        let y = f(x);
        if prev.1 == 0.0 || prev.1.signum() != y.signum() {
            return Some((prev.0, x));
        }
        prev = (x, y);
    }
    None
}
