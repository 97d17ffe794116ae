//! Bracketed bisection and the three special roots behind the sharp
//! thresholds: `z₁` (window kernel), `x*` and `s₀`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default abscissa tolerance; all brackets used here are O(1)-scaled.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Enough halvings to exhaust any finite `f64` bracket.
const SPECIAL_MAX_ITER: usize = 2200;

/// Lower end of the `s₀` bracket; `g(0⁺) = −b/c₁² < 0`.
pub const S0_LOWER: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootResult {
    pub root: f64,
    /// Value of the defining function at `root`.
    pub residual: f64,
    pub iterations: usize,
    /// Final bracket; `lo ≤ root ≤ hi` and the function changes sign on it.
    pub bracket: (f64, f64),
}

/// Bisection on `[lo, hi]` until the bracket is narrower than `tol`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Result<RootResult> {
    if !(tol > 0.0) {
        return Err(Error::Argument(format!("tolerance must be positive, got {tol}")));
    }
    bisect_until(&f, lo, hi, max_iter, |width, _| width <= tol)
}

/// Shared driver: halves `[lo, hi]` until `done(width, f(mid))` or the
/// bracket cannot be split any further in floating point.
fn bisect_until<F, D>(f: &F, lo: f64, hi: f64, max_iter: usize, done: D) -> Result<RootResult>
where
    F: Fn(f64) -> f64,
    D: Fn(f64, f64) -> bool,
{
    let (mut lo, mut hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if !(f_lo * f_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, f_lo, f_hi });
    }
    let mut iterations = 0;
    loop {
        let mid = lo + 0.5 * (hi - lo);
        let f_mid = f(mid);
        if f_mid == 0.0 || done(hi - lo, f_mid) || !(lo < mid && mid < hi) {
            return Ok(RootResult { root: mid, residual: f_mid, iterations, bracket: (lo, hi) });
        }
        if iterations >= max_iter {
            return Err(Error::Convergence { iterations, width: hi - lo });
        }
        iterations += 1;
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

/// Residual form `z cos z − 3 sin z`, pole-free on `(π, 3π/2)`.
fn z1_equation(z: f64) -> f64 {
    z * z.cos() - 3.0 * z.sin()
}

/// The unique root of `tan z = z/3` on `(π, 3π/2)`.
///
/// The reported residual is `tan z₁ − z₁/3`.
pub fn solve_z1(tol: f64) -> Result<RootResult> {
    let tan_residual = |z: f64| z.tan() - z / 3.0;
    let mut r = bisect_until(&z1_equation, PI, 1.5 * PI, SPECIAL_MAX_ITER, |_, _| false)?;
    r.residual = tan_residual(r.root);
    if r.residual.abs() > tol {
        return Err(Error::Convergence { iterations: r.iterations, width: r.bracket.1 - r.bracket.0 });
    }
    Ok(r)
}

/// Process-wide `z₁`, solved once to full precision.
pub fn z1() -> f64 {
    static Z1: OnceLock<f64> = OnceLock::new();
    *Z1.get_or_init(|| solve_z1(1e-12).expect("analytic bracket").root)
}

/// Critical value of `1/k₂`: `−N² sin z₁ / z₁³`.
pub fn window_threshold(half_width: f64) -> f64 {
    let z = z1();
    -half_width * half_width * z.sin() / (z * z * z)
}

/// `f(x) = 27c₁²x² − (b + 2x)³`.
pub fn xstar_poly(c1: f64, b: f64, x: f64) -> f64 {
    let s = b + 2.0 * x;
    27.0 * c1 * c1 * x * x - s * s * s
}

/// `g(s) = −s ln s + s − b/c₁²`.
pub fn s0_poly(c1: f64, b: f64, s: f64) -> f64 {
    -s * s.ln() + s - b / (c1 * c1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XStarArtifacts {
    /// Interior minimizer of `f`.
    pub x1: f64,
    /// Second critical point, beyond `b`.
    pub x2: f64,
    /// Unique zero of `f` on `(x₁, b)`.
    pub x_star: f64,
    pub root: RootResult,
}

fn require_split(c1: f64, b: f64) -> Result<()> {
    if !(b > 0.0) || !(c1 * c1 > b) {
        return Err(Error::Domain(format!("requires c₁² > b > 0 (distinct constant states), got c₁ = {c1}, b = {b}")));
    }
    Ok(())
}

/// Critical points of `f` and its zero `x*`. `tol` bounds `|f(x*)|`
/// relative to `max(1, b³)`.
pub fn xstar_artifacts(c1: f64, b: f64, tol: f64) -> Result<XStarArtifacts> {
    require_split(c1, b)?;
    let c1sq = c1 * c1;
    let disc = (9.0 * c1sq - 8.0 * b).sqrt();
    let x2 = (9.0 * c1sq - 4.0 * b + 3.0 * c1 * disc) / 8.0;
    // x₁x₂ = b²/4 from f'(x) ∝ 4x² − (9c₁² − 4b)x + b².
    let x1 = b * b / (4.0 * x2);
    let scale = b.powi(3).max(1.0);
    let f = |x: f64| xstar_poly(c1, b, x);
    let root = bisect_until(&f, x1, b, SPECIAL_MAX_ITER, |_, fm| fm.abs() <= tol * scale)?;
    Ok(XStarArtifacts { x1, x2, x_star: root.root, root })
}

/// Unique zero `s₀ ∈ (0, 1)` of `g`, with `|g(s₀)| ≤ tol` unless the
/// bracket is exhausted first.
pub fn solve_s0(c1: f64, b: f64, tol: f64) -> Result<RootResult> {
    require_split(c1, b)?;
    let g = |s: f64| s0_poly(c1, b, s);
    bisect_until(&g, S0_LOWER, 1.0, SPECIAL_MAX_ITER, |_, gm| gm.abs() <= tol)
}
