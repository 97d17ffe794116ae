//! Brute-force verification of the analytic verdicts.
//!
//! The linearized operators are Fourier multipliers, so `inf σ(L)` is the
//! infimum of the symbol. The oracle finds it by a coarse scan of the
//! reduced frequency domain followed by golden-section refinement of the
//! best local minima, and certifies instability with an explicit trial
//! function supported in the negativity region.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Reduction;
use crate::linearization::SpectralSymbol;

/// Relative tolerance on `min Φ` separating instability from refinement
/// noise.
pub const NEGATIVITY_TOL: f64 = 1e-9;
pub const MIN_COARSE_POINTS: usize = 512;
const REFINE_CANDIDATES: usize = 5;
const WITNESS_POINTS: usize = 4096;
const BOUNDARY_DIRECTIONS: usize = 64;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSpec {
    pub reduction: Reduction,
    /// Search box is `[0, radius]` in each reduced coordinate.
    pub radius: f64,
    /// Grid intervals per axis.
    pub coarse_points: usize,
    /// Golden-section iterations per refined candidate.
    pub refine_iterations: usize,
}

impl SearchSpec {
    /// Natural reduction of the kernel and the coercivity radius of the
    /// symbol, beyond which `Φ > 0`.
    pub fn for_symbol(symbol: &SpectralSymbol) -> Self {
        let reduction = symbol.kernel().reduction();
        let coarse_points = if reduction.dims() == 1 { 4096 } else { MIN_COARSE_POINTS };
        SearchSpec { reduction, radius: symbol.coercivity_radius(), coarse_points, refine_iterations: 60 }
    }

    pub fn with_coarse_points(mut self, points: usize) -> Self {
        self.coarse_points = points;
        self
    }

    fn validate(&self, symbol: &SpectralSymbol) -> Result<()> {
        let kernel = symbol.kernel();
        if self.reduction != kernel.reduction() {
            return Err(Error::Argument(format!(
                "reduction {:?} does not apply to {} (expected {:?})",
                self.reduction,
                kernel.family(),
                kernel.reduction()
            )));
        }
        if self.coarse_points < MIN_COARSE_POINTS {
            return Err(Error::Config(format!(
                "coarse_points must be at least {MIN_COARSE_POINTS}, got {}",
                self.coarse_points
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config(format!("radius must be positive, got {}", self.radius)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleVerdict {
    Stable,
    Unstable,
}

/// Connected part of `{Φ < 0}` around the minimizer, in reduced
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegativityRegion {
    pub center: Vec<f64>,
    /// Bounding box along the reduced axes through the center.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Smallest distance from the center to `{Φ = 0}` over the probed
    /// directions.
    pub inscribed_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub min_value: f64,
    /// Minimizing frequency in the kernel's full dimension.
    pub argmin: Vec<f64>,
    pub argmin_reduced: Vec<f64>,
    /// Coarse grid spacing.
    pub grid_step: f64,
    pub negativity_region: Option<NegativityRegion>,
    pub witness_value: Option<f64>,
    pub verdict: OracleVerdict,
    /// `|min Φ|` within the tolerance band.
    pub marginal: bool,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == OracleVerdict::Stable
    }
}

/// Golden-section minimization on `[lo, hi]`; returns the best point seen.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, iterations: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iterations {
        if fc <= fd {
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
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

struct Grid {
    n: usize,
    step: f64,
    dims: usize,
    values: Vec<f64>,
}

impl Grid {
    fn scan(symbol: &SpectralSymbol, spec: &SearchSpec) -> Self {
        let n = spec.coarse_points + 1;
        let step = spec.radius / spec.coarse_points as f64;
        let dims = spec.reduction.dims();
        let values = if dims == 1 {
            (0..n).into_par_iter().map(|i| symbol.eval_reduced(&[i as f64 * step])).collect()
        } else {
            (0..n * n)
                .into_par_iter()
                .map(|idx| symbol.eval_reduced(&[(idx / n) as f64 * step, (idx % n) as f64 * step]))
                .collect()
        };
        Grid { n, step, dims, values }
    }

    fn coords(&self, idx: usize) -> Vec<f64> {
        if self.dims == 1 {
            vec![idx as f64 * self.step]
        } else {
            vec![(idx / self.n) as f64 * self.step, (idx % self.n) as f64 * self.step]
        }
    }

    fn is_local_min(&self, idx: usize) -> bool {
        let v = self.values[idx];
        let n = self.n as isize;
        if self.dims == 1 {
            let i = idx as isize;
            [i - 1, i + 1].iter().filter(|&&j| j >= 0 && j < n).all(|&j| v <= self.values[j as usize])
        } else {
            let (i, j) = ((idx / self.n) as isize, (idx % self.n) as isize);
            (-1..=1).all(|di| {
                (-1..=1).all(|dj| {
                    let (a, b) = (i + di, j + dj);
                    a < 0 || b < 0 || a >= n || b >= n || v <= self.values[(a * n + b) as usize]
                })
            })
        }
    }

    /// Up to `count` grid local minima, best first.
    fn candidates(&self, count: usize) -> Vec<usize> {
        let mut mins: Vec<usize> = (0..self.values.len()).filter(|&i| self.is_local_min(i)).collect();
        mins.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]).then(a.cmp(&b)));
        mins.truncate(count);
        mins
    }
}

fn refine(symbol: &SpectralSymbol, start: &[f64], step: f64, radius: f64, iterations: usize) -> (Vec<f64>, f64) {
    let window = |c: f64| ((c - step).max(0.0), (c + step).min(radius));
    if start.len() == 1 {
        let (lo, hi) = window(start[0]);
        let (u, v) = golden_section(|u| symbol.eval_reduced(&[u]), lo, hi, iterations);
        (vec![u], v)
    } else {
        let (lo0, hi0) = window(start[0]);
        let (lo1, hi1) = window(start[1]);
        let inner = |u0: f64| golden_section(|u1| symbol.eval_reduced(&[u0, u1]), lo1, hi1, iterations);
        let (u0, v) = golden_section(|u0| inner(u0).1, lo0, hi0, iterations);
        (vec![u0, inner(u0).0], v)
    }
}

/// Coarse scan plus golden-section refinement of the best local minima.
pub fn grid_min_symbol(symbol: &SpectralSymbol, spec: &SearchSpec) -> Result<OracleReport> {
    spec.validate(symbol)?;
    let grid = Grid::scan(symbol, spec);
    let mut best_idx = 0;
    for (i, v) in grid.values.iter().enumerate() {
        if *v < grid.values[best_idx] {
            best_idx = i;
        }
    }
    let mut best = (grid.coords(best_idx), grid.values[best_idx]);
    let refined: Vec<(Vec<f64>, f64)> = grid
        .candidates(REFINE_CANDIDATES)
        .into_par_iter()
        .map(|idx| refine(symbol, &grid.coords(idx), grid.step, spec.radius, spec.refine_iterations))
        .collect();
    for cand in refined {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    let (argmin_reduced, min_value) = best;
    let tolerance = NEGATIVITY_TOL * symbol.value_scale();
    let unstable = min_value < -tolerance;
    let mut report = OracleReport {
        min_value,
        argmin: symbol.kernel().embed(&argmin_reduced),
        argmin_reduced,
        grid_step: grid.step,
        negativity_region: None,
        witness_value: None,
        verdict: if unstable { OracleVerdict::Unstable } else { OracleVerdict::Stable },
        marginal: min_value.abs() <= tolerance,
        tolerance,
    };
    if unstable {
        report.negativity_region = Some(negativity_region(symbol, &report.argmin_reduced, grid.step, spec.radius));
        report.witness_value = Some(instability_witness(symbol, &report, 0.5)?);
    }
    Ok(report)
}

/// `inf σ(L) = inf_p Φ(p)`.
pub fn spectrum_infimum(symbol: &SpectralSymbol, spec: &SearchSpec) -> Result<f64> {
    Ok(grid_min_symbol(symbol, spec)?.min_value)
}

/// Distance from `center` along `dir` to the first zero of `Φ`.
fn exit_distance(symbol: &SpectralSymbol, center: &[f64], dir: &[f64], step: f64, limit: f64) -> f64 {
    let at = |t: f64| -> f64 {
        let u: Vec<f64> = center.iter().zip(dir).map(|(c, d)| c + t * d).collect();
        symbol.eval_reduced(&u)
    };
    let march = 0.25 * step;
    let mut t = 0.0;
    while t < limit {
        let next = t + march;
        if at(next) >= 0.0 {
            let (mut lo, mut hi) = (t, next);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if at(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return lo;
        }
        t = next;
    }
    limit
}

fn negativity_region(symbol: &SpectralSymbol, center: &[f64], step: f64, radius: f64) -> NegativityRegion {
    // Beyond the coercivity radius the symbol is positive, so every ray
    // exits within 2R.
    let limit = 2.0 * radius + step;
    let dims = center.len();
    let axis = |k: usize, sign: f64| {
        let mut d = vec![0.0; dims];
        d[k] = sign;
        exit_distance(symbol, center, &d, step, limit)
    };
    let lower: Vec<f64> = (0..dims).map(|k| center[k] - axis(k, -1.0)).collect();
    let upper: Vec<f64> = (0..dims).map(|k| center[k] + axis(k, 1.0)).collect();
    let inscribed_radius = if dims == 1 {
        (center[0] - lower[0]).min(upper[0] - center[0])
    } else {
        (0..BOUNDARY_DIRECTIONS)
            .into_par_iter()
            .map(|j| {
                let th = 2.0 * PI * j as f64 / BOUNDARY_DIRECTIONS as f64;
                exit_distance(symbol, center, &[th.cos(), th.sin()], step, limit)
            })
            .reduce(|| f64::INFINITY, f64::min)
    };
    NegativityRegion { center: center.to_vec(), lower, upper, inscribed_radius }
}

/// `∫ Φ(p)|ψ̂(p)|² dp` for `ψ̂` the indicator of a ball around the
/// minimizer, of radius `ball_fraction` times the inscribed radius of the
/// negativity region. Midpoint rule with about 4096 cells.
pub fn instability_witness(symbol: &SpectralSymbol, report: &OracleReport, ball_fraction: f64) -> Result<f64> {
    let region = report
        .negativity_region
        .as_ref()
        .ok_or_else(|| Error::Precondition("no negativity region: the symbol is nonnegative".into()))?;
    if !(ball_fraction > 0.0 && ball_fraction <= 1.0) {
        return Err(Error::Argument(format!("ball_fraction must lie in (0, 1], got {ball_fraction}")));
    }
    let n = symbol.kernel().dim();
    let r = ball_fraction * region.inscribed_radius;
    let center = symbol.kernel().embed(&region.center);
    let mut m = (WITNESS_POINTS as f64).powf(1.0 / n as f64).ceil() as usize;
    m = m.max(3) | 1;
    let h = 2.0 * r / m as f64;
    let cell = h.powi(n as i32);
    let total = m.pow(n as u32);
    let mut sum = 0.0;
    let mut p = vec![0.0; n];
    for idx in 0..total {
        let mut rest = idx;
        let mut norm2 = 0.0;
        for (k, pk) in p.iter_mut().enumerate() {
            let offset = -r + (rest % m) as f64 * h + 0.5 * h;
            rest /= m;
            norm2 += offset * offset;
            *pk = center[k] + offset;
        }
        if norm2 <= r * r {
            sum += symbol.eval(&p)? * cell;
        }
    }
    Ok(sum)
}

/// Summary of the angular structure of a two-dimensional symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalCheck {
    pub circles: usize,
    /// Largest `Φ(diagonal) − min_θ Φ` over the circles.
    pub max_excess: f64,
    /// Fraction of circles whose sampled minimum lies on `p₁² = p₂²`.
    pub diagonal_argmin_fraction: f64,
    /// Largest `max_θ Φ − min_θ Φ` over the circles.
    pub max_spread: f64,
}

/// Checks on `circles` radii in `(0, r_max]` (plus the origin) that the
/// minimum of `Φ` over each circle sits on the diagonals. `angles` is
/// rounded up to a multiple of 8 so that the diagonals are sampled.
pub fn diagonal_reduction_check(
    symbol: &SpectralSymbol,
    r_max: f64,
    circles: usize,
    angles: usize,
) -> Result<DiagonalCheck> {
    if symbol.kernel().dim() != 2 {
        return Err(Error::Argument(format!(
            "diagonal check needs a two-dimensional kernel, got dim = {}",
            symbol.kernel().dim()
        )));
    }
    let angles = angles.max(8).div_ceil(8) * 8;
    let mut max_excess: f64 = 0.0;
    let mut max_spread: f64 = 0.0;
    let mut on_diagonal = 0;
    for i in 0..=circles {
        let r = r_max * i as f64 / circles.max(1) as f64;
        let mut lo = (f64::INFINITY, 0);
        let mut hi = f64::NEG_INFINITY;
        for j in 0..angles {
            let th = 2.0 * PI * j as f64 / angles as f64;
            let v = symbol.eval(&[r * th.cos(), r * th.sin()])?;
            if v < lo.0 {
                lo = (v, j);
            }
            hi = hi.max(v);
        }
        let diag = symbol.eval(&[r * (PI / 4.0).cos(), r * (PI / 4.0).sin()])?;
        max_excess = max_excess.max(diag - lo.0);
        max_spread = max_spread.max(hi - lo.0);
        // Diagonal angles are odd multiples of angles/8.
        let eighth = angles / 8;
        if lo.1 % eighth == 0 && (lo.1 / eighth) % 2 == 1 || hi - lo.0 <= 1e-14 * diag.abs().max(1.0) {
            on_diagonal += 1;
        }
    }
    Ok(DiagonalCheck {
        circles: circles + 1,
        max_excess,
        diagonal_argmin_fraction: on_diagonal as f64 / (circles + 1) as f64,
        max_spread,
    })
}
