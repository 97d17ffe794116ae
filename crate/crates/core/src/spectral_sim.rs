//! Pseudospectral time integration on a periodic box.
//!
//! The deviation `v = u − u_base` is evolved in Fourier space. The full
//! linearization (diffusion, local reaction and the convolution, i.e. the
//! symbol `Φ` at the lattice frequencies) is treated exactly by an
//! integrating factor; only the polynomial remainder of the reaction term
//! is stepped explicitly with second-order Runge–Kutta. Convolutions are
//! products with the continuum scaled image at lattice frequencies.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::linearization::{Branch, SpectralSymbol, SymbolModel};
use crate::oracle::{self, SearchSpec};

pub const MIN_GRID_POINTS: usize = 64;
/// Largest admissible perturbation relative to the base state.
pub const MAX_RELATIVE_AMPLITUDE: f64 = 1e-3;
/// Deviation (relative to the base state) treated as blow-up.
pub const BLOW_UP_FACTOR: f64 = 1e3;
/// Squared coefficient magnitude below which a mode is set to zero.
const FLUSH_BELOW: f64 = 1e-280;

/// `e^{−Φ(p)t}`: exact amplitude factor of linear mode `p` after time `t`.
pub fn linear_mode_factor(symbol: &SpectralSymbol, p: &[f64], t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Argument(format!("time must be nonnegative, got {t}")));
    }
    Ok((-symbol.eval(p)? * t).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// The full nonlinear equation.
    #[default]
    Nonlinear,
    /// Reaction linearized around the base state.
    Linearized,
    /// Reaction and convolution removed: the heat semigroup `e^{tDΔ}`.
    DiffusionOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Lattice indices of the seeded mode, one per axis; the physical
    /// frequency is `π·mode/L`.
    pub mode: Vec<i64>,
    /// Amplitude of `cos(p_seed·x)` added to the base state.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: SymbolModel,
    pub kernel: KernelSpec,
    /// The box is `[−L, L]ⁿ`.
    pub box_half_length: f64,
    /// Power of two, at least 64.
    pub grid_points_per_axis: usize,
    pub dt: f64,
    pub t_final: f64,
    pub perturbation: Perturbation,
    #[serde(default)]
    pub dynamics: Dynamics,
    /// Stop once the seeded amplitude exceeds this multiple of its
    /// initial value.
    #[serde(default)]
    pub stop_growth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub times: Vec<f64>,
    /// `|seeded Fourier coefficient|`, normalized so that it equals the
    /// amplitude of the seeded cosine.
    pub mode_amplitudes: Vec<f64>,
    /// Root-mean-square of `u − u_base` over the box.
    pub field_l2_deviation: Vec<f64>,
    /// Slope of `ln(amplitude)` on `fit_window`; compare with `−Φ(p_seed)`.
    pub measured_rate: f64,
    pub fit_window: Option<(f64, f64)>,
    pub seed_frequency: Vec<f64>,
    pub seed_symbol: f64,
    pub blow_up: bool,
}

impl SimConfig {
    fn symbol(&self) -> SpectralSymbol {
        SpectralSymbol::new(self.model, self.kernel)
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn base_state(&self) -> f64 {
        base_state(&self.model)
    }

    pub fn seed_frequency(&self) -> Vec<f64> {
        self.perturbation.mode.iter().map(|&j| PI * j as f64 / self.box_half_length).collect()
    }

    /// Largest `|Φ(p) − D|p|²|` over the lattice: the rate of the part not
    /// handled by the heat semigroup.
    pub fn explicit_rate_bound(&self) -> f64 {
        let symbol = self.symbol();
        let lattice = Lattice::new(self.dim(), self.grid_points_per_axis, self.box_half_length);
        (0..lattice.len())
            .map(|i| {
                let p = lattice.frequency(i);
                symbol.non_diffusive_part(&p).expect("lattice matches kernel dimension").abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest stable step, `1/max|Φ − D|p|²|`.
    pub fn max_dt(&self) -> f64 {
        1.0 / self.explicit_rate_bound()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if n > 2 {
            return Err(Error::Config(format!(
                "simulation supports one- and two-dimensional kernels, {} has dim {n}",
                self.kernel.family()
            )));
        }
        let m = self.grid_points_per_axis;
        if m < MIN_GRID_POINTS || !m.is_power_of_two() {
            return Err(Error::Config(format!("grid_points_per_axis must be a power of two ≥ 64, got {m}")));
        }
        if !(self.box_half_length > 0.0 && self.box_half_length.is_finite()) {
            return Err(Error::Config("box_half_length must be positive".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if self.perturbation.mode.len() != n {
            return Err(Error::Config(format!("perturbation mode needs {n} indices")));
        }
        let band = (m / 3) as i64;
        if self.perturbation.mode.iter().any(|j| j.abs() > band) {
            return Err(Error::Config(format!("seeded mode outside the dealiased band |j| ≤ {band}")));
        }
        let base = self.base_state();
        if !(self.perturbation.amplitude.abs() <= MAX_RELATIVE_AMPLITUDE * base) {
            return Err(Error::Config(format!(
                "amplitude {} exceeds {MAX_RELATIVE_AMPLITUDE} × base state {base}",
                self.perturbation.amplitude
            )));
        }
        let max_dt = self.max_dt();
        if !(self.dt > 0.0 && self.dt <= max_dt) {
            return Err(Error::Config(format!("dt = {} violates the stability bound dt ≤ {max_dt}", self.dt)));
        }
        Ok(())
    }
}

pub fn base_state(model: &SymbolModel) -> f64 {
    match model {
        SymbolModel::P1 { model } => model.u_star(),
        SymbolModel::P2 { model, branch } => model.c(*branch),
    }
}

/// Which side of the threshold an automatically configured run targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    /// Seed the least stable mode and run until it has grown 20-fold.
    Growth,
    /// Seed the least stable mode and follow its decay for `10/Φ(p_seed)`.
    Decay,
}

/// Configuration following the default recipe: box `L = max(12/α, 6N,
/// 4π/|p*|)`, the least stable lattice mode as seed, `dt = 0.25/max|Φ −
/// D|p|²|`, amplitude `10⁻⁶ × base`.
pub fn auto_config(model: SymbolModel, kernel: KernelSpec) -> Result<SimConfig> {
    let symbol = SpectralSymbol::new(model, kernel);
    if kernel.dim() > 2 {
        return Err(Error::Config(format!("no simulation for {}-dimensional kernels", kernel.dim())));
    }
    let report = oracle::grid_min_symbol(&symbol, &SearchSpec::for_symbol(&symbol))?;
    let p_star = report.argmin_reduced.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut half_length = kernel.length_scale().max(kernel.window_half_width().unwrap_or(0.0));
    if let Some(alpha) = kernel.alpha() {
        half_length = half_length.max(12.0 / alpha);
    }
    if let Some(n) = kernel.window_half_width() {
        half_length = half_length.max(6.0 * n);
    }
    if p_star > 0.0 {
        half_length = half_length.max(4.0 * PI / p_star);
    }
    let base = base_state(&model);
    let unstable = !report.is_stable();
    let mut attempt = 0;
    loop {
        // The dealiased band must hold the minimizer and its first harmonic.
        let kmax_needed = 2.0 * p_star.max(PI / half_length);
        let mut m = MIN_GRID_POINTS;
        while PI * (m / 3) as f64 / half_length < kmax_needed {
            m *= 2;
        }
        let (mode, phi) = least_stable_mode(&symbol, m, half_length);
        if !unstable || phi < 0.0 || attempt >= 6 {
            let mut cfg = SimConfig {
                model,
                kernel,
                box_half_length: half_length,
                grid_points_per_axis: m,
                dt: 1.0,
                t_final: 1.0,
                perturbation: Perturbation { mode, amplitude: 1e-6 * base },
                dynamics: Dynamics::Nonlinear,
                stop_growth: None,
            };
            cfg.dt = 0.25 * cfg.max_dt();
            if phi < 0.0 {
                cfg.stop_growth = Some(20.0);
                cfg.t_final = 1.5 * 20f64.ln() / -phi;
            } else {
                cfg.t_final = 10.0 / phi.max(1e-12);
            }
            return Ok(cfg);
        }
        half_length *= 2.0;
        attempt += 1;
    }
}

/// Lattice mode (first quadrant, dealiased band) with the smallest `Φ`.
pub fn least_stable_mode(symbol: &SpectralSymbol, m: usize, half_length: f64) -> (Vec<i64>, f64) {
    let band = (m / 3) as i64;
    let k = |j: i64| PI * j as f64 / half_length;
    let mut best = (vec![0; symbol.kernel().dim()], f64::INFINITY);
    if symbol.kernel().dim() == 1 {
        for j in 0..=band {
            let v = symbol.eval_reduced(&[k(j)]);
            if v < best.1 {
                best = (vec![j], v);
            }
        }
    } else {
        for j1 in 0..=band {
            for j2 in 0..=band {
                let v = symbol.eval(&[k(j1), k(j2)]).expect("two-dimensional kernel");
                if v < best.1 {
                    best = (vec![j1, j2], v);
                }
            }
        }
    }
    best
}

/// Periodic lattice of `mⁿ` points on `[−L, L]ⁿ`, row-major.
struct Lattice {
    dim: usize,
    m: usize,
    half_length: f64,
}

impl Lattice {
    fn new(dim: usize, m: usize, half_length: f64) -> Self {
        Lattice { dim, m, half_length }
    }

    fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    fn signed(&self, j: usize) -> i64 {
        if j < self.m / 2 {
            j as i64
        } else {
            j as i64 - self.m as i64
        }
    }

    fn indices(&self, idx: usize) -> Vec<usize> {
        if self.dim == 1 {
            vec![idx]
        } else {
            vec![idx / self.m, idx % self.m]
        }
    }

    fn frequency(&self, idx: usize) -> Vec<f64> {
        self.indices(idx).into_iter().map(|j| PI * self.signed(j) as f64 / self.half_length).collect()
    }

    fn position(&self, idx: usize) -> Vec<f64> {
        let h = 2.0 * self.half_length / self.m as f64;
        self.indices(idx).into_iter().map(|j| -self.half_length + j as f64 * h).collect()
    }

    fn flat(&self, mode: &[i64]) -> usize {
        let wrap = |j: i64| j.rem_euclid(self.m as i64) as usize;
        if self.dim == 1 {
            wrap(mode[0])
        } else {
            wrap(mode[0]) * self.m + wrap(mode[1])
        }
    }

    fn dealiased(&self, idx: usize) -> bool {
        let band = (self.m / 3) as i64;
        self.indices(idx).into_iter().all(|j| self.signed(j).abs() <= band)
    }
}

/// Forward/inverse transforms over a row-major `mⁿ` array, `n ∈ {1, 2}`.
/// The forward transform carries the `1/mⁿ` normalization.
struct Transform {
    dim: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Transform {
    fn new(dim: usize, m: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Transform {
            dim,
            m,
            forward,
            inverse,
            scratch: vec![Complex64::default(); scratch_len],
            transposed: vec![Complex64::default(); if dim == 2 { m * m } else { 0 }],
        }
    }

    fn apply(&mut self, data: &mut [Complex64], forward: bool) {
        let fft = if forward { &self.forward } else { &self.inverse };
        // Every row (the whole array in 1D), then the columns by transposing.
        fft.process_with_scratch(data, &mut self.scratch);
        if self.dim == 2 {
            transpose(data, &mut self.transposed, self.m);
            fft.process_with_scratch(&mut self.transposed, &mut self.scratch);
            transpose(&self.transposed, data, self.m);
        }
        if forward {
            let scale = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|z| *z *= scale);
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    const TILE: usize = 16;
    for r0 in (0..m).step_by(TILE) {
        for c0 in (0..m).step_by(TILE) {
            for r in r0..(r0 + TILE).min(m) {
                for c in c0..(c0 + TILE).min(m) {
                    dst[c * m + r] = src[r * m + c];
                }
            }
        }
    }
}

/// Pointwise polynomial remainder `F(u_base + v) − (linear part)` of the
/// reaction term, given `v` and `ω = φ ∗ v`.
#[derive(Debug, Clone, Copy)]
enum Remainder {
    /// `−k(2u*v + v²)(av + bω)`.
    P1 {
        k: f64,
        a: f64,
        b: f64,
        u_star: f64,
    },
    /// `−2cvω + c'v² − v²ω`, `c' = a − c`.
    P2 {
        c: f64,
        c_other: f64,
    },
    None,
}

impl Remainder {
    fn new(model: &SymbolModel, dynamics: Dynamics) -> Self {
        if dynamics != Dynamics::Nonlinear {
            return Remainder::None;
        }
        match *model {
            SymbolModel::P1 { model } => {
                Remainder::P1 { k: model.k(), a: model.a(), b: model.b(), u_star: model.u_star() }
            }
            SymbolModel::P2 { model, branch } => {
                let c = model.c(branch);
                let c_other = match branch {
                    Branch::One => model.c2(),
                    Branch::Two => model.c1(),
                };
                Remainder::P2 { c, c_other }
            }
        }
    }

    #[inline]
    fn eval(&self, v: f64, w: f64) -> f64 {
        match *self {
            Remainder::P1 { k, a, b, u_star } => -k * (2.0 * u_star * v + v * v) * (a * v + b * w),
            Remainder::P2 { c, c_other } => -2.0 * c * v * w + c_other * v * v - v * v * w,
            Remainder::None => 0.0,
        }
    }
}

struct Stepper {
    transform: Transform,
    image: Vec<f64>,
    dealias: Vec<bool>,
    remainder: Remainder,
    v: Vec<Complex64>,
    max_abs_v: f64,
}

impl Stepper {
    /// Fourier transform of the explicit remainder for state `vh`.
    fn nonlinear(&mut self, vh: &[Complex64], out: &mut [Complex64]) {
        if let Remainder::None = self.remainder {
            out.iter_mut().for_each(|z| *z = Complex64::default());
            return;
        }
        // v and ω = φ ∗ v are real, so one inverse transform of
        // v̂·(1 + iφ̃) carries v in its real part and ω in its imaginary part.
        for (i, z) in self.v.iter_mut().enumerate() {
            *z = vh[i] * Complex64::new(1.0, self.image[i]);
        }
        self.transform.apply(&mut self.v, false);
        let mut max_abs: f64 = 0.0;
        for z in self.v.iter_mut() {
            max_abs = max_abs.max(z.re.abs());
            *z = Complex64::new(self.remainder.eval(z.re, z.im), 0.0);
        }
        self.max_abs_v = max_abs;
        self.transform.apply(&mut self.v, true);
        for (i, z) in out.iter_mut().enumerate() {
            *z = if self.dealias[i] { self.v[i] } else { Complex64::default() };
        }
    }
}

/// Integrates the configured equation and fits the seeded-mode rate.
pub fn simulate_nonlinear(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let symbol = cfg.symbol();
    let dim = cfg.dim();
    let m = cfg.grid_points_per_axis;
    let lattice = Lattice::new(dim, m, cfg.box_half_length);
    let len = lattice.len();
    let h = cfg.dt;

    let mut decay = Vec::with_capacity(len);
    let mut image = Vec::with_capacity(len);
    for i in 0..len {
        let p = lattice.frequency(i);
        let rate = match cfg.dynamics {
            Dynamics::DiffusionOnly => symbol.diffusion() * p.iter().map(|v| v * v).sum::<f64>(),
            _ => symbol.eval(&p)?,
        };
        decay.push((-rate * h).exp());
        image.push(cfg.kernel.scaled_fourier_image(&p)?);
    }
    let dealias: Vec<bool> = (0..len).map(|i| lattice.dealiased(i)).collect();

    let seed_frequency = cfg.seed_frequency();
    let seed_symbol = symbol.eval(&seed_frequency)?;
    let seed_idx = lattice.flat(&cfg.perturbation.mode);
    let seed_is_constant = cfg.perturbation.mode.iter().all(|&j| j == 0);
    let amp_factor = if seed_is_constant { 1.0 } else { 2.0 };

    // Initial deviation A·cos(p_seed·x), transformed.
    let mut vh: Vec<Complex64> = (0..len)
        .map(|i| {
            let x = lattice.position(i);
            let phase: f64 = x.iter().zip(&seed_frequency).map(|(a, b)| a * b).sum();
            Complex64::new(cfg.perturbation.amplitude * phase.cos(), 0.0)
        })
        .collect();
    let mut stepper = Stepper {
        transform: Transform::new(dim, m),
        image,
        dealias,
        remainder: Remainder::new(&cfg.model, cfg.dynamics),
        v: vec![Complex64::default(); len],
        max_abs_v: 0.0,
    };
    stepper.transform.apply(&mut vh, true);

    let observe = |vh: &[Complex64]| -> (f64, f64) {
        let l2 = vh.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        (amp_factor * vh[seed_idx].norm(), l2)
    };
    let (a0, l0) = observe(&vh);
    let mut times = vec![0.0];
    let mut amplitudes = vec![a0];
    let mut l2 = vec![l0];

    let base = cfg.base_state();
    let steps = (cfg.t_final / h).ceil() as usize;
    let mut n1 = vec![Complex64::default(); len];
    let mut n2 = vec![Complex64::default(); len];
    let mut stage = vec![Complex64::default(); len];
    let mut blow_up = false;
    for step in 1..=steps {
        stepper.nonlinear(&vh, &mut n1);
        if stepper.max_abs_v > BLOW_UP_FACTOR * base {
            blow_up = true;
            break;
        }
        for i in 0..len {
            stage[i] = decay[i] * (vh[i] + h * n1[i]);
        }
        stepper.nonlinear(&stage, &mut n2);
        for i in 0..len {
            vh[i] = decay[i] * vh[i] + 0.5 * h * (decay[i] * n1[i] + n2[i]);
            // Strongly damped modes would otherwise drift into subnormals.
            if vh[i].norm_sqr() < FLUSH_BELOW {
                vh[i] = Complex64::default();
            }
        }
        let (a, l) = observe(&vh);
        times.push(step as f64 * h);
        amplitudes.push(a);
        l2.push(l);
        if !a.is_finite() {
            blow_up = true;
            break;
        }
        if let Some(stop) = cfg.stop_growth {
            if a >= stop * a0 {
                break;
            }
        }
    }

    let mut result = SimResult {
        times,
        mode_amplitudes: amplitudes,
        field_l2_deviation: l2,
        measured_rate: 0.0,
        fit_window: None,
        seed_frequency,
        seed_symbol,
        blow_up,
    };
    if let Some(window) = auto_fit_window(&result) {
        result.measured_rate = measure_growth_rate(&result, window)?;
        result.fit_window = Some(window);
    }
    Ok(result)
}

/// Growth: from 2× to 10× the initial amplitude. Decay: from 1/2 to 1/10.
/// Falls back to the last 90% of the run when neither is reached.
pub fn auto_fit_window(result: &SimResult) -> Option<(f64, f64)> {
    let a0 = *result.mode_amplitudes.first()?;
    if !(a0 > 0.0) || result.times.len() < 3 {
        return None;
    }
    let first =
        |pred: &dyn Fn(f64) -> bool| result.mode_amplitudes.iter().position(|&a| pred(a)).map(|i| result.times[i]);
    if let (Some(lo), Some(hi)) = (first(&|a| a >= 2.0 * a0), first(&|a| a >= 10.0 * a0)) {
        return Some((lo, hi));
    }
    if let (Some(lo), Some(hi)) = (first(&|a| a <= 0.5 * a0), first(&|a| a <= 0.1 * a0)) {
        return Some((lo, hi));
    }
    let t_end = *result.times.last()?;
    Some((0.1 * t_end, t_end))
}

/// Least-squares slope of `ln(amplitude)` against `t` on the window.
pub fn measure_growth_rate(result: &SimResult, fit_window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = fit_window;
    let mut points = Vec::new();
    for (&t, &a) in result.times.iter().zip(&result.mode_amplitudes) {
        if t >= lo && t <= hi {
            if !(a > 0.0) {
                return Err(Error::Fit(format!("nonpositive amplitude {a} at t = {t}")));
            }
            points.push((t, a.ln()));
        }
    }
    if points.len() < 2 {
        return Err(Error::Fit(format!("fewer than two samples in [{lo}, {hi}]")));
    }
    let n = points.len() as f64;
    let t_mean = points.iter().map(|p| p.0).sum::<f64>() / n;
    let y_mean = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in &points {
        sxy += (t - t_mean) * (y - y_mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate time window".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearization::ModelP2;

    fn exp1d_model(d: f64) -> SymbolModel {
        SymbolModel::P2 { model: ModelP2::new(d, 2.5, 1.0).unwrap(), branch: Branch::One }
    }

    fn series(rate: f64) -> SimResult {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        SimResult {
            mode_amplitudes: times.iter().map(|t| (rate * t).exp()).collect(),
            field_l2_deviation: vec![0.0; times.len()],
            times,
            measured_rate: 0.0,
            fit_window: None,
            seed_frequency: vec![0.0],
            seed_symbol: 0.0,
            blow_up: false,
        }
    }

    #[test]
    fn linear_mode_factor_examples() {
        let s = SpectralSymbol::p2(ModelP2::new(1.0, 2.5, 1.0).unwrap(), Branch::Two, KernelSpec::exp1d(1.0).unwrap());
        assert_eq!(linear_mode_factor(&s, &[0.3], 0.0).unwrap(), 1.0);
        assert!((linear_mode_factor(&s, &[0.0], 1.0).unwrap() - 0.75f64.exp()).abs() < 1e-15);
        assert!((linear_mode_factor(&s, &[0.0], 1.0).unwrap() - 2.117).abs() < 1e-3);
        assert!(linear_mode_factor(&s, &[0.0], -1.0).is_err());
    }

    #[test]
    fn marginal_mode_keeps_its_amplitude() {
        // Degenerate state: Φ(0) = 0.
        let s = SpectralSymbol::p2(ModelP2::new(1.0, 2.0, 1.0).unwrap(), Branch::One, KernelSpec::exp1d(1.0).unwrap());
        for t in [0.5, 10.0, 1e3] {
            assert_eq!(linear_mode_factor(&s, &[0.0], t).unwrap(), 1.0);
        }
    }

    #[test]
    fn growth_rate_fits() {
        let r = series(0.3);
        assert!((measure_growth_rate(&r, (0.0, 4.0)).unwrap() - 0.3).abs() < 1e-10);
        let flat = series(0.0);
        assert!(measure_growth_rate(&flat, (0.0, 4.0)).unwrap().abs() < 1e-14);
        assert!(matches!(measure_growth_rate(&r, (10.0, 11.0)), Err(Error::Fit(_))));
        let mut bad = series(0.1);
        bad.mode_amplitudes[3] = 0.0;
        assert!(matches!(measure_growth_rate(&bad, (0.0, 1.0)), Err(Error::Fit(_))));
    }

    #[test]
    fn zero_perturbation_stays_constant() {
        let mut cfg = auto_config(exp1d_model(0.05), KernelSpec::exp1d(1.0).unwrap()).unwrap();
        cfg.perturbation.amplitude = 0.0;
        cfg.t_final = 5.0;
        let r = simulate_nonlinear(&cfg).unwrap();
        assert!(r.field_l2_deviation.iter().all(|&v| v <= 1e-12 * cfg.base_state()));
    }

    #[test]
    fn oversized_step_is_rejected() {
        let mut cfg = auto_config(exp1d_model(0.05), KernelSpec::exp1d(1.0).unwrap()).unwrap();
        cfg.dt = 2.0 * cfg.max_dt();
        assert!(matches!(simulate_nonlinear(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = auto_config(exp1d_model(0.05), KernelSpec::exp1d(1.0).unwrap()).unwrap();
        let mut c = base.clone();
        c.grid_points_per_axis = 96;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.perturbation.amplitude = 0.01 * c.base_state();
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.kernel = KernelSpec::exp3d(1.0).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn lattice_wraps_negative_modes() {
        let l = Lattice::new(2, 64, 3.0);
        let idx = l.flat(&[-2, 5]);
        assert_eq!(l.frequency(idx), vec![-2.0 * PI / 3.0, 5.0 * PI / 3.0]);
        assert!(l.dealiased(idx));
        assert!(!l.dealiased(l.flat(&[0, 30])));
    }

    #[test]
    fn unstable_run_grows_at_symbol_rate() {
        let cfg = auto_config(exp1d_model(0.05), KernelSpec::exp1d(1.0).unwrap()).unwrap();
        let r = simulate_nonlinear(&cfg).unwrap();
        assert!(r.seed_symbol < 0.0);
        let rel = (r.measured_rate + r.seed_symbol).abs() / r.seed_symbol.abs();
        assert!(rel < 0.05, "rate {} vs {}", r.measured_rate, -r.seed_symbol);
    }

    #[test]
    fn heat_semigroup_is_exact() {
        let mut cfg = auto_config(exp1d_model(0.3), KernelSpec::exp1d(1.0).unwrap()).unwrap();
        cfg.dynamics = Dynamics::DiffusionOnly;
        cfg.perturbation.mode = vec![3];
        cfg.t_final = 4.0;
        let r = simulate_nonlinear(&cfg).unwrap();
        let k = PI * 3.0 / cfg.box_half_length;
        let a0 = cfg.perturbation.amplitude;
        for (t, a) in r.times.iter().zip(&r.mode_amplitudes) {
            let exact = a0 * (-0.3 * k * k * t).exp();
            assert!((a - exact).abs() <= 1e-10 * a0, "t = {t}: {a} vs {exact}");
        }
    }

    #[test]
    fn linearized_run_matches_symbol_rate() {
        let kernel = KernelSpec::exp_product2d(1.0).unwrap();
        let model = SymbolModel::P2 { model: ModelP2::new(0.05, 2.5, 1.0).unwrap(), branch: Branch::One };
        let mut cfg = auto_config(model, kernel).unwrap();
        cfg.dynamics = Dynamics::Linearized;
        cfg.perturbation.mode = vec![2, 1];
        cfg.stop_growth = None;
        cfg.t_final = 3.0;
        let r = simulate_nonlinear(&cfg).unwrap();
        let phi = SpectralSymbol::new(model, kernel).eval(&cfg.seed_frequency()).unwrap();
        let rate = measure_growth_rate(&r, (0.0, 3.0)).unwrap();
        assert!((rate + phi).abs() < 1e-6, "{rate} vs {}", -phi);
    }

    #[test]
    fn stable_run_decays_monotonically() {
        let cfg = auto_config(exp1d_model(0.5), KernelSpec::exp1d(1.0).unwrap()).unwrap();
        let r = simulate_nonlinear(&cfg).unwrap();
        assert!(r.seed_symbol > 0.0 && !r.blow_up);
        let t0 = 0.1 * cfg.t_final;
        let tail: Vec<f64> =
            r.times.iter().zip(&r.field_l2_deviation).filter(|(t, _)| **t >= t0).map(|(_, v)| *v).collect();
        assert!(tail.windows(2).all(|w| w[1] <= w[0]));
        assert!((r.measured_rate + r.seed_symbol).abs() < 0.05 * r.seed_symbol);
    }
}
