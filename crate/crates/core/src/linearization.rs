//! Constant stationary states, linearization constants and the spectral
//! symbol of the linearized operator.
//!
//! The linearized operators are Fourier multipliers, so their spectrum is
//! the closure of the range of the symbol `Φ`. Problem 1 linearizes to
//! `Φ(p) = |p|² + k₁ + k₂ φ̃(p)`, problem 2 (branch `k`) to
//! `Φ_k(p) = d|p|² + c_k² φ̃(p) − b`, where `φ̃` is the scaled image.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// Relative tolerance below which `a²/4 − b` counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-12;

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// The constant state `1/(a+b)` of problem 1.
pub fn stationary_p1(a: f64, b: f64) -> Result<f64> {
    if !(a + b > 0.0) || !(a + b).is_finite() {
        return Err(Error::Domain(format!("a + b must be positive, got a = {a}, b = {b}")));
    }
    Ok(1.0 / (a + b))
}

/// `(k₁, k₂) = (ka/(a+b)², kb/(a+b)²)`.
pub fn linearize_p1(k: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    require_positive("k", k)?;
    require_positive("b", b)?;
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("a must be nonnegative, got {a}")));
    }
    let s2 = (a + b) * (a + b);
    Ok((k * a / s2, k * b / s2))
}

/// Roots `c₁ ≥ c₂` of `c² − ac + b = 0` and the degeneracy flag.
pub fn stationary_p2(a: f64, b: f64, tol: f64) -> Result<(f64, f64, bool)> {
    let m = ModelP2::with_tolerance(1.0, a, b, tol)?;
    Ok((m.c1, m.c2, m.degenerate))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "P1Repr", into = "P1Repr")]
pub struct ModelP1 {
    k: f64,
    a: f64,
    b: f64,
    k1: f64,
    k2: f64,
    u_star: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct P1Repr {
    k: f64,
    a: f64,
    b: f64,
    #[serde(default)]
    k1: Option<f64>,
    #[serde(default)]
    k2: Option<f64>,
    #[serde(default)]
    u_star: Option<f64>,
}

impl TryFrom<P1Repr> for ModelP1 {
    type Error = Error;
    fn try_from(r: P1Repr) -> Result<Self> {
        ModelP1::new(r.k, r.a, r.b)
    }
}

impl From<ModelP1> for P1Repr {
    fn from(m: ModelP1) -> Self {
        P1Repr { k: m.k, a: m.a, b: m.b, k1: Some(m.k1), k2: Some(m.k2), u_star: Some(m.u_star) }
    }
}

impl ModelP1 {
    pub fn new(k: f64, a: f64, b: f64) -> Result<Self> {
        let (k1, k2) = linearize_p1(k, a, b)?;
        let u_star = stationary_p1(a, b)?;
        Ok(ModelP1 { k, a, b, k1, k2, u_star })
    }

    /// Model with `a = 0`, `b = 1` and the requested `k₂` (then `k = k₂`).
    pub fn with_k2(k2: f64) -> Result<Self> {
        Self::new(k2, 0.0, 1.0)
    }

    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn k1(&self) -> f64 {
        self.k1
    }
    pub fn k2(&self) -> f64 {
        self.k2
    }
    pub fn u_star(&self) -> f64 {
        self.u_star
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "P2Repr", into = "P2Repr")]
pub struct ModelP2 {
    d: f64,
    a: f64,
    b: f64,
    c1: f64,
    c2: f64,
    /// `√(a²/4 − b)`, zero in the degenerate case.
    sqrt_disc: f64,
    degenerate: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct P2Repr {
    d: f64,
    a: f64,
    b: f64,
    #[serde(default)]
    c1: Option<f64>,
    #[serde(default)]
    c2: Option<f64>,
    #[serde(default)]
    degenerate: Option<bool>,
}

impl TryFrom<P2Repr> for ModelP2 {
    type Error = Error;
    fn try_from(r: P2Repr) -> Result<Self> {
        ModelP2::new(r.d, r.a, r.b)
    }
}

impl From<ModelP2> for P2Repr {
    fn from(m: ModelP2) -> Self {
        P2Repr { d: m.d, a: m.a, b: m.b, c1: Some(m.c1), c2: Some(m.c2), degenerate: Some(m.degenerate) }
    }
}

/// Constant state of problem 2 the linearization is taken around.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Larger root `c₁`.
    #[serde(rename = "1")]
    One,
    /// Smaller root `c₂`.
    #[serde(rename = "2")]
    Two,
}

impl Branch {
    pub fn index(self) -> u8 {
        match self {
            Branch::One => 1,
            Branch::Two => 2,
        }
    }

    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Branch::One),
            2 => Ok(Branch::Two),
            _ => Err(Error::Argument(format!("branch must be 1 or 2, got {k}"))),
        }
    }
}

impl ModelP2 {
    pub fn new(d: f64, a: f64, b: f64) -> Result<Self> {
        Self::with_tolerance(d, a, b, DEGENERACY_TOL)
    }

    pub fn with_tolerance(d: f64, a: f64, b: f64, tol: f64) -> Result<Self> {
        require_positive("d", d)?;
        require_positive("a", a)?;
        require_positive("b", b)?;
        let quarter = 0.25 * a * a;
        let disc = quarter - b;
        let scale = quarter.max(1.0);
        if disc < -tol * scale {
            return Err(Error::Domain(format!("no real constant states: a²/4 = {quarter} < b = {b}")));
        }
        if disc <= tol * scale {
            let c = 0.5 * a;
            return Ok(ModelP2 { d, a, b, c1: c, c2: c, sqrt_disc: 0.0, degenerate: true });
        }
        let sqrt_disc = disc.sqrt();
        let c1 = 0.5 * a + sqrt_disc;
        // c₁c₂ = b avoids the cancellation in a/2 − √(a²/4 − b).
        let c2 = b / c1;
        Ok(ModelP2 { d, a, b, c1, c2, sqrt_disc, degenerate: false })
    }

    /// Same `(a, b)` with a different diffusion coefficient.
    pub fn with_d(&self, d: f64) -> Result<Self> {
        Self::new(d, self.a, self.b)
    }

    pub fn d(&self) -> f64 {
        self.d
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn b(&self) -> f64 {
        self.b
    }
    pub fn c1(&self) -> f64 {
        self.c1
    }
    pub fn c2(&self) -> f64 {
        self.c2
    }
    pub fn degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn c(&self, branch: Branch) -> f64 {
        match branch {
            Branch::One => self.c1,
            Branch::Two => self.c2,
        }
    }

    /// `c_k² − b`, evaluated as `±2c_k√(a²/4 − b)` so the sign is exact.
    pub fn c_sq_minus_b(&self, branch: Branch) -> f64 {
        match branch {
            Branch::One => 2.0 * self.c1 * self.sqrt_disc,
            Branch::Two => -2.0 * self.c2 * self.sqrt_disc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum SymbolModel {
    P1 { model: ModelP1 },
    P2 { model: ModelP2, branch: Branch },
}

/// `Φ(p) = diffusion·|p|² + coupling·(φ̃(p) − 1) + Φ(0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSymbol {
    model: SymbolModel,
    kernel: KernelSpec,
    diffusion: f64,
    coupling: f64,
    at_origin: f64,
}

impl SpectralSymbol {
    pub fn new(model: SymbolModel, kernel: KernelSpec) -> Self {
        let (diffusion, coupling, at_origin) = match model {
            SymbolModel::P1 { model } => (1.0, model.k2, model.k1 + model.k2),
            SymbolModel::P2 { model, branch } => {
                let c = model.c(branch);
                (model.d, c * c, model.c_sq_minus_b(branch))
            }
        };
        SpectralSymbol { model, kernel, diffusion, coupling, at_origin }
    }

    pub fn p1(model: ModelP1, kernel: KernelSpec) -> Self {
        Self::new(SymbolModel::P1 { model }, kernel)
    }

    pub fn p2(model: ModelP2, branch: Branch, kernel: KernelSpec) -> Self {
        Self::new(SymbolModel::P2 { model, branch }, kernel)
    }

    pub fn model(&self) -> &SymbolModel {
        &self.model
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Coefficient of `|p|²`.
    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    /// Coefficient of the scaled image (`k₂` or `c_k²`).
    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn at_origin(&self) -> f64 {
        self.at_origin
    }

    /// Scale used to turn absolute tolerances on symbol values into
    /// relative ones.
    pub fn value_scale(&self) -> f64 {
        match self.model {
            SymbolModel::P1 { model } => model.k2.max(1.0),
            SymbolModel::P2 { model, .. } => model.b.max(1.0),
        }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let image = self.kernel.scaled_fourier_image(p)?;
        let p2: f64 = p.iter().map(|v| v * v).sum();
        Ok(self.combine(p2, image))
    }

    /// Symbol at the frequency represented by reduced coordinates.
    pub fn eval_reduced(&self, u: &[f64]) -> f64 {
        let p2: f64 = u.iter().map(|v| v * v).sum();
        self.combine(p2, self.kernel.image_reduced(u))
    }

    /// `Φ − diffusion·|p|²`, the part of the symbol not coming from Δ.
    pub fn non_diffusive_part(&self, p: &[f64]) -> Result<f64> {
        Ok(self.coupling * (self.kernel.scaled_fourier_image(p)? - 1.0) + self.at_origin)
    }

    #[inline]
    fn combine(&self, p2: f64, image: f64) -> f64 {
        self.diffusion * p2 + self.coupling * (image - 1.0) + self.at_origin
    }

    /// Radius beyond which `Φ > 0` follows from `|φ̃| ≤ 1` alone.
    pub fn coercivity_radius(&self) -> f64 {
        match self.model {
            SymbolModel::P1 { model } => model.k2.sqrt() + 1.0,
            SymbolModel::P2 { model, .. } => ((model.b + self.coupling) / model.d).sqrt() + 1.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn stationary_p1_examples() {
        assert_eq!(stationary_p1(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(stationary_p1(1.0, 1.0).unwrap(), 0.5);
        assert!(matches!(stationary_p1(0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn linearize_p1_examples() {
        assert_eq!(linearize_p1(1.0, 0.0, 1.0).unwrap(), (0.0, 1.0));
        assert_eq!(linearize_p1(4.0, 1.0, 1.0).unwrap(), (1.0, 1.0));
        assert_eq!(linearize_p1(2.0, 0.0, 2.0).unwrap(), (0.0, 1.0));
        assert!(matches!(linearize_p1(0.0, 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(linearize_p1(1.0, 0.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn model_p1_invariants() {
        let m = ModelP1::new(3.0, 0.5, 2.0).unwrap();
        assert!((m.k1() / m.k2() - 0.25).abs() < 1e-15);
        assert!(m.u_star() > 0.0);
    }

    #[test]
    fn stationary_p2_examples() {
        let (c1, c2, deg) = stationary_p2(2.5, 1.0, DEGENERACY_TOL).unwrap();
        assert_eq!((c1, c2, deg), (2.0, 0.5, false));
        for c in [c1, c2] {
            assert!((c * c - 2.5 * c + 1.0).abs() < 1e-15);
        }
        assert_eq!(stationary_p2(2.0, 1.0, DEGENERACY_TOL).unwrap(), (1.0, 1.0, true));
        assert!(matches!(stationary_p2(1.0, 1.0, DEGENERACY_TOL), Err(Error::Domain(_))));
    }

    #[test]
    fn stationary_sign_pattern() {
        let m = ModelP2::new(1.0, 2.5, 1.0).unwrap();
        assert_eq!(m.c_sq_minus_b(Branch::One), 3.0);
        assert_eq!(m.c_sq_minus_b(Branch::Two), -0.75);
        let deg = ModelP2::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(deg.c_sq_minus_b(Branch::One), 0.0);
        assert_eq!(deg.c_sq_minus_b(Branch::Two), 0.0);
    }

    #[test]
    fn build_symbol_examples() {
        let m = ModelP2::new(1.0, 2.5, 1.0).unwrap();
        let k = KernelSpec::gaussian(0.7, 2).unwrap();
        let s = SpectralSymbol::p2(m, Branch::Two, k);
        assert_eq!(s.eval(&[0.0, 0.0]).unwrap(), -0.75);

        let w = KernelSpec::window1d(1.0).unwrap();
        let s = SpectralSymbol::p1(ModelP1::with_k2(3.0).unwrap(), w);
        assert!((s.eval(&[PI]).unwrap() - PI * PI).abs() < 1e-12);

        let s = SpectralSymbol::p2(m, Branch::One, KernelSpec::exp1d(1.0).unwrap());
        assert_eq!(s.eval(&[0.0]).unwrap(), 3.0);
    }

    #[test]
    fn symbol_matches_textbook_form() {
        let m = ModelP2::new(0.3, 3.0, 1.2).unwrap();
        let k = KernelSpec::exp_product2d(1.4).unwrap();
        let s = SpectralSymbol::p2(m, Branch::One, k);
        for p in [[0.2, 0.1], [1.0, -2.0], [3.3, 0.0]] {
            let direct =
                m.d() * (p[0] * p[0] + p[1] * p[1]) + m.c1() * m.c1() * k.scaled_fourier_image(&p).unwrap() - m.b();
            assert!((s.eval(&p).unwrap() - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn json_round_trip() {
        let model = SymbolModel::P2 { model: ModelP2::new(0.1, 2.5, 1.0).unwrap(), branch: Branch::Two };
        let text = serde_json::to_string(&model).unwrap();
        let back: SymbolModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, model);
        let p1 = SymbolModel::P1 { model: ModelP1::new(2.0, 0.5, 1.0).unwrap() };
        let back: SymbolModel = serde_json::from_str(&serde_json::to_string(&p1).unwrap()).unwrap();
        assert_eq!(back, p1);
    }
}
