//! Sharp analytic stability classifiers.
//!
//! Each classifier returns a [`Verdict`] carrying the critical value of
//! the tested parameter together with the intermediate quantities of the
//! threshold derivation, so that every number can be checked against the
//! brute-force oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::linearization::{Branch, ModelP1, ModelP2};
use crate::scalar_roots::{self, s0_poly};

/// Relative tolerance for flagging a parameter as sitting on its threshold.
pub const MARGINAL_TOL: f64 = 1e-12;

/// Residual tolerances used when solving for `x*` and `s₀`.
const XSTAR_TOL: f64 = 1e-15;
const S0_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriterionTag {
    /// Window kernels in problem 1 with `k₁ = 0`.
    #[serde(rename = "T1")]
    WindowP1,
    /// Exponential kernel in one dimension.
    #[serde(rename = "T2")]
    Exp1D,
    /// Product exponential kernel in two dimensions.
    #[serde(rename = "T3")]
    ExpProduct2D,
    /// Gaussian kernel in any dimension.
    #[serde(rename = "T4")]
    Gaussian,
    /// Exponential kernel in three dimensions.
    #[serde(rename = "T5")]
    Exp3D,
    /// The smaller constant state is always unstable.
    #[serde(rename = "L6")]
    SmallerState,
    /// Problem 1 with a kernel whose image is positive.
    PositiveKernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchLabel {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    /// `a²/4 = b`: both states coincide.
    Degenerate,
}

impl From<Branch> for BranchLabel {
    fn from(b: Branch) -> Self {
        match b {
            Branch::One => BranchLabel::One,
            Branch::Two => BranchLabel::Two,
        }
    }
}

/// Intermediate quantities of a threshold derivation. Fields not used by
/// the criterion at hand are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDerivation {
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub q0: Option<f64>,
    pub q00: Option<f64>,
    pub p0_norm: Option<f64>,
    pub x_star: Option<f64>,
    pub s0: Option<f64>,
    pub z1: Option<f64>,
    /// Minimum of the reduced function (`N₁`, `N₂`, `N₃`, or `Φ₁(|p₀|)`)
    /// at the tested parameters.
    pub reduced_min_value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    #[serde(rename = "theorem_tag")]
    pub criterion: CriterionTag,
    /// `None` for problem 1, which has a single constant state.
    pub branch: Option<BranchLabel>,
    pub stable: bool,
    pub marginal: bool,
    /// Critical `d` (problem 2) or critical `1/k₂` (problem 1). `+∞`
    /// (serialized as `null`) when no parameter value stabilizes.
    #[serde(with = "pos_inf_as_null")]
    pub threshold: f64,
    /// Tested parameter minus threshold; `−∞` (serialized as `null`)
    /// when the threshold is infinite.
    #[serde(with = "neg_inf_as_null")]
    pub margin: f64,
    pub derivation: ThresholdDerivation,
}

impl Verdict {
    fn against_threshold(
        criterion: CriterionTag,
        branch: Option<BranchLabel>,
        value: f64,
        threshold: f64,
        derivation: ThresholdDerivation,
    ) -> Self {
        let margin = value - threshold;
        let marginal = margin.abs() <= MARGINAL_TOL * threshold.abs().max(1.0);
        Verdict { criterion, branch, stable: margin >= 0.0 || marginal, marginal, threshold, margin, derivation }
    }

    fn always_unstable(derivation: ThresholdDerivation) -> Self {
        Verdict {
            criterion: CriterionTag::SmallerState,
            branch: Some(BranchLabel::Two),
            stable: false,
            marginal: false,
            threshold: f64::INFINITY,
            margin: f64::NEG_INFINITY,
            derivation,
        }
    }
}

macro_rules! inf_as_null {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
                if v.is_finite() {
                    s.serialize_f64(*v)
                } else {
                    s.serialize_none()
                }
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
                Ok(Option::<f64>::deserialize(d)?.unwrap_or($inf))
            }
        }
    };
}

inf_as_null!(pos_inf_as_null, f64::INFINITY);
inf_as_null!(neg_inf_as_null, f64::NEG_INFINITY);

/// Verdicts for both constant states of problem 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2Classification {
    pub branch1: Verdict,
    pub branch2: Verdict,
}

impl P2Classification {
    pub fn get(&self, branch: Branch) -> &Verdict {
        match branch {
            Branch::One => &self.branch1,
            Branch::Two => &self.branch2,
        }
    }

    pub fn derivation(&self) -> &ThresholdDerivation {
        &self.branch1.derivation
    }
}

/// `N₁(p) = dp⁴ + (dα² − b)p² + α²(c₁² − b)`.
pub fn n1(d: f64, alpha: f64, b: f64, c1: f64, p: f64) -> f64 {
    let p2 = p * p;
    d * p2 * p2 + (d * alpha * alpha - b) * p2 + alpha * alpha * (c1 * c1 - b)
}

/// `N₂(q) = (2dq − b)(q + α²)² + c₁²α⁴`.
pub fn n2(d: f64, alpha: f64, b: f64, c1: f64, q: f64) -> f64 {
    let a2 = alpha * alpha;
    (2.0 * d * q - b) * (q + a2) * (q + a2) + c1 * c1 * a2 * a2
}

/// `N₃(q) = (8dq − a²)(q + α²)² + a²α⁴`.
pub fn n3(d: f64, alpha: f64, a: f64, q: f64) -> f64 {
    let a2 = alpha * alpha;
    (8.0 * d * q - a * a) * (q + a2) * (q + a2) + a * a * a2 * a2
}

/// Closed-form `N₂(q₀) = (27c₁²α⁴d² − (b + 2dα²)³)/(27d²)`.
pub fn n2_at_q0(d: f64, alpha: f64, b: f64, c1: f64) -> f64 {
    let a2 = alpha * alpha;
    let s = b + 2.0 * d * a2;
    (27.0 * c1 * c1 * a2 * a2 * d * d - s * s * s) / (27.0 * d * d)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Critical `1/k₂` for the window kernels, valid when `k₁ = 0`.
pub fn classify_window_p1(k2: f64, kernel: &KernelSpec) -> Result<Verdict> {
    if !kernel.family().is_window() {
        return Err(Error::Argument(format!("the window criterion needs a window kernel, got {}", kernel.family())));
    }
    check_positive("k2", k2)?;
    let n = kernel.window_half_width().expect("window kernels carry N");
    let threshold = scalar_roots::window_threshold(n);
    let derivation = ThresholdDerivation { z1: Some(scalar_roots::z1()), ..Default::default() };
    Ok(Verdict::against_threshold(CriterionTag::WindowP1, None, 1.0 / k2, threshold, derivation))
}

/// Problem 1 with a positive-image kernel is stable for every `k₁ ≥ 0`,
/// `k₂ > 0`; the critical `1/k₂` is 0.
pub fn classify_positive_kernel_p1(kernel: &KernelSpec, k1: f64, k2: f64) -> Result<Verdict> {
    if !kernel.family().has_positive_image() {
        return Err(Error::Argument(format!("{} has a sign-indefinite image", kernel.family())));
    }
    if !(k1 >= 0.0) {
        return Err(Error::Domain(format!("k1 must be nonnegative, got {k1}")));
    }
    check_positive("k2", k2)?;
    Ok(Verdict::against_threshold(CriterionTag::PositiveKernel, None, 1.0 / k2, 0.0, ThresholdDerivation::default()))
}

/// Dispatches problem 1 to the applicable criterion.
pub fn classify_p1(model: &ModelP1, kernel: &KernelSpec) -> Result<Verdict> {
    if kernel.family().has_positive_image() {
        return classify_positive_kernel_p1(kernel, model.k1(), model.k2());
    }
    if model.k1() != 0.0 {
        return Err(Error::Domain(format!(
            "no sharp criterion for window kernels with k1 = {} > 0; use the oracle",
            model.k1()
        )));
    }
    classify_window_p1(model.k2(), kernel)
}

/// `c₁²−b`, `c₂²−b`; both zero in the degenerate case.
pub fn stationary_signs(a: f64, b: f64) -> Result<(f64, f64)> {
    let m = ModelP2::new(1.0, a, b)?;
    Ok((m.c_sq_minus_b(Branch::One), m.c_sq_minus_b(Branch::Two)))
}

fn p2_pair(
    model: &ModelP2,
    criterion: CriterionTag,
    threshold: f64,
    derivation: ThresholdDerivation,
) -> P2Classification {
    if model.degenerate() {
        let v = Verdict::against_threshold(criterion, Some(BranchLabel::Degenerate), model.d(), threshold, derivation);
        P2Classification { branch1: v, branch2: v }
    } else {
        P2Classification {
            branch1: Verdict::against_threshold(criterion, Some(BranchLabel::One), model.d(), threshold, derivation),
            branch2: Verdict::always_unstable(derivation),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    check_positive("alpha", alpha)
}

/// `√(c₁² − b)` from the exact-sign form of `c₁² − b`.
fn root_gap(model: &ModelP2) -> f64 {
    model.c_sq_minus_b(Branch::One).sqrt()
}

/// Exponential kernel in one dimension.
pub fn classify_exp1d_p2(model: &ModelP2, alpha: f64) -> Result<P2Classification> {
    check_alpha(alpha)?;
    let (d, b, c1) = (model.d(), model.b(), model.c1());
    let a2 = alpha * alpha;
    let mut der = ThresholdDerivation::default();
    let threshold = if model.degenerate() {
        b / a2
    } else {
        let gap = root_gap(model);
        let d1 = (c1 + gap).powi(2) / a2;
        // c₁ − √(c₁² − b) = b/(c₁ + √(c₁² − b)), free of cancellation.
        let d2 = (b / (c1 + gap)).powi(2) / a2;
        der.d1 = Some(d1);
        der.d2 = Some(d2);
        d2
    };
    let c1_sq_minus_b = model.c_sq_minus_b(Branch::One);
    der.reduced_min_value =
        Some(if d * a2 < b { a2 * c1_sq_minus_b - (d * a2 - b).powi(2) / (4.0 * d) } else { a2 * c1_sq_minus_b });
    Ok(p2_pair(model, CriterionTag::Exp1D, threshold, der))
}

/// Product exponential kernel in two dimensions.
pub fn classify_exp_product2d_p2(model: &ModelP2, alpha: f64) -> Result<P2Classification> {
    check_alpha(alpha)?;
    let (d, a, b, c1) = (model.d(), model.a(), model.b(), model.c1());
    let a2 = alpha * alpha;
    let mut der = ThresholdDerivation::default();
    let threshold = if model.degenerate() {
        let t = a * a / (4.0 * a2);
        if d < t {
            let q00 = (a * a - 4.0 * d * a2) / (12.0 * d);
            der.q00 = Some(q00);
            der.reduced_min_value = Some(n3(d, alpha, a, q00));
        } else {
            der.reduced_min_value = Some(0.0);
        }
        t
    } else {
        let l7 = scalar_roots::xstar_artifacts(c1, b, XSTAR_TOL)?;
        der.x_star = Some(l7.x_star);
        if d * a2 < b {
            der.q0 = Some((b - d * a2) / (3.0 * d));
            der.reduced_min_value = Some(n2_at_q0(d, alpha, b, c1));
        } else {
            der.reduced_min_value = Some(a2 * a2 * model.c_sq_minus_b(Branch::One));
        }
        l7.x_star / a2
    };
    Ok(p2_pair(model, CriterionTag::ExpProduct2D, threshold, der))
}

/// Gaussian kernel, any dimension.
pub fn classify_gaussian_p2(model: &ModelP2, alpha: f64) -> Result<P2Classification> {
    check_alpha(alpha)?;
    let (d, b, c1) = (model.d(), model.b(), model.c1());
    let c1sq = c1 * c1;
    let mut der = ThresholdDerivation::default();
    let threshold = if model.degenerate() {
        b / (4.0 * alpha)
    } else {
        let s0 = scalar_roots::solve_s0(c1, b, S0_TOL)?.root;
        der.s0 = Some(s0);
        s0 * c1sq / (4.0 * alpha)
    };
    let s = 4.0 * alpha * d / c1sq;
    if s < 1.0 {
        der.p0_norm = Some(gaussian_p0_norm(d, alpha, c1));
        der.reduced_min_value = Some(c1sq * s0_poly(c1, b, s));
    } else {
        der.reduced_min_value = Some(model.c_sq_minus_b(Branch::One));
    }
    Ok(p2_pair(model, CriterionTag::Gaussian, threshold, der))
}

/// Radial minimizer `|p₀| = 2√α √(ln(c₁²/(4αd)))` of the Gaussian symbol.
pub fn gaussian_p0_norm(d: f64, alpha: f64, c1: f64) -> f64 {
    2.0 * alpha.sqrt() * (c1 * c1 / (4.0 * alpha * d)).ln().sqrt()
}

/// Exponential kernel in three dimensions.
pub fn classify_exp3d_p2(model: &ModelP2, alpha: f64) -> Result<P2Classification> {
    check_alpha(alpha)?;
    let (d, a, b, c1) = (model.d(), model.a(), model.b(), model.c1());
    let a2 = alpha * alpha;
    // In r = |p|² the symbol is the diagonal reduction of the product
    // kernel with d replaced by d/2.
    let half = 0.5 * d;
    let mut der = ThresholdDerivation::default();
    let threshold = if model.degenerate() {
        let t = a * a / (2.0 * a2);
        if half < a * a / (4.0 * a2) {
            let q00 = (a * a - 4.0 * half * a2) / (12.0 * half);
            der.q00 = Some(q00);
            der.reduced_min_value = Some(n3(half, alpha, a, q00));
        } else {
            der.reduced_min_value = Some(0.0);
        }
        t
    } else {
        let l7 = scalar_roots::xstar_artifacts(c1, b, XSTAR_TOL)?;
        der.x_star = Some(l7.x_star);
        if half * a2 < b {
            der.q0 = Some((b - half * a2) / (3.0 * half));
            der.reduced_min_value = Some(n2_at_q0(half, alpha, b, c1));
        } else {
            der.reduced_min_value = Some(a2 * a2 * model.c_sq_minus_b(Branch::One));
        }
        2.0 * l7.x_star / a2
    };
    Ok(p2_pair(model, CriterionTag::Exp3D, threshold, der))
}

/// Dispatches problem 2 to the criterion for the kernel family.
pub fn classify_p2(model: &ModelP2, kernel: &KernelSpec) -> Result<P2Classification> {
    let alpha = || kernel.alpha().expect("non-window kernels carry alpha");
    match kernel.family() {
        KernelFamily::Exp1D => classify_exp1d_p2(model, alpha()),
        KernelFamily::ExpProduct2D => classify_exp_product2d_p2(model, alpha()),
        KernelFamily::Gaussian => classify_gaussian_p2(model, alpha()),
        KernelFamily::Exp3D => classify_exp3d_p2(model, alpha()),
        other => Err(Error::Argument(format!("no sharp criterion for problem 2 with {other}"))),
    }
}

/// Critical diffusion coefficient of branch 1 (or of the degenerate
/// state) for a problem-2 kernel.
pub fn p2_threshold(a: f64, b: f64, kernel: &KernelSpec) -> Result<f64> {
    let model = ModelP2::new(1.0, a, b)?;
    Ok(classify_p2(&model, kernel)?.branch1.threshold)
}

// Reference values are quoted to more digits than an f64 holds.
#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    fn p2(d: f64, a: f64, b: f64) -> ModelP2 {
        ModelP2::new(d, a, b).unwrap()
    }

    #[test]
    fn window_p1_examples() {
        let w = KernelSpec::window1d(1.0).unwrap();
        assert!(classify_window_p1(1.0 / 0.012, &w).unwrap().stable);
        assert!(!classify_window_p1(1.0 / 0.011, &w).unwrap().stable);
        assert!(classify_window_p1(1e-300, &w).unwrap().stable);
        let e = KernelSpec::exp1d(1.0).unwrap();
        assert!(matches!(classify_window_p1(1.0, &e), Err(Error::Argument(_))));
    }

    #[test]
    fn exp1d_examples() {
        let v = classify_exp1d_p2(&p2(0.08, 2.5, 1.0), 1.0).unwrap();
        assert!(v.branch1.stable);
        assert!(!v.branch2.stable);
        assert!((v.branch1.threshold - 0.071_796_769_724_490_826).abs() < 1e-15);
        assert!((v.derivation().d1.unwrap() - 13.928_203_230_275_509).abs() < 1e-12);
        assert!(!classify_exp1d_p2(&p2(0.05, 2.5, 1.0), 1.0).unwrap().branch1.stable);
        let deg = classify_exp1d_p2(&p2(1.0, 2.0, 1.0), 1.0).unwrap();
        assert!(deg.branch1.stable && deg.branch2.stable);
        assert!(deg.branch1.marginal);
        assert_eq!(deg.branch1.branch, Some(BranchLabel::Degenerate));
    }

    #[test]
    fn exp_product2d_examples() {
        assert!(classify_exp_product2d_p2(&p2(0.15, 2.5, 1.0), 1.0).unwrap().branch1.stable);
        let v = classify_exp_product2d_p2(&p2(0.10, 2.5, 1.0), 1.0).unwrap();
        assert!(!v.branch1.stable);
        assert!((v.derivation().x_star.unwrap() - 0.139_033_071_640_692_75).abs() < 1e-14);
        let deg = classify_exp_product2d_p2(&p2(1.0, 2.0, 1.0), 1.0).unwrap();
        assert_eq!(deg.branch1.threshold, 1.0);
        assert!(deg.branch1.stable && deg.branch1.marginal);
    }

    #[test]
    fn gaussian_examples() {
        assert!(classify_gaussian_p2(&p2(0.08, 2.5, 1.0), 1.0).unwrap().branch1.stable);
        let v = classify_gaussian_p2(&p2(0.05, 2.5, 1.0), 1.0).unwrap();
        assert!(!v.branch1.stable);
        assert!((v.branch1.threshold - 0.067_702_340_441_248_648).abs() < 1e-14);
    }

    #[test]
    fn exp3d_examples() {
        assert!(classify_exp3d_p2(&p2(0.30, 2.5, 1.0), 1.0).unwrap().branch1.stable);
        let v = classify_exp3d_p2(&p2(0.20, 2.5, 1.0), 1.0).unwrap();
        assert!(!v.branch1.stable);
        assert!((v.branch1.threshold - 0.278_066_143_281_385_5).abs() < 1e-14);
        let deg = classify_exp3d_p2(&p2(2.0, 2.0, 1.0), 1.0).unwrap();
        assert_eq!(deg.branch1.threshold, 2.0);
        assert!(deg.branch1.stable && deg.branch1.marginal);
    }

    #[test]
    fn degenerate_n3_vanishes_at_origin() {
        assert_eq!(n3(0.3, 1.7, 2.4, 0.0), 0.0);
    }

    #[test]
    fn smaller_state_examples() {
        assert_eq!(stationary_signs(2.5, 1.0).unwrap(), (3.0, -0.75));
        assert_eq!(stationary_signs(2.0, 1.0).unwrap(), (0.0, 0.0));
        assert!(matches!(stationary_signs(1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn positive_kernel_examples() {
        let g = KernelSpec::gaussian(1.0, 2).unwrap();
        assert!(classify_positive_kernel_p1(&g, 0.3, 7.0).unwrap().stable);
        let e = KernelSpec::exp1d(1.0).unwrap();
        let v = classify_positive_kernel_p1(&e, 0.0, 1e6).unwrap();
        assert!(v.stable && v.criterion == CriterionTag::PositiveKernel);
        let w = KernelSpec::window1d(1.0).unwrap();
        assert!(matches!(classify_positive_kernel_p1(&w, 0.0, 1.0), Err(Error::Argument(_))));
    }

    #[test]
    fn p1_window_with_positive_k1_has_no_criterion() {
        let w = KernelSpec::window1d(1.0).unwrap();
        let m = ModelP1::new(1.0, 1.0, 1.0).unwrap();
        assert!(matches!(classify_p1(&m, &w), Err(Error::Domain(_))));
    }

    #[test]
    fn verdict_json_uses_null_for_infinite_threshold() {
        let v = classify_exp1d_p2(&p2(0.08, 2.5, 1.0), 1.0).unwrap();
        let text = serde_json::to_string(&v.branch2).unwrap();
        assert!(text.contains(r#""threshold":null"#));
        assert!(text.contains(r#""margin":null"#));
        assert!(text.contains(r#""branch":"2""#));
        let back: Verdict = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v.branch2);
    }

    #[test]
    fn scale_covariance() {
        let m = p2(0.1, 3.0, 1.5);
        for (f, power) in [
            (classify_exp1d_p2 as fn(&ModelP2, f64) -> Result<P2Classification>, 2),
            (classify_exp_product2d_p2, 2),
            (classify_gaussian_p2, 1),
            (classify_exp3d_p2, 2),
        ] {
            let t1 = f(&m, 0.8).unwrap().branch1.threshold;
            let t2 = f(&m, 1.6).unwrap().branch1.threshold;
            assert!((t1 / t2 - 2f64.powi(power)).abs() < 1e-12);
        }
    }
}
