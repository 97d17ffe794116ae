//! Kernel families, their densities and closed-form Fourier images.
//!
//! Every kernel is a product of factors acting on disjoint coordinate
//! blocks: a window in `x₁`, a one-dimensional exponential, an isotropic
//! Gaussian, or the three-dimensional exponential. The Fourier image used
//! throughout the crate is the *scaled* image `(2π)^{n/2} φ̂(p)`, which
//! equals `∫ φ(x) e^{-ip·x} dx` and is 1 at the origin.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this `|pN|` the window factor uses its Taylor series.
const SINC_SERIES_CUTOFF: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Exp1D,
    ExpProduct2D,
    Gaussian,
    Exp3D,
    Window1D,
    WindowExp2D,
    WindowGauss2D,
    WindowExp4D,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 8] = [
        KernelFamily::Exp1D,
        KernelFamily::ExpProduct2D,
        KernelFamily::Gaussian,
        KernelFamily::Exp3D,
        KernelFamily::Window1D,
        KernelFamily::WindowExp2D,
        KernelFamily::WindowGauss2D,
        KernelFamily::WindowExp4D,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Exp1D => "exp1d",
            KernelFamily::ExpProduct2D => "expproduct2d",
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Exp3D => "exp3d",
            KernelFamily::Window1D => "window1d",
            KernelFamily::WindowExp2D => "windowexp2d",
            KernelFamily::WindowGauss2D => "windowgauss2d",
            KernelFamily::WindowExp4D => "windowexp4d",
        }
    }

    /// True for the families built on the characteristic-function window.
    pub fn is_window(self) -> bool {
        matches!(
            self,
            KernelFamily::Window1D
                | KernelFamily::WindowExp2D
                | KernelFamily::WindowGauss2D
                | KernelFamily::WindowExp4D
        )
    }

    /// Families whose image is positive on all of frequency space.
    pub fn has_positive_image(self) -> bool {
        !self.is_window()
    }

    fn needs_alpha(self) -> bool {
        self != KernelFamily::Window1D
    }

    fn fixed_dim(self) -> Option<usize> {
        match self {
            KernelFamily::Exp1D | KernelFamily::Window1D => Some(1),
            KernelFamily::ExpProduct2D | KernelFamily::WindowExp2D | KernelFamily::WindowGauss2D => Some(2),
            KernelFamily::Exp3D => Some(3),
            KernelFamily::WindowExp4D => Some(4),
            KernelFamily::Gaussian => None,
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase().replace(['-', '_'], "");
        KernelFamily::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| Error::Argument(format!("unknown kernel family `{s}`")))
    }
}

/// Coordinate reduction under which a kernel's image (and hence the
/// symbol) can be searched exhaustively.
///
/// Reduced coordinates are signed; the reduced functions are even in each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reduction {
    /// `u₀ = |p|` (or `p` itself in one dimension).
    #[serde(rename = "radial_1d")]
    Radial1D,
    /// `(u₀, u₁) = (p₁, p₂)`.
    #[serde(rename = "planar_2d")]
    Planar2D,
    /// `(u₀, u₁) = (p₁, |p₂..p₄|)`.
    #[serde(rename = "axial_radial_2d")]
    AxialRadial2D,
}

impl Reduction {
    pub fn dims(self) -> usize {
        match self {
            Reduction::Radial1D => 1,
            Reduction::Planar2D | Reduction::AxialRadial2D => 2,
        }
    }
}

/// One factor of a product kernel, acting on a block of coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Factor {
    Window { half_width: f64 },
    Exp1 { alpha: f64 },
    Gauss { alpha: f64, dim: usize },
    Exp3 { alpha: f64 },
}

impl Factor {
    fn dim(&self) -> usize {
        match *self {
            Factor::Window { .. } | Factor::Exp1 { .. } => 1,
            Factor::Gauss { dim, .. } => dim,
            Factor::Exp3 { .. } => 3,
        }
    }

    fn density(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            Factor::Window { half_width } => {
                if x[0].abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
            Factor::Exp1 { alpha } => 0.5 * alpha * (-alpha * x[0].abs()).exp(),
            Factor::Gauss { alpha, dim } => (alpha / PI).powf(0.5 * dim as f64) * (-alpha * r2).exp(),
            Factor::Exp3 { alpha } => alpha.powi(3) / (8.0 * PI) * (-alpha * r2.sqrt()).exp(),
        }
    }

    /// Scaled image as a function of the squared norm of the block frequency.
    fn image_sq(&self, p2: f64) -> f64 {
        match *self {
            Factor::Window { half_width } => sinc(p2.sqrt() * half_width),
            Factor::Exp1 { alpha } => {
                let a2 = alpha * alpha;
                a2 / (p2 + a2)
            }
            Factor::Gauss { alpha, .. } => (-p2 / (4.0 * alpha)).exp(),
            Factor::Exp3 { alpha } => {
                let a2 = alpha * alpha;
                let q = a2 / (a2 + p2);
                q * q
            }
        }
    }

    /// Integral of the density over its block, by composite Gauss–Legendre.
    fn integral(&self, panels: usize, radius: f64) -> f64 {
        match *self {
            Factor::Window { half_width } => gauss_legendre(-half_width, half_width, panels, |_| 0.5 / half_width),
            Factor::Exp1 { .. } => symmetric_line(panels, radius, |x| self.density(&[x])),
            Factor::Gauss { alpha, dim } => {
                let one = Factor::Gauss { alpha, dim: 1 };
                symmetric_line(panels, radius, |x| one.density(&[x])).powi(dim as i32)
            }
            Factor::Exp3 { .. } => {
                // Octant of the cube [-R, R]³, panels aligned with the origin.
                let half = (panels / 2).max(1);
                let nodes = line_nodes(0.0, radius, half);
                let mut sum = 0.0;
                for &(x, wx) in &nodes {
                    for &(y, wy) in &nodes {
                        for &(z, wz) in &nodes {
                            sum += wx * wy * wz * self.density(&[x, y, z]);
                        }
                    }
                }
                8.0 * sum
            }
        }
    }

    /// `∫ φ(x) e^{-ip·x} dx` over the block by quadrature of the density.
    fn transform_quadrature(&self, p: &[f64], panels: usize, radius: f64) -> f64 {
        match *self {
            Factor::Window { half_width } => {
                gauss_legendre(-half_width, half_width, panels, |x| 0.5 / half_width * (p[0] * x).cos())
            }
            Factor::Exp1 { .. } => symmetric_line(panels, radius, |x| self.density(&[x]) * (p[0] * x).cos()),
            Factor::Gauss { alpha, .. } => {
                let one = Factor::Gauss { alpha, dim: 1 };
                p.iter().map(|&pi| symmetric_line(panels, radius, |x| one.density(&[x]) * (pi * x).cos())).product()
            }
            Factor::Exp3 { .. } => {
                // Spherical reduction: 4π ∫ r² f(r) sin(|p|r)/(|p|r) dr.
                let k = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                4.0 * PI * gauss_legendre(0.0, radius, panels, |r| r * r * self.density(&[r, 0.0, 0.0]) * sinc(k * r))
            }
        }
    }

    fn length_scale(&self) -> f64 {
        match *self {
            Factor::Window { half_width } => half_width,
            Factor::Exp1 { alpha } | Factor::Exp3 { alpha } => 1.0 / alpha,
            Factor::Gauss { alpha, .. } => 1.0 / alpha.sqrt(),
        }
    }
}

/// `sin(z)/z`, with the removable singularity evaluated by its series.
pub fn sinc(z: f64) -> f64 {
    if z.abs() < SINC_SERIES_CUTOFF {
        let z2 = z * z;
        1.0 - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// A kernel family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelSpecRepr", into = "KernelSpecRepr")]
pub struct KernelSpec {
    family: KernelFamily,
    alpha: Option<f64>,
    window_half_width: Option<f64>,
    dim: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct KernelSpecRepr {
    family: KernelFamily,
    alpha: Option<f64>,
    #[serde(rename = "N")]
    window_half_width: Option<f64>,
    dim: Option<usize>,
}

impl TryFrom<KernelSpecRepr> for KernelSpec {
    type Error = Error;

    fn try_from(r: KernelSpecRepr) -> Result<Self> {
        KernelSpec::new(r.family, r.alpha, r.window_half_width, r.dim)
    }
}

impl From<KernelSpec> for KernelSpecRepr {
    fn from(k: KernelSpec) -> Self {
        KernelSpecRepr { family: k.family, alpha: k.alpha, window_half_width: k.window_half_width, dim: Some(k.dim) }
    }
}

fn positive(name: &str, v: Option<f64>) -> Result<f64> {
    match v {
        Some(x) if x.is_finite() && x > 0.0 => Ok(x),
        Some(x) => Err(Error::Argument(format!("{name} must be positive and finite, got {x}"))),
        None => Err(Error::Argument(format!("{name} is required"))),
    }
}

impl KernelSpec {
    /// Validating constructor. `dim` may be omitted for fixed-dimension
    /// families; the Gaussian defaults to one dimension.
    pub fn new(
        family: KernelFamily,
        alpha: Option<f64>,
        window_half_width: Option<f64>,
        dim: Option<usize>,
    ) -> Result<Self> {
        let alpha = if family.needs_alpha() { Some(positive("alpha", alpha)?) } else { None };
        let window_half_width = if family.is_window() { Some(positive("N", window_half_width)?) } else { None };
        let dim = match (family.fixed_dim(), dim) {
            (Some(fixed), Some(d)) if d != fixed => {
                return Err(Error::Argument(format!("{family} lives in dimension {fixed}, got dim = {d}")))
            }
            (Some(fixed), _) => fixed,
            (None, Some(0)) => return Err(Error::Argument("dim must be at least 1".into())),
            (None, Some(d)) => d,
            (None, None) => 1,
        };
        Ok(KernelSpec { family, alpha, window_half_width, dim })
    }

    pub fn exp1d(alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::Exp1D, Some(alpha), None, None)
    }

    pub fn exp_product2d(alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::ExpProduct2D, Some(alpha), None, None)
    }

    pub fn gaussian(alpha: f64, dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, Some(alpha), None, Some(dim))
    }

    pub fn exp3d(alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::Exp3D, Some(alpha), None, None)
    }

    pub fn window1d(half_width: f64) -> Result<Self> {
        Self::new(KernelFamily::Window1D, None, Some(half_width), None)
    }

    pub fn window_exp2d(half_width: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::WindowExp2D, Some(alpha), Some(half_width), None)
    }

    pub fn window_gauss2d(half_width: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::WindowGauss2D, Some(alpha), Some(half_width), None)
    }

    pub fn window_exp4d(half_width: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::WindowExp4D, Some(alpha), Some(half_width), None)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Decay rate; `None` only for the bare window.
    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn window_half_width(&self) -> Option<f64> {
        self.window_half_width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reduction(&self) -> Reduction {
        match self.family {
            KernelFamily::Exp1D | KernelFamily::Window1D | KernelFamily::Gaussian | KernelFamily::Exp3D => {
                Reduction::Radial1D
            }
            KernelFamily::ExpProduct2D | KernelFamily::WindowExp2D | KernelFamily::WindowGauss2D => Reduction::Planar2D,
            KernelFamily::WindowExp4D => Reduction::AxialRadial2D,
        }
    }

    fn factors(&self) -> Vec<Factor> {
        let alpha = self.alpha.unwrap_or(1.0);
        let window = || Factor::Window { half_width: self.window_half_width.unwrap_or(1.0) };
        match self.family {
            KernelFamily::Exp1D => vec![Factor::Exp1 { alpha }],
            KernelFamily::ExpProduct2D => vec![Factor::Exp1 { alpha }, Factor::Exp1 { alpha }],
            KernelFamily::Gaussian => vec![Factor::Gauss { alpha, dim: self.dim }],
            KernelFamily::Exp3D => vec![Factor::Exp3 { alpha }],
            KernelFamily::Window1D => vec![window()],
            KernelFamily::WindowExp2D => vec![window(), Factor::Exp1 { alpha }],
            KernelFamily::WindowGauss2D => vec![window(), Factor::Gauss { alpha, dim: 1 }],
            KernelFamily::WindowExp4D => vec![window(), Factor::Exp3 { alpha }],
        }
    }

    fn check_dim(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::Argument(format!(
                "{what} has dimension {}, kernel {} needs {}",
                v.len(),
                self.family,
                self.dim
            )));
        }
        Ok(())
    }

    /// Splits `v` into the coordinate blocks of the factors.
    fn blocks<'a>(&self, v: &'a [f64]) -> impl Iterator<Item = (Factor, &'a [f64])> {
        let mut offset = 0;
        self.factors().into_iter().map(move |f| {
            let block = &v[offset..offset + f.dim()];
            offset += f.dim();
            (f, block)
        })
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x, "point")?;
        Ok(self.blocks(x).map(|(f, b)| f.density(b)).product())
    }

    pub fn scaled_fourier_image(&self, p: &[f64]) -> Result<f64> {
        self.check_dim(p, "frequency")?;
        Ok(self.blocks(p).map(|(f, b)| f.image_sq(b.iter().map(|v| v * v).sum())).product())
    }

    /// Image evaluated at the frequency represented by reduced coordinates
    /// `u` (see [`Reduction`]). Allocation-free for the hot search loops.
    pub fn image_reduced(&self, u: &[f64]) -> f64 {
        let alpha = self.alpha.unwrap_or(1.0);
        let n = self.window_half_width.unwrap_or(1.0);
        match self.family {
            KernelFamily::Exp1D => Factor::Exp1 { alpha }.image_sq(u[0] * u[0]),
            KernelFamily::Gaussian => Factor::Gauss { alpha, dim: self.dim }.image_sq(u[0] * u[0]),
            KernelFamily::Exp3D => Factor::Exp3 { alpha }.image_sq(u[0] * u[0]),
            KernelFamily::Window1D => sinc(u[0] * n),
            KernelFamily::ExpProduct2D => {
                let f = Factor::Exp1 { alpha };
                f.image_sq(u[0] * u[0]) * f.image_sq(u[1] * u[1])
            }
            KernelFamily::WindowExp2D => sinc(u[0] * n) * Factor::Exp1 { alpha }.image_sq(u[1] * u[1]),
            KernelFamily::WindowGauss2D => sinc(u[0] * n) * Factor::Gauss { alpha, dim: 1 }.image_sq(u[1] * u[1]),
            KernelFamily::WindowExp4D => sinc(u[0] * n) * Factor::Exp3 { alpha }.image_sq(u[1] * u[1]),
        }
    }

    /// Full-space frequency corresponding to reduced coordinates `u`.
    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        match self.reduction() {
            Reduction::Radial1D => p[0] = u[0],
            Reduction::Planar2D | Reduction::AxialRadial2D => {
                p[0] = u[0];
                p[1] = u[1];
            }
        }
        p
    }

    /// Longest characteristic length among the factors.
    pub fn length_scale(&self) -> f64 {
        self.factors().iter().map(Factor::length_scale).fold(0.0, f64::max)
    }

    /// Numeric `∫ φ(x) e^{-ip·x} dx` from quadrature of the density, an
    /// independent route to [`KernelSpec::scaled_fourier_image`].
    pub fn fourier_image_by_quadrature(&self, p: &[f64], panels: usize, radius: f64) -> Result<f64> {
        self.check_dim(p, "frequency")?;
        Ok(self.blocks(p).map(|(f, b)| f.transform_quadrature(b, panels, radius)).product())
    }
}

/// Quadrature settings for [`check_normalization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationQuadrature {
    /// Gauss–Legendre panels per axis (three nodes each).
    pub quad_points: usize,
    pub truncation_radius: f64,
}

impl NormalizationQuadrature {
    pub fn default_for(spec: &KernelSpec) -> Self {
        let alpha = spec.alpha().unwrap_or(1.0);
        let radius = match spec.family() {
            KernelFamily::Gaussian | KernelFamily::WindowGauss2D => 8.0 / alpha.sqrt(),
            _ => 30.0 / alpha,
        };
        NormalizationQuadrature { quad_points: 128, truncation_radius: radius }
    }
}

/// `|∫φ − 1|` by tensor-product quadrature on the truncated box. The
/// window factor is integrated on its exact support.
pub fn check_normalization(spec: &KernelSpec, quad_points: usize, truncation_radius: f64) -> f64 {
    let total: f64 = spec.factors().iter().map(|f| f.integral(quad_points, truncation_radius)).product();
    (total - 1.0).abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityScan {
    pub all_nonnegative: bool,
    pub min_value: f64,
    pub min_location: Vec<f64>,
}

/// Scans the scaled image over `[0, radius]` in each reduced coordinate.
pub fn fourier_positivity_scan(spec: &KernelSpec, radius: f64, samples: usize) -> PositivityScan {
    let samples = samples.max(2);
    let step = radius / (samples - 1) as f64;
    let mut best = (f64::INFINITY, vec![0.0; spec.reduction().dims()]);
    let mut visit = |u: &[f64]| {
        let v = spec.image_reduced(u);
        if v < best.0 {
            best = (v, u.to_vec());
        }
    };
    match spec.reduction().dims() {
        1 => (0..samples).for_each(|i| visit(&[i as f64 * step])),
        _ => {
            for i in 0..samples {
                for j in 0..samples {
                    visit(&[i as f64 * step, j as f64 * step]);
                }
            }
        }
    }
    PositivityScan { all_nonnegative: best.0 >= 0.0, min_value: best.0, min_location: spec.embed(&best.1) }
}

const GL3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// Nodes and weights of the composite three-point Gauss–Legendre rule.
fn line_nodes(lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
    let h = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(3 * panels);
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * h;
        for (x, w) in GL3_NODES.iter().zip(GL3_WEIGHTS.iter()) {
            out.push((mid + 0.5 * h * x, 0.5 * h * w));
        }
    }
    out
}

pub(crate) fn gauss_legendre(lo: f64, hi: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    line_nodes(lo, hi, panels.max(1)).into_iter().map(|(x, w)| w * f(x)).sum()
}

/// Integral over `[-R, R]` with the origin on a panel boundary.
fn symmetric_line(panels: usize, radius: f64, f: impl Fn(f64) -> f64) -> f64 {
    let half = (panels / 2).max(1);
    gauss_legendre(-radius, 0.0, half, &f) + gauss_legendre(0.0, radius, half, &f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_specs() -> Vec<KernelSpec> {
        vec![
            KernelSpec::exp1d(1.3).unwrap(),
            KernelSpec::exp_product2d(0.7).unwrap(),
            KernelSpec::gaussian(0.9, 1).unwrap(),
            KernelSpec::gaussian(1.1, 3).unwrap(),
            KernelSpec::exp3d(1.5).unwrap(),
            KernelSpec::window1d(1.2).unwrap(),
            KernelSpec::window_exp2d(0.8, 1.4).unwrap(),
            KernelSpec::window_gauss2d(1.7, 0.6).unwrap(),
            KernelSpec::window_exp4d(0.9, 1.2).unwrap(),
        ]
    }

    #[test]
    fn density_examples() {
        assert_eq!(KernelSpec::exp1d(1.0).unwrap().density(&[0.0]).unwrap(), 0.5);
        assert_eq!(KernelSpec::window1d(2.0).unwrap().density(&[3.0]).unwrap(), 0.0);
        let g = KernelSpec::gaussian(PI, 1).unwrap().density(&[0.0]).unwrap();
        assert!((g - 1.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_argument_error() {
        let k = KernelSpec::exp3d(1.0).unwrap();
        assert!(matches!(k.density(&[0.0, 0.0]), Err(Error::Argument(_))));
        assert!(matches!(k.scaled_fourier_image(&[0.0]), Err(Error::Argument(_))));
    }

    #[test]
    fn image_examples() {
        for k in all_specs() {
            let zero = vec![0.0; k.dim()];
            assert_eq!(k.scaled_fourier_image(&zero).unwrap(), 1.0, "{k:?}");
        }
        let w = KernelSpec::window1d(1.0).unwrap();
        let v = w.scaled_fourier_image(&[1.5 * PI]).unwrap();
        assert!((v + 2.0 / (3.0 * PI)).abs() < 1e-15);
        assert!((v + 0.21221).abs() < 1e-5);
        let e = KernelSpec::exp3d(2.0).unwrap();
        assert!((e.scaled_fourier_image(&[2.0, 0.0, 0.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!((e.scaled_fourier_image(&[0.0, 1.2, 1.6]).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn sinc_series_matches_direct_form_at_cutoff() {
        let z = SINC_SERIES_CUTOFF * 0.999_999;
        assert!((sinc(z) - z.sin() / z).abs() < 1e-15);
        assert_eq!(sinc(0.0), 1.0);
    }

    #[test]
    fn window_image_at_scaled_frequency() {
        for &n in &[0.3, 1.0, 4.5] {
            let w = KernelSpec::window1d(n).unwrap();
            for &z in &[0.5, 2.0, 4.078, 9.0, -3.0] {
                let v = w.scaled_fourier_image(&[z / n]).unwrap();
                assert!((v - z.sin() / z).abs() < 1e-14);
                assert!(v.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn product_image_splits_into_factors() {
        let k = KernelSpec::exp_product2d(1.3).unwrap();
        let one = KernelSpec::exp1d(1.3).unwrap();
        let (p1, p2) = (0.4, 2.2);
        let lhs = k.scaled_fourier_image(&[p1, p2]).unwrap();
        let rhs = one.scaled_fourier_image(&[p1]).unwrap() * one.scaled_fourier_image(&[p2]).unwrap();
        assert!((lhs - rhs).abs() < 1e-15);
    }

    #[test]
    fn reduced_image_matches_full_image() {
        for k in all_specs() {
            for u in [[0.3, 0.9], [1.7, 0.0], [2.5, 3.1]] {
                let u = &u[..k.reduction().dims()];
                let full = k.scaled_fourier_image(&k.embed(u)).unwrap();
                assert!((full - k.image_reduced(u)).abs() < 1e-15, "{k:?}");
            }
        }
    }

    #[test]
    fn normalization_examples() {
        let e = KernelSpec::exp1d(1.0).unwrap();
        assert!(check_normalization(&e, 4096, 40.0) < 1e-8);
        let g = KernelSpec::gaussian(1.0, 2).unwrap();
        assert!(check_normalization(&g, 1024, 10.0) < 1e-8);
        let w = KernelSpec::window1d(3.0).unwrap();
        assert!(check_normalization(&w, 64, 0.0) < 1e-12);
    }

    #[test]
    fn positivity_scan_examples() {
        let s = fourier_positivity_scan(&KernelSpec::exp1d(1.0).unwrap(), 50.0, 2000);
        assert!(s.all_nonnegative);
        let s = fourier_positivity_scan(&KernelSpec::window1d(1.0).unwrap(), 10.0, 4000);
        assert!(!s.all_nonnegative);
        assert!(s.min_location[0] > PI && s.min_location[0] < 2.0 * PI);
        let s = fourier_positivity_scan(&KernelSpec::gaussian(0.5, 3).unwrap(), 40.0, 2000);
        assert!(s.all_nonnegative);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let k = KernelSpec::window_exp4d(2.0, 0.5).unwrap();
        let text = serde_json::to_string(&k).unwrap();
        assert_eq!(text, r#"{"family":"windowexp4d","alpha":0.5,"N":2.0,"dim":4}"#);
        let back: KernelSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, k);
        let bad = r#"{"family":"exp1d","alpha":-1.0,"N":null,"dim":1}"#;
        assert!(serde_json::from_str::<KernelSpec>(bad).is_err());
        let bad_dim = r#"{"family":"exp3d","alpha":1.0,"N":null,"dim":2}"#;
        assert!(serde_json::from_str::<KernelSpec>(bad_dim).is_err());
    }

    #[test]
    fn family_names_parse() {
        for f in KernelFamily::ALL {
            assert_eq!(f.name().parse::<KernelFamily>().unwrap(), f);
        }
        assert_eq!("Window-Exp-4D".parse::<KernelFamily>().unwrap(), KernelFamily::WindowExp4D);
        assert!("cauchy".parse::<KernelFamily>().is_err());
    }
}
