//! Seeded random parameter draws for property checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Smallest relative gap `a²/(4b) − 1` of a non-degenerate draw.
pub const MIN_SPLIT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterDraw {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
}

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn log_uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.uniform(lo.ln(), hi.ln()).exp()
    }

    /// `b ∈ [0.05, 5]` and `a²/(4b) ∈ [1 + 10⁻³, 25]`, both log-uniform.
    pub fn ab(&mut self) -> (f64, f64) {
        let b = self.log_uniform(0.05, 5.0);
        let ratio = self.log_uniform(1.0 + MIN_SPLIT, 25.0);
        (2.0 * (ratio * b).sqrt(), b)
    }

    pub fn alpha(&mut self) -> f64 {
        self.log_uniform(0.2, 5.0)
    }

    pub fn draw(&mut self) -> ParameterDraw {
        let (a, b) = self.ab();
        ParameterDraw { a, b, alpha: self.alpha() }
    }

    /// Window half-width `N ∈ [0.5, 3]`.
    pub fn half_width(&mut self) -> f64 {
        self.uniform(0.5, 3.0)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible_and_split() {
        let mut s1 = Sampler::new(7);
        let mut s2 = Sampler::new(7);
        for _ in 0..200 {
            let d = s1.draw();
            assert_eq!(d, s2.draw());
            assert!(d.a * d.a / 4.0 > d.b * (1.0 + 0.999 * MIN_SPLIT));
            assert!((0.05..=5.0).contains(&d.b) && (0.2..=5.0).contains(&d.alpha));
        }
        assert_ne!(Sampler::new(1).draw(), Sampler::new(2).draw());
    }
}
