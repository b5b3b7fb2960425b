//! Expectations over `ε ~ N(0, σ²)` by Gauss–Hermite quadrature.

use std::num::NonZeroUsize;

use gauss_quad::hermite::GaussHermite;

use crate::error::{Error, Result};

/// Fewest nodes accepted when the noise is non-degenerate.
pub const MIN_NOISY_NODES: usize = 7;

/// Default rule size for the solver.
pub const DEFAULT_NODES: usize = 15;

/// Nodes `ε_i` and probability weights `p_i` with `E[g(ε)] ≈ Σ p_i g(ε_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalExpectation {
    points: Vec<(f64, f64)>,
}

impl NormalExpectation {
    /// Builds an `n`-node rule for standard deviation `sigma`.
    ///
    /// With `sigma = 0` the distribution is a point mass and the rule collapses
    /// to a single node at zero whatever `n` is.
    pub fn new(sigma: f64, n: usize) -> Result<Self> {
        let Some(deg) = NonZeroUsize::new(n) else {
            return Err(Error::Quadrature {
                nodes: n,
                reason: "at least one node is required",
            });
        };
        if sigma == 0.0 {
            return Ok(Self {
                points: vec![(0.0, 1.0)],
            });
        }
        if n < MIN_NOISY_NODES {
            return Err(Error::Quadrature {
                nodes: n,
                reason: "at least 7 nodes are required when sigma > 0",
            });
        }
        // Physicists' rule integrates against exp(-x²); substitute ε = √2 σ x.
        let rule = GaussHermite::new(deg);
        let norm = std::f64::consts::PI.sqrt().recip();
        let scale = std::f64::consts::SQRT_2 * sigma;
        let points = rule
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (scale * x, w * norm))
            .collect();
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn expect(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.points.iter().map(|&(eps, p)| p * g(eps)).sum()
    }
}

/// `E[(Y - strike)⁺]` for `Y ~ N(mean, sd²)`.
pub fn hinge_expectation(mean: f64, sd: f64, strike: f64) -> f64 {
    let gap = mean - strike;
    if sd == 0.0 {
        return gap.max(0.0);
    }
    let d = gap / sd;
    let cdf = 0.5 * libm::erfc(-d * std::f64::consts::FRAC_1_SQRT_2);
    let pdf = (-0.5 * d * d).exp() / (2.0 * std::f64::consts::PI).sqrt();
    gap * cdf + sd * pdf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_node_counts() {
        assert!(matches!(
            NormalExpectation::new(0.1, 0),
            Err(Error::Quadrature { .. })
        ));
        assert!(matches!(
            NormalExpectation::new(0.1, 6),
            Err(Error::Quadrature { .. })
        ));
        assert!(matches!(
            NormalExpectation::new(0.0, 0),
            Err(Error::Quadrature { .. })
        ));
        assert_eq!(NormalExpectation::new(0.0, 1).unwrap().len(), 1);
        assert_eq!(NormalExpectation::new(0.0, 15).unwrap().len(), 1);
    }

    #[test]
    fn hinge_matches_quadrature_of_smooth_limits() {
        // at the mean: sd / sqrt(2 pi)
        let h = hinge_expectation(0.3, 0.2, 0.3);
        assert!((h - 0.2 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-16);
        // far in the money the hinge is linear, far out it vanishes
        assert!((hinge_expectation(1.0, 0.01, 0.0) - 1.0).abs() < 1e-15);
        assert_eq!(hinge_expectation(-1.0, 0.01, 0.0), 0.0);
        assert_eq!(hinge_expectation(0.5, 0.0, 0.2), 0.3);
        // put-call parity: E[(Y-k)+] - E[(k-Y)+] = mean - k
        let (m, s, k) = (0.1, 0.3, 0.25);
        let put = hinge_expectation(-m, s, -k);
        assert!((hinge_expectation(m, s, k) - put - (m - k)).abs() < 1e-15);
    }

    #[test]
    fn gaussian_moments() {
        // E[1] = 1, E[ε] = 0, E[ε²] = σ², E[ε⁴] = 3σ⁴, E[exp(aε)] = exp(a²σ²/2)
        let sigma = 0.3;
        let q = NormalExpectation::new(sigma, 15).unwrap();
        assert!((q.expect(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!(q.expect(|e| e).abs() < 1e-15);
        assert!((q.expect(|e| e * e) - sigma * sigma).abs() < 1e-15);
        assert!((q.expect(|e| e.powi(4)) - 3.0 * sigma.powi(4)).abs() < 1e-15);
        let a = 2.0;
        assert!((q.expect(|e| (a * e).exp()) - (a * a * sigma * sigma / 2.0).exp()).abs() < 1e-13);
    }
}
