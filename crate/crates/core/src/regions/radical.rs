//! Radical, super-radical and unstable regions.

use super::RegionError;
use crate::bounds::TRIGGER_RADIUS;
use crate::grid::{Intolerance, Node, Spin, SpinGrid};

/// `τ̂ = τ(1 − 1/(τN^{1/2−ε}))`.
pub fn tau_hat(tau: f64, n: f64, eps: f64) -> f64 {
    tau * (1.0 - 1.0 / (tau * n.powf(0.5 - eps)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadicalParams {
    pub epsilon: f64,
    pub epsilon_prime: f64,
    /// Radius fraction of the intermediate neighborhood, fixed at 0.265.
    pub epsilon_trigger: f64,
}

impl RadicalParams {
    pub fn new(epsilon: f64, epsilon_prime: f64) -> Result<Self, RegionError> {
        if !(epsilon > 0.0 && epsilon < 0.5) {
            return Err(RegionError::Params(format!(
                "ε = {epsilon} outside (0, 1/2)"
            )));
        }
        if !(epsilon_prime > 0.0 && epsilon_prime.is_finite()) {
            return Err(RegionError::Params(format!(
                "ε′ = {epsilon_prime} must be positive"
            )));
        }
        Ok(Self {
            epsilon,
            epsilon_prime,
            epsilon_trigger: TRIGGER_RADIUS,
        })
    }

    pub fn tau_hat(&self, tau: &Intolerance) -> f64 {
        tau_hat(tau.tau_f64(), tau.neighborhood_size() as f64, self.epsilon)
    }

    /// `τ̄ = 1 − τ + 2/N`.
    pub fn tau_bar(&self, tau: &Intolerance) -> f64 {
        1.0 - tau.tau_f64() + 2.0 / tau.neighborhood_size() as f64
    }

    /// `τ̄′ = (1 − 1/(τ̄N^{1/2−ε}))τ̄`.
    pub fn tau_bar_prime(&self, tau: &Intolerance) -> f64 {
        tau_hat(
            self.tau_bar(tau),
            tau.neighborhood_size() as f64,
            self.epsilon,
        )
    }

    /// `⌊(1+ε′)w⌋`.
    pub fn outer_radius(&self, w: u32) -> u32 {
        ((1.0 + self.epsilon_prime) * w as f64).floor() as u32
    }

    /// `⌊ε′w⌋`.
    pub fn inner_radius(&self, w: u32) -> u32 {
        (self.epsilon_prime * w as f64).floor() as u32
    }

    /// `⌊0.265w⌋`.
    pub fn trigger_radius(&self, w: u32) -> u32 {
        (self.epsilon_trigger * w as f64).floor() as u32
    }

    /// `τ̂(1+ε′)²N`.
    pub fn radical_threshold(&self, tau: &Intolerance) -> f64 {
        self.tau_hat(tau) * self.scaled_size(tau)
    }

    /// `τ̄′(1+ε′)²N`.
    pub fn super_radical_threshold(&self, tau: &Intolerance) -> f64 {
        self.tau_bar_prime(tau) * self.scaled_size(tau)
    }

    /// `⌊τε′²N − N^{1/2+ε}⌋`, clamped to at least one particle.
    pub fn unstable_region_threshold(&self, tau: &Intolerance) -> u32 {
        let n = tau.neighborhood_size() as f64;
        let raw =
            (tau.tau_f64() * self.epsilon_prime.powi(2) * n - n.powf(0.5 + self.epsilon)).floor();
        raw.max(1.0) as u32
    }

    fn scaled_size(&self, tau: &Intolerance) -> f64 {
        (1.0 + self.epsilon_prime).powi(2) * tau.neighborhood_size() as f64
    }
}

fn check_radius(grid: &SpinGrid, r: u32) -> Result<(), RegionError> {
    if 2 * r as usize + 1 > grid.side() {
        return Err(RegionError::Geometry(format!(
            "radius {r} does not fit torus side {}",
            grid.side()
        )));
    }
    Ok(())
}

/// Fewer than `τ̂(1+ε′)²N` θ-particles within radius `⌊(1+ε′)w⌋` of `center`.
pub fn is_radical_region(
    grid: &SpinGrid,
    center: Node,
    tau: &Intolerance,
    params: &RadicalParams,
    theta: Spin,
) -> Result<bool, RegionError> {
    let r = params.outer_radius(grid.w());
    check_radius(grid, r)?;
    Ok((grid.count_in_window(center, r, theta) as f64) < params.radical_threshold(tau))
}

/// The above-one-half mirror: threshold `τ̄′(1+ε′)²N`.
pub fn is_super_radical_region(
    grid: &SpinGrid,
    center: Node,
    tau: &Intolerance,
    params: &RadicalParams,
    theta: Spin,
) -> Result<bool, RegionError> {
    let r = params.outer_radius(grid.w());
    check_radius(grid, r)?;
    Ok((grid.count_in_window(center, r, theta) as f64) < params.super_radical_threshold(tau))
}

/// At least `⌊τε′²N − N^{1/2+ε}⌋` (and at least one) unstable θ-particles
/// within radius `⌊ε′w⌋` of `center`.
pub fn is_unstable_region(
    grid: &SpinGrid,
    center: Node,
    tau: &Intolerance,
    params: &RadicalParams,
    theta: Spin,
) -> Result<bool, RegionError> {
    let r = params.inner_radius(grid.w());
    if r < 1 {
        return Err(RegionError::Params(format!(
            "ε′w = {} < 1",
            params.epsilon_prime * grid.w() as f64
        )));
    }
    check_radius(grid, r)?;
    let mut unstable = 0;
    grid.for_each_in_window(center, r, |v| {
        if grid.spin(v) == theta && grid.is_unstable(v, tau) {
            unstable += 1;
        }
    });
    Ok(unstable >= params.unstable_region_threshold(tau))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RadicalParams {
        RadicalParams::new(0.1, 0.3).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(RadicalParams::new(0.0, 0.3).is_err());
        assert!(RadicalParams::new(0.6, 0.3).is_err());
        assert!(RadicalParams::new(0.1, 0.0).is_err());
        let tau = Intolerance::parse("0.45", 4).unwrap();
        let p = params();
        assert!(p.tau_hat(&tau) < tau.tau_f64());
        assert_eq!(p.outer_radius(4), 5);
        assert_eq!(p.inner_radius(4), 1);
        assert_eq!(p.trigger_radius(10), 2);
    }

    #[test]
    fn radical_extremes() {
        let tau = Intolerance::parse("0.45", 4).unwrap();
        let minus = SpinGrid::uniform(16, 4, Spin::Minus).unwrap();
        let plus = SpinGrid::uniform(16, 4, Spin::Plus).unwrap();
        assert!(is_radical_region(&minus, 0, &tau, &params(), Spin::Plus).unwrap());
        assert!(!is_radical_region(&plus, 0, &tau, &params(), Spin::Plus).unwrap());
        let hi = Intolerance::parse("0.55", 4).unwrap();
        assert!(is_super_radical_region(&minus, 0, &hi, &params(), Spin::Plus).unwrap());
        assert!(!is_super_radical_region(&plus, 0, &hi, &params(), Spin::Plus).unwrap());
    }

    #[test]
    fn unstable_region_extremes() {
        let tau = Intolerance::parse("0.45", 4).unwrap();
        let p = RadicalParams::new(0.1, 0.5).unwrap();
        let mut g = SpinGrid::uniform(16, 4, Spin::Minus).unwrap();
        let c = g.origin();
        assert!(!is_unstable_region(&g, c, &tau, &p, Spin::Plus).unwrap());
        // a few +1 particles in a −1 sea are all unstable
        for (x, y) in [(0, 0), (1, 1), (-1, 2)] {
            let u = g.node(x, y);
            g.flip(u);
        }
        assert!(is_unstable_region(&g, c, &tau, &p, Spin::Plus).unwrap());
        assert!(is_unstable_region(
            &g,
            c,
            &tau,
            &RadicalParams::new(0.1, 0.1).unwrap(),
            Spin::Plus
        )
        .is_err());
    }
}
