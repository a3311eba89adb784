//! Torus lattice of ±1 spins with incrementally maintained neighborhood counts.
//!
//! Nodes live on `[-h, h)²` with wraparound. Every node keeps the number of
//! `+1` particles inside its radius-`w` l∞ window (the node itself included),
//! so stability tests are O(1) and a flip costs O(w²).

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::SimRng;

/// Index of a node in row-major order, row `y = -h` first.
pub type Node = usize;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("torus half-side h={h} too small for horizon w={w}: need 2h > 2(2w+1)")]
    Wraparound { h: u32, w: u32 },
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("expected {expected} spins, got {got}")]
    SpinCount { expected: usize, got: usize },
    #[error("intolerance {0} outside [0, 1]")]
    IntoleranceRange(String),
    #[error("cannot parse intolerance `{0}`")]
    IntoleranceParse(String),
}

/// Particle state θ ∈ {+1, −1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(i8)]
pub enum Spin {
    Minus = -1,
    Plus = 1,
}

impl Spin {
    #[inline]
    pub fn opposite(self) -> Spin {
        match self {
            Spin::Plus => Spin::Minus,
            Spin::Minus => Spin::Plus,
        }
    }

    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    pub fn as_char(self) -> char {
        match self {
            Spin::Plus => '+',
            Spin::Minus => '-',
        }
    }
}

/// Exact intolerance: `τ = ⌈τ̃·N⌉ / N` with the integer threshold `τN`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Intolerance {
    tau_tilde: Ratio<u64>,
    n: u32,
    threshold: u32,
}

impl Intolerance {
    pub fn new(tau_tilde: Ratio<u64>, w: u32) -> Result<Self, GridError> {
        if tau_tilde > Ratio::from_integer(1) {
            return Err(GridError::IntoleranceRange(tau_tilde.to_string()));
        }
        let n = neighborhood_size(w);
        let threshold = (tau_tilde * Ratio::from_integer(n as u64))
            .ceil()
            .to_integer() as u32;
        Ok(Self {
            tau_tilde,
            n,
            threshold,
        })
    }

    /// Intolerance whose threshold is exactly `threshold` out of `N`.
    pub fn from_threshold(threshold: u32, w: u32) -> Result<Self, GridError> {
        let n = neighborhood_size(w);
        if threshold > n {
            return Err(GridError::IntoleranceRange(format!("{threshold}/{n}")));
        }
        Self::new(Ratio::new(threshold as u64, n as u64), w)
    }

    /// Parses `num/den` or a decimal such as `0.45` into an exact rational.
    pub fn parse(text: &str, w: u32) -> Result<Self, GridError> {
        Self::new(parse_ratio(text)?, w)
    }

    pub fn tau_tilde(&self) -> Ratio<u64> {
        self.tau_tilde
    }

    /// `τ` as the unreduced pair `(τN, N)`.
    pub fn tau(&self) -> Ratio<u64> {
        Ratio::new(self.threshold as u64, self.n as u64)
    }

    pub fn tau_f64(&self) -> f64 {
        self.threshold as f64 / self.n as f64
    }

    /// Minimum same-state count `τN` for stability.
    pub fn threshold(&self) -> u32 {
        self.threshold
    }

    pub fn neighborhood_size(&self) -> u32 {
        self.n
    }

    /// `τ̄N = N − τN + 2`, the super-unstable bound used above one half.
    pub fn mirrored_threshold(&self) -> u32 {
        self.n + 2 - self.threshold
    }

    /// True when `τ < 1/2` (i.e. `2τN < N`).
    pub fn below_half(&self) -> bool {
        2 * self.threshold < self.n
    }
}

impl fmt::Display for Intolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.threshold, self.n)
    }
}

/// Parses `num/den`, an integer, or a finite decimal into an exact ratio.
pub fn parse_ratio(text: &str) -> Result<Ratio<u64>, GridError> {
    let text = text.trim();
    let err = || GridError::IntoleranceParse(text.to_string());
    if text.contains('/') {
        let r = Ratio::<u64>::from_str(text).map_err(|_| err())?;
        return Ok(r);
    }
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    if frac_part.len() > 18 {
        return Err(err());
    }
    let den = 10u64.pow(frac_part.len() as u32);
    let int: u64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().map_err(|_| err())?
    };
    let frac: u64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().map_err(|_| err())?
    };
    let num = int
        .checked_mul(den)
        .and_then(|v| v.checked_add(frac))
        .ok_or_else(err)?;
    Ok(Ratio::new(num, den))
}

/// `N = (2w+1)²`.
#[inline]
pub fn neighborhood_size(w: u32) -> u32 {
    (2 * w + 1) * (2 * w + 1)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinGrid {
    h: u32,
    w: u32,
    side: usize,
    n: u32,
    spins: Vec<Spin>,
    plus_counts: Vec<u32>,
}

impl SpinGrid {
    /// Builds a grid from row-major spins (row `y = -h` first).
    pub fn from_spins(h: u32, w: u32, spins: Vec<Spin>) -> Result<Self, GridError> {
        check_geometry(h, w)?;
        let side = 2 * h as usize;
        if spins.len() != side * side {
            return Err(GridError::SpinCount {
                expected: side * side,
                got: spins.len(),
            });
        }
        let mut grid = Self {
            h,
            w,
            side,
            n: neighborhood_size(w),
            spins,
            plus_counts: Vec::new(),
        };
        grid.plus_counts = grid.sliding_counts();
        Ok(grid)
    }

    pub fn uniform(h: u32, w: u32, spin: Spin) -> Result<Self, GridError> {
        check_geometry(h, w)?;
        let side = 2 * h as usize;
        Self::from_spins(h, w, vec![spin; side * side])
    }

    /// I.i.d. Bernoulli initial configuration: each spin is `+1` with probability `p`.
    pub fn new_random(h: u32, w: u32, p: f64, seed: u64) -> Result<Self, GridError> {
        let mut rng = SimRng::seed_from_u64(seed);
        Self::new_random_with(h, w, p, &mut rng)
    }

    pub fn new_random_with<R: Rng + ?Sized>(
        h: u32,
        w: u32,
        p: f64,
        rng: &mut R,
    ) -> Result<Self, GridError> {
        check_geometry(h, w)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(GridError::Probability(p));
        }
        let side = 2 * h as usize;
        let spins = (0..side * side)
            .map(|_| {
                if rng.random_bool(p) {
                    Spin::Plus
                } else {
                    Spin::Minus
                }
            })
            .collect();
        Self::from_spins(h, w, spins)
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    pub fn w(&self) -> u32 {
        self.w
    }

    /// Torus side length `2h`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    /// `N = (2w+1)²`.
    pub fn neighborhood_size(&self) -> u32 {
        self.n
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    #[inline]
    pub fn spin(&self, u: Node) -> Spin {
        self.spins[u]
    }

    /// Number of `+1` particles in the radius-`w` window of `u`.
    #[inline]
    pub fn plus_count(&self, u: Node) -> u32 {
        self.plus_counts[u]
    }

    pub fn plus_counts(&self) -> &[u32] {
        &self.plus_counts
    }

    /// Node at torus coordinates `(x, y)`, wrapping any integer pair.
    #[inline]
    pub fn node(&self, x: i64, y: i64) -> Node {
        let side = self.side as i64;
        let col = (x + self.h as i64).rem_euclid(side) as usize;
        let row = (y + self.h as i64).rem_euclid(side) as usize;
        row * self.side + col
    }

    /// Coordinates of `u` in `[-h, h)²`.
    #[inline]
    pub fn coords(&self, u: Node) -> (i64, i64) {
        let h = self.h as i64;
        ((u % self.side) as i64 - h, (u / self.side) as i64 - h)
    }

    pub fn origin(&self) -> Node {
        self.node(0, 0)
    }

    /// Wrapped l∞ distance between two nodes.
    pub fn linf_distance(&self, a: Node, b: Node) -> u64 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let side = self.side as i64;
        let wrap = |d: i64| {
            let d = d.rem_euclid(side);
            d.min(side - d) as u64
        };
        wrap(ax - bx).max(wrap(ay - by))
    }

    /// Calls `f` on every node of the radius-`r` l∞ window around `center`.
    ///
    /// Nodes are visited row by row; `2r+1` must not exceed the torus side.
    #[inline]
    pub fn for_each_in_window<F: FnMut(Node)>(&self, center: Node, r: u32, mut f: F) {
        debug_assert!(2 * r as usize + 1 <= self.side);
        let (cx, cy) = self.coords(center);
        let r = r as i64;
        for dy in -r..=r {
            let row_start = self.node(cx - r, cy + dy);
            let row = row_start - row_start % self.side;
            let mut col = row_start % self.side;
            for _ in -r..=r {
                f(row + col);
                col += 1;
                if col == self.side {
                    col = 0;
                }
            }
        }
    }

    pub fn window_nodes(&self, center: Node, r: u32) -> Vec<Node> {
        let mut out = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
        self.for_each_in_window(center, r, |v| out.push(v));
        out
    }

    /// Number of `spin` particles in the radius-`r` window (direct scan).
    pub fn count_in_window(&self, center: Node, r: u32, spin: Spin) -> u32 {
        let mut count = 0;
        self.for_each_in_window(center, r, |v| count += (self.spins[v] == spin) as u32);
        count
    }

    /// `s(u)·N`: particles in `N(u)` sharing the state of `u`, `u` included.
    #[inline]
    pub fn same_state_count(&self, u: Node) -> u32 {
        match self.spins[u] {
            Spin::Plus => self.plus_counts[u],
            Spin::Minus => self.n - self.plus_counts[u],
        }
    }

    /// Same-state count `u` would have right after flipping alone.
    #[inline]
    pub fn post_flip_count(&self, u: Node) -> u32 {
        self.n - self.same_state_count(u) + 1
    }

    #[inline]
    pub fn is_unstable(&self, u: Node, tau: &Intolerance) -> bool {
        debug_assert_eq!(tau.neighborhood_size(), self.n);
        self.same_state_count(u) < tau.threshold()
    }

    /// Whether flipping `u` alone would leave it stable.
    #[inline]
    pub fn is_flip_stabilizable(&self, u: Node, tau: &Intolerance) -> bool {
        debug_assert_eq!(tau.neighborhood_size(), self.n);
        self.post_flip_count(u) >= tau.threshold()
    }

    /// Unstable and flip-stabilizable: the Glauber rule would flip it.
    #[inline]
    pub fn is_flippable(&self, u: Node, tau: &Intolerance) -> bool {
        self.is_unstable(u, tau) && self.is_flip_stabilizable(u, tau)
    }

    /// Negates `u` and patches the counts of its window.
    pub fn flip(&mut self, u: Node) {
        let new = self.spins[u].opposite();
        self.spins[u] = new;
        let w = self.w;
        let side = self.side;
        let h = self.h as i64;
        let (cx, cy) = self.coords(u);
        let counts = &mut self.plus_counts;
        let r = w as i64;
        for dy in -r..=r {
            let row = ((cy + dy + h).rem_euclid(side as i64)) as usize * side;
            let mut col = ((cx - r + h).rem_euclid(side as i64)) as usize;
            for _ in -r..=r {
                let v = row + col;
                match new {
                    Spin::Plus => counts[v] += 1,
                    Spin::Minus => counts[v] -= 1,
                }
                col += 1;
                if col == side {
                    col = 0;
                }
            }
        }
    }

    /// Sets `u` to `spin`, flipping only when it differs.
    pub fn set_spin(&mut self, u: Node, spin: Spin) {
        if self.spins[u] != spin {
            self.flip(u);
        }
    }

    /// Direct O(L²·N) recomputation of every window count.
    pub fn recount_bruteforce(&self) -> Vec<u32> {
        (0..self.len())
            .map(|u| self.count_in_window(u, self.w, Spin::Plus))
            .collect()
    }

    /// Separable sliding-window sums with wraparound.
    fn sliding_counts(&self) -> Vec<u32> {
        let side = self.side;
        let w = self.w as usize;
        let plus: Vec<u32> = self
            .spins
            .iter()
            .map(|&s| (s == Spin::Plus) as u32)
            .collect();
        let mut rows = vec![0u32; side * side];
        for y in 0..side {
            let base = y * side;
            let mut acc: u32 = (0..=2 * w)
                .map(|k| plus[base + (k + side - w) % side])
                .sum();
            for x in 0..side {
                rows[base + x] = acc;
                acc -= plus[base + (x + side - w) % side];
                acc += plus[base + (x + w + 1) % side];
            }
        }
        let mut out = vec![0u32; side * side];
        for x in 0..side {
            let mut acc: u32 = (0..=2 * w)
                .map(|k| rows[((k + side - w) % side) * side + x])
                .sum();
            for y in 0..side {
                out[y * side + x] = acc;
                acc -= rows[((y + side - w) % side) * side + x];
                acc += rows[((y + w + 1) % side) * side + x];
            }
        }
        out
    }
}

fn check_geometry(h: u32, w: u32) -> Result<(), GridError> {
    if w == 0 {
        return Err(GridError::ZeroHorizon);
    }
    if h <= 2 * w + 1 {
        return Err(GridError::Wraparound { h, w });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau(text: &str, w: u32) -> Intolerance {
        Intolerance::parse(text, w).unwrap()
    }

    #[test]
    fn threshold_is_integer_ceiling() {
        assert_eq!(tau("0.45", 1).threshold(), 5);
        assert_eq!(tau("0.45", 2).threshold(), 12);
        assert_eq!(tau("4/9", 1).threshold(), 4);
        assert_eq!(tau("11/25", 2).threshold(), 11);
        // exactly on the boundary: no rounding up
        assert_eq!(tau("0.44", 2).threshold(), 11);
        assert_eq!(tau("1", 3).threshold(), 49);
        assert_eq!(tau("0", 3).threshold(), 0);
        assert!(Intolerance::parse("1.5", 1).is_err());
        assert!(Intolerance::parse("abc", 1).is_err());
        assert!(Intolerance::parse("0.4x", 1).is_err());
    }

    #[test]
    fn rejects_self_wrapping_neighborhoods() {
        assert_eq!(
            SpinGrid::uniform(3, 1, Spin::Plus).unwrap_err(),
            GridError::Wraparound { h: 3, w: 1 }
        );
        assert!(SpinGrid::uniform(4, 1, Spin::Plus).is_ok());
        assert!(SpinGrid::new_random(8, 1, 1.5, 0).is_err());
    }

    #[test]
    fn degenerate_bernoulli() {
        let g = SpinGrid::new_random(8, 1, 1.0, 17).unwrap();
        assert!(g.spins().iter().all(|&s| s == Spin::Plus));
        assert!(g.plus_counts().iter().all(|&c| c == 9));
        let g = SpinGrid::new_random(8, 1, 0.0, 17).unwrap();
        assert!(g.spins().iter().all(|&s| s == Spin::Minus));
        assert!(g.plus_counts().iter().all(|&c| c == 0));
    }

    #[test]
    fn random_fraction_concentrates() {
        let g = SpinGrid::new_random(64, 2, 0.5, 42).unwrap();
        let plus = g.spins().iter().filter(|&&s| s == Spin::Plus).count() as f64;
        let f = plus / g.len() as f64;
        assert!(
            (f - 0.5).abs() <= 3.0 * 0.5 / (128.0f64 * 128.0).sqrt(),
            "fraction {f}"
        );
    }

    #[test]
    fn isolated_minus_in_plus_field() {
        let mut g = SpinGrid::uniform(8, 1, Spin::Plus).unwrap();
        let u = g.node(2, -3);
        g.flip(u);
        assert_eq!(g.same_state_count(u), 1);
        let t = tau("5/9", 1);
        assert!(g.is_unstable(u, &t));
        assert!(g.is_flip_stabilizable(u, &t));
        assert!(!g.is_unstable(g.node(0, 0), &t));
        g.flip(u);
        assert!(g.plus_counts().iter().all(|&c| c == 9));
        assert_eq!(g.same_state_count(u), 9);
    }

    #[test]
    fn flip_is_an_involution() {
        let g0 = SpinGrid::new_random(10, 2, 0.5, 3).unwrap();
        let mut g = g0.clone();
        for u in [0, 7, 55, g.len() - 1] {
            g.flip(u);
            g.flip(u);
        }
        assert_eq!(g, g0);
    }

    #[test]
    fn counts_match_bruteforce_after_random_flips() {
        let mut rng = SimRng::seed_from_u64(9);
        let mut g = SpinGrid::new_random(16, 3, 0.5, 1).unwrap();
        assert_eq!(g.plus_counts(), g.recount_bruteforce().as_slice());
        for _ in 0..2000 {
            let u = rng.random_range(0..g.len());
            g.flip(u);
        }
        assert_eq!(g.plus_counts(), g.recount_bruteforce().as_slice());
    }

    #[test]
    fn predicates_match_window_recount_and_flip_oracle() {
        let g = SpinGrid::new_random(9, 2, 0.5, 5).unwrap();
        let t = tau("11/25", 2);
        for u in 0..g.len() {
            let same = g.count_in_window(u, 2, g.spin(u));
            assert_eq!(g.same_state_count(u), same);
            assert_eq!(g.is_unstable(u, &t), same < 11);
            let mut copy = g.clone();
            copy.flip(u);
            assert_eq!(g.is_flip_stabilizable(u, &t), !copy.is_unstable(u, &t));
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let g = SpinGrid::uniform(5, 1, Spin::Minus).unwrap();
        for u in 0..g.len() {
            let (x, y) = g.coords(u);
            assert!((-5..5).contains(&x) && (-5..5).contains(&y));
            assert_eq!(g.node(x, y), u);
            assert_eq!(g.node(x + 10, y - 20), u);
        }
        assert_eq!(g.coords(0), (-5, -5));
        assert_eq!(g.linf_distance(g.node(-5, 0), g.node(4, 0)), 1);
    }
}
