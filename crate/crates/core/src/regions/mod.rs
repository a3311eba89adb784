//! Geometric detectors over spin configurations.
//!
//! All detectors read an immutable grid; the cascade helpers work on a copy.

mod affected;
mod blocks;
mod cascade;
mod firewall;
mod mono;
mod radical;

pub use affected::{
    affected_label, classify_affected, is_theta_affected, Affected, AffectedMap,
    AffectedStarMarkers,
};
pub use blocks::{classify_block, renormalize, BadCluster, BlockLabel, BlockMap};
pub use cascade::{
    cascade_closure, dilate, expand_radical_region, is_expandable, CascadeResult, ExpandableReport,
    TriggerOutcome,
};
pub use firewall::{is_firewall, static_firewall_stable, FirewallSpec};
pub use mono::{center_radii, monochromatic_region, MonoRegion};
pub use radical::{
    is_radical_region, is_super_radical_region, is_unstable_region, tau_hat, RadicalParams,
};

use thiserror::Error;

use crate::grid::{Node, Spin, SpinGrid};

#[derive(Debug, Error, PartialEq)]
pub enum RegionError {
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("parameters: {0}")]
    Params(String),
}

/// Summed-area table over the torus for O(1) window counts of one spin.
#[derive(Clone, Debug)]
pub struct WindowCounter {
    side: usize,
    h: i64,
    prefix: Vec<u32>,
}

impl WindowCounter {
    pub fn new(grid: &SpinGrid, spin: Spin) -> Self {
        let side = grid.side();
        let stride = side + 1;
        let mut prefix = vec![0u32; stride * stride];
        for y in 0..side {
            let mut row = 0u32;
            for x in 0..side {
                row += (grid.spin(y * side + x) == spin) as u32;
                prefix[(y + 1) * stride + x + 1] = prefix[y * stride + x + 1] + row;
            }
        }
        Self {
            side,
            h: grid.h() as i64,
            prefix,
        }
    }

    /// Count over `[x0, x1) × [y0, y1)` in array indices, no wrap.
    fn rect(&self, x0: usize, x1: usize, y0: usize, y1: usize) -> u32 {
        let s = self.side + 1;
        self.prefix[y1 * s + x1] + self.prefix[y0 * s + x0]
            - self.prefix[y0 * s + x1]
            - self.prefix[y1 * s + x0]
    }

    /// Split a wrapped interval of length `len` starting at `start`.
    fn spans(&self, start: i64, len: usize) -> [(usize, usize); 2] {
        let s = self.side;
        let a = start.rem_euclid(s as i64) as usize;
        if a + len <= s {
            [(a, a + len), (0, 0)]
        } else {
            [(a, s), (0, a + len - s)]
        }
    }

    /// Number of matching spins in the radius-`r` window at `(x, y)`.
    pub fn count_at(&self, x: i64, y: i64, r: u32) -> u32 {
        let len = 2 * r as usize + 1;
        debug_assert!(len <= self.side);
        let xs = self.spans(x - r as i64 + self.h, len);
        let ys = self.spans(y - r as i64 + self.h, len);
        let mut total = 0;
        for &(y0, y1) in &ys {
            for &(x0, x1) in &xs {
                if x1 > x0 && y1 > y0 {
                    total += self.rect(x0, x1, y0, y1);
                }
            }
        }
        total
    }

    pub fn count(&self, grid: &SpinGrid, center: Node, r: u32) -> u32 {
        let (x, y) = grid.coords(center);
        self.count_at(x, y, r)
    }
}

/// Disjoint sets with path halving and union by size.
#[derive(Clone, Debug)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_counter_matches_direct_scan() {
        let g = SpinGrid::new_random(7, 2, 0.5, 13).unwrap();
        for spin in [Spin::Plus, Spin::Minus] {
            let wc = WindowCounter::new(&g, spin);
            for u in 0..g.len() {
                for r in [0, 1, 3, 6] {
                    assert_eq!(
                        wc.count(&g, u, r),
                        g.count_in_window(u, r, spin),
                        "u={u} r={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn disjoint_set_merges() {
        let mut ds = DisjointSet::new(6);
        ds.union(0, 1);
        ds.union(4, 5);
        ds.union(1, 5);
        assert_eq!(ds.find(0), ds.find(4));
        assert_ne!(ds.find(0), ds.find(2));
    }
}
