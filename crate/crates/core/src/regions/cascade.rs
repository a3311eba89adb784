//! Monotone cascade closure and the reachability questions built on it.
//!
//! Restricted to flips of one particle type θ → θ̄, every flip only lowers
//! the θ-count seen by the remaining θ-particles, so a particle that can flip
//! stays able to flip. The greedy fixpoint is therefore unique and contains
//! every set reachable by some flip sequence.

use std::collections::VecDeque;

use super::affected::is_theta_affected;
use super::radical::RadicalParams;
use crate::grid::{Intolerance, Node, Spin, SpinGrid};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CascadeResult {
    /// Flipped nodes in the order they flipped.
    pub order: Vec<Node>,
}

impl CascadeResult {
    pub fn flip_count(&self) -> usize {
        self.order.len()
    }

    /// Flipped nodes, ascending.
    pub fn flipped_set(&self) -> Vec<Node> {
        let mut s = self.order.clone();
        s.sort_unstable();
        s
    }
}

/// Repeatedly flips θ-particles inside `allowed` that are unstable and would
/// be stable after flipping, until none remain. Mutates `grid`.
pub fn cascade_closure(
    grid: &mut SpinGrid,
    tau: &Intolerance,
    allowed: &[Node],
    theta: Spin,
) -> CascadeResult {
    let mut inside = vec![false; grid.len()];
    for &u in allowed {
        inside[u] = true;
    }
    let mut queued = vec![false; grid.len()];
    let mut queue: VecDeque<Node> = VecDeque::new();
    for &u in allowed {
        if !queued[u] {
            queued[u] = true;
            queue.push_back(u);
        }
    }
    let w = grid.w();
    let mut order = Vec::new();
    let mut touched = Vec::new();
    while let Some(u) = queue.pop_front() {
        queued[u] = false;
        if grid.spin(u) != theta || !grid.is_flippable(u, tau) {
            continue;
        }
        grid.flip(u);
        order.push(u);
        touched.clear();
        grid.for_each_in_window(u, w, |v| touched.push(v));
        for &v in &touched {
            if inside[v] && !queued[v] && grid.spin(v) == theta {
                queued[v] = true;
                queue.push_back(v);
            }
        }
    }
    CascadeResult { order }
}

/// Nodes at wrapped l∞ distance at most `radius` from `seed` (8-neighbor BFS).
/// Returned with their distances.
pub fn dilate(grid: &SpinGrid, seed: &[Node], radius: u32) -> Vec<(Node, u32)> {
    let mut dist = vec![u32::MAX; grid.len()];
    let mut queue = VecDeque::new();
    let mut out = Vec::new();
    for &u in seed {
        if dist[u] == u32::MAX {
            dist[u] = 0;
            queue.push_back(u);
        }
    }
    while let Some(u) = queue.pop_front() {
        out.push((u, dist[u]));
        if dist[u] == radius {
            continue;
        }
        let (x, y) = grid.coords(u);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let v = grid.node(x + dx, y + dy);
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct ExpandableReport {
    /// Cluster dilated by `⌊N/4⌋`.
    pub inner: Vec<Node>,
    /// The next `⌊N/4⌋` shell.
    pub shell: Vec<Node>,
    pub cascade: CascadeResult,
    /// θ-affected shell nodes after the cascade.
    pub affected_in_shell: Vec<Node>,
}

impl ExpandableReport {
    pub fn is_expandable(&self) -> bool {
        !self.affected_in_shell.is_empty()
    }
}

/// Runs the θ-cascade inside the `⌊N/4⌋`-dilation of `cluster` (on a copy)
/// and reports θ-affected nodes in the following `⌊N/4⌋` shell.
pub fn is_expandable(
    grid: &SpinGrid,
    tau: &Intolerance,
    cluster: &[Node],
    theta: Spin,
) -> ExpandableReport {
    let d = grid.neighborhood_size() / 4;
    let ring = dilate(grid, cluster, 2 * d);
    let inner: Vec<Node> = ring
        .iter()
        .filter(|&&(_, k)| k <= d)
        .map(|&(u, _)| u)
        .collect();
    let shell: Vec<Node> = ring
        .iter()
        .filter(|&&(_, k)| k > d)
        .map(|&(u, _)| u)
        .collect();
    let mut work = grid.clone();
    let cascade = cascade_closure(&mut work, tau, &inner, theta);
    let affected_in_shell = shell
        .iter()
        .copied()
        .filter(|&u| is_theta_affected(&work, tau, u, theta))
        .collect();
    ExpandableReport {
        inner,
        shell,
        cascade,
        affected_in_shell,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriggerOutcome {
    pub flips: usize,
    /// Every particle of the radius-`⌊w/2⌋` core is θ̄ afterwards.
    pub core_monochromatic: bool,
}

/// Cascade of θ-particles restricted to the radius-`⌊w/2⌋` core around
/// `center` (at most `(w+1)²` flips), on a copy of `grid`.
pub fn expand_radical_region(
    grid: &SpinGrid,
    center: Node,
    tau: &Intolerance,
    theta: Spin,
) -> TriggerOutcome {
    let core = grid.window_nodes(center, grid.w() / 2);
    let mut work = grid.clone();
    let result = cascade_closure(&mut work, tau, &core, theta);
    TriggerOutcome {
        flips: result.flip_count(),
        core_monochromatic: core.iter().all(|&u| work.spin(u) == theta.opposite()),
    }
}

impl RadicalParams {
    /// Radius-`⌊(1+ε′)w⌋` window as the allowed region.
    pub fn region_nodes(&self, grid: &SpinGrid, center: Node) -> Vec<Node> {
        grid.window_nodes(center, self.outer_radius(grid.w()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SimRng;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    #[test]
    fn nothing_to_flip_in_opposite_region() {
        let mut g = SpinGrid::uniform(8, 1, Spin::Minus).unwrap();
        let tau = Intolerance::parse("0.4", 1).unwrap();
        let region = g.window_nodes(0, 3);
        assert_eq!(
            cascade_closure(&mut g, &tau, &region, Spin::Plus).flip_count(),
            0
        );
    }

    #[test]
    fn isolated_unstable_node_flips_alone() {
        let mut g = SpinGrid::uniform(8, 1, Spin::Minus).unwrap();
        let u = g.node(1, 1);
        g.flip(u);
        let tau = Intolerance::parse("0.4", 1).unwrap();
        let region = g.window_nodes(u, 3);
        let r = cascade_closure(&mut g, &tau, &region, Spin::Plus);
        assert_eq!(r.order, vec![u]);
    }

    #[test]
    fn closure_is_order_independent() {
        let mut rng = SimRng::seed_from_u64(4);
        for (seed, text) in [(1, "0.45"), (2, "0.4"), (3, "0.55"), (4, "0.6")] {
            let g = SpinGrid::new_random(10, 2, 0.5, seed).unwrap();
            let tau = Intolerance::parse(text, 2).unwrap();
            let mut region = g.window_nodes(g.origin(), 6);
            let mut first = g.clone();
            let base = cascade_closure(&mut first, &tau, &region, Spin::Plus).flipped_set();
            for _ in 0..5 {
                region.shuffle(&mut rng);
                let mut copy = g.clone();
                let r = cascade_closure(&mut copy, &tau, &region, Spin::Plus);
                assert_eq!(r.flipped_set(), base);
                assert_eq!(copy, first);
            }
        }
    }

    #[test]
    fn dilation_is_linf_ball() {
        let g = SpinGrid::uniform(10, 1, Spin::Plus).unwrap();
        let seed = [g.node(0, 0), g.node(1, 0)];
        let ring = dilate(&g, &seed, 3);
        for u in 0..g.len() {
            let d = seed.iter().map(|&s| g.linf_distance(s, u)).min().unwrap();
            let found = ring.iter().find(|&&(v, _)| v == u);
            match found {
                Some(&(_, k)) => assert_eq!(k as u64, d),
                None => assert!(d > 3),
            }
        }
    }

    #[test]
    fn expandable_static_case() {
        // cluster already −1, a +1 field outside: the shell sees no + affected nodes
        let g = SpinGrid::uniform(16, 1, Spin::Plus).unwrap();
        let tau = Intolerance::parse("0.45", 1).unwrap();
        let report = is_expandable(&g, &tau, &[g.origin()], Spin::Plus);
        // N = 9: dilation by 2, shell out to 4
        assert_eq!(report.inner.len(), 5 * 5);
        assert_eq!(report.shell.len(), 9 * 9 - 25);
        assert!(!report.is_expandable());
    }
}
