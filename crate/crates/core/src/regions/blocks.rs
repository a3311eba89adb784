//! Renormalization into square blocks, good/bad labels and bad clusters.

use super::{DisjointSet, RegionError, WindowCounter};
use crate::grid::{Node, Spin, SpinGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockLabel {
    Good,
    Bad,
}

/// Moore-connected component of bad blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BadCluster {
    /// Block indices, ascending.
    pub blocks: Vec<usize>,
    /// Smallest block index in the cluster.
    pub reference: usize,
    /// Largest block l∞ distance from `reference`.
    pub radius: u64,
}

/// Disjoint tiling of the torus by `side × side` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockMap {
    side: usize,
    per_axis: usize,
    h: i64,
    labels: Vec<BlockLabel>,
}

pub fn renormalize(grid: &SpinGrid, side: usize) -> Result<BlockMap, RegionError> {
    if side == 0 || grid.side() % side != 0 {
        return Err(RegionError::Geometry(format!(
            "block side {side} does not divide torus side {}",
            grid.side()
        )));
    }
    let per_axis = grid.side() / side;
    Ok(BlockMap {
        side,
        per_axis,
        h: grid.h() as i64,
        labels: vec![BlockLabel::Good; per_axis * per_axis],
    })
}

impl BlockMap {
    /// A map with given labels, row-major in block coordinates.
    pub fn from_labels(
        per_axis: usize,
        side: usize,
        labels: Vec<BlockLabel>,
    ) -> Result<Self, RegionError> {
        if labels.len() != per_axis * per_axis {
            return Err(RegionError::Geometry("label count".into()));
        }
        Ok(Self {
            side,
            per_axis,
            h: (per_axis * side / 2) as i64,
            labels,
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn block_of(&self, grid: &SpinGrid, u: Node) -> usize {
        let (x, y) = grid.coords(u);
        let bx = ((x + self.h) as usize) / self.side;
        let by = ((y + self.h) as usize) / self.side;
        by * self.per_axis + bx
    }

    /// Block coordinates `(bx, by)`.
    pub fn block_coords(&self, b: usize) -> (usize, usize) {
        (b % self.per_axis, b / self.per_axis)
    }

    pub fn nodes(&self, grid: &SpinGrid, b: usize) -> Vec<Node> {
        let (bx, by) = self.block_coords(b);
        let mut out = Vec::with_capacity(self.side * self.side);
        for dy in 0..self.side {
            for dx in 0..self.side {
                let x = (bx * self.side + dx) as i64 - self.h;
                let y = (by * self.side + dy) as i64 - self.h;
                out.push(grid.node(x, y));
            }
        }
        out
    }

    pub fn label(&self, b: usize) -> BlockLabel {
        self.labels[b]
    }

    pub fn set_label(&mut self, b: usize, label: BlockLabel) {
        self.labels[b] = label;
    }

    pub fn bad_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|&&l| l == BlockLabel::Bad)
            .count()
    }

    /// Labels every block for type `theta`.
    pub fn classify(&mut self, grid: &SpinGrid, theta: Spin, eps: f64) {
        let counter = WindowCounter::new(grid, theta.opposite());
        for b in 0..self.labels.len() {
            self.labels[b] = classify_with(grid, self, &counter, b, eps);
        }
    }

    /// Wrapped l∞ distance between blocks.
    pub fn block_distance(&self, a: usize, b: usize) -> u64 {
        let (ax, ay) = self.block_coords(a);
        let (bx, by) = self.block_coords(b);
        let p = self.per_axis as i64;
        let wrap = |d: i64| {
            let d = d.rem_euclid(p);
            d.min(p - d) as u64
        };
        wrap(ax as i64 - bx as i64).max(wrap(ay as i64 - by as i64))
    }

    fn moore_neighbors(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        let (bx, by) = self.block_coords(b);
        let p = self.per_axis as i64;
        (-1i64..=1)
            .flat_map(move |dy| (-1i64..=1).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx != 0 || dy != 0)
            .map(move |(dx, dy)| {
                let x = (bx as i64 + dx).rem_euclid(p) as usize;
                let y = (by as i64 + dy).rem_euclid(p) as usize;
                y * self.per_axis + x
            })
    }

    /// Moore-connected components of bad blocks, ordered by reference block.
    pub fn bad_clusters(&self) -> Vec<BadCluster> {
        let mut ds = DisjointSet::new(self.labels.len());
        for b in 0..self.labels.len() {
            if self.labels[b] != BlockLabel::Bad {
                continue;
            }
            for nb in self.moore_neighbors(b) {
                if self.labels[nb] == BlockLabel::Bad {
                    ds.union(b, nb);
                }
            }
        }
        let mut by_root: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for b in 0..self.labels.len() {
            if self.labels[b] == BlockLabel::Bad {
                by_root.entry(ds.find(b)).or_default().push(b);
            }
        }
        let mut clusters: Vec<BadCluster> = by_root
            .into_values()
            .map(|blocks| {
                let reference = blocks[0];
                let radius = blocks
                    .iter()
                    .map(|&b| self.block_distance(reference, b))
                    .max()
                    .unwrap_or(0);
                BadCluster {
                    blocks,
                    reference,
                    radius,
                }
            })
            .collect();
        clusters.sort_by_key(|c| c.reference);
        clusters
    }

    /// Radius of the bad cluster containing `block`, measured from `block`;
    /// `None` when `block` is good.
    pub fn cluster_radius_from(&self, block: usize) -> Option<u64> {
        if self.labels[block] != BlockLabel::Bad {
            return None;
        }
        let mut seen = vec![false; self.labels.len()];
        let mut stack = vec![block];
        seen[block] = true;
        let mut radius = 0;
        while let Some(b) = stack.pop() {
            radius = radius.max(self.block_distance(block, b));
            for nb in self.moore_neighbors(b) {
                if !seen[nb] && self.labels[nb] == BlockLabel::Bad {
                    seen[nb] = true;
                    stack.push(nb);
                }
            }
        }
        Some(radius)
    }
}

fn classify_with(
    grid: &SpinGrid,
    map: &BlockMap,
    opposite: &WindowCounter,
    block: usize,
    eps: f64,
) -> BlockLabel {
    let r = grid.w() / 2;
    let n_i = ((2 * r + 1) * (2 * r + 1)) as f64;
    let bound = (grid.neighborhood_size() as f64).powf(0.5 + eps);
    let worst = map
        .nodes(grid, block)
        .into_iter()
        .map(|c| opposite.count(grid, c, r) as f64 - n_i / 2.0)
        .fold(f64::NEG_INFINITY, f64::max);
    if worst < bound {
        BlockLabel::Good
    } else {
        BlockLabel::Bad
    }
}

/// Good iff every radius-`⌊w/2⌋` window centered in the block holds fewer
/// than `N_I/2 + N^{1/2+ε}` particles of the opposite type.
pub fn classify_block(
    grid: &SpinGrid,
    map: &BlockMap,
    block: usize,
    theta: Spin,
    eps: f64,
) -> BlockLabel {
    let counter = WindowCounter::new(grid, theta.opposite());
    classify_with(grid, map, &counter, block, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_form_exact_cover() {
        let g = SpinGrid::uniform(8, 1, Spin::Plus).unwrap();
        let map = renormalize(&g, 4).unwrap();
        assert_eq!(map.len(), 16);
        let mut hits = vec![0; g.len()];
        for b in 0..map.len() {
            let nodes = map.nodes(&g, b);
            assert_eq!(nodes.len(), 16);
            for u in nodes {
                hits[u] += 1;
                assert_eq!(map.block_of(&g, u), b);
            }
        }
        assert!(hits.iter().all(|&h| h == 1));
        for u in 0..g.len() {
            let (x, y) = g.coords(u);
            let expect = ((y + 8) / 4) as usize * 4 + ((x + 8) / 4) as usize;
            assert_eq!(map.block_of(&g, u), expect);
        }
        assert!(renormalize(&g, 3).is_err());
    }

    #[test]
    fn good_and_bad_extremes() {
        // w = 8: N = 289, N^{0.6} ≈ 30.0, windows of radius 4 hold 81 nodes
        let g = SpinGrid::uniform(20, 8, Spin::Plus).unwrap();
        let map = renormalize(&g, 8).unwrap();
        assert_eq!(
            classify_block(&g, &map, 0, Spin::Plus, 0.1),
            BlockLabel::Good
        );
        assert_eq!(
            classify_block(&g, &map, 0, Spin::Minus, 0.1),
            BlockLabel::Bad
        );
    }

    #[test]
    fn clusters_and_radii() {
        let mut map = BlockMap::from_labels(8, 1, vec![BlockLabel::Good; 64]).unwrap();
        assert!(map.bad_clusters().is_empty());
        map.set_label(9, BlockLabel::Bad);
        let c = map.bad_clusters();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].radius, 0);
        // L shape: (1,1) (2,1) (3,1) (3,2) (3,3), plus a separate block at (6,6)
        for (x, y) in [(2, 1), (3, 1), (3, 2), (3, 3), (6, 6)] {
            map.set_label(y * 8 + x, BlockLabel::Bad);
        }
        let c = map.bad_clusters();
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].blocks, vec![9, 10, 11, 19, 27]);
        assert_eq!(c[0].radius, 2);
        assert_eq!(c[1].radius, 0);
        assert_eq!(map.cluster_radius_from(27), Some(2));
        assert_eq!(map.cluster_radius_from(0), None);
        // diagonal contact joins clusters
        map.set_label(4 * 8 + 4, BlockLabel::Bad);
        assert_eq!(map.bad_clusters().len(), 2);
        assert_eq!(map.cluster_radius_from(9), Some(3));
    }
}
