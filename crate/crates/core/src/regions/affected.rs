use crate::grid::{Intolerance, Node, Spin, SpinGrid};

/// Which particle type a node is affected for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Affected {
    /// A `+1` particle here would be unstable, a `−1` particle stable.
    Plus,
    /// A `−1` particle here would be unstable, a `+1` particle stable.
    Minus,
    None,
}

impl Affected {
    pub fn for_spin(spin: Spin) -> Self {
        match spin {
            Spin::Plus => Affected::Plus,
            Spin::Minus => Affected::Minus,
        }
    }
}

/// Whether a θ-particle at `u` would be unstable while a θ̄-particle would be stable.
#[inline]
pub fn is_theta_affected(grid: &SpinGrid, tau: &Intolerance, u: Node, theta: Spin) -> bool {
    let n = grid.neighborhood_size();
    let self_plus = (grid.spin(u) == Spin::Plus) as u32;
    // +1 particles among the N−1 surrounding nodes
    let k = grid.plus_count(u) - self_plus;
    let (theta_around, other_around) = match theta {
        Spin::Plus => (k, n - 1 - k),
        Spin::Minus => (n - 1 - k, k),
    };
    theta_around + 1 < tau.threshold() && other_around + 1 >= tau.threshold()
}

pub fn affected_label(grid: &SpinGrid, tau: &Intolerance, u: Node) -> Affected {
    let plus = is_theta_affected(grid, tau, u, Spin::Plus);
    let minus = is_theta_affected(grid, tau, u, Spin::Minus);
    assert!(!(plus && minus), "node {u} both plus- and minus-affected");
    match (plus, minus) {
        (true, _) => Affected::Plus,
        (_, true) => Affected::Minus,
        _ => Affected::None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffectedMap {
    labels: Vec<Affected>,
}

impl AffectedMap {
    pub fn label(&self, u: Node) -> Affected {
        self.labels[u]
    }

    pub fn labels(&self) -> &[Affected] {
        &self.labels
    }

    pub fn nodes(&self, kind: Affected) -> impl Iterator<Item = Node> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == kind)
            .map(|(u, _)| u)
    }

    pub fn count(&self, kind: Affected) -> usize {
        self.labels.iter().filter(|&&l| l == kind).count()
    }
}

pub fn classify_affected(grid: &SpinGrid, tau: &Intolerance) -> AffectedMap {
    AffectedMap {
        labels: (0..grid.len())
            .map(|u| affected_label(grid, tau, u))
            .collect(),
    }
}

/// Externally imposed affected* labels. A node is affected* when marked, or
/// when no neighborhood could make a particle there stable (`τN > N`, which
/// never happens for `τ ≤ 1`).
#[derive(Clone, Debug, Default)]
pub struct AffectedStarMarkers {
    marked: std::collections::HashSet<Node>,
}

impl AffectedStarMarkers {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn mark(&mut self, u: Node) {
        self.marked.insert(u);
    }

    pub fn mark_all<I: IntoIterator<Item = Node>>(&mut self, nodes: I) {
        self.marked.extend(nodes);
    }

    pub fn is_affected_star(&self, grid: &SpinGrid, tau: &Intolerance, u: Node) -> bool {
        self.marked.contains(&u) || tau.threshold() > grid.neighborhood_size()
    }
}
