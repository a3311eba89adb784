use super::RegionError;
use crate::grid::{Intolerance, Node, SpinGrid};

/// Annulus `{y : r − √2·w ≤ ‖center − y‖₂ ≤ r}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FirewallSpec {
    pub center: Node,
    pub r: u64,
    pub w: u32,
}

impl FirewallSpec {
    pub fn new(center: Node, r: u64, w: u32) -> Result<Self, RegionError> {
        if r < 3 * w as u64 {
            return Err(RegionError::Params(format!(
                "firewall radius {r} < 3w = {}",
                3 * w
            )));
        }
        Ok(Self { center, r, w })
    }

    /// Membership for integer offsets `(dx, dy)` from the center.
    pub fn contains_offset(&self, dx: i64, dy: i64) -> bool {
        let d2 = (dx * dx + dy * dy) as i128;
        let r2 = (self.r as i128) * (self.r as i128);
        if d2 > r2 {
            return false;
        }
        // d ≥ r − √2w  ⟺  r² + 2w² − d² ≤ 2√2·r·w
        let w2 = (self.w as i128) * (self.w as i128);
        let a = r2 + 2 * w2 - d2;
        a <= 0 || a * a <= 8 * r2 * w2
    }

    pub fn within_disk(&self, dx: i64, dy: i64) -> bool {
        dx * dx + dy * dy <= (self.r * self.r) as i64
    }

    /// Member offsets, row-major from the bottom-left.
    pub fn member_offsets(&self) -> Vec<(i64, i64)> {
        let r = self.r as i64;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if self.contains_offset(dx, dy) {
                    out.push((dx, dy));
                }
            }
        }
        out
    }

    pub fn members(&self, grid: &SpinGrid) -> Result<Vec<Node>, RegionError> {
        if 2 * self.r as usize + 1 > grid.side() {
            return Err(RegionError::Geometry(format!(
                "firewall radius {} does not fit torus side {}",
                self.r,
                grid.side()
            )));
        }
        let (cx, cy) = grid.coords(self.center);
        Ok(self
            .member_offsets()
            .into_iter()
            .map(|(dx, dy)| grid.node(cx + dx, cy + dy))
            .collect())
    }

    /// Smallest worst-case same-state count over members, with everything
    /// inside the closed disk same-state and everything outside opposite.
    pub fn worst_case_count(&self) -> u32 {
        let w = self.w as i64;
        self.member_offsets()
            .into_iter()
            .map(|(x, y)| {
                let mut c = 0;
                for dy in -w..=w {
                    for dx in -w..=w {
                        c += self.within_disk(x + dx, y + dy) as u32;
                    }
                }
                c
            })
            .min()
            .unwrap_or(0)
    }
}

/// All annulus members share one state.
pub fn is_firewall(grid: &SpinGrid, spec: &FirewallSpec) -> Result<bool, RegionError> {
    let members = spec.members(grid)?;
    let first = grid.spin(members[0]);
    Ok(members.iter().all(|&u| grid.spin(u) == first))
}

/// Every member stays stable against the worst possible exterior.
pub fn static_firewall_stable(spec: &FirewallSpec, tau: &Intolerance) -> bool {
    spec.worst_case_count() >= tau.threshold()
}
