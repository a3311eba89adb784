use super::WindowCounter;
use crate::grid::{Node, Spin, SpinGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonoRegion {
    pub radius: u32,
    /// `(2ρ+1)²`.
    pub size: u64,
    pub center: Node,
    pub spin: Spin,
}

/// Largest monochromatic radius at every center, capped at `h − 1`.
pub fn center_radii(grid: &SpinGrid) -> Vec<u32> {
    let plus = WindowCounter::new(grid, Spin::Plus);
    let cap = grid.h() as u32 - 1;
    (0..grid.len())
        .map(|c| {
            let (x, y) = grid.coords(c);
            let mono = |r: u32| {
                let k = plus.count_at(x, y, r);
                k == 0 || k == (2 * r + 1) * (2 * r + 1)
            };
            let (mut lo, mut hi) = (0, cap);
            while lo < hi {
                let mid = (lo + hi + 1) / 2;
                if mono(mid) {
                    lo = mid;
                } else {
                    hi = mid - 1;
                }
            }
            lo
        })
        .collect()
}

/// Largest monochromatic square neighborhood containing `u`; ties go to the
/// lexicographically smallest center `(x, y)`.
pub fn monochromatic_region(grid: &SpinGrid, u: Node) -> MonoRegion {
    region_from_radii(grid, &center_radii(grid), u)
}

pub(crate) fn region_from_radii(grid: &SpinGrid, radii: &[u32], u: Node) -> MonoRegion {
    let mut best: Option<(u32, (i64, i64), Node)> = None;
    for c in 0..grid.len() {
        let r = radii[c];
        if grid.linf_distance(c, u) > r as u64 {
            continue;
        }
        let key = grid.coords(c);
        let better = match best {
            None => true,
            Some((br, bkey, _)) => r > br || (r == br && key < bkey),
        };
        if better {
            best = Some((r, key, c));
        }
    }
    let (radius, _, center) = best.expect("u covers itself");
    let side = 2 * radius as u64 + 1;
    MonoRegion {
        radius,
        size: side * side,
        center,
        spin: grid.spin(center),
    }
}
