//! First-passage growth from an origin seed block on the unbounded lattice.
//!
//! A node becomes eligible once some fully flipped block of radius `⌊w/2⌋`
//! has it on its outer ring; it then flips after one waiting time. Waiting
//! times are drawn from a per-node stream keyed by `(seed, x, y)`, so one
//! seed fixes the whole weight field regardless of event order.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};
use std::io::{self, Write};

use rand::SeedableRng;
use thiserror::Error;

use crate::dynamics::WaitingTime;
use crate::scalar::Scalar;
use crate::SimRng;

/// Lattice site `(x, y)`.
pub type Site = (i64, i64);

#[derive(Debug, Error, PartialEq)]
pub enum FppError {
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("time budget must be nonnegative and finite, got {0}")]
    Budget(f64),
    #[error("regression needs at least two distinct abscissae")]
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassageRecord {
    pub target: Site,
    pub passage_time: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Pending {
    time: f64,
    site: Site,
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.site.cmp(&self.site))
    }
}

fn site_stream(site: Site) -> u64 {
    ((site.0 as u32 as u64) << 32) | site.1 as u32 as u64
}

/// Waiting time of `site` under `seed`.
pub fn site_waiting_time(dist: &dyn WaitingTime, seed: u64, site: Site) -> f64 {
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(site_stream(site));
    dist.sample(&mut rng)
}

pub struct GrowthState<'a> {
    w: u32,
    seed: u64,
    dist: &'a dyn WaitingTime,
    flipped: HashMap<Site, f64>,
    eligible_since: HashMap<Site, f64>,
    complete_blocks: HashSet<Site>,
    queue: BinaryHeap<Pending>,
    time: f64,
}

impl<'a> GrowthState<'a> {
    /// Seed block flipped at time 0.
    pub fn new(w: u32, dist: &'a dyn WaitingTime, seed: u64) -> Self {
        let mut s = Self {
            w,
            seed,
            dist,
            flipped: HashMap::new(),
            eligible_since: HashMap::new(),
            complete_blocks: HashSet::new(),
            queue: BinaryHeap::new(),
            time: 0.0,
        };
        let r = s.block_radius() as i64;
        for y in -r..=r {
            for x in -r..=r {
                s.flipped.insert((x, y), 0.0);
            }
        }
        for y in -r..=r {
            for x in -r..=r {
                s.after_flip((x, y));
            }
        }
        s
    }

    /// Radius of a w-block.
    pub fn block_radius(&self) -> u32 {
        self.w / 2
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn is_flipped(&self, site: Site) -> bool {
        self.flipped.contains_key(&site)
    }

    pub fn flip_time(&self, site: Site) -> Option<f64> {
        self.flipped.get(&site).copied()
    }

    pub fn eligible_since(&self, site: Site) -> Option<f64> {
        self.eligible_since.get(&site).copied()
    }

    pub fn flipped_count(&self) -> usize {
        self.flipped.len()
    }

    pub fn flipped_sites(&self) -> impl Iterator<Item = (Site, f64)> + '_ {
        self.flipped.iter().map(|(&s, &t)| (s, t))
    }

    fn block_complete(&self, c: Site) -> bool {
        let r = self.block_radius() as i64;
        (-r..=r).all(|dy| (-r..=r).all(|dx| self.flipped.contains_key(&(c.0 + dx, c.1 + dy))))
    }

    /// A complete block centered at `c` has `site` on its outer ring.
    pub fn has_witness(&self, site: Site) -> bool {
        let r = self.block_radius() as i64 + 1;
        (-r..=r).any(|dy| {
            (-r..=r).any(|dx| {
                let ring = dx.abs() == r || dy.abs() == r;
                ring && self.complete_blocks.contains(&(site.0 + dx, site.1 + dy))
            })
        })
    }

    fn after_flip(&mut self, v: Site) {
        let r = self.block_radius() as i64;
        for dy in -r..=r {
            for dx in -r..=r {
                let c = (v.0 + dx, v.1 + dy);
                if self.complete_blocks.contains(&c) || !self.block_complete(c) {
                    continue;
                }
                self.complete_blocks.insert(c);
                let s = r + 1;
                for ey in -s..=s {
                    for ex in -s..=s {
                        if ex.abs() != s && ey.abs() != s {
                            continue;
                        }
                        let u = (c.0 + ex, c.1 + ey);
                        if self.flipped.contains_key(&u) || self.eligible_since.contains_key(&u) {
                            continue;
                        }
                        self.eligible_since.insert(u, self.time);
                        let wait = site_waiting_time(self.dist, self.seed, u);
                        self.queue.push(Pending {
                            time: self.time + wait,
                            site: u,
                        });
                    }
                }
            }
        }
    }

    /// Time of the next flip, if any node is eligible.
    pub fn peek_time(&self) -> Option<f64> {
        self.queue.peek().map(|p| p.time)
    }

    /// Executes the next flip.
    pub fn step(&mut self) -> Option<(Site, f64)> {
        let Pending { time, site } = self.queue.pop()?;
        debug_assert!(self.has_witness(site));
        self.time = time;
        self.flipped.insert(site, time);
        self.after_flip(site);
        Some((site, time))
    }

    /// Flips everything due at or before `budget`.
    pub fn advance_to(&mut self, budget: f64) {
        while self.peek_time().is_some_and(|t| t <= budget) {
            self.step();
        }
    }
}

/// Runs one growth until every target has flipped.
pub fn simulate_growth(
    w: u32,
    targets: &[Site],
    dist: &dyn WaitingTime,
    seed: u64,
) -> Vec<PassageRecord> {
    let mut state = GrowthState::new(w, dist, seed);
    let mut remaining = targets.iter().filter(|t| !state.is_flipped(**t)).count();
    while remaining > 0 {
        let (site, _) = state.step().expect("growth never stalls");
        if targets.contains(&site) {
            remaining -= 1;
        }
    }
    targets
        .iter()
        .map(|&t| PassageRecord {
            target: t,
            passage_time: state.flip_time(t).expect("flipped"),
            seed,
        })
        .collect()
}

/// Flipped set once time `budget` has elapsed.
pub fn empirical_ball(
    w: u32,
    budget: f64,
    dist: &dyn WaitingTime,
    seed: u64,
) -> Result<HashSet<Site>, FppError> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(FppError::Budget(budget));
    }
    let mut state = GrowthState::new(w, dist, seed);
    state.advance_to(budget);
    Ok(state.flipped.into_keys().collect())
}

/// Largest `k` with `k·dir` in `ball` and every earlier multiple in it too.
pub fn directional_radius(ball: &HashSet<Site>, dir: Site) -> u64 {
    let mut k = 0;
    while ball.contains(&((k as i64 + 1) * dir.0, (k as i64 + 1) * dir.1)) {
        k += 1;
    }
    k
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PassageStats<F> {
    pub samples: usize,
    pub mean: F,
    /// Sample standard deviation.
    pub std: F,
    pub cov: F,
}

pub fn passage_stats<F: Scalar>(times: &[F]) -> Result<PassageStats<F>, FppError> {
    if times.len() < 2 {
        return Err(FppError::InsufficientSamples(times.len()));
    }
    let n = F::from_usize(times.len()).unwrap();
    let mean = times.iter().fold(F::zero(), |a, &t| a + t) / n;
    let ss = times
        .iter()
        .fold(F::zero(), |a, &t| a + (t - mean) * (t - mean));
    let std = (ss / (n - F::one())).sqrt();
    Ok(PassageStats {
        samples: times.len(),
        mean,
        std,
        cov: std / mean,
    })
}

pub fn stats_by_target(
    records: &[PassageRecord],
) -> Result<BTreeMap<Site, PassageStats<f64>>, FppError> {
    let mut groups: BTreeMap<Site, Vec<f64>> = BTreeMap::new();
    for r in records {
        groups.entry(r.target).or_default().push(r.passage_time);
    }
    groups
        .into_iter()
        .map(|(t, v)| Ok((t, passage_stats(&v)?)))
        .collect()
}

/// Least-squares line; returns `(slope, intercept, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64), FppError> {
    let n = xs.len().min(ys.len()) as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(FppError::Degenerate);
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 {
        sxy * sxy / (sxx * syy)
    } else {
        1.0
    };
    Ok((slope, my - slope * mx, r2))
}

pub const PASSAGE_HEADER: &str = "target_x,target_y,seed,passage_time";

pub fn write_passage_csv<W: Write>(records: &[PassageRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{PASSAGE_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{}",
            r.target.0, r.target.1, r.seed, r.passage_time
        )?;
    }
    Ok(())
}
