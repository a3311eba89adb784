//! Glauber dynamics under a discrete uniform-pick chain or a continuous
//! clock process, with steady-state detection through the Lyapunov sum.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::grid::{Intolerance, Node, Spin, SpinGrid};
use crate::SimRng;

/// Default event budget for [`Simulation::run_to_steady_state`].
pub const DEFAULT_MAX_EVENTS: u64 = 1_000_000_000;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("invalid waiting-time distribution: {0}")]
    Distribution(String),
    #[error("intolerance is for N={tau_n}, grid has N={grid_n}")]
    Mismatch { tau_n: u32, grid_n: u32 },
    #[error("clock state does not match the grid: {0}")]
    ClockState(String),
}

/// Waiting-time law `F` of the clock process.
///
/// Implementations must satisfy `F(x) = 0` for `x ≤ 0`, must not be a point
/// mass, and must have a finite exponential moment `E[e^{γT}]` for some `γ > 0`.
pub trait WaitingTime: fmt::Debug + Send + Sync {
    fn sample(&self, rng: &mut SimRng) -> f64;

    /// A `γ` with finite exponential moment, when known.
    fn exponential_moment(&self) -> Option<f64>;

    /// Textual form accepted by [`parse_waiting_time`]; `None` when the
    /// distribution cannot be restored from a checkpoint.
    fn describe(&self) -> Option<String> {
        None
    }
}

#[derive(Clone, Debug)]
pub struct Exponential {
    rate: f64,
    law: Exp<f64>,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self, DynamicsError> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(DynamicsError::Distribution(format!(
                "exponential rate {rate}"
            )));
        }
        let law = Exp::new(rate).map_err(|e| DynamicsError::Distribution(e.to_string()))?;
        Ok(Self { rate, law })
    }

    pub fn unit() -> Self {
        Self::new(1.0).expect("unit rate")
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl WaitingTime for Exponential {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        self.law.sample(rng)
    }

    fn exponential_moment(&self) -> Option<f64> {
        Some(self.rate / 2.0)
    }

    fn describe(&self) -> Option<String> {
        Some(format!("exp:{}", self.rate))
    }
}

/// Uniform waiting times on `(lo, hi)`, `0 ≤ lo < hi`.
#[derive(Clone, Debug)]
pub struct UniformWaiting {
    lo: f64,
    hi: f64,
}

impl UniformWaiting {
    pub fn new(lo: f64, hi: f64) -> Result<Self, DynamicsError> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(DynamicsError::Distribution(format!(
                "uniform on ({lo}, {hi})"
            )));
        }
        Ok(Self { lo, hi })
    }
}

impl WaitingTime for UniformWaiting {
    fn sample(&self, rng: &mut SimRng) -> f64 {
        loop {
            let t = rng.random_range(self.lo..self.hi);
            if t > 0.0 {
                return t;
            }
        }
    }

    fn exponential_moment(&self) -> Option<f64> {
        Some(1.0)
    }

    fn describe(&self) -> Option<String> {
        Some(format!("uniform:{}:{}", self.lo, self.hi))
    }
}

/// Parses `exp:<rate>` or `uniform:<lo>:<hi>`.
pub fn parse_waiting_time(text: &str) -> Result<Box<dyn WaitingTime>, DynamicsError> {
    let parts: Vec<&str> = text.trim().split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| DynamicsError::Distribution(format!("bad number `{s}` in `{text}`")))
    };
    match parts.as_slice() {
        ["exp"] => Ok(Box::new(Exponential::unit())),
        ["exp", rate] => Ok(Box::new(Exponential::new(num(rate)?)?)),
        ["uniform", lo, hi] => Ok(Box::new(UniformWaiting::new(num(lo)?, num(hi)?)?)),
        _ => Err(DynamicsError::Distribution(format!(
            "unknown distribution `{text}`"
        ))),
    }
}

/// Fenwick-indexed node set; selection by rank is independent of insertion
/// history, so the discrete chain's state is just `(grid, rng)`.
#[derive(Clone, Debug)]
struct IndexedSet {
    tree: Vec<u32>,
    member: Vec<bool>,
    len: usize,
    top_bit: usize,
}

impl IndexedSet {
    fn new(capacity: usize) -> Self {
        let top_bit = if capacity == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - capacity.leading_zeros())
        };
        Self {
            tree: vec![0; capacity + 1],
            member: vec![false; capacity],
            len: 0,
            top_bit,
        }
    }

    fn add(&mut self, u: Node, delta: i32) {
        let mut i = u + 1;
        while i < self.tree.len() {
            self.tree[i] = (self.tree[i] as i32 + delta) as u32;
            i += i & i.wrapping_neg();
        }
    }

    fn insert(&mut self, u: Node) {
        if !self.member[u] {
            self.member[u] = true;
            self.len += 1;
            self.add(u, 1);
        }
    }

    fn remove(&mut self, u: Node) {
        if self.member[u] {
            self.member[u] = false;
            self.len -= 1;
            self.add(u, -1);
        }
    }

    #[inline]
    fn contains(&self, u: Node) -> bool {
        self.member[u]
    }

    /// Member of rank `k` (0-based) in index order.
    fn select(&self, mut k: usize) -> Node {
        debug_assert!(k < self.len);
        let mut pos = 0;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && (self.tree[next] as usize) <= k {
                pos = next;
                k -= self.tree[next] as usize;
            }
            step >>= 1;
        }
        pos
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Due(f64, Node);

impl Eq for Due {}

impl PartialOrd for Due {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Due {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

#[derive(Debug)]
struct ClockQueue {
    dist: Box<dyn WaitingTime>,
    due: Vec<f64>,
    heap: BinaryHeap<Reverse<Due>>,
    now: f64,
}

impl ClockQueue {
    fn arm(&mut self, u: Node, rng: &mut SimRng) {
        let t = self.now + self.dist.sample(rng);
        self.due[u] = t;
        self.heap.push(Reverse(Due(t, u)));
    }

    fn disarm(&mut self, u: Node) {
        self.due[u] = f64::INFINITY;
    }

    /// Pops the earliest live clock, discarding stale heap entries.
    fn pop(&mut self) -> Option<(f64, Node)> {
        while let Some(Reverse(Due(t, u))) = self.heap.pop() {
            if self.due[u] == t {
                return Some((t, u));
            }
        }
        None
    }
}

/// Event source of the dynamics.
#[derive(Debug)]
pub enum Scheduler {
    /// One unstable particle chosen uniformly per step.
    Discrete,
    /// Independent clocks with law `F` on every unstable particle.
    Continuous(Box<dyn WaitingTime>),
}

impl Scheduler {
    pub fn continuous_exponential() -> Self {
        Scheduler::Continuous(Box::new(Exponential::unit()))
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Scheduler::Discrete)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Flipped(Node),
    /// Chosen particle was unstable but flipping would not stabilize it.
    NullEvent(Node),
    NoUnstable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SteadyStateReport {
    pub steps_taken: u64,
    pub flips_executed: u64,
    pub null_events: u64,
    pub final_lyapunov: i64,
    pub reached_steady: bool,
}

/// Cumulative event counters of a simulation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub events: u64,
    pub flips: u64,
    pub null_events: u64,
}

/// A grid evolving under the Glauber rule.
#[derive(Debug)]
pub struct Simulation {
    grid: SpinGrid,
    tau: Intolerance,
    unstable: IndexedSet,
    flippable: Vec<bool>,
    flippable_count: usize,
    rng: SimRng,
    clocks: Option<ClockQueue>,
    lyapunov: i64,
    counters: Counters,
}

impl Simulation {
    pub fn new(
        grid: SpinGrid,
        tau: Intolerance,
        scheduler: Scheduler,
        rng: SimRng,
    ) -> Result<Self, DynamicsError> {
        let mut sim = Self::bare(grid, tau, scheduler, rng)?;
        if let Some(clocks) = sim.clocks.as_mut() {
            for u in 0..sim.grid.len() {
                if sim.unstable.contains(u) {
                    clocks.arm(u, &mut sim.rng);
                }
            }
        }
        Ok(sim)
    }

    fn bare(
        grid: SpinGrid,
        tau: Intolerance,
        scheduler: Scheduler,
        rng: SimRng,
    ) -> Result<Self, DynamicsError> {
        if tau.neighborhood_size() != grid.neighborhood_size() {
            return Err(DynamicsError::Mismatch {
                tau_n: tau.neighborhood_size(),
                grid_n: grid.neighborhood_size(),
            });
        }
        let len = grid.len();
        let mut unstable = IndexedSet::new(len);
        let mut flippable = vec![false; len];
        let mut flippable_count = 0;
        for u in 0..len {
            if grid.is_unstable(u, &tau) {
                unstable.insert(u);
                if grid.is_flip_stabilizable(u, &tau) {
                    flippable[u] = true;
                    flippable_count += 1;
                }
            }
        }
        let clocks = match scheduler {
            Scheduler::Discrete => None,
            Scheduler::Continuous(dist) => Some(ClockQueue {
                dist,
                due: vec![f64::INFINITY; len],
                heap: BinaryHeap::new(),
                now: 0.0,
            }),
        };
        let lyapunov = lyapunov(&grid);
        Ok(Self {
            grid,
            tau,
            unstable,
            flippable,
            flippable_count,
            rng,
            clocks,
            lyapunov,
            counters: Counters::default(),
        })
    }

    /// Rebuilds a simulation from checkpointed parts.
    pub(crate) fn restore(
        grid: SpinGrid,
        tau: Intolerance,
        scheduler: Scheduler,
        rng: SimRng,
        counters: Counters,
        clock_state: Option<(Vec<f64>, f64)>,
    ) -> Result<Self, DynamicsError> {
        let mut sim = Self::bare(grid, tau, scheduler, rng)?;
        sim.counters = counters;
        match (sim.clocks.as_mut(), clock_state) {
            (None, None) => {}
            (Some(clocks), Some((due, now))) => {
                if due.len() != sim.grid.len() {
                    return Err(DynamicsError::ClockState("length".into()));
                }
                for (u, &t) in due.iter().enumerate() {
                    if t.is_finite() != sim.unstable.contains(u) {
                        return Err(DynamicsError::ClockState(format!("node {u}")));
                    }
                    if t.is_finite() {
                        clocks.heap.push(Reverse(Due(t, u)));
                    }
                }
                clocks.due = due;
                clocks.now = now;
            }
            _ => return Err(DynamicsError::ClockState("scheduler kind".into())),
        }
        Ok(sim)
    }

    pub fn grid(&self) -> &SpinGrid {
        &self.grid
    }

    pub fn into_grid(self) -> SpinGrid {
        self.grid
    }

    pub fn intolerance(&self) -> &Intolerance {
        &self.tau
    }

    pub fn rng(&self) -> &SimRng {
        &self.rng
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn is_discrete(&self) -> bool {
        self.clocks.is_none()
    }

    pub(crate) fn clock_state(&self) -> Option<(&[f64], f64, Option<String>)> {
        self.clocks
            .as_ref()
            .map(|c| (c.due.as_slice(), c.now, c.dist.describe()))
    }

    /// Current time of the clock process (0 for the discrete chain).
    pub fn time(&self) -> f64 {
        self.clocks.as_ref().map_or(0.0, |c| c.now)
    }

    pub fn lyapunov(&self) -> i64 {
        self.lyapunov
    }

    pub fn unstable_count(&self) -> usize {
        self.unstable.len
    }

    pub fn flippable_count(&self) -> usize {
        self.flippable_count
    }

    pub fn is_unstable(&self, u: Node) -> bool {
        self.unstable.contains(u)
    }

    /// No particle is both unstable and flip-stabilizable.
    pub fn is_steady(&self) -> bool {
        self.flippable_count == 0
    }

    /// One scheduler event.
    pub fn step(&mut self) -> StepOutcome {
        let chosen = match self.clocks.as_mut() {
            None => {
                if self.unstable.len == 0 {
                    return StepOutcome::NoUnstable;
                }
                let k = self.rng.random_range(0..self.unstable.len);
                self.unstable.select(k)
            }
            Some(clocks) => match clocks.pop() {
                None => return StepOutcome::NoUnstable,
                Some((t, u)) => {
                    debug_assert!(t >= clocks.now);
                    clocks.now = t;
                    u
                }
            },
        };
        self.counters.events += 1;
        if self.flippable[chosen] {
            self.apply_flip(chosen);
            self.counters.flips += 1;
            StepOutcome::Flipped(chosen)
        } else {
            self.counters.null_events += 1;
            if let Some(clocks) = self.clocks.as_mut() {
                clocks.arm(chosen, &mut self.rng);
            }
            StepOutcome::NullEvent(chosen)
        }
    }

    /// [`step`](Self::step) together with the event time after it.
    pub fn step_timed(&mut self) -> (StepOutcome, f64) {
        let outcome = self.step();
        (outcome, self.time())
    }

    /// Steps until steady or until `max_events` events have been spent.
    pub fn run_to_steady_state(&mut self, max_events: u64) -> SteadyStateReport {
        let start = self.counters;
        while !self.is_steady() && self.counters.events - start.events < max_events {
            if self.step() == StepOutcome::NoUnstable {
                break;
            }
        }
        SteadyStateReport {
            steps_taken: self.counters.events - start.events,
            flips_executed: self.counters.flips - start.flips,
            null_events: self.counters.null_events - start.null_events,
            final_lyapunov: self.lyapunov,
            reached_steady: self.is_steady(),
        }
    }

    /// Sets `u` to `spin` outside the scheduler (an external adversary).
    /// Counters are untouched; returns whether the spin changed.
    pub fn force_spin(&mut self, u: Node, spin: Spin) -> bool {
        if self.grid.spin(u) == spin {
            return false;
        }
        self.flip_and_update(u);
        true
    }

    fn apply_flip(&mut self, u: Node) {
        let delta = self.flip_and_update(u);
        debug_assert!(delta > 0, "flip must raise the Lyapunov sum");
    }

    fn flip_and_update(&mut self, u: Node) -> i64 {
        let n = self.grid.neighborhood_size() as i64;
        let before = self.grid.same_state_count(u) as i64;
        let delta = 2 * (n - 2 * before + 1);
        self.grid.flip(u);
        self.lyapunov += delta;

        let w = self.grid.w();
        let grid = &self.grid;
        let tau = &self.tau;
        let unstable = &mut self.unstable;
        let flippable = &mut self.flippable;
        let flippable_count = &mut self.flippable_count;
        let rng = &mut self.rng;
        let mut clocks = self.clocks.as_mut();
        grid.for_each_in_window(u, w, |v| {
            let now_unstable = grid.is_unstable(v, tau);
            let was_unstable = unstable.contains(v);
            if now_unstable != was_unstable {
                if now_unstable {
                    unstable.insert(v);
                    if let Some(c) = clocks.as_deref_mut() {
                        c.arm(v, rng);
                    }
                } else {
                    unstable.remove(v);
                    if let Some(c) = clocks.as_deref_mut() {
                        c.disarm(v);
                    }
                }
            }
            let now_flippable = now_unstable && grid.is_flip_stabilizable(v, tau);
            if now_flippable != flippable[v] {
                flippable[v] = now_flippable;
                if now_flippable {
                    *flippable_count += 1;
                } else {
                    *flippable_count -= 1;
                }
            }
        });
        delta
    }
}

/// `Σ_u s(u)·N`.
pub fn lyapunov(grid: &SpinGrid) -> i64 {
    (0..grid.len())
        .map(|u| grid.same_state_count(u) as i64)
        .sum()
}

/// Full scan: no node is simultaneously unstable and flip-stabilizable.
pub fn is_steady(grid: &SpinGrid, tau: &Intolerance) -> bool {
    (0..grid.len()).all(|u| !grid.is_flippable(u, tau))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Spin;
    use rand::SeedableRng;

    fn tau(text: &str, w: u32) -> Intolerance {
        Intolerance::parse(text, w).unwrap()
    }

    #[test]
    fn indexed_set_selects_by_rank() {
        let mut s = IndexedSet::new(37);
        for u in [3, 9, 10, 36, 0, 22] {
            s.insert(u);
        }
        s.remove(9);
        s.insert(3);
        let members: Vec<_> = (0..s.len).map(|k| s.select(k)).collect();
        assert_eq!(members, vec![0, 3, 10, 22, 36]);
    }

    #[test]
    fn monochromatic_grid_has_no_events() {
        let g = SpinGrid::uniform(8, 1, Spin::Plus).unwrap();
        let mut sim = Simulation::new(
            g.clone(),
            tau("5/9", 1),
            Scheduler::Discrete,
            SimRng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(sim.step(), StepOutcome::NoUnstable);
        let report = sim.run_to_steady_state(DEFAULT_MAX_EVENTS);
        assert_eq!(report.flips_executed, 0);
        assert!(report.reached_steady);
        let mut sim = Simulation::new(
            g,
            tau("5/9", 1),
            Scheduler::continuous_exponential(),
            SimRng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(sim.step_timed(), (StepOutcome::NoUnstable, 0.0));
    }

    #[test]
    fn single_defect_is_healed() {
        let mut g = SpinGrid::uniform(8, 1, Spin::Plus).unwrap();
        let u = g.node(1, 1);
        g.flip(u);
        let mut sim = Simulation::new(
            g,
            tau("4/9", 1),
            Scheduler::Discrete,
            SimRng::seed_from_u64(0),
        )
        .unwrap();
        assert_eq!(sim.unstable_count(), 1);
        assert_eq!(sim.step(), StepOutcome::Flipped(u));
        assert!(sim.grid().spins().iter().all(|&s| s == Spin::Plus));
        assert!(sim.is_steady());
    }

    #[test]
    fn lyapunov_values() {
        let mut g = SpinGrid::uniform(8, 1, Spin::Plus).unwrap();
        assert_eq!(lyapunov(&g), 2304);
        g.flip(g.node(0, 0));
        assert_eq!(lyapunov(&g), 2288);
    }

    #[test]
    fn incremental_state_matches_full_scan() {
        for (text, discrete) in [
            ("0.45", true),
            ("0.55", true),
            ("0.45", false),
            ("0.55", false),
        ] {
            let g = SpinGrid::new_random(12, 2, 0.5, 11).unwrap();
            let t = tau(text, 2);
            let sched = if discrete {
                Scheduler::Discrete
            } else {
                Scheduler::continuous_exponential()
            };
            let mut sim = Simulation::new(g, t, sched, SimRng::seed_from_u64(2)).unwrap();
            let mut last_time = 0.0;
            for _ in 0..3000 {
                let before = sim.lyapunov();
                let (outcome, time) = sim.step_timed();
                match outcome {
                    StepOutcome::Flipped(_) => assert!(sim.lyapunov() > before),
                    StepOutcome::NullEvent(_) => assert_eq!(sim.lyapunov(), before),
                    StepOutcome::NoUnstable => break,
                }
                if !discrete {
                    assert!(time > last_time);
                    last_time = time;
                }
            }
            assert_eq!(sim.lyapunov(), lyapunov(sim.grid()));
            assert_eq!(sim.is_steady(), is_steady(sim.grid(), &t));
            let scan = (0..sim.grid().len())
                .filter(|&u| sim.grid().is_unstable(u, &t))
                .count();
            assert_eq!(sim.unstable_count(), scan);
        }
    }

    #[test]
    fn forced_spins_keep_state_consistent() {
        for discrete in [true, false] {
            let g = SpinGrid::new_random(10, 1, 0.5, 21).unwrap();
            let t = tau("0.45", 1);
            let sched = if discrete {
                Scheduler::Discrete
            } else {
                Scheduler::continuous_exponential()
            };
            let mut sim = Simulation::new(g, t, sched, SimRng::seed_from_u64(8)).unwrap();
            for i in 0..500 {
                sim.step();
                let u = (i * 37) % sim.grid().len();
                let s = sim.grid().spin(u).opposite();
                assert!(sim.force_spin(u, s));
                assert!(!sim.force_spin(u, s));
            }
            assert_eq!(sim.lyapunov(), lyapunov(sim.grid()));
            assert_eq!(sim.is_steady(), is_steady(sim.grid(), &t));
            let scan = (0..sim.grid().len())
                .filter(|&u| sim.grid().is_unstable(u, &t))
                .count();
            assert_eq!(sim.unstable_count(), scan);
        }
    }

    #[test]
    fn discrete_runs_replay_exactly() {
        let run = || {
            let g = SpinGrid::new_random(16, 1, 0.5, 4).unwrap();
            let mut sim = Simulation::new(
                g,
                tau("0.4", 1),
                Scheduler::Discrete,
                SimRng::seed_from_u64(8),
            )
            .unwrap();
            let report = sim.run_to_steady_state(DEFAULT_MAX_EVENTS);
            (report, sim.into_grid())
        };
        let (a, ga) = run();
        let (b, gb) = run();
        assert_eq!(a, b);
        assert_eq!(ga, gb);
        assert!(a.reached_steady);
    }

    #[test]
    fn run_terminates_within_lyapunov_bound() {
        let g = SpinGrid::new_random(10, 2, 0.5, 21).unwrap();
        let bound = (g.len() as i64) * g.neighborhood_size() as i64;
        let mut sim = Simulation::new(
            g,
            tau("0.45", 2),
            Scheduler::Discrete,
            SimRng::seed_from_u64(3),
        )
        .unwrap();
        let report = sim.run_to_steady_state(DEFAULT_MAX_EVENTS);
        assert!(report.reached_steady);
        assert!(report.final_lyapunov <= bound);
        assert!((report.flips_executed as i64) <= bound);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let g = SpinGrid::new_random(16, 1, 0.5, 4).unwrap();
        let mut sim = Simulation::new(
            g,
            tau("0.4", 1),
            Scheduler::Discrete,
            SimRng::seed_from_u64(8),
        )
        .unwrap();
        let report = sim.run_to_steady_state(3);
        assert_eq!(report.steps_taken, 3);
        assert!(!report.reached_steady);
    }

    #[test]
    fn waiting_time_parsing() {
        assert_eq!(
            parse_waiting_time("exp:2").unwrap().describe().unwrap(),
            "exp:2"
        );
        assert!(parse_waiting_time("uniform:0:1").is_ok());
        assert!(parse_waiting_time("uniform:1:1").is_err());
        assert!(parse_waiting_time("exp:-1").is_err());
        assert!(parse_waiting_time("gamma:2").is_err());
    }
}
