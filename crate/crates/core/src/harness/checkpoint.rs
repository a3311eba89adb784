use std::path::Path;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::dynamics::{parse_waiting_time, Counters, Scheduler, Simulation};
use crate::grid::{parse_ratio, Intolerance, Spin, SpinGrid};
use crate::SimRng;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct RngState {
    seed: String,
    stream: u64,
    /// 128-bit word position as a decimal string.
    word_pos: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct ClockState {
    distribution: String,
    now: f64,
    /// `(node, due time)` for every armed clock.
    due: Vec<(usize, f64)>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct CheckpointFile {
    version: u32,
    h: u32,
    w: u32,
    tau_tilde: String,
    spins: String,
    rng: RngState,
    events: u64,
    flips: u64,
    null_events: u64,
    clock: Option<ClockState>,
}

fn corrupt(message: impl Into<String>) -> HarnessError {
    HarnessError::Checkpoint(message.into())
}

fn encode_seed(seed: &[u8; 32]) -> String {
    seed.iter().map(|b| format!("{b:02x}")).collect()
}

fn decode_seed(text: &str) -> Result<[u8; 32], HarnessError> {
    if text.len() != 64 || !text.is_ascii() {
        return Err(corrupt("rng seed must be 64 hex digits"));
    }
    let mut out = [0u8; 32];
    for (i, b) in out.iter_mut().enumerate() {
        *b = u8::from_str_radix(&text[2 * i..2 * i + 2], 16)
            .map_err(|_| corrupt("rng seed is not hex"))?;
    }
    Ok(out)
}

pub fn checkpoint_to_string(sim: &Simulation) -> Result<String, HarnessError> {
    let grid = sim.grid();
    let rng = sim.rng();
    let counters = sim.counters();
    let clock = match sim.clock_state() {
        None => None,
        Some((due, now, describe)) => Some(ClockState {
            distribution: describe
                .ok_or_else(|| corrupt("waiting-time distribution cannot be described"))?,
            now,
            due: due
                .iter()
                .enumerate()
                .filter(|(_, t)| t.is_finite())
                .map(|(u, &t)| (u, t))
                .collect(),
        }),
    };
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        h: grid.h(),
        w: grid.w(),
        tau_tilde: sim.intolerance().tau_tilde().to_string(),
        spins: grid.spins().iter().map(|s| s.as_char()).collect(),
        rng: RngState {
            seed: encode_seed(&rng.get_seed()),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        },
        events: counters.events,
        flips: counters.flips,
        null_events: counters.null_events,
        clock,
    };
    serde_json::to_string(&file).map_err(|e| corrupt(e.to_string()))
}

pub fn resume_from_str(text: &str) -> Result<Simulation, HarnessError> {
    let file: CheckpointFile = serde_json::from_str(text).map_err(|e| corrupt(e.to_string()))?;
    if file.version != CHECKPOINT_VERSION {
        return Err(corrupt(format!(
            "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    let spins = file
        .spins
        .chars()
        .map(|c| match c {
            '+' => Ok(Spin::Plus),
            '-' => Ok(Spin::Minus),
            _ => Err(corrupt(format!("illegal spin `{c}`"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    let grid = SpinGrid::from_spins(file.h, file.w, spins).map_err(|e| corrupt(e.to_string()))?;
    let tau_tilde = parse_ratio(&file.tau_tilde).map_err(|e| corrupt(e.to_string()))?;
    let tau = Intolerance::new(tau_tilde, file.w).map_err(|e| corrupt(e.to_string()))?;
    let mut rng = SimRng::from_seed(decode_seed(&file.rng.seed)?);
    rng.set_stream(file.rng.stream);
    rng.set_word_pos(
        file.rng
            .word_pos
            .parse()
            .map_err(|_| corrupt("bad word position"))?,
    );
    let counters = Counters {
        events: file.events,
        flips: file.flips,
        null_events: file.null_events,
    };
    let (scheduler, clocks) = match file.clock {
        None => (Scheduler::Discrete, None),
        Some(c) => {
            let dist = parse_waiting_time(&c.distribution).map_err(|e| corrupt(e.to_string()))?;
            let mut due = vec![f64::INFINITY; grid.len()];
            for (u, t) in c.due {
                if u >= due.len() || !t.is_finite() {
                    return Err(corrupt(format!("bad clock entry for node {u}")));
                }
                due[u] = t;
            }
            (Scheduler::Continuous(dist), Some((due, c.now)))
        }
    };
    Simulation::restore(grid, tau, scheduler, rng, counters, clocks)
        .map_err(|e| corrupt(e.to_string()))
}

pub fn checkpoint(sim: &Simulation, path: &Path) -> Result<(), HarnessError> {
    let text = checkpoint_to_string(sim)?;
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn resume(path: &Path) -> Result<Simulation, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    resume_from_str(&text)
}
