use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::HarnessError;
use crate::dynamics::{parse_waiting_time, Scheduler};
use crate::grid::{parse_ratio, Intolerance};
use num_rational::Ratio;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Sweep,
    Bounds,
    Fpp,
    Percolation,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simulate" => Mode::Simulate,
            "sweep" => Mode::Sweep,
            "bounds" => Mode::Bounds,
            "fpp" => Mode::Fpp,
            "percolation" => Mode::Percolation,
            _ => return Err(format!("unknown mode `{s}`")),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Bounds => "bounds",
            Mode::Fpp => "fpp",
            Mode::Percolation => "percolation",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchedulerKind {
    Discrete,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub h: u32,
    pub w: u32,
    pub tau_tilde: Ratio<u64>,
    pub p_init: f64,
    pub scheduler: SchedulerKind,
    /// Waiting-time law for the clock scheduler and fpp growth.
    pub distribution: String,
    pub seed: u64,
    pub replicas: u32,
    pub max_events: u64,
    pub epsilon: f64,
    pub epsilon_prime: f64,
    pub snapshot_every: u64,
    pub output_dir: PathBuf,
    pub parallel: bool,
    /// Grid for `bounds` mode.
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_step: f64,
    /// Horizons visited by `sweep` mode.
    pub sweep_w: Vec<u32>,
    /// Target distances for `fpp` mode, in units of `w`.
    pub fpp_distances: Vec<u32>,
    /// Block side for `percolation` mode; 0 picks `w`.
    pub block_side: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Simulate,
            h: 32,
            w: 1,
            tau_tilde: Ratio::new(9, 20),
            p_init: 0.5,
            scheduler: SchedulerKind::Discrete,
            distribution: "exp:1".into(),
            seed: 0,
            replicas: 1,
            max_events: crate::dynamics::DEFAULT_MAX_EVENTS,
            epsilon: 0.01,
            epsilon_prime: 0.1,
            snapshot_every: 0,
            output_dir: PathBuf::from("out"),
            parallel: true,
            tau_min: 0.434,
            tau_max: 0.566,
            tau_step: 0.001,
            sweep_w: Vec::new(),
            fpp_distances: vec![10, 20, 40, 80],
            block_side: 0,
        }
    }
}

fn config_err(key: &str, message: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| config_err(key, format!("cannot parse `{value}`")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<u32>, HarnessError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg = Self::parse_unvalidated(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads keys over the defaults without range checks, so later
    /// overrides can still fix them.
    pub fn parse_unvalidated(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    &format!("line {}", i + 1),
                    format!("expected key=value, got `{line}`"),
                )
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one key; values are checked for syntax here and for range in
    /// [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        match key {
            "mode" => self.mode = value.parse().map_err(|e: String| config_err(key, e))?,
            "h" => self.h = parse_num(key, value)?,
            "w" => self.w = parse_num(key, value)?,
            "tau_tilde" => {
                self.tau_tilde = parse_ratio(value).map_err(|e| config_err(key, e.to_string()))?
            }
            "p_init" => self.p_init = parse_num(key, value)?,
            "scheduler" => {
                self.scheduler = match value {
                    "discrete" => SchedulerKind::Discrete,
                    "continuous" => SchedulerKind::Continuous,
                    _ => {
                        return Err(config_err(
                            key,
                            format!("expected discrete or continuous, got `{value}`"),
                        ))
                    }
                }
            }
            "distribution" => self.distribution = value.to_string(),
            "seed" => self.seed = parse_num(key, value)?,
            "replicas" => self.replicas = parse_num(key, value)?,
            "max_events" => self.max_events = parse_num(key, value)?,
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "epsilon_prime" => self.epsilon_prime = parse_num(key, value)?,
            "snapshot_every" => self.snapshot_every = parse_num(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "parallel" => self.parallel = parse_num(key, value)?,
            "tau_min" => self.tau_min = parse_num(key, value)?,
            "tau_max" => self.tau_max = parse_num(key, value)?,
            "tau_step" => self.tau_step = parse_num(key, value)?,
            "sweep_w" => self.sweep_w = parse_list(key, value)?,
            "fpp_distances" => self.fpp_distances = parse_list(key, value)?,
            "block_side" => self.block_side = parse_num(key, value)?,
            _ => return Err(config_err(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, text: &str) -> Result<(), HarnessError> {
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| config_err(text, "override must be key=value"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.w == 0 {
            return Err(config_err("w", "must be positive"));
        }
        if self.h as u64 <= 2 * self.w as u64 + 1 {
            return Err(config_err(
                "h",
                format!("need h > 2w+1 = {}", 2 * self.w + 1),
            ));
        }
        for &w in &self.sweep_w {
            if w == 0 || self.h as u64 <= 2 * w as u64 + 1 {
                return Err(config_err(
                    "sweep_w",
                    format!("horizon {w} does not fit h = {}", self.h),
                ));
            }
        }
        if self.tau_tilde > Ratio::from_integer(1) {
            return Err(config_err("tau_tilde", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.p_init) {
            return Err(config_err("p_init", "must lie in [0, 1]"));
        }
        parse_waiting_time(&self.distribution)
            .map_err(|e| config_err("distribution", e.to_string()))?;
        if self.replicas == 0 {
            return Err(config_err("replicas", "must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(config_err("epsilon", "must lie in (0, 1/2)"));
        }
        if !(self.epsilon_prime > 0.0 && self.epsilon_prime.is_finite()) {
            return Err(config_err("epsilon_prime", "must be positive"));
        }
        if !(self.tau_min > 0.0 && self.tau_max < 1.0 && self.tau_min <= self.tau_max) {
            return Err(config_err("tau_min", "need 0 < tau_min <= tau_max < 1"));
        }
        if !(self.tau_step > 0.0) {
            return Err(config_err("tau_step", "must be positive"));
        }
        if self.fpp_distances.is_empty() || self.fpp_distances.contains(&0) {
            return Err(config_err("fpp_distances", "need positive distances"));
        }
        if self.mode == Mode::Percolation && (2 * self.h) % self.effective_block_side() != 0 {
            return Err(config_err(
                "block_side",
                format!("must divide 2h = {}", 2 * self.h),
            ));
        }
        Ok(())
    }

    pub fn intolerance(&self, w: u32) -> Intolerance {
        Intolerance::new(self.tau_tilde, w).expect("validated")
    }

    pub fn make_scheduler(&self) -> Scheduler {
        match self.scheduler {
            SchedulerKind::Discrete => Scheduler::Discrete,
            SchedulerKind::Continuous => {
                Scheduler::Continuous(parse_waiting_time(&self.distribution).expect("validated"))
            }
        }
    }

    pub fn effective_block_side(&self) -> u32 {
        if self.block_side == 0 {
            self.w
        } else {
            self.block_side
        }
    }

    /// Horizons visited by `sweep`.
    pub fn sweep_horizons(&self) -> Vec<u32> {
        if self.sweep_w.is_empty() {
            vec![self.w]
        } else {
            self.sweep_w.clone()
        }
    }

    /// `tau_min, tau_min + step, …` up to `tau_max`, computed by index.
    pub fn tau_grid(&self) -> Vec<f64> {
        let count = ((self.tau_max - self.tau_min) / self.tau_step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| self.tau_min + i as f64 * self.tau_step)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments() {
        let cfg = ExperimentConfig::parse(
            "# demo\nmode = sweep\nh=16\nw = 2  # horizon\ntau_tilde=9/20\nsweep_w=1,2,3\nscheduler=continuous\n",
        )
        .unwrap();
        assert_eq!(cfg.mode, Mode::Sweep);
        assert_eq!((cfg.h, cfg.w), (16, 2));
        assert_eq!(cfg.tau_tilde, Ratio::new(9, 20));
        assert_eq!(cfg.sweep_w, vec![1, 2, 3]);
        assert_eq!(cfg.scheduler, SchedulerKind::Continuous);
    }

    #[test]
    fn rejects_unknown_and_out_of_range() {
        let err = ExperimentConfig::parse("colour=red\n").unwrap_err();
        assert!(err.to_string().contains("colour"));
        let err = ExperimentConfig::parse("p_init=1.5\n").unwrap_err();
        assert!(err.to_string().contains("p_init"));
        let err = ExperimentConfig::parse("h=3\nw=1\n").unwrap_err();
        assert!(err.to_string().contains("`h`"));
        assert!(ExperimentConfig::parse("tau_tilde=abc\n").is_err());
        assert!(ExperimentConfig::parse("just a line\n").is_err());
    }

    #[test]
    fn override_replaces_value() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_override("seed=99").unwrap();
        assert_eq!(cfg.seed, 99);
        assert!(cfg.apply_override("seed").is_err());
    }

    #[test]
    fn tau_grid_endpoints() {
        let g = ExperimentConfig::default().tau_grid();
        assert_eq!(g.len(), 133);
        assert!((g[132] - 0.566).abs() < 1e-12);
    }
}
