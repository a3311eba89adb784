use std::io::{self, BufRead, Write};

use super::HarnessError;
use crate::grid::{Intolerance, Spin, SpinGrid};

pub const SNAPSHOT_MAGIC: &str = "SCHELLING v1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: SpinGrid,
    pub tau: Intolerance,
    pub step: u64,
}

pub fn write_snapshot<W: Write>(
    grid: &SpinGrid,
    tau: &Intolerance,
    step: u64,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "{SNAPSHOT_MAGIC}")?;
    writeln!(
        out,
        "h={} w={} tau={} step={}",
        grid.h(),
        grid.w(),
        tau,
        step
    )?;
    let mut row = String::with_capacity(grid.side() + 1);
    for chunk in grid.spins().chunks(grid.side()) {
        row.clear();
        row.extend(chunk.iter().map(|s| s.as_char()));
        row.push('\n');
        out.write_all(row.as_bytes())?;
    }
    Ok(())
}

fn bad(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Snapshot {
        line,
        message: message.into(),
    }
}

fn header_field<'a>(
    part: Option<&'a str>,
    key: &str,
    line: usize,
) -> Result<&'a str, HarnessError> {
    part.and_then(|p| p.strip_prefix(key))
        .and_then(|p| p.strip_prefix('='))
        .ok_or_else(|| bad(line, format!("expected `{key}=`")))
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<Snapshot, HarnessError> {
    let mut lines = input.lines();
    let mut next = |n: usize| -> Result<String, HarnessError> {
        match lines.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(bad(n, e.to_string())),
            None => Err(bad(n, "unexpected end of file")),
        }
    };
    if next(1)? != SNAPSHOT_MAGIC {
        return Err(bad(1, format!("expected `{SNAPSHOT_MAGIC}`")));
    }
    let header = next(2)?;
    let mut parts = header.split(' ');
    let num = |s: &str, key: &str| {
        s.parse::<u64>()
            .map_err(|_| bad(2, format!("bad {key} `{s}`")))
    };
    let h = num(header_field(parts.next(), "h", 2)?, "h")? as u32;
    let w = num(header_field(parts.next(), "w", 2)?, "w")? as u32;
    let tau_text = header_field(parts.next(), "tau", 2)?;
    let step = num(header_field(parts.next(), "step", 2)?, "step")?;
    if parts.next().is_some() {
        return Err(bad(2, "trailing header fields"));
    }
    let (t, n) = tau_text
        .split_once('/')
        .ok_or_else(|| bad(2, format!("bad tau `{tau_text}`")))?;
    let (t, n) = (num(t, "tau")? as u32, num(n, "tau")? as u32);
    let tau = Intolerance::from_threshold(t, w).map_err(|e| bad(2, e.to_string()))?;
    if tau.neighborhood_size() != n {
        return Err(bad(
            2,
            format!("tau denominator {n} is not N = {}", tau.neighborhood_size()),
        ));
    }
    let side = 2 * h as usize;
    let mut spins = Vec::with_capacity(side * side);
    for r in 0..side {
        let line_no = r + 3;
        let row = next(line_no)?;
        if row.len() != side {
            return Err(bad(
                line_no,
                format!("row has {} characters, expected {side}", row.len()),
            ));
        }
        for c in row.chars() {
            spins.push(match c {
                '+' => Spin::Plus,
                '-' => Spin::Minus,
                _ => return Err(bad(line_no, format!("illegal character `{c}`"))),
            });
        }
    }
    if let Some(Ok(extra)) = lines.next() {
        if !extra.is_empty() {
            return Err(bad(side + 3, "trailing data"));
        }
    }
    let grid = SpinGrid::from_spins(h, w, spins).map_err(|e| bad(2, e.to_string()))?;
    Ok(Snapshot { grid, tau, step })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(g: &SpinGrid, tau: &Intolerance, step: u64) -> Snapshot {
        let mut buf = Vec::new();
        write_snapshot(g, tau, step, &mut buf).unwrap();
        read_snapshot(buf.as_slice()).unwrap()
    }

    #[test]
    fn random_grid_round_trips() {
        let g = SpinGrid::new_random(6, 2, 0.4, 8).unwrap();
        let tau = Intolerance::parse("0.45", 2).unwrap();
        let s = roundtrip(&g, &tau, 17);
        assert_eq!(s.grid, g);
        assert_eq!(s.tau.tau(), tau.tau());
        assert_eq!(s.step, 17);
    }

    #[test]
    fn plus_grid_is_all_plus_rows() {
        let g = SpinGrid::uniform(4, 1, Spin::Plus).unwrap();
        let tau = Intolerance::parse("5/9", 1).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&g, &tau, 0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut expect = String::from("SCHELLING v1\nh=4 w=1 tau=5/9 step=0\n");
        for _ in 0..8 {
            expect.push_str("++++++++\n");
        }
        assert_eq!(text, expect);
    }

    #[test]
    fn errors_name_the_line() {
        let g = SpinGrid::uniform(4, 1, Spin::Minus).unwrap();
        let tau = Intolerance::parse("0.5", 1).unwrap();
        let mut buf = Vec::new();
        write_snapshot(&g, &tau, 3, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        let err = read_snapshot(truncated.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 7"), "{err}");
        let illegal = text.replacen("--------\n", "---x----\n", 1);
        assert!(read_snapshot(illegal.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("line 3"));
        let short = text.replacen("--------\n", "-------\n", 1);
        assert!(read_snapshot(short.as_bytes()).is_err());
        assert!(read_snapshot("SCHELLING v2\n".as_bytes()).is_err());
    }
}
