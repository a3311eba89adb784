//! Exponent curves over a τ grid, written as CSV.

use std::io::{self, Write};

use super::{entropy, g_of_tau, mirror_tau, rho_family, Bounds, BoundsError};
use crate::Scalar;

pub const CURVES_HEADER: &str = "tau,H,g,a,b,log2rho_per_N,log2rhop_per_N,log2rhopp_per_N";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRow<F> {
    pub tau: F,
    pub entropy: F,
    pub g: F,
    pub a: F,
    pub b: F,
    pub log2_rho_per_n: F,
    pub log2_rho_prime_per_n: F,
    pub log2_rho_double_prime_per_n: F,
}

impl<F: Scalar> Bounds<F> {
    /// Row at `tau`; above one half every column is evaluated at the mirror
    /// `1 − τ + 2/N`. Returns `None` where the (mirrored) intolerance is not
    /// strictly below one half.
    pub fn row(&self, tau: F, n: F) -> Result<Option<CurveRow<F>>, BoundsError> {
        let half = F::lit(0.5);
        let eff = if tau > half { mirror_tau(tau, n) } else { tau };
        if !(eff > F::zero() && eff < half) {
            return Ok(None);
        }
        let eps_prime = self.eps_prime(eff)?;
        let rho = rho_family(eff, self.epsilon, eps_prime, n)?;
        Ok(Some(CurveRow {
            tau,
            entropy: entropy(eff)?,
            g: g_of_tau(eff)?,
            a: self.a(eff)?,
            b: self.b(eff)?,
            log2_rho_per_n: rho.log2_rho / n,
            log2_rho_prime_per_n: rho.log2_rho_prime / n,
            log2_rho_double_prime_per_n: rho.log2_rho_double_prime / n,
        }))
    }
}

/// Rows for every grid point with a valid (mirrored) intolerance.
pub fn emit_curves<F: Scalar>(taus: &[F], eps: F, n: F) -> Result<Vec<CurveRow<F>>, BoundsError> {
    let bounds = Bounds::new(eps, F::lit(super::DEFAULT_DELTA))?;
    let mut rows = Vec::with_capacity(taus.len());
    for &t in taus {
        if let Some(row) = bounds.row(t, n)? {
            rows.push(row);
        }
    }
    Ok(rows)
}

/// `v` with 12 significant digits, trailing zeros trimmed.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-6..=15).contains(&magnitude) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

pub fn write_curves_csv<F: Scalar, W: Write>(rows: &[CurveRow<F>], mut out: W) -> io::Result<()> {
    writeln!(out, "{CURVES_HEADER}")?;
    for r in rows {
        let cols = [
            r.tau,
            r.entropy,
            r.g,
            r.a,
            r.b,
            r.log2_rho_per_n,
            r.log2_rho_prime_per_n,
            r.log2_rho_double_prime_per_n,
        ];
        let line: Vec<String> = cols
            .iter()
            .map(|c| format_sig(c.to_f64().unwrap_or(f64::NAN)))
            .collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{a_of_tau, b_of_tau, DEFAULT_DELTA};

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(format_sig(0.45), "0.45");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(-0.0020483762182716), "-0.00204837621827");
        assert_eq!(format_sig(12.5), "12.5");
        assert_eq!(format_sig(0.0), "0");
    }

    #[test]
    fn row_matches_exponents() {
        let rows = emit_curves(&[0.45f64], 0.01, 1.0e4).unwrap();
        let g = g_of_tau(0.45).unwrap() + DEFAULT_DELTA;
        assert_eq!(rows[0].a, a_of_tau(0.45, 0.01, g).unwrap());
        assert_eq!(rows[0].b, b_of_tau(0.45, 0.01, g).unwrap());
    }

    #[test]
    fn mirror_rows_are_symmetric() {
        let n = 441.0f64;
        for t in [0.44, 0.46, 0.48] {
            let low = emit_curves(&[t], 0.01, n).unwrap()[0];
            let high = emit_curves(&[1.0 - t + 2.0 / n], 0.01, n).unwrap()[0];
            assert!((low.a - high.a).abs() < 1e-12);
            assert!((low.b - high.b).abs() < 1e-12);
            assert!((low.g - high.g).abs() < 1e-12);
        }
        assert!(emit_curves(&[0.5f64, 0.501], 0.01, n).unwrap().is_empty());
    }

    #[test]
    fn csv_header_and_rows() {
        let rows = emit_curves(&[0.44f64, 0.45], 0.01, 1.0e4).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], CURVES_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("0.45,"));
        assert_eq!(lines[1].split(',').count(), 8);
    }
}
