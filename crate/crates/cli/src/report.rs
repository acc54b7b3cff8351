use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nrf_core::nalgebra::Complex;

/// What a command found. `violated` marks a mathematical finding, which is
/// a successful run with exit code 2.
#[derive(Debug, Default)]
pub struct Report {
    pub violated: bool,
    pub lines: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

impl Report {
    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn violation(&mut self, s: impl Into<String>) {
        self.violated = true;
        self.lines.push(format!("VIOLATED {}", s.into()));
    }

    pub fn wrote(&mut self, p: &Path) {
        self.artifacts.push(p.to_path_buf());
    }

    pub fn status(&self) -> &'static str {
        if self.violated {
            "violated"
        } else {
            "ok"
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        for a in &self.artifacts {
            let _ = writeln!(out, "wrote {}", a.display());
        }
        let _ = writeln!(out, "status: {}", self.status());
        out
    }
}

/// `%.12g`: 12 significant digits, trailing zeros dropped.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new digit, e.g. 9.99..97 -> 10
        let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let s = format!("{x:.11e}");
        let (mant, e) = s.split_once('e').expect("exponent");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        let e: i32 = e.parse().expect("exponent digits");
        format!("{mant}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs())
    }
}

pub fn cnum(z: Complex<f64>) -> String {
    if z.im == 0.0 {
        num(z.re)
    } else if z.im > 0.0 {
        format!("{}+{}i", num(z.re), num(z.im))
    } else {
        format!("{}-{}i", num(z.re), num(-z.im))
    }
}

pub fn clist(v: &[Complex<f64>]) -> String {
    format!("[{}]", v.iter().map(|&z| cnum(z)).collect::<Vec<_>>().join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.1 + 0.2), "0.3");
        assert_eq!(num(-2.5e-3), "-0.0025");
        assert_eq!(num(1.0 / 3.0), "0.333333333333");
        assert_eq!(num(123456789.123456), "123456789.123");
        assert_eq!(num(4.857e-16), "4.857e-16");
        assert_eq!(num(6.02214076e23), "6.02214076e+23");
        assert_eq!(num(0.99999999999999), "1");
    }

    #[test]
    fn complex_forms() {
        assert_eq!(cnum(Complex::new(0.5, -0.25)), "0.5-0.25i");
        assert_eq!(clist(&[Complex::new(1.0, 0.0), Complex::new(0.0, 2.0)]), "[1, 0+2i]");
    }
}
