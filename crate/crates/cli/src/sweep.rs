//! Key-rate sweeps, figure data and zero-crossing thresholds.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;
use sqcka_core::attacks::{p_ghz_analytic, DepolarizingParams, MAX_TABLE_BOBS};
use sqcka_core::keyrate::{depolarizing_key_rate, qbob, BoundMode};

use crate::format::sig9;

pub const CSV_HEADER: &str = "n,q,qtilde,mode,p_ghz,q_bob,s_lower,leakage,r_min";
pub const THRESHOLD_HEADER: &str = "figure,n,mode,slice,crossing,sign_changes";
/// Width of the final bisection bracket.
pub const THRESHOLD_TOL: f64 = 1e-4;
pub const FIGURE_MODES: [BoundMode; 2] = [BoundMode::PaperLiteral, BoundMode::TheoremExact];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    pub q: Vec<f64>,
    pub qtilde: Vec<f64>,
    pub modes: Vec<BoundMode>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub q: f64,
    pub qtilde: f64,
    pub mode: BoundMode,
    pub p_ghz: f64,
    pub q_bob: f64,
    pub s_lower: f64,
    pub leakage: f64,
    pub r_min: f64,
}

impl SweepRow {
    pub fn compute(n: usize, q: f64, qtilde: f64, mode: BoundMode) -> Result<Self> {
        let p = DepolarizingParams::new(q, qtilde, n)?;
        if mode == BoundMode::GeneralTable && n > MAX_TABLE_BOBS {
            anyhow::bail!("general_table mode supports at most {MAX_TABLE_BOBS} Bobs");
        }
        let r = depolarizing_key_rate(&p, mode)?;
        Ok(Self {
            n,
            q,
            qtilde,
            mode,
            p_ghz: p_ghz_analytic(&p),
            q_bob: qbob(q)?,
            s_lower: r.s_lower,
            leakage: r.leakage,
            r_min: r.r_min,
        })
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.n,
            sig9(self.q),
            sig9(self.qtilde),
            self.mode,
            sig9(self.p_ghz),
            sig9(self.q_bob),
            sig9(self.s_lower),
            sig9(self.leakage),
            sig9(self.r_min)
        )
    }
}

/// Rows ordered by n, then Q, then Q̃, then mode.
pub fn sweep_rows(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &n in &spec.ns {
        for &q in &spec.q {
            for &qt in &spec.qtilde {
                for &m in &spec.modes {
                    points.push((n, q, qt, m));
                }
            }
        }
    }
    points.into_par_iter().map(|(n, q, qt, m)| SweepRow::compute(n, q, qt, m)).collect()
}

/// Rows on the line `(Q, Q̃) = f(x)` for each grid value `x`.
pub fn slice_rows(ns: &[usize], xs: &[f64], slice: Slice, modes: &[BoundMode]) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &n in ns {
        for &x in xs {
            for &m in modes {
                points.push((n, x, m));
            }
        }
    }
    points
        .into_par_iter()
        .map(|(n, x, m)| {
            let (q, qt) = slice.point(x);
            SweepRow::compute(n, q, qt, m)
        })
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_line());
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// A one-parameter line through the (Q, Q̃) square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slice {
    /// `Q = Q̃ = x`
    Diagonal,
    /// `Q = 0`, `Q̃ = x`
    ForwardOff,
    /// `Q = x`, `Q̃ = 0`
    BackwardOff,
}

impl Slice {
    pub fn point(self, x: f64) -> (f64, f64) {
        match self {
            Slice::Diagonal => (x, x),
            Slice::ForwardOff => (0.0, x),
            Slice::BackwardOff => (x, 0.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Slice::Diagonal => "q=qtilde",
            Slice::ForwardOff => "q=0",
            Slice::BackwardOff => "qtilde=0",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// First point where `r_min` turns non-positive, if any.
    pub value: Option<f64>,
    /// Number of positive → non-positive changes on the scan grid.
    pub sign_changes: usize,
}

/// Scans `[lo, hi]` on a grid of `step` and bisects the first sign change
/// down to [`THRESHOLD_TOL`].
pub fn find_crossing(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64, step: f64) -> Result<Crossing> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let xs: Vec<f64> = (0..=count).map(|i| (lo + i as f64 * step).min(hi)).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| f(x)).collect::<Result<_>>()?;
    let mut first = None;
    let mut sign_changes = 0;
    for i in 0..xs.len().saturating_sub(1) {
        if vals[i] > 0.0 && vals[i + 1] <= 0.0 {
            sign_changes += 1;
            first.get_or_insert(i);
        }
    }
    let value = match first {
        None => None,
        Some(i) => {
            let (mut a, mut b) = (xs[i], xs[i + 1]);
            while b - a > THRESHOLD_TOL {
                let m = 0.5 * (a + b);
                if f(m)? > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            Some(0.5 * (a + b))
        }
    };
    Ok(Crossing { value, sign_changes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub figure: &'static str,
    pub n: usize,
    pub mode: BoundMode,
    pub slice: Slice,
    pub crossing: Crossing,
}

impl Threshold {
    pub fn csv_line(&self) -> String {
        let c = self.crossing.value.map_or_else(|| "none".to_string(), sig9);
        format!("{},{},{},{},{},{}", self.figure, self.n, self.mode, self.slice.label(), c, self.crossing.sign_changes)
    }
}

pub struct FigureDef {
    pub name: &'static str,
    pub ns: &'static [usize],
    pub slice: Option<Slice>,
    pub hi: f64,
}

pub const FIGURES: [FigureDef; 4] = [
    FigureDef { name: "fig2", ns: &[10], slice: None, hi: 0.5 },
    FigureDef { name: "fig3", ns: &[3, 5, 7], slice: Some(Slice::Diagonal), hi: 0.5 },
    FigureDef { name: "fig4a", ns: &[3, 5, 7], slice: Some(Slice::ForwardOff), hi: 1.0 },
    FigureDef { name: "fig4b", ns: &[3, 5, 7], slice: Some(Slice::BackwardOff), hi: 0.5 },
];

pub fn threshold(figure: &'static str, n: usize, mode: BoundMode, slice: Slice, hi: f64, step: f64) -> Result<Threshold> {
    let f = |x: f64| {
        let (q, qt) = slice.point(x);
        Ok(depolarizing_key_rate(&DepolarizingParams::new(q, qt, n)?, mode)?.r_min)
    };
    Ok(Threshold { figure, n, mode, slice, crossing: find_crossing(f, 0.0, hi, step)? })
}

pub fn thresholds(step: f64) -> Result<Vec<Threshold>> {
    let mut jobs = Vec::new();
    for fig in &FIGURES {
        let slices: &[Slice] = match fig.slice {
            Some(ref s) => std::slice::from_ref(s),
            None => &[Slice::Diagonal, Slice::ForwardOff, Slice::BackwardOff],
        };
        for &n in fig.ns {
            for &mode in &FIGURE_MODES {
                for &slice in slices {
                    let hi = if slice == Slice::ForwardOff { 1.0 } else { fig.hi };
                    jobs.push((fig.name, n, mode, slice, hi));
                }
            }
        }
    }
    jobs.into_par_iter().map(|(f, n, m, s, hi)| threshold(f, n, m, s, hi, step)).collect()
}

/// Writes `fig2.csv`, `fig3.csv`, `fig4a.csv`, `fig4b.csv` and `thresholds.csv`.
pub fn write_figures(outdir: &Path, step: f64) -> Result<Vec<Threshold>> {
    fs::create_dir_all(outdir).with_context(|| format!("creating {}", outdir.display()))?;
    for fig in &FIGURES {
        let xs = crate::config::Range { start: 0.0, stop: fig.hi, step }.values();
        let rows = match fig.slice {
            None => sweep_rows(&SweepSpec { ns: fig.ns.to_vec(), q: xs.clone(), qtilde: xs, modes: FIGURE_MODES.to_vec() })?,
            Some(slice) => slice_rows(fig.ns, &xs, slice, &FIGURE_MODES)?,
        };
        write_file(&outdir.join(format!("{}.csv", fig.name)), &to_csv(&rows))?;
    }
    let th = thresholds(step)?;
    let mut text = String::from(THRESHOLD_HEADER);
    text.push('\n');
    for t in &th {
        text.push_str(&t.csv_line());
        text.push('\n');
    }
    write_file(&outdir.join("thresholds.csv"), &text)?;
    Ok(th)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_examples() {
        let rows = sweep_rows(&SweepSpec { ns: vec![3], q: vec![0.0], qtilde: vec![0.0], modes: FIGURE_MODES.to_vec() })
            .unwrap();
        assert_eq!(rows[0].mode, BoundMode::PaperLiteral);
        assert_eq!(rows[0].r_min, 0.5);
        assert_eq!(rows[1].r_min, 1.0);
        let row = SweepRow::compute(2, 0.1, 0.2, BoundMode::TheoremExact).unwrap();
        assert!((row.p_ghz - 0.755).abs() < 1e-12);
        assert!(row.csv_line().starts_with("2,0.1,0.2,theorem_exact,0.755,0.05,"));
        let empty = sweep_rows(&SweepSpec { ns: vec![3], q: vec![], qtilde: vec![0.0], modes: vec![] }).unwrap();
        assert_eq!(to_csv(&empty), format!("{CSV_HEADER}\n"));
        assert!(SweepRow::compute(6, 0.1, 0.1, BoundMode::GeneralTable).is_err());
    }

    #[test]
    fn bisection() {
        let c = find_crossing(|x| Ok(0.3 - x), 0.0, 1.0, 0.05).unwrap();
        assert!((c.value.unwrap() - 0.3).abs() <= THRESHOLD_TOL);
        assert_eq!(c.sign_changes, 1);
        let none = find_crossing(|x| Ok(1.0 + x), 0.0, 1.0, 0.1).unwrap();
        assert_eq!(none, Crossing { value: None, sign_changes: 0 });
        let two = find_crossing(|x: f64| Ok((x * 10.0).cos()), 0.0, 1.0, 0.01).unwrap();
        assert_eq!(two.sign_changes, 2);
    }

    #[test]
    fn threshold_spot_values() {
        let t = threshold("fig4b", 3, BoundMode::TheoremExact, Slice::BackwardOff, 0.5, 0.005).unwrap();
        assert!((t.crossing.value.unwrap() - 0.3007).abs() < 2e-4);
        let t = threshold("fig3", 3, BoundMode::PaperLiteral, Slice::Diagonal, 0.5, 0.005).unwrap();
        assert!((t.crossing.value.unwrap() - 0.1281).abs() < 2e-4);
    }
}
