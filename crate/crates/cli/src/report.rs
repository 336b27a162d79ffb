use std::io::{self, Write};

use evosylv::solver::{memory_eksm_full, memory_eksm_tensor, memory_rksm_full, Method};

use crate::run::{MemoryDetail, RunRecord};

pub const HEADER: [&str; 13] = [
    "preset",
    "d",
    "n",
    "ell",
    "s",
    "method",
    "inner",
    "iterations",
    "final_residual",
    "wall_time_s",
    "memory_units",
    "error_vs_oracle",
    "error_vs_analytic",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn sci(v: &Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Sorts by `(preset, n, ell)` and writes the header plus one row per record.
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> csv::Result<()> {
    let mut sorted: Vec<&RunRecord> = records.iter().collect();
    sorted.sort_by(|a, b| (&a.preset, a.n, a.ell).cmp(&(&b.preset, b.n, b.ell)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in sorted {
        w.write_record([
            r.preset.clone(),
            r.d.to_string(),
            r.n.to_string(),
            r.ell.to_string(),
            r.s.to_string(),
            r.method.clone(),
            opt(&r.inner),
            opt(&r.iterations),
            sci(&r.final_residual),
            format!("{:.6}", r.wall_time_s),
            opt(&r.memory_units),
            sci(&r.error_vs_oracle),
            sci(&r.error_vs_analytic),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The storage formula with the run's numbers substituted.
pub fn memory_formula(m: &MemoryDetail) -> String {
    let nd = m.n.pow(m.d as u32);
    let mp1 = m.m + 1;
    let list = |v: &[usize], sep: &str| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep);
    match m.method {
        Method::Eksm => {
            let q = m.ranks[0];
            format!("2(m+1)q(n^d+L) = 2*{mp1}*{q}*({nd}+{}) = {}", m.l, memory_eksm_full(m.m, q, nd, m.l))
        }
        Method::Rksm => {
            let q = m.ranks[0];
            format!("(m+1)q(n^d+L) = {mp1}*{q}*({nd}+{}) = {}", m.l, memory_rksm_full(m.m, q, nd, m.l))
        }
        Method::EksmTensor => format!(
            "2(m+1)(sum p_i)n + 2^d(m+1)^d(prod p_i)L = 2*{mp1}*({})*{} + {}*{mp1}^{}*({})*{} = {}",
            list(&m.ranks, "+"),
            m.n,
            1u64 << m.d,
            m.d,
            list(&m.ranks, "*"),
            m.l,
            memory_eksm_tensor(m.m, &m.ranks, m.n, m.l)
        ),
    }
}

pub fn write_summary<W: Write>(records: &[RunRecord], mut out: W) -> io::Result<()> {
    for r in records {
        write!(out, "{} d={} n={} ell={} s={} {}", r.preset, r.d, r.n, r.ell, r.s, r.method)?;
        if let (Some(it), Some(res)) = (r.iterations, r.final_residual) {
            let status = if r.converged { "converged" } else { "NOT converged" };
            write!(out, ": {status} after {it} iterations, residual {res:.3e}")?;
        }
        writeln!(out, ", {:.3}s", r.wall_time_s)?;
        if let Some(inner) = &r.inner {
            writeln!(out, "  inner solver: {inner}")?;
        }
        if let Some(m) = &r.memory {
            writeln!(out, "  memory: {}", memory_formula(m))?;
        }
        if let Some(e) = r.error_vs_oracle {
            writeln!(out, "  error vs time stepping: {e:.3e}")?;
        }
        if let Some(e) = r.error_vs_analytic {
            writeln!(out, "  error vs exact solution: {e:.3e}")?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(preset: &str, n: usize, ell: usize) -> RunRecord {
        RunRecord {
            preset: preset.into(),
            d: 2,
            n,
            ell,
            s: 1,
            method: "rksm".into(),
            inner: Some("fft_smw".into()),
            iterations: Some(7),
            final_residual: Some(5e-9),
            wall_time_s: 0.25,
            memory_units: Some(8 * 2 * (256 + 32)),
            error_vs_oracle: None,
            error_vs_analytic: None,
            converged: true,
            memory: Some(MemoryDetail { method: Method::Rksm, m: 7, ranks: vec![2], n: 16, d: 2, l: 32 }),
        }
    }

    #[test]
    fn one_record_two_lines() {
        let mut buf = Vec::new();
        write_csv(&[record("example2", 16, 32)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "preset,d,n,ell,s,method,inner,iterations,final_residual,wall_time_s,memory_units,error_vs_oracle,error_vs_analytic");
        assert_eq!(lines[1], "example2,2,16,32,1,rksm,fft_smw,7,5e-9,0.250000,4608,,");
    }

    #[test]
    fn rows_sorted() {
        let mut buf = Vec::new();
        let recs = [record("example2", 16, 64), record("example1", 32, 8), record("example2", 8, 128), record("example2", 16, 32)];
        write_csv(&recs, &mut buf).unwrap();
        let keys: Vec<String> = String::from_utf8(buf).unwrap().lines().skip(1).map(|l| l.split(',').take(4).collect::<Vec<_>>().join(",")).collect();
        assert_eq!(keys, ["example1,2,32,8", "example2,2,8,128", "example2,2,16,32", "example2,2,16,64"]);
    }

    #[test]
    fn formulas_instantiated() {
        let m = MemoryDetail { method: Method::EksmTensor, m: 3, ranks: vec![1, 1], n: 16, d: 2, l: 32 };
        assert_eq!(memory_formula(&m), "2(m+1)(sum p_i)n + 2^d(m+1)^d(prod p_i)L = 2*4*(1+1)*16 + 4*4^2*(1*1)*32 = 2304");
        let e = MemoryDetail { method: Method::Eksm, m: 5, ranks: vec![2], n: 8, d: 2, l: 10 };
        assert_eq!(memory_formula(&e), "2(m+1)q(n^d+L) = 2*6*2*(64+10) = 1776");
    }
}
