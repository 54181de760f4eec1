//! CSV/JSON artifact writers. Numbers are written with 17 significant digits
//! in scientific notation, independent of locale.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use anyhow::{Context, Result};

use trajopt_core::pso::HistoryEntry;
use trajopt_core::{SegmentTimes, TrajectorySample};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `t,joint,q,v,a`, time-major.
pub fn trajectory_csv(samples: &[Vec<TrajectorySample>]) -> String {
    let mut out = String::from("t,joint,q,v,a\n");
    let rows = samples.first().map_or(0, Vec::len);
    for k in 0..rows {
        for (joint, series) in samples.iter().enumerate() {
            let s = series[k];
            let _ = writeln!(out, "{},{joint},{},{},{}", num(s.t), num(s.q), num(s.v), num(s.a));
        }
    }
    out
}

pub fn times_json(times: &SegmentTimes) -> String {
    format!(
        "{{\n  \"t1\": {},\n  \"t2\": {},\n  \"t3\": {},\n  \"total\": {}\n}}\n",
        num(times.t1()),
        num(times.t2()),
        num(times.t3()),
        num(times.total())
    )
}

pub fn convergence_csv(history: &[HistoryEntry]) -> String {
    let mut out = String::from("iteration,gbest_fitness,omega,c1,c2,perturbed\n");
    for h in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            h.iteration,
            num(h.gbest_fitness),
            num(h.omega),
            num(h.c1),
            num(h.c2),
            u8::from(h.perturbed)
        );
    }
    out
}
