//! Plot-script emission. Scripts are plain matplotlib; nothing is rendered here.

use std::fs;
use std::path::{Path, PathBuf};

use super::run::SWEEP_CSV;
use crate::error::{Error, Result};

/// Files a report directory must hold before scripts are written.
pub const REQUIRED_INPUTS: [&str; 1] = [SWEEP_CSV];

pub const SCRIPTS: [&str; 3] = ["plot_norm_vs_n.py", "plot_a_timeseries.py", "plot_energy_drift.py"];

const HEADER: &str = r#"import csv
import os
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def load(name):
    with open(os.path.join(HERE, name), newline="") as f:
        rows = list(csv.DictReader(f))
    for r in rows:
        for k in r:
            if k != "violations":
                r[k] = float(r[k])
    return rows
"#;

const NORM_VS_N: &str = r#"
rows = load("sweep.csv")
t_end = max(r["t"] for r in rows)
thetas = sorted({r["theta"] for r in rows})
fig, ax = plt.subplots()
for th in thetas:
    pts = sorted((r["N1"], r["trace_norm"]) for r in rows if r["t"] == t_end and r["theta"] == th)
    ax.loglog([p[0] for p in pts], [max(p[1], 1e-14) for p in pts], "o-", label=f"theta={th:g}")
a = sorted({(r["N1"], r["a1"] + r["a2"]) for r in rows if r["t"] == t_end})
ax.loglog([p[0] for p in a], [max(p[1], 1e-14) for p in a], "s--", label="a1+a2")
ax.set_xlabel("N1")
ax.set_ylabel(f"value at t={t_end:g}")
ax.legend()
fig.savefig(os.path.join(HERE, sys.argv[1] if len(sys.argv) > 1 else "norm_vs_n.png"), dpi=150)
"#;

const A_TIMESERIES: &str = r#"
rows = load("sweep.csv")
theta0 = min(r["theta"] for r in rows)
fig, ax = plt.subplots()
for n1 in sorted({r["N1"] for r in rows}):
    pts = [(r["t"], r["a1"], r["a2"]) for r in rows if r["N1"] == n1 and r["theta"] == theta0]
    ax.plot([p[0] for p in pts], [p[1] for p in pts], "-", label=f"a1, N1={n1:g}")
    ax.plot([p[0] for p in pts], [p[2] for p in pts], "--", label=f"a2, N1={n1:g}")
ax.set_xlabel("t")
ax.set_ylabel("a")
ax.legend()
fig.savefig(os.path.join(HERE, sys.argv[1] if len(sys.argv) > 1 else "a_timeseries.png"), dpi=150)
"#;

const ENERGY_DRIFT: &str = r#"
rows = load("sweep.csv")
theta0 = min(r["theta"] for r in rows)
fig, ax = plt.subplots()
for n1 in sorted({r["N1"] for r in rows}):
    pts = [(r["t"], r["energy_drift"]) for r in rows if r["N1"] == n1 and r["theta"] == theta0]
    ax.semilogy([p[0] for p in pts], [max(p[1], 1e-17) for p in pts], label=f"N1={n1:g}")
ax.set_xlabel("t")
ax.set_ylabel("relative energy drift")
ax.legend()
fig.savefig(os.path.join(HERE, sys.argv[1] if len(sys.argv) > 1 else "energy_drift.png"), dpi=150)
"#;

/// Writes the three scripts into `dir`, next to the CSV they read.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>> {
    let missing: Vec<String> = REQUIRED_INPUTS
        .iter()
        .filter(|f| !dir.join(f).is_file())
        .map(|f| dir.join(f).display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInputs(missing));
    }
    let bodies = [NORM_VS_N, A_TIMESERIES, ENERGY_DRIFT];
    SCRIPTS
        .iter()
        .zip(bodies)
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, format!("{HEADER}{body}"))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dir_lists_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        match emit_plots(dir.path()) {
            Err(Error::MissingInputs(m)) => assert!(m[0].ends_with("sweep.csv")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scripts_reference_only_present_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(SWEEP_CSV), "t\n").unwrap();
        let written = emit_plots(dir.path()).unwrap();
        assert_eq!(written.len(), 3);
        let present: Vec<String> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        for p in written {
            let text = fs::read_to_string(p).unwrap();
            for cap in text.split("load(\"").skip(1) {
                let name = cap.split('"').next().unwrap();
                assert!(present.iter().any(|f| f == name), "{name}");
            }
        }
    }
}
