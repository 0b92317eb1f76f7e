//! Monte Carlo sweeps over the direct-channel power grid.
//!
//! For every `(E0, kind)` cell the sweep runs `trials` independent channels:
//! the reconfigurable surfaces get their minimum orthogonalization power and
//! the resulting per-user gain, plus the gain once the budget is raised to
//! the phase-only surface's sum power `N` (larger root of the power
//! quadratic in `√β` at the found target direction); the phase-only baseline
//! gets its κ-optimized average and minimum per-user gains, which sit at
//! unit average power by construction.
//!
//! Output is three CSV files with the fixed header
//! `e0,kind,metric,mean,stderr,trials`, a plotting script referencing them,
//! and a JSON run manifest. Cells are written and flushed as they complete,
//! so an interrupted sweep leaves valid partial files; the `trials` column
//! records how many trials actually entered each aggregate.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use rayon::prelude::*;
use rsorth::channel::generate_iid_rayleigh;
use rsorth::orthogonalizer::SurfaceKind;
use rsorth::power_opt::{minimize_power, PowerObjective};
use rsorth::ris_baseline::{minimize_condition_number, per_ue_gains};
use rsorth::rng::derive_seed;

use crate::spec::ExperimentSpec;

const TAG_CHANNEL: u64 = 0x51;
const TAG_OPTIMIZER: u64 = 0x52;

/// Per-trial measurements for one surface kind.
#[derive(Debug, Clone, Copy)]
struct TrialRecord {
    trial: usize,
    power_per_element: Option<f64>,
    gain_min_power: Option<f64>,
    gain_unit_power: Option<f64>,
    gain_avg: Option<f64>,
    gain_min: Option<f64>,
}

/// Summary of a finished sweep.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub fig1_power: PathBuf,
    pub fig1_gain: PathBuf,
    pub fig2_gain: PathBuf,
    pub plot_script: PathBuf,
    pub manifest: PathBuf,
    pub wall_time_s: f64,
}

/// Runs the full sweep and writes every artifact under `out_dir`.
pub fn run_sweep(spec: &ExperimentSpec, out_dir: &Path) -> anyhow::Result<SweepSummary> {
    let started = Instant::now();
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output dir {}", out_dir.display()))?;

    let fig1_power_path = out_dir.join("fig1_power.csv");
    let fig1_gain_path = out_dir.join("fig1_gain.csv");
    let fig2_gain_path = out_dir.join("fig2_gain.csv");
    let mut fig1_power = CsvWriter::create(&fig1_power_path)?;
    let mut fig1_gain = CsvWriter::create(&fig1_gain_path)?;
    let mut fig2_gain = CsvWriter::create(&fig2_gain_path)?;

    for (e0_idx, &e0) in spec.e0_grid.iter().enumerate() {
        for kind in [SurfaceKind::Aris, SurfaceKind::Fris, SurfaceKind::Ris] {
            let records = run_cell(spec, e0_idx, e0, kind);
            match kind {
                SurfaceKind::Aris | SurfaceKind::Fris => {
                    fig1_power.row(e0, kind, "power_per_element", stats(&records, |r| {
                        r.power_per_element
                    }))?;
                    fig1_gain.row(e0, kind, "gain_min_power", stats(&records, |r| {
                        r.gain_min_power
                    }))?;
                    fig2_gain.row(e0, kind, "gain_unit_power", stats(&records, |r| {
                        r.gain_unit_power
                    }))?;
                }
                SurfaceKind::Ris => {
                    let avg = stats(&records, |r| r.gain_avg);
                    let min = stats(&records, |r| r.gain_min);
                    fig1_gain.row(e0, kind, "gain_avg", avg)?;
                    fig1_gain.row(e0, kind, "gain_min", min)?;
                    fig2_gain.row(e0, kind, "gain_avg", avg)?;
                    fig2_gain.row(e0, kind, "gain_min", min)?;
                }
            }
        }
    }
    fig1_power.finish()?;
    fig1_gain.finish()?;
    fig2_gain.finish()?;

    let plot_script = out_dir.join("plot_figs.py");
    fs::write(&plot_script, PLOT_SCRIPT).context("writing plot script")?;

    let wall_time_s = started.elapsed().as_secs_f64();
    let manifest = out_dir.join("run_manifest.json");
    let manifest_body = serde_json::json!({
        "spec": spec,
        "versions": {
            "rsorth": rsorth_version(),
            "rsorth-cli": env!("CARGO_PKG_VERSION"),
        },
        "outputs": ["fig1_power.csv", "fig1_gain.csv", "fig2_gain.csv", "plot_figs.py"],
        "wall_time_s": wall_time_s,
    });
    fs::write(&manifest, serde_json::to_string_pretty(&manifest_body)?)
        .context("writing run manifest")?;

    Ok(SweepSummary {
        fig1_power: fig1_power_path,
        fig1_gain: fig1_gain_path,
        fig2_gain: fig2_gain_path,
        plot_script,
        manifest,
        wall_time_s,
    })
}

fn rsorth_version() -> &'static str {
    // Workspace crates share one version; the library has no version API.
    env!("CARGO_PKG_VERSION")
}

/// All trials of one `(E0, kind)` cell, in trial order.
fn run_cell(spec: &ExperimentSpec, e0_idx: usize, e0: f64, kind: SurfaceKind) -> Vec<TrialRecord> {
    let kind_idx = match kind {
        SurfaceKind::Aris => 0u64,
        SurfaceKind::Fris => 1,
        SurfaceKind::Ris => 2,
    };
    let mut records: Vec<TrialRecord> = (0..spec.trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = derive_seed(spec.seed, &[e0_idx as u64, kind_idx, trial as u64]);
            run_trial(spec, e0, kind, trial, trial_seed)
        })
        .collect();
    records.sort_by_key(|r| r.trial);
    records
}

fn run_trial(
    spec: &ExperimentSpec,
    e0: f64,
    kind: SurfaceKind,
    trial: usize,
    trial_seed: u64,
) -> TrialRecord {
    let n = spec.n_for(kind);
    let channel_seed = derive_seed(trial_seed, &[TAG_CHANNEL]);
    let opt_seed = derive_seed(trial_seed, &[TAG_OPTIMIZER]);
    let cs = generate_iid_rayleigh(spec.m, spec.k, n, e0, channel_seed)
        .expect("spec dimensions validated");
    let mut record = TrialRecord {
        trial,
        power_per_element: None,
        gain_min_power: None,
        gain_unit_power: None,
        gain_avg: None,
        gain_min: None,
    };
    match kind {
        SurfaceKind::Aris | SurfaceKind::Fris => {
            let cfg = spec.optimizer.to_config(opt_seed);
            let result = minimize_power(&cs, kind, &cfg).expect("feasible by construction");
            record.power_per_element = Some(result.p_min / n as f64);
            record.gain_min_power = Some(result.beta_star);
            let obj = PowerObjective::new(&cs, kind).expect("feasible by construction");
            let unit = beta_at_sum_power(&obj, result.u_star.matrix(), n as f64);
            if let Some(beta_unit) = unit {
                debug_assert!(beta_unit >= result.beta_star - 1e-9);
            }
            record.gain_unit_power = unit;
        }
        SurfaceKind::Ris => {
            let cfg = spec.ris_optimizer.to_config(opt_seed);
            let result = minimize_condition_number(&cs, &cfg);
            let gains = per_ue_gains(&cs, &result.phases);
            let avg = gains.iter().sum::<f64>() / gains.len() as f64;
            record.gain_avg = Some(avg);
            record.gain_min = Some(gains[0]);
        }
    }
    record
}

/// Larger root of `g·x² − 2f·x + (c − budget) = 0` over `x = √β`, i.e. the
/// gain attainable when the surface spends exactly `budget`, at the fixed
/// target direction `u`. `None` when the budget lies below the minimum power
/// at `u` (no real root) or the root is negative.
pub fn beta_at_sum_power(obj: &PowerObjective, u: &rsorth::linalg::CMatrix, budget: f64) -> Option<f64> {
    let (f, g) = obj.coefficients(u);
    let c = obj.constant();
    let disc = f * f - g * (c - budget);
    if disc < 0.0 {
        return None;
    }
    let x = (f + disc.sqrt()) / g;
    if x < 0.0 {
        return None;
    }
    Some(x * x)
}

/// Mean, standard error, and count over the trials where the metric exists.
fn stats(records: &[TrialRecord], get: impl Fn(&TrialRecord) -> Option<f64>) -> (f64, f64, usize) {
    let values: Vec<f64> = records.iter().filter_map(&get).collect();
    let count = values.len();
    if count == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    if count == 1 {
        return (mean, 0.0, 1);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count as f64 - 1.0);
    (mean, (var / count as f64).sqrt(), count)
}

/// CSV writer with the fixed schema and flush-per-row behavior.
struct CsvWriter {
    inner: BufWriter<File>,
}

impl CsvWriter {
    fn create(path: &Path) -> anyhow::Result<Self> {
        let file =
            File::create(path).with_context(|| format!("creating {}", path.display()))?;
        let mut inner = BufWriter::new(file);
        inner.write_all(b"e0,kind,metric,mean,stderr,trials\n")?;
        Ok(Self { inner })
    }

    fn row(
        &mut self,
        e0: f64,
        kind: SurfaceKind,
        metric: &str,
        (mean, stderr, trials): (f64, f64, usize),
    ) -> anyhow::Result<()> {
        writeln!(
            self.inner,
            "{},{},{},{},{},{}",
            fmt_float(e0),
            kind.label(),
            metric,
            fmt_float(mean),
            fmt_float(stderr),
            trials
        )?;
        self.inner.flush()?;
        Ok(())
    }

    fn finish(mut self) -> anyhow::Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Shortest exact decimal representation (same for every locale).
fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot the sweep CSVs produced alongside this script.

Usage: python3 plot_figs.py [--dir DIR]
Writes fig1_power.png, fig1_gain.png, fig2_gain.png into DIR (default: the
script's directory).
"""
import argparse
import csv
import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

STYLES = {
    "aris": dict(color="tab:blue", marker="o"),
    "fris": dict(color="tab:red", marker="s"),
    "ris": dict(color="tab:green", marker="^"),
}


def load(path):
    series = defaultdict(lambda: ([], [], []))
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            mean = float(row["mean"])
            if mean != mean:  # skip NaN aggregates
                continue
            xs, ys, es = series[(row["kind"], row["metric"])]
            xs.append(float(row["e0"]))
            ys.append(mean)
            es.append(float(row["stderr"]))
    return series


def plot(series, title, ylabel, out_path, logy=True):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    for (kind, metric), (xs, ys, es) in sorted(series.items()):
        style = STYLES.get(kind, {})
        label = kind if metric in ("power_per_element",) else f"{kind} {metric}"
        ax.errorbar(xs, ys, yerr=es, label=label, markersize=4, capsize=2, **style)
    ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel("direct-channel power E0")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    print(f"wrote {out_path}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--dir", default=os.path.dirname(os.path.abspath(__file__)))
    args = parser.parse_args()
    d = args.dir
    plot(
        load(os.path.join(d, "fig1_power.csv")),
        "Minimum average surface power per element",
        "P_min / N",
        os.path.join(d, "fig1_power.png"),
    )
    plot(
        load(os.path.join(d, "fig1_gain.csv")),
        "Per-user channel gain at minimum surface power",
        "gain per UE",
        os.path.join(d, "fig1_gain.png"),
    )
    plot(
        load(os.path.join(d, "fig2_gain.csv")),
        "Per-user channel gain at unit average surface power",
        "gain per UE",
        os.path.join(d, "fig2_gain.png"),
    )


if __name__ == "__main__":
    main()
"#;
