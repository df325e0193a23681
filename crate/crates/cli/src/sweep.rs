//! One-axis parameter sweeps: a full gen+train+eval per grid point per seed,
//! tabulated as CSV.

use std::fmt;
use std::path::Path;

use clap::ValueEnum;

use crate::commands::write_atomic;
use nisac_core::config::RunConfig;
use nisac_core::dataset::generate_dataset;
use nisac_core::features::Fusion;
use nisac_core::pipeline::{evaluate_maps, train_on_dataset};
use nisac_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    /// Estimator ridge weight.
    Lambda,
    /// Map resolution per side.
    CellsPerSide,
    /// Feature fusion mode (sub, sta, nor).
    Fusion,
    /// Bandwidth in Hz; the subcarrier count follows at the base config's
    /// subcarrier spacing.
    Bandwidth,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Lambda => "lambda",
            Axis::CellsPerSide => "cells_per_side",
            Axis::Fusion => "fusion",
            Axis::Bandwidth => "bandwidth",
        })
    }
}

fn parse_f64(raw: &str, what: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{what} value {raw:?} is not a number")))
}

fn parse_usize(raw: &str, what: &str) -> Result<usize> {
    raw.trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{what} value {raw:?} is not a count")))
}

fn parse_fusion(raw: &str) -> Result<Fusion> {
    match raw.trim() {
        "sub" => Ok(Fusion::Sub),
        "sta" => Ok(Fusion::Sta),
        "nor" => Ok(Fusion::Nor),
        other => Err(Error::Config(format!(
            "fusion value {other:?} is not one of sub, sta, nor"
        ))),
    }
}

/// Rewrites one config field for a grid point. Bandwidth keeps the base
/// config's subcarrier spacing and moves the subcarrier count instead, so
/// wider sweeps mean finer delay resolution, not a rescaled grid.
fn apply(cfg: &mut RunConfig, axis: Axis, raw: &str, base_spacing: f64) -> Result<()> {
    match axis {
        Axis::Lambda => {
            cfg.estimator.lambda = parse_f64(raw, "lambda")?;
        }
        Axis::CellsPerSide => {
            cfg.map.cells_per_side = parse_usize(raw, "cells_per_side")?;
        }
        Axis::Fusion => {
            cfg.features.fusion = parse_fusion(raw)?;
        }
        Axis::Bandwidth => {
            let bw = parse_f64(raw, "bandwidth")?;
            let w = (bw / base_spacing).round();
            if !w.is_finite() || w < 1.0 {
                return Err(Error::Config(format!(
                    "bandwidth {bw} Hz gives no subcarriers at {base_spacing} Hz spacing"
                )));
            }
            cfg.channel.n_subcarriers = w as usize;
            cfg.channel.bandwidth_hz = bw;
        }
    }
    Ok(())
}

fn split_list(raw: &str, what: &str) -> Result<Vec<String>> {
    let items: Vec<String> = raw
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::Config(format!("{what} list is empty")));
    }
    Ok(items)
}

pub fn run(config: &Path, axis: Axis, values: &str, seeds: &str, out: &Path) -> Result<()> {
    let base = RunConfig::load(config)?;
    let base_spacing = base.channel.subcarrier_spacing();
    let values = split_list(values, "values")?;
    let seeds: Vec<u64> = split_list(seeds, "seeds")?
        .iter()
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| Error::Config(format!("seed {s:?} is not an integer")))
        })
        .collect::<Result<_>>()?;

    // Validate the whole grid before spending time on any point.
    for value in &values {
        let mut cfg = base.clone();
        apply(&mut cfg, axis, value, base_spacing)?;
        cfg.validate()?;
    }

    let mut csv = String::from("axis,axis_value,seed,metric,metric_value\n");
    for value in &values {
        for &seed in &seeds {
            let mut cfg = base.clone();
            apply(&mut cfg, axis, value, base_spacing)?;
            cfg.seed = seed;
            cfg.train.seed = seed;
            eprintln!(
                "sweep {axis}={value} seed={seed}: {} records",
                cfg.dataset.n_records
            );
            let ds = generate_dataset(&cfg)?;
            let (model, outcome) = train_on_dataset(&ds)?;
            let indices = if outcome.val_indices.is_empty() {
                (0..ds.records.len()).collect()
            } else {
                outcome.val_indices.clone()
            };
            let report = evaluate_maps(&ds, &model, &outcome.best_params, &indices)?;
            let mut metrics: Vec<(&str, f64)> = Vec::new();
            if let Some(v) = report.accuracy {
                metrics.push(("accuracy", v));
            }
            if let Some(v) = report.break_even {
                metrics.push(("break_even", v));
            }
            if let Some(v) = report.bce {
                metrics.push(("bce", v));
            }
            for (metric, metric_value) in metrics {
                use std::fmt::Write;
                writeln!(csv, "{axis},{value},{seed},{metric},{metric_value}")
                    .expect("string write");
                eprintln!("sweep {axis}={value} seed={seed}: {metric} = {metric_value:.4}");
            }
        }
    }
    write_atomic(out, csv.as_bytes())?;
    eprintln!("wrote {}", out.display());
    Ok(())
}
