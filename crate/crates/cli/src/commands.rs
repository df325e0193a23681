//! The non-sweep subcommands: gen, train, eval, verify.

use std::path::Path;

use serde::Serialize;

use nisac_core::config::RunConfig;
use nisac_core::dataset::{generate_dataset, Dataset};
use nisac_core::nn::{load_checkpoint, save_checkpoint, split_indices, CnnModel, EpochStats};
use nisac_core::pipeline::{evaluate_maps, train_on_dataset, EvalReport};
use nisac_core::verify::{run_all, run_suite, VerifyReport};
use nisac_core::{Error, Result};

/// Writes through a temp file in the target directory plus rename, so
/// artifacts are complete or absent but never half-written.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    std::io::Write::write_all(&mut tmp, bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("cannot encode report: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn gen(config: &Path, out: &Path, seed: Option<u64>, n: Option<usize>) -> Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(n) = n {
        cfg.dataset.n_records = n;
    }
    cfg.validate()?;
    let ds = generate_dataset(&cfg)?;
    ds.write(out)?;
    eprintln!(
        "wrote {} records to {} (config {})",
        ds.records.len(),
        out.display(),
        &ds.header.config_hash[..12]
    );
    Ok(())
}

/// Everything `train` learned, alongside the exact config it ran under.
#[derive(Serialize)]
struct TrainArtifact {
    config_hash: String,
    best_epoch: usize,
    history: Vec<EpochStats>,
    train_indices: Vec<usize>,
    val_indices: Vec<usize>,
    config: RunConfig,
}

pub fn train(data: &Path, out_dir: &Path, seed: Option<u64>) -> Result<()> {
    let mut ds = Dataset::read(data)?;
    if let Some(seed) = seed {
        ds.header.config.train.seed = seed;
    }
    std::fs::create_dir_all(out_dir)?;
    let (model, outcome) = train_on_dataset(&ds)?;

    let ckpt_path = out_dir.join("checkpoint.nncp");
    let ckpt_tmp = out_dir.join("checkpoint.nncp.tmp");
    save_checkpoint(&ckpt_tmp, &model.config, &outcome.best_params)?;
    std::fs::rename(&ckpt_tmp, &ckpt_path)?;

    let artifact = TrainArtifact {
        config_hash: ds.header.config.config_hash(),
        best_epoch: outcome.best_epoch,
        history: outcome.history,
        train_indices: outcome.train_indices,
        val_indices: outcome.val_indices,
        config: ds.header.config.clone(),
    };
    write_json(&out_dir.join("history.json"), &artifact)?;

    let best = &artifact.history[artifact.best_epoch];
    eprintln!(
        "trained {} epochs; best epoch {} (val loss {:.6}, val accuracy {:.4}); wrote {}",
        artifact.history.len(),
        artifact.best_epoch,
        best.val_loss,
        best.val_accuracy,
        ckpt_path.display()
    );
    Ok(())
}

/// Eval report plus the provenance needed to interpret it.
#[derive(Serialize)]
struct EvalArtifact {
    config_hash: String,
    /// Which records were scored: the held-out validation slice, or every
    /// record when the config trains on the full set.
    slice: &'static str,
    #[serde(flatten)]
    report: EvalReport,
}

pub fn eval(data: &Path, model_path: &Path, out: Option<&Path>, seed: Option<u64>) -> Result<()> {
    let mut ds = Dataset::read(data)?;
    if let Some(seed) = seed {
        ds.header.config.train.seed = seed;
    }
    let ckpt = load_checkpoint(model_path)?;
    let expected = ds.header.config.cnn_config()?;
    if ckpt.config != expected {
        return Err(Error::Config(format!(
            "checkpoint architecture {:?} does not match the dataset config's {:?}",
            ckpt.config, expected
        )));
    }
    let model = CnnModel::new(ckpt.config.clone())?;
    let (_, val) = split_indices(ds.records.len(), &ds.header.config.train);
    let (indices, slice) = if val.is_empty() {
        ((0..ds.records.len()).collect::<Vec<_>>(), "all")
    } else {
        (val, "validation")
    };
    let report = evaluate_maps(&ds, &model, &ckpt.params, &indices)?;
    let artifact = EvalArtifact {
        config_hash: ds.header.config.config_hash(),
        slice,
        report,
    };
    match out {
        Some(path) => write_json(path, &artifact)?,
        None => {
            let text = serde_json::to_string_pretty(&artifact)
                .map_err(|e| Error::Format(format!("cannot encode report: {e}")))?;
            println!("{text}");
        }
    }
    Ok(())
}

pub fn verify(suite: Option<&str>, seed: u64, out: Option<&Path>) -> Result<bool> {
    let reports: Vec<VerifyReport> = match suite {
        Some(name) => vec![run_suite(name, seed)?],
        None => run_all(seed),
    };
    for report in &reports {
        for check in &report.checks {
            let flag = if check.pass { "pass" } else { "FAIL" };
            eprintln!("{} {}/{}: {}", flag, report.suite, check.name, check.detail);
        }
    }
    match out {
        Some(path) => write_json(path, &reports)?,
        None => {
            let text = serde_json::to_string_pretty(&reports)
                .map_err(|e| Error::Format(format!("cannot encode report: {e}")))?;
            println!("{text}");
        }
    }
    Ok(reports.iter().all(|r| r.passed))
}
