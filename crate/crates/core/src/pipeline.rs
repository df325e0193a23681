//! Record-to-feature pipeline and end-to-end train/eval glue.
//!
//! For every record the pipeline replays the downlink: precode from the
//! communication channel, fill the resource grid from the stored bits,
//! propagate through the sensing channel with per-epoch noise, estimate,
//! normalize, transform to features, and fuse against the target-free
//! reference. The reference branch runs the same estimator on a noiseless
//! observation of the background channel, so with zero noise and no targets
//! the subtractive fusion is exactly zero.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::Array3;

use crate::channel::synthesize_sensing_channel_parts;
use crate::config::RunConfig;
use crate::dataset::{quantize_to_f32, Dataset, DatasetRecord};
use crate::error::Result;
use crate::estimator::{estimate, normalize_csi};
use crate::features::{beam_delay_features, direct_features, fuse, FeatureKind, FeatureTensor, Fusion};
use crate::geometry::MapRepr;
use crate::metrics::{bce_test_loss, discretize, pr_break_even, prob_map_accuracy};
use crate::nn::{train, CnnModel, FeatureSource, TrainOutcome};
use crate::ofdm::{map_to_rg, transmit_and_receive, zf_precoder};
use crate::rng::{index2, stream, StreamDomain};
use crate::tensor::CsiTensor;

pub struct FeaturePipeline {
    cfg: RunConfig,
    /// Target-free sensing channel, quantized like stored records.
    h_ref: CsiTensor,
    active: Vec<usize>,
    noise_variance: f64,
    /// Reference features per record index; they carry no noise, so they
    /// never depend on the epoch.
    ref_cache: Mutex<HashMap<u64, Arc<FeatureTensor>>>,
}

impl FeaturePipeline {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let empty = cfg.scene.empty_scene();
        let parts =
            synthesize_sensing_channel_parts(&empty, &cfg.channel, &cfg.tx_array(), &cfg.rx_array())?;
        Ok(Self {
            h_ref: quantize_to_f32(&parts.background),
            active: cfg.grid.active_subcarriers(cfg.channel.n_subcarriers),
            noise_variance: cfg.noise_variance(),
            cfg: cfg.clone(),
            ref_cache: Mutex::new(HashMap::new()),
        })
    }

    fn transform(&self, csi: &CsiTensor) -> FeatureTensor {
        let csi = if self.cfg.features.normalize { normalize_csi(csi).0 } else { csi.clone() };
        match self.cfg.features.kind {
            FeatureKind::BeamDelay => beam_delay_features(&csi),
            FeatureKind::Direct => direct_features(&csi),
        }
    }

    /// CNN input for one record at one training epoch. The noise stream is
    /// keyed by (epoch, record), so every epoch sees a fresh draw and any
    /// (epoch, record) pair can be replayed on its own.
    pub fn record_features(&self, record: &DatasetRecord, epoch: usize) -> Result<Array3<f64>> {
        let precoder = zf_precoder(&record.h_comm, &self.active)?;
        let rg = map_to_rg(&record.bits, &self.cfg.grid, self.cfg.channel.n_subcarriers)?;
        let mut noise_rng =
            stream(self.cfg.seed, StreamDomain::Noise, index2(epoch as u64, record.index));
        let obs =
            transmit_and_receive(&record.h_sens, &precoder, &rg, self.noise_variance, &mut noise_rng)?;
        let est = estimate(&obs, &self.cfg.estimator)?;
        let est_features = self.transform(&est.csi);

        let reference = match self.cfg.features.fusion {
            Fusion::Nor => None,
            Fusion::Sub | Fusion::Sta => {
                let cached = self.ref_cache.lock().expect("cache lock").get(&record.index).cloned();
                let tensor = match cached {
                    Some(t) => t,
                    None => {
                        let mut silent = stream(0, StreamDomain::Noise, 0);
                        let ref_obs =
                            transmit_and_receive(&self.h_ref, &precoder, &rg, 0.0, &mut silent)?;
                        let ref_est = estimate(&ref_obs, &self.cfg.estimator)?;
                        let t = Arc::new(self.transform(&ref_est.csi));
                        self.ref_cache
                            .lock()
                            .expect("cache lock")
                            .insert(record.index, Arc::clone(&t));
                        t
                    }
                };
                Some(tensor)
            }
        };
        let fused = fuse(est_features, reference.as_deref(), self.cfg.features.fusion)?;
        Ok(fused.to_cnn_input())
    }
}

/// Adapts a record slice to the trainer's sample interface.
pub struct PipelineSource<'a> {
    pub pipeline: &'a FeaturePipeline,
    pub records: &'a [DatasetRecord],
}

impl FeatureSource for PipelineSource<'_> {
    fn n_records(&self) -> usize {
        self.records.len()
    }

    fn features(&self, epoch: usize, record: usize) -> Result<Array3<f64>> {
        self.pipeline.record_features(&self.records[record], epoch)
    }

    fn label(&self, record: usize) -> &[f64] {
        &self.records[record].label
    }
}

/// Trains the configured network on a dataset; the config travels inside the
/// dataset header.
pub fn train_on_dataset(ds: &Dataset) -> Result<(CnnModel, TrainOutcome)> {
    let cfg = &ds.header.config;
    let model = CnnModel::new(cfg.cnn_config()?)?;
    let pipeline = FeaturePipeline::new(cfg)?;
    let source = PipelineSource { pipeline: &pipeline, records: &ds.records };
    let outcome = train(&model, &source, &cfg.train)?;
    Ok((model, outcome))
}

/// Map-quality metrics over a set of records, using epoch-0 features.
#[derive(Clone, Debug, serde::Serialize)]
pub struct EvalReport {
    pub n_samples: usize,
    /// Argmax cell accuracy; present for the probability representation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    /// Precision-recall break-even over cells; present for soft and hard
    /// maps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub break_even: Option<f64>,
    /// Mean binary cross entropy; present for soft and hard maps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bce: Option<f64>,
}

pub fn evaluate_maps(
    ds: &Dataset,
    model: &CnnModel,
    params: &[f64],
    indices: &[usize],
) -> Result<EvalReport> {
    let cfg = &ds.header.config;
    let pipeline = FeaturePipeline::new(cfg)?;
    let mut predictions = Vec::with_capacity(indices.len());
    let mut labels = Vec::with_capacity(indices.len());
    for &i in indices {
        let record = &ds.records[i];
        let input = pipeline.record_features(record, 0)?;
        predictions.push(model.predict(params, &input)?);
        labels.push(record.label.clone());
    }
    let report = match cfg.map.repr {
        MapRepr::Probability => EvalReport {
            n_samples: indices.len(),
            accuracy: Some(prob_map_accuracy(&predictions, &labels)?),
            break_even: None,
            bce: None,
        },
        MapRepr::Soft | MapRepr::Hard => {
            let scores: Vec<f64> = predictions.iter().flatten().copied().collect();
            let flat_labels: Vec<f64> = labels.iter().flatten().copied().collect();
            let binary = discretize(&flat_labels, 0.0);
            EvalReport {
                n_samples: indices.len(),
                accuracy: None,
                break_even: Some(pr_break_even(&scores, &binary)?),
                bce: Some(bce_test_loss(&predictions, &labels)?),
            }
        }
    };
    Ok(report)
}
