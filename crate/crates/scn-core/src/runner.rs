//! Experiment orchestration: dataset assembly, encoding, training with
//! snapshots, and per-snapshot evaluation. The command-line frontend and the
//! test harnesses both drive runs through this module.

use std::path::Path;
use std::time::Instant;

use ndarray::Array2;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::eval::{
    count_selected_weights, equilibrium_accuracy, rbf_train, roc_auc, selection_threshold,
    FeatureVector, DEFAULT_RIDGE,
};
use crate::ingestion::{
    add_gaussian_noise, generate_synthetic, load_grayscale, rescale_longest_side, split_and_sample,
    SyntheticClass,
};
use crate::network::{encode_image, init_bank, oriented_kernels, train_run, EncodedImage};
use crate::rng::{rng_substream, streams};
use crate::types::{RunRecord, SynapseBank};

#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub image: Array2<f64>,
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: Vec<LabeledImage>,
    pub test: Vec<LabeledImage>,
}

/// Generate the synthetic two-class set: `synthetic_per_class` images per
/// class, equally split and subsampled to `n_sample` per half, all driven by
/// substreams of `cfg.seed`.
pub fn synthetic_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let mut gen_rng = rng_substream(cfg.seed, streams::DATASET);
    let mut split_rng = rng_substream(cfg.seed, streams::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, label) in [(SyntheticClass::Target, true), (SyntheticClass::Clutter, false)] {
        let images: Vec<Array2<f64>> = (0..cfg.synthetic_per_class)
            .map(|_| generate_synthetic(class, cfg.synthetic_size, &mut gen_rng))
            .collect::<Result<_>>()?;
        let (tr, te) = split_and_sample(&images, cfg.n_sample, &mut split_rng)?;
        train.extend(tr.into_iter().map(|image| LabeledImage { image, label }));
        test.extend(te.into_iter().map(|image| LabeledImage { image, label }));
    }
    Ok(Dataset { train, test })
}

/// Load `<root>/<class>/*.pgm` for the two configured classes (first class is
/// positive), rescale to the configured resolution, split per class.
pub fn directory_dataset(root: &Path, cfg: &RunConfig) -> Result<Dataset> {
    let mut split_rng = rng_substream(cfg.seed, streams::SPLIT);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (ci, class) in cfg.classes.iter().enumerate() {
        let dir = root.join(class);
        let mut paths: Vec<_> = std::fs::read_dir(&dir)
            .map_err(|e| Error::Config(format!("cannot read class directory {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().and_then(|x| x.to_str()).is_some_and(|x| {
                    x.eq_ignore_ascii_case("pgm") || x.eq_ignore_ascii_case("ppm")
                })
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::Config(format!("no .pgm images under {}", dir.display())));
        }
        let images: Vec<Array2<f64>> = paths
            .iter()
            .map(|p| load_grayscale(p).map(|img| rescale_longest_side(&img, cfg.resolution)))
            .collect::<Result<_>>()?;
        let n_sample = cfg.n_sample.min(images.len() / 2);
        if n_sample == 0 {
            return Err(Error::Config(format!("class {class} has too few images to split")));
        }
        let (tr, te) = split_and_sample(&images, n_sample, &mut split_rng)?;
        let label = ci == 0;
        train.extend(tr.into_iter().map(|image| LabeledImage { image, label }));
        test.extend(te.into_iter().map(|image| LabeledImage { image, label }));
    }
    Ok(Dataset { train, test })
}

/// Encoded dataset ready for waves. Test images are encoded twice when a
/// noise level is requested: once clean, once with test-time Gaussian noise.
pub struct Prepared {
    pub train: Vec<(EncodedImage, bool)>,
    pub test_clean: Vec<(EncodedImage, bool)>,
    pub test_noisy: Option<Vec<(EncodedImage, bool)>>,
}

pub fn prepare(dataset: &Dataset, cfg: &RunConfig, noise_sigma: f64) -> Result<Prepared> {
    let kernels = oriented_kernels(cfg.n_orientations);
    let encode_set = |set: &[LabeledImage]| -> Result<Vec<(EncodedImage, bool)>> {
        set.iter().map(|li| Ok((encode_image(&li.image, cfg, &kernels)?, li.label))).collect()
    };
    let train = encode_set(&dataset.train)?;
    let test_clean = encode_set(&dataset.test)?;
    let test_noisy = if noise_sigma > 0.0 {
        let mut noise_rng = rng_substream(cfg.seed, streams::NOISE);
        let noisy: Vec<LabeledImage> = dataset
            .test
            .iter()
            .map(|li| LabeledImage {
                image: add_gaussian_noise(&li.image, noise_sigma, &mut noise_rng),
                label: li.label,
            })
            .collect();
        Some(encode_set(&noisy)?)
    } else {
        None
    };
    if let Some((enc, _)) = train.first() {
        if !crate::network::has_s2_positions(enc, cfg) {
            return Err(Error::Config(
                "no scale admits S2 cells; lower s2_rf or c1_window, or raise the resolution".into(),
            ));
        }
    }
    Ok(Prepared { train, test_clean, test_noisy })
}

/// C2 potentials of every image under the given bank.
pub fn features_for(bank: &SynapseBank, set: &[(EncodedImage, bool)], cfg: &RunConfig) -> Vec<FeatureVector> {
    set.iter()
        .map(|(enc, label)| {
            let (values, _) = crate::network::c2_potentials(&enc.c1, bank, cfg);
            FeatureVector { values, label: *label }
        })
        .collect()
}

/// Train the readout on the train features and measure the test set.
pub fn evaluate_bank(
    bank: &SynapseBank,
    train: &[(EncodedImage, bool)],
    test: &[(EncodedImage, bool)],
    cfg: &RunConfig,
    iteration: usize,
    started: Instant,
) -> Result<RunRecord> {
    let train_features = features_for(bank, train, cfg);
    let model = rbf_train(&train_features, DEFAULT_RIDGE)?;
    let test_features = features_for(bank, test, cfg);
    let scores: Vec<f64> = test_features.iter().map(|v| model.score(&v.values)).collect();
    let labels: Vec<bool> = test_features.iter().map(|v| v.label).collect();
    let (accuracy_eq, _) = equilibrium_accuracy(&scores, &labels)?;
    let auc = roc_auc(&scores, &labels)?;
    let record = RunRecord {
        iteration,
        accuracy_eq,
        roc_auc: auc,
        selected_weights: count_selected_weights(bank, selection_threshold(cfg.rule)),
        wall_time: started.elapsed().as_secs_f64(),
    };
    record.validate()?;
    Ok(record)
}

/// A complete training run with in-memory snapshots and per-snapshot metrics
/// on the clean (and optionally noisy) test set.
pub struct RunOutput {
    pub snapshots: Vec<(usize, SynapseBank)>,
    pub records: Vec<RunRecord>,
    pub noisy_records: Option<Vec<RunRecord>>,
    pub train_seconds: f64,
}

pub fn run_experiment(prep: &Prepared, cfg: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let mut weights_rng = rng_substream(cfg.seed, streams::WEIGHTS);
    let mut order_rng = rng_substream(cfg.seed, streams::ORDER);
    let mut bank = init_bank(cfg, &mut weights_rng);
    let train_images: Vec<EncodedImage> = prep.train.iter().map(|(e, _)| e.clone()).collect();
    let mut snapshots: Vec<(usize, SynapseBank)> = Vec::new();
    train_run(&train_images, &mut bank, cfg, &mut order_rng, |iter, bank| {
        snapshots.push((iter, bank.clone()));
        Ok(())
    })?;
    let train_seconds = started.elapsed().as_secs_f64();

    let mut records = Vec::with_capacity(snapshots.len());
    for (iter, bank) in &snapshots {
        records.push(evaluate_bank(bank, &prep.train, &prep.test_clean, cfg, *iter, started)?);
    }
    let noisy_records = match &prep.test_noisy {
        Some(noisy) => {
            let mut out = Vec::with_capacity(snapshots.len());
            for (iter, bank) in &snapshots {
                out.push(evaluate_bank(bank, &prep.train, noisy, cfg, *iter, started)?);
            }
            Some(out)
        }
        None => None,
    };
    Ok(RunOutput { snapshots, records, noisy_records, train_seconds })
}

/// Peak accuracy over a run's snapshots.
pub fn peak_accuracy(records: &[RunRecord]) -> f64 {
    records.iter().map(|r| r.accuracy_eq).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.synthetic_per_class = 24;
        cfg.n_sample = 12;
        cfg.synthetic_size = 48;
        cfg.s2_rf = 4;
        cfg.n_features = 4;
        cfg.n_iterations = 10;
        cfg.snapshot_every = 5;
        cfg
    }

    #[test]
    fn synthetic_dataset_is_balanced_and_deterministic() {
        let cfg = small_cfg();
        let a = synthetic_dataset(&cfg).unwrap();
        let b = synthetic_dataset(&cfg).unwrap();
        assert_eq!(a.train.len(), 24);
        assert_eq!(a.test.len(), 24);
        assert_eq!(a.train.iter().filter(|li| li.label).count(), 12);
        for (x, y) in a.train.iter().zip(&b.train) {
            assert_eq!(x.image, y.image);
            assert_eq!(x.label, y.label);
        }
    }

    #[test]
    fn run_experiment_produces_one_record_per_snapshot() {
        let cfg = small_cfg();
        let dataset = synthetic_dataset(&cfg).unwrap();
        let prep = prepare(&dataset, &cfg, 0.0).unwrap();
        let out = run_experiment(&prep, &cfg).unwrap();
        assert_eq!(out.snapshots.len(), 2);
        assert_eq!(out.records.len(), 2);
        assert!(out.noisy_records.is_none());
        assert_eq!(out.records[0].iteration, 5);
        assert_eq!(out.records[1].iteration, 10);
    }

    #[test]
    fn identical_seeds_reproduce_identical_runs() {
        let cfg = small_cfg();
        let dataset = synthetic_dataset(&cfg).unwrap();
        let prep = prepare(&dataset, &cfg, 0.3).unwrap();
        let a = run_experiment(&prep, &cfg).unwrap();
        let b = run_experiment(&prep, &cfg).unwrap();
        for ((ia, ba), (ib, bb)) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(ia, ib);
            assert_eq!(ba, bb);
        }
        assert_eq!(a.records, b.records);
        assert_eq!(a.noisy_records, b.noisy_records);
    }
}
