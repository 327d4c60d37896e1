//! The S1 -> C1 -> S2 -> C2 feedforward spike-wave pipeline: oriented edge
//! detection with latency coding, first-spike max pooling, plastic S2
//! integration with lateral inhibition, and global C2 pooling.

pub mod encoding;
pub mod kernels;
pub mod wave;

pub use encoding::{c1_pool, s1_encode};
pub use kernels::{oriented_kernels, reconstruct_feature, OrientedKernel, KERNEL_SIZE};
pub use wave::{c2_pool, c2_potentials, init_bank, s2_grid, s2_wave, zero_bank, NeuronModel, WaveResult};

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ingestion::rescale_bilinear;
use crate::plasticity::LearningSchedule;
use crate::rng::Rng;
use crate::types::{SpikeEvent, SynapseBank};

/// One image, encoded once: per-scale, per-orientation C1 latency maps plus
/// the time-sorted C1 spike list. Scales too small for the kernel or the C1
/// window are left empty.
#[derive(Debug, Clone)]
pub struct EncodedImage {
    pub c1: Vec<Vec<crate::types::LatencyMap>>,
    pub events: Vec<SpikeEvent>,
}

pub fn encode_image(img: &Array2<f64>, cfg: &RunConfig, kernels: &[OrientedKernel]) -> Result<EncodedImage> {
    let (rows, cols) = img.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("empty image".into()));
    }
    let mut c1 = Vec::with_capacity(cfg.scale_factors.len());
    for (s, &factor) in cfg.scale_factors.iter().enumerate() {
        let s_rows = ((rows as f64 * factor).round() as usize).max(1);
        let s_cols = ((cols as f64 * factor).round() as usize).max(1);
        if s_rows < KERNEL_SIZE || s_cols < KERNEL_SIZE {
            c1.push(Vec::new());
            continue;
        }
        let scaled = if s_rows == rows && s_cols == cols {
            img.clone()
        } else {
            rescale_bilinear(img, s_rows, s_cols)
        };
        let s1 = s1_encode(&scaled, s, kernels, cfg.s1_threshold)?;
        if s1[0].rows() < cfg.c1_window || s1[0].cols() < cfg.c1_window {
            c1.push(Vec::new());
            continue;
        }
        c1.push(c1_pool(&s1, cfg.c1_window, cfg.c1_stride)?);
    }
    let mut events = Vec::new();
    for maps in &c1 {
        for map in maps {
            for ((r, c), t) in map.grid.indexed_iter() {
                if let Some(t) = t.finite() {
                    events.push(SpikeEvent {
                        layer: crate::types::Layer::C1,
                        scale: map.scale,
                        channel: map.channel,
                        row: r,
                        col: c,
                        latency: t,
                    });
                }
            }
        }
    }
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(EncodedImage { c1, events })
}

/// True if at least one scale admits S2 cells under this configuration.
pub fn has_s2_positions(enc: &EncodedImage, cfg: &RunConfig) -> bool {
    enc.c1
        .iter()
        .any(|maps| !maps.is_empty() && s2_grid(maps[0].rows(), maps[0].cols(), cfg.s2_rf).is_some())
}

/// Run one full wave. With `plasticity` set this is a training presentation;
/// without it the bank is left untouched.
pub fn run_wave(
    enc: &EncodedImage,
    bank: &mut SynapseBank,
    cfg: &RunConfig,
    model: &NeuronModel,
    plasticity: Option<&mut LearningSchedule>,
) -> Result<(Vec<SpikeEvent>, WaveResult)> {
    let spikes = s2_wave(&enc.events, &enc.c1, bank, cfg, model, plasticity)?;
    let result = c2_pool(&spikes, &enc.c1, bank, cfg);
    Ok((spikes, result))
}

/// One sequential pass over `images` with plasticity on. Returns the number
/// of S2 spikes each presentation produced.
pub fn train_epoch(
    images: &[EncodedImage],
    bank: &mut SynapseBank,
    schedule: &mut LearningSchedule,
    cfg: &RunConfig,
    model: &NeuronModel,
) -> Result<Vec<usize>> {
    let mut counts = Vec::with_capacity(images.len());
    for enc in images {
        let spikes = s2_wave(&enc.events, &enc.c1, bank, cfg, model, Some(schedule))?;
        counts.push(spikes.len());
    }
    Ok(counts)
}

/// Outcome of a training run.
#[derive(Debug, Clone)]
pub struct TrainStats {
    pub iterations: usize,
    pub post_spikes: usize,
}

/// Train for `cfg.n_iterations` presentations, cycling through the training
/// set in a seeded shuffled order. `on_snapshot` fires at every multiple of
/// `cfg.snapshot_every`.
pub fn train_run<F>(
    images: &[EncodedImage],
    bank: &mut SynapseBank,
    cfg: &RunConfig,
    rng: &mut Rng,
    mut on_snapshot: F,
) -> Result<TrainStats>
where
    F: FnMut(usize, &SynapseBank) -> Result<()>,
{
    if images.is_empty() && cfg.n_iterations > 0 {
        return Err(Error::Contract("train_run: empty training set".into()));
    }
    let model = NeuronModel::from_config(cfg);
    let mut schedule = LearningSchedule::new(cfg);
    let mut order: Vec<usize> = (0..images.len()).collect();
    order.shuffle(rng);
    for iter in 1..=cfg.n_iterations {
        let idx = order[(iter - 1) % order.len()];
        s2_wave(&images[idx].events, &images[idx].c1, bank, cfg, &model, Some(&mut schedule))?;
        if iter % cfg.snapshot_every == 0 {
            on_snapshot(iter, bank)?;
        }
    }
    Ok(TrainStats { iterations: cfg.n_iterations, post_spikes: schedule.post_spikes_seen })
}
