//! Shared domain types: spike events, latency grids, the trainable synapse
//! bank, and per-iteration run records.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Latency of a first spike in virtual time, or "never" for a neuron that
/// stays silent for the whole wave. One image presentation spans [0, 1);
/// "never" compares later than every finite latency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Latency {
    At(f64),
    Never,
}

impl Latency {
    /// Finite latency; must be non-negative and finite.
    pub fn at(t: f64) -> Latency {
        assert!(t.is_finite() && t >= 0.0, "latency must be finite and >= 0, got {t}");
        Latency::At(t)
    }

    pub fn is_never(self) -> bool {
        matches!(self, Latency::Never)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Latency::At(t) => Some(t),
            Latency::Never => None,
        }
    }
}

impl Eq for Latency {}

impl Ord for Latency {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use Latency::*;
        match (self, other) {
            (Never, Never) => std::cmp::Ordering::Equal,
            (Never, At(_)) => std::cmp::Ordering::Greater,
            (At(_), Never) => std::cmp::Ordering::Less,
            (At(a), At(b)) => a.partial_cmp(b).expect("latencies are finite"),
        }
    }
}

impl PartialOrd for Latency {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layer {
    S1,
    C1,
    S2,
    C2,
}

/// One spike. `(layer, scale, channel, row, col)` identifies the neuron;
/// `channel` is an orientation index in S1/C1 and a feature index in S2/C2.
/// Each neuron emits at most one spike per image presentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub layer: Layer,
    pub scale: usize,
    pub channel: usize,
    pub row: usize,
    pub col: usize,
    pub latency: f64,
}

impl SpikeEvent {
    /// Raster sort key: latency first, ties broken by (scale, row, col, channel).
    pub fn sort_key(&self) -> (Latency, usize, usize, usize, usize) {
        (Latency::at(self.latency), self.scale, self.row, self.col, self.channel)
    }
}

/// First-spike latencies of one (scale, channel) grid of cells.
#[derive(Debug, Clone)]
pub struct LatencyMap {
    pub scale: usize,
    pub channel: usize,
    pub grid: Array2<Latency>,
}

impl LatencyMap {
    pub fn never(scale: usize, channel: usize, rows: usize, cols: usize) -> LatencyMap {
        LatencyMap { scale, channel, grid: Array2::from_elem((rows, cols), Latency::Never) }
    }

    pub fn rows(&self) -> usize {
        self.grid.nrows()
    }

    pub fn cols(&self) -> usize {
        self.grid.ncols()
    }
}

/// Trainable C1 -> S2 weights: one tensor per feature, with shape
/// (rf, rf, n_orientations). There is exactly one stored copy per feature;
/// S2 cells at every position and scale read and update the same tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseBank {
    weights: Vec<Array3<f64>>,
}

impl SynapseBank {
    pub fn new(weights: Vec<Array3<f64>>) -> SynapseBank {
        assert!(!weights.is_empty());
        let dim = weights[0].dim();
        assert!(weights.iter().all(|w| w.dim() == dim), "all features share one shape");
        SynapseBank { weights }
    }

    /// Uniform random weights in [lo, hi) for every feature.
    pub fn init_uniform(
        n_features: usize,
        rf: usize,
        n_orientations: usize,
        lo: f64,
        hi: f64,
        rng: &mut crate::rng::Rng,
    ) -> SynapseBank {
        use rand::Rng as _;
        let weights = (0..n_features)
            .map(|_| Array3::from_shape_simple_fn((rf, rf, n_orientations), || rng.gen_range(lo..hi)))
            .collect();
        SynapseBank::new(weights)
    }

    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    /// (rf_rows, rf_cols, n_orientations)
    pub fn dims(&self) -> (usize, usize, usize) {
        self.weights[0].dim()
    }

    pub fn feature(&self, f: usize) -> &Array3<f64> {
        &self.weights[f]
    }

    pub fn feature_mut(&mut self, f: usize) -> &mut Array3<f64> {
        &mut self.weights[f]
    }

    pub fn weight_sum(&self, f: usize) -> f64 {
        self.weights[f].sum()
    }

    /// Number of weights strictly above `threshold` in feature `f`.
    pub fn count_above(&self, f: usize, threshold: f64) -> usize {
        self.weights[f].iter().filter(|&&w| w > threshold).count()
    }
}

/// Metrics measured at one snapshot of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub iteration: usize,
    pub accuracy_eq: f64,
    pub roc_auc: f64,
    pub selected_weights: f64,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.accuracy_eq) || !(0.0..=1.0).contains(&self.roc_auc) {
            return Err(Error::Domain(format!(
                "accuracy_eq and roc_auc must lie in [0,1]: {} / {}",
                self.accuracy_eq, self.roc_auc
            )));
        }
        Ok(())
    }

    pub const CSV_HEADER: &'static str = "iteration,accuracy_eq,roc_auc,selected_weights";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.iteration, self.accuracy_eq, self.roc_auc, self.selected_weights)
    }
}

/// Render records in the metrics CSV format (header + one row per snapshot).
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RunRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_compares_after_every_finite_latency() {
        assert!(Latency::at(0.0) < Latency::Never);
        assert!(Latency::at(1e9) < Latency::Never);
        assert_eq!(Latency::Never, Latency::Never);
        assert!(Latency::at(0.25) < Latency::at(0.5));
    }

    #[test]
    #[should_panic]
    fn negative_latency_rejected() {
        Latency::at(-0.1);
    }

    #[test]
    fn spike_sort_key_breaks_ties_in_raster_order() {
        let mk = |scale, row, col, channel| SpikeEvent {
            layer: Layer::C1,
            scale,
            channel,
            row,
            col,
            latency: 0.5,
        };
        let mut events = vec![mk(1, 0, 0, 0), mk(0, 1, 0, 0), mk(0, 0, 1, 0), mk(0, 0, 0, 1), mk(0, 0, 0, 0)];
        events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let order: Vec<_> = events.iter().map(|e| (e.scale, e.row, e.col, e.channel)).collect();
        assert_eq!(order, vec![(0, 0, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0), (0, 1, 0, 0), (1, 0, 0, 0)]);
    }

    #[test]
    fn bank_has_one_tensor_per_feature() {
        let mut rng = crate::rng::rng_create(3);
        let bank = SynapseBank::init_uniform(4, 3, 4, 0.0, 0.3, &mut rng);
        assert_eq!(bank.n_features(), 4);
        assert_eq!(bank.dims(), (3, 3, 4));
        assert!(bank.feature(0).iter().all(|&w| (0.0..0.3).contains(&w)));
    }

    #[test]
    fn csv_format_is_stable() {
        let r = RunRecord {
            iteration: 100,
            accuracy_eq: 0.75,
            roc_auc: 0.5,
            selected_weights: 12.5,
            wall_time: 1.0,
        };
        assert_eq!(records_to_csv(&[r]), "iteration,accuracy_eq,roc_auc,selected_weights\n100,0.75,0.5,12.5\n");
    }
}
