//! Run configuration. The on-disk format is a flat JSON object whose keys
//! match the field names below; missing keys take the defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    /// Multiplicative rule: +/- a * w * (1 - w), weights kept inside (0, 1).
    Original,
    /// Reference rule with exponential LTP and negative weights; not
    /// trainable in the excitatory network, kept for analysis only.
    Nessler,
    /// Exponential-LTP / constant-LTD rule with weights floored at 0.
    Probabilistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronKind {
    If,
    IzhikevichRs,
}

/// The four network variants compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Snn1,
    Snn2,
    Snn3,
    Snn4,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Variant> {
        match s.to_ascii_lowercase().as_str() {
            "snn1" => Ok(Variant::Snn1),
            "snn2" => Ok(Variant::Snn2),
            "snn3" => Ok(Variant::Snn3),
            "snn4" => Ok(Variant::Snn4),
            other => Err(Error::Config(format!("unknown variant '{other}' (expected snn1..snn4)"))),
        }
    }

    pub fn rule(self) -> RuleKind {
        match self {
            Variant::Snn1 | Variant::Snn3 => RuleKind::Original,
            Variant::Snn2 | Variant::Snn4 => RuleKind::Probabilistic,
        }
    }

    pub fn neuron(self) -> NeuronKind {
        match self {
            Variant::Snn1 | Variant::Snn2 => NeuronKind::If,
            Variant::Snn3 | Variant::Snn4 => NeuronKind::IzhikevichRs,
        }
    }
}

fn d_n_scales() -> usize { 5 }
fn d_n_orientations() -> usize { 4 }
fn d_rule() -> RuleKind { RuleKind::Original }
fn d_neuron() -> NeuronKind { NeuronKind::If }
fn d_a_plus_init() -> f64 { 0.015625 } // 2^-6
fn d_a_plus_max() -> f64 { 0.25 } // 2^-2
fn d_ratio() -> f64 { 4.0 / 3.0 }
fn d_schedule_period() -> usize { 400 }
fn d_n_iterations() -> usize { 1000 }
fn d_snapshot_every() -> usize { 100 }
fn d_seed() -> u64 { 0 }
fn d_epsilon() -> f64 { 0.05 }
fn d_c1_window() -> usize { 7 }
fn d_c1_stride() -> usize { 6 }
fn d_s2_rf() -> usize { 16 }
fn d_n_features() -> usize { 10 }
fn d_inhibition_radius() -> usize { 3 }
fn d_s1_threshold() -> f64 { 0.05 }
fn d_scale_factors() -> Vec<f64> { vec![1.0, 0.71, 0.5, 0.35, 0.25] }
fn d_izh_a() -> f64 { 0.03 }
fn d_izh_b() -> f64 { -2.0 }
fn d_izh_c() -> f64 { 100.0 }
fn d_izh_k() -> f64 { 0.7 }
fn d_izh_vth() -> f64 { 0.49 }
fn d_izh_vrest() -> f64 { 0.0 }
fn d_resolution() -> usize { 128 }
fn d_synthetic_size() -> usize { 64 }
fn d_synthetic_per_class() -> usize { 350 }
fn d_n_sample() -> usize { 175 }
fn d_classes() -> Vec<String> { vec!["target".into(), "clutter".into()] }

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "d_n_scales")]
    pub n_scales: usize,
    #[serde(default = "d_n_orientations")]
    pub n_orientations: usize,
    #[serde(default = "d_rule")]
    pub rule: RuleKind,
    #[serde(default = "d_neuron")]
    pub neuron: NeuronKind,
    #[serde(default = "d_a_plus_init")]
    pub a_plus_init: f64,
    #[serde(default = "d_a_plus_max")]
    pub a_plus_max: f64,
    /// a_plus / a_minus.
    #[serde(default = "d_ratio")]
    pub ratio: f64,
    /// Postsynaptic spikes between doublings of a_plus.
    #[serde(default = "d_schedule_period")]
    pub schedule_period: usize,
    #[serde(default = "d_n_iterations")]
    pub n_iterations: usize,
    #[serde(default = "d_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default = "d_seed")]
    pub seed: u64,
    /// Coincidence window of the reference rule, in virtual time.
    #[serde(default = "d_epsilon")]
    pub epsilon: f64,
    #[serde(default = "d_c1_window")]
    pub c1_window: usize,
    #[serde(default = "d_c1_stride")]
    pub c1_stride: usize,
    /// Receptive field of one S2 cell, in C1 cells per side.
    #[serde(default = "d_s2_rf")]
    pub s2_rf: usize,
    #[serde(default = "d_n_features")]
    pub n_features: usize,
    /// Chebyshev radius of same-scale suppression around a firing S2 cell.
    #[serde(default = "d_inhibition_radius")]
    pub inhibition_radius: usize,
    /// Edge responses below this fraction of the per-scale maximum never spike.
    #[serde(default = "d_s1_threshold")]
    pub s1_threshold: f64,
    #[serde(default = "d_scale_factors")]
    pub scale_factors: Vec<f64>,
    #[serde(default = "d_izh_a")]
    pub izh_a: f64,
    #[serde(default = "d_izh_b")]
    pub izh_b: f64,
    #[serde(default = "d_izh_c", alias = "izh_C")]
    pub izh_c: f64,
    #[serde(default = "d_izh_k")]
    pub izh_k: f64,
    #[serde(default = "d_izh_vth")]
    pub izh_vth: f64,
    #[serde(default = "d_izh_vrest")]
    pub izh_vrest: f64,
    /// Charge per weight unit for Izhikevich deliveries; derived from the
    /// receptive field when absent.
    #[serde(default)]
    pub izh_qscale: Option<f64>,
    /// IF firing threshold in weight units; derived from the receptive field
    /// when absent.
    #[serde(default)]
    pub if_threshold: Option<f64>,
    /// Longest image side after loading, in pixels.
    #[serde(default = "d_resolution")]
    pub resolution: usize,
    /// Side of generated synthetic images.
    #[serde(default = "d_synthetic_size")]
    pub synthetic_size: usize,
    /// Generated images per class before splitting.
    #[serde(default = "d_synthetic_per_class")]
    pub synthetic_per_class: usize,
    /// Items drawn from each half of the equal split.
    #[serde(default = "d_n_sample")]
    pub n_sample: usize,
    /// Two directory names under the data root; first is the positive class.
    #[serde(default = "d_classes")]
    pub classes: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        serde_json::from_str("{}").expect("defaults are complete")
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn apply_variant(&mut self, v: Variant) {
        self.rule = v.rule();
        self.neuron = v.neuron();
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, msg: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        }
        check(self.n_scales >= 1, "n_scales must be >= 1")?;
        check(self.n_orientations >= 1, "n_orientations must be >= 1")?;
        check(self.n_features >= 1, "n_features must be >= 1")?;
        check(self.schedule_period >= 1, "schedule_period must be >= 1")?;
        check(self.snapshot_every >= 1, "snapshot_every must be >= 1")?;
        check(self.a_plus_init > 0.0, "a_plus_init must be > 0")?;
        check(self.a_plus_init <= self.a_plus_max, "a_plus_init must be <= a_plus_max")?;
        check(self.ratio > 0.0, "ratio must be > 0")?;
        check(self.epsilon > 0.0, "epsilon must be > 0")?;
        check(self.c1_stride >= 1 && self.c1_window >= self.c1_stride, "need c1_window >= c1_stride >= 1")?;
        check(self.s2_rf >= 1, "s2_rf must be >= 1")?;
        check(
            self.scale_factors.len() == self.n_scales,
            "scale_factors length must equal n_scales",
        )?;
        check(
            self.scale_factors.iter().all(|&f| f > 0.0 && f <= 1.0),
            "scale factors must lie in (0, 1]",
        )?;
        check((0.0..1.0).contains(&self.s1_threshold), "s1_threshold must lie in [0, 1)")?;
        check(self.izh_c > 0.0, "izh_c must be > 0")?;
        check(self.izh_k > 0.0, "izh_k must be > 0")?;
        check(self.izh_vth > self.izh_vrest, "izh_vth must exceed izh_vrest")?;
        check(self.resolution >= 16, "resolution must be >= 16")?;
        check(self.synthetic_size >= 32, "synthetic_size must be >= 32")?;
        check(self.n_sample >= 1, "n_sample must be >= 1")?;
        check(self.classes.len() == 2, "exactly two classes are supported")?;
        Ok(())
    }

    /// Mean of the initial weight distribution for the configured rule.
    pub fn mean_initial_weight(&self) -> f64 {
        match self.rule {
            RuleKind::Original => 0.8,         // uniform [0.6, 1.0)
            RuleKind::Probabilistic => 0.15,   // uniform [0.0, 0.3)
            RuleKind::Nessler => 0.15,
        }
    }

    /// IF threshold: a third of the receptive field at the initial mean weight.
    pub fn if_threshold_value(&self) -> f64 {
        self.if_threshold
            .unwrap_or_else(|| (self.s2_rf * self.s2_rf) as f64 * self.mean_initial_weight() / 3.0)
    }

    /// Charge scale chosen so the same afferent fraction that fires the IF
    /// model also drives V from rest to threshold.
    pub fn izh_qscale_value(&self) -> f64 {
        self.izh_qscale.unwrap_or_else(|| {
            self.izh_c * (self.izh_vth - self.izh_vrest) / self.if_threshold_value()
        })
    }

    /// Stable short fingerprint of the full configuration, for run naming.
    pub fn content_hash(&self) -> String {
        // FNV-1a over the canonical JSON; stable across platforms and builds.
        let json = serde_json::to_string(self).expect("config serializes");
        let mut h: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            h ^= *b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        format!("{h:016x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_scales, 5);
        assert_eq!(cfg.n_orientations, 4);
        assert_eq!(cfg.a_plus_init, 0.015625);
        assert_eq!(cfg.scale_factors.len(), 5);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut cfg = RunConfig::default();
        cfg.ratio = 4.0 / 3.0;
        cfg.a_plus_init = 2f64.powi(-6);
        cfg.scale_factors = vec![1.0, 0.71];
        cfg.n_scales = 2;
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
        // second trip produces identical text
        assert_eq!(cfg.to_json(), back.to_json());
    }

    #[test]
    fn variant_presets_map_to_rule_and_neuron() {
        let mut cfg = RunConfig::default();
        cfg.apply_variant(Variant::Snn4);
        assert_eq!(cfg.rule, RuleKind::Probabilistic);
        assert_eq!(cfg.neuron, NeuronKind::IzhikevichRs);
        cfg.apply_variant(Variant::Snn1);
        assert_eq!(cfg.rule, RuleKind::Original);
        assert_eq!(cfg.neuron, NeuronKind::If);
    }

    #[test]
    fn capital_c_alias_is_accepted() {
        let cfg = RunConfig::from_json(r#"{"izh_C": 50.0}"#).unwrap();
        assert_eq!(cfg.izh_c, 50.0);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(RunConfig::from_json(r#"{"ratio": 0.0}"#).is_err());
        assert!(RunConfig::from_json(r#"{"a_plus_init": 0.5, "a_plus_max": 0.25}"#).is_err());
        assert!(RunConfig::from_json(r#"{"n_scales": 3}"#).is_err()); // scale_factors mismatch
        assert!(RunConfig::from_json(r#"{"no_such_key": 1}"#).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.content_hash(), b.content_hash());
        b.seed = 1;
        assert_ne!(a.content_hash(), b.content_hash());
    }

    #[test]
    fn derived_thresholds_follow_the_rule() {
        let mut cfg = RunConfig::default();
        cfg.s2_rf = 4;
        cfg.rule = RuleKind::Probabilistic;
        assert!((cfg.if_threshold_value() - 16.0 * 0.15 / 3.0).abs() < 1e-12);
        cfg.rule = RuleKind::Original;
        assert!((cfg.if_threshold_value() - 16.0 * 0.8 / 3.0).abs() < 1e-12);
        // explicit override wins
        cfg.if_threshold = Some(2.0);
        assert_eq!(cfg.if_threshold_value(), 2.0);
        // matched charge: threshold-many weight units reach vth from rest
        cfg.if_threshold = None;
        let q = cfg.izh_qscale_value();
        let dv = cfg.if_threshold_value() * q / cfg.izh_c;
        assert!((dv - (cfg.izh_vth - cfg.izh_vrest)).abs() < 1e-12);
    }
}
