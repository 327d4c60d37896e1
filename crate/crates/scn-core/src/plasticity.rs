//! STDP rules and their equilibrium analysis.
//!
//! Three rules, all driven by spike order only (no exact time differences):
//!
//! ```text
//! original:       dw = +a+ w (1-w)   if pre fired at or before post
//!                      -a- w (1-w)   otherwise            (w stays in (0,1))
//! reference:      dw = exp(-w) - 1   if 0 < t_post - t_pre < epsilon
//!                      -1            otherwise            (weights go negative)
//! probabilistic:  dw = +a+ exp(-w)   if pre fired at or before post
//!                      -a-           otherwise            (w floored at 0)
//! ```
//!
//! At equilibrium the probabilistic rule's weight equals
//! `ln(a+/a-) + ln(p/(1-p))` where p is the probability that the presynaptic
//! spike preceded the postsynaptic one; `equilibrium_mc` checks that fixed
//! point by direct simulation.

use rand::Rng as _;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Open-interval guard for the original rule, which is degenerate at 0 and 1.
pub const ORIGINAL_W_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StdpParams {
    pub a_plus: f64,
    /// a_plus / a_minus.
    pub ratio: f64,
    /// Coincidence window of the reference rule, in virtual time.
    pub epsilon: f64,
}

impl StdpParams {
    pub fn new(a_plus: f64, ratio: f64) -> StdpParams {
        assert!(ratio > 0.0);
        StdpParams { a_plus, ratio, epsilon: 0.05 }
    }

    pub fn a_minus(&self) -> f64 {
        self.a_plus / self.ratio
    }
}

/// Multiplicative rule. Returns the raw increment; callers clamp the updated
/// weight into the open interval via [`clamp_original`].
pub fn stdp_original(w: f64, pre_before_post: bool, p: &StdpParams) -> Result<f64> {
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::Contract(format!("stdp_original: weight {w} outside (0,1)")));
    }
    let slope = w * (1.0 - w);
    Ok(if pre_before_post { p.a_plus * slope } else { -p.a_minus() * slope })
}

pub fn clamp_original(w: f64) -> f64 {
    w.clamp(ORIGINAL_W_EPS, 1.0 - ORIGINAL_W_EPS)
}

/// Reference rule with exponential LTP; weights converge to log-probabilities
/// and are therefore negative. Not wired to the network trainer.
pub fn stdp_nessler(w: f64, dt: f64, p: &StdpParams) -> f64 {
    if dt > 0.0 && dt < p.epsilon {
        (-w).exp() - 1.0
    } else {
        -1.0
    }
}

/// Exponential-LTP / constant-LTD rule. Returns the raw increment; callers
/// floor the updated weight at 0 via [`clamp_probabilistic`].
pub fn stdp_probabilistic(w: f64, pre_before_post: bool, p: &StdpParams) -> Result<f64> {
    if w < 0.0 {
        return Err(Error::Contract(format!("stdp_probabilistic: weight {w} below 0")));
    }
    Ok(if pre_before_post { p.a_plus * (-w).exp() } else { -p.a_minus() })
}

pub fn clamp_probabilistic(w: f64) -> f64 {
    w.max(0.0)
}

/// Iterate `w <- w + a_plus * exp(-w)` exactly `n` times.
pub fn ltp_recursion(w0: f64, a_plus: f64, n: usize) -> f64 {
    let mut w = w0;
    for _ in 0..n {
        w += a_plus * (-w).exp();
    }
    w
}

/// The printed closed-form bound for `n` LTP steps from w = 0:
/// `a+ (1 - exp(-n a+)) / (1 - exp(-a+))`. Kept verbatim; direct iteration of
/// the recursion exceeds it from n = 3 on (see the tests), so it is not a
/// sound upper bound.
pub fn ltp_bound_paper(a_plus: f64, n: usize) -> Result<f64> {
    if a_plus <= 0.0 {
        return Err(Error::Domain(format!("ltp_bound_paper: a_plus {a_plus} must be > 0")));
    }
    Ok(a_plus * (1.0 - (-(n as f64) * a_plus).exp()) / (1.0 - (-a_plus).exp()))
}

/// Limit of [`ltp_bound_paper`] as n grows.
pub fn ltp_bound_paper_limit(a_plus: f64) -> Result<f64> {
    if a_plus <= 0.0 {
        return Err(Error::Domain(format!("ltp_bound_paper_limit: a_plus {a_plus} must be > 0")));
    }
    Ok(a_plus / (1.0 - (-a_plus).exp()))
}

/// Fixed point of the probabilistic rule: `ln(a+/a-) + ln(p/(1-p))`.
pub fn equilibrium_weight(p_star: f64, params: &StdpParams) -> Result<f64> {
    if !(p_star > 0.0 && p_star < 1.0) {
        return Err(Error::Domain(format!("equilibrium_weight: p_star {p_star} outside (0,1)")));
    }
    Ok(params.ratio.ln() + (p_star / (1.0 - p_star)).ln())
}

/// Monte-Carlo check of the fixed point: one synapse, each postsynaptic event
/// is LTP with probability `p_star` (LTD otherwise) under the probabilistic
/// rule with the floor clamp. Returns the mean weight over the trailing half
/// of the events.
pub fn equilibrium_mc(p_star: f64, params: &StdpParams, n_events: usize, rng: &mut Rng) -> Result<f64> {
    if n_events < 10_000 {
        return Err(Error::Contract(format!("equilibrium_mc: need >= 1e4 events, got {n_events}")));
    }
    if !(p_star > 0.0 && p_star < 1.0) {
        return Err(Error::Domain(format!("equilibrium_mc: p_star {p_star} outside (0,1)")));
    }
    let mut w = 0.0;
    let mut sum = 0.0;
    let tail_start = n_events / 2;
    for i in 0..n_events {
        let ltp = rng.gen::<f64>() < p_star;
        w = clamp_probabilistic(w + stdp_probabilistic(w, ltp, params)?);
        if i >= tail_start {
            sum += w;
        }
    }
    Ok(sum / (n_events - tail_start) as f64)
}

/// Learning-rate schedule: a+ doubles every `schedule_period` postsynaptic
/// spikes until `a_plus_max`; a- follows through the fixed ratio.
pub fn schedule_a_plus(cfg: &RunConfig, post_spikes_seen: usize) -> f64 {
    let doublings = (post_spikes_seen / cfg.schedule_period) as i32;
    // guard powi overflow into inf; min() caps it either way
    let factor = if doublings > 1023 { f64::INFINITY } else { 2f64.powi(doublings) };
    (cfg.a_plus_init * factor).min(cfg.a_plus_max)
}

/// Running schedule state used by the trainer.
#[derive(Debug, Clone)]
pub struct LearningSchedule {
    cfg_a_plus_init: f64,
    cfg_a_plus_max: f64,
    ratio: f64,
    epsilon: f64,
    period: usize,
    pub post_spikes_seen: usize,
}

impl LearningSchedule {
    pub fn new(cfg: &RunConfig) -> LearningSchedule {
        LearningSchedule {
            cfg_a_plus_init: cfg.a_plus_init,
            cfg_a_plus_max: cfg.a_plus_max,
            ratio: cfg.ratio,
            epsilon: cfg.epsilon,
            period: cfg.schedule_period,
            post_spikes_seen: 0,
        }
    }

    /// Fixed amplitudes, no doubling: a_plus stays at `a_plus` forever.
    pub fn fixed(a_plus: f64, ratio: f64) -> LearningSchedule {
        LearningSchedule {
            cfg_a_plus_init: a_plus,
            cfg_a_plus_max: a_plus,
            ratio,
            epsilon: 0.05,
            period: usize::MAX,
            post_spikes_seen: 0,
        }
    }

    pub fn params(&self) -> StdpParams {
        let doublings = (self.post_spikes_seen / self.period.max(1)) as i32;
        let factor = if doublings > 1023 { f64::INFINITY } else { 2f64.powi(doublings) };
        StdpParams {
            a_plus: (self.cfg_a_plus_init * factor).min(self.cfg_a_plus_max),
            ratio: self.ratio,
            epsilon: self.epsilon,
        }
    }

    pub fn on_post_spike(&mut self) {
        self.post_spikes_seen += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a_plus: f64, ratio: f64) -> StdpParams {
        StdpParams::new(a_plus, ratio)
    }

    #[test]
    fn original_rule_matches_hand_values() {
        let p = params(1.0, 4.0 / 3.0);
        // maximum of the parabola at w = 0.5
        assert!((stdp_original(0.5, true, &p).unwrap() - 0.25).abs() < 1e-12);
        // LTD with a- = 0.75
        assert!((stdp_original(0.5, false, &p).unwrap() + 0.1875).abs() < 1e-12);
    }

    #[test]
    fn original_rule_vanishes_at_the_bounds() {
        let p = params(1.0, 1.0);
        assert!(stdp_original(1e-9, true, &p).unwrap() < 1e-8);
        assert!(stdp_original(1.0 - 1e-9, true, &p).unwrap() < 1e-8);
        assert!(stdp_original(0.0, true, &p).is_err());
        assert!(stdp_original(1.0, true, &p).is_err());
    }

    #[test]
    fn nessler_rule_matches_hand_values() {
        let p = params(1.0, 1.0);
        let eps = p.epsilon;
        assert_eq!(stdp_nessler(0.0, eps / 2.0, &p), 0.0);
        assert!((stdp_nessler(-1.0, eps / 2.0, &p) - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert_eq!(stdp_nessler(0.3, 2.0 * eps, &p), -1.0);
        // dt = 0 is outside the strict window
        assert_eq!(stdp_nessler(0.3, 0.0, &p), -1.0);
    }

    #[test]
    fn probabilistic_rule_matches_hand_values() {
        let p = params(2f64.powi(-6), 4.0 / 3.0);
        assert!((stdp_probabilistic(0.0, true, &p).unwrap() - 0.015625).abs() < 1e-15);
        let p = params(0.25, 4.0 / 3.0);
        assert!((stdp_probabilistic(1.0, true, &p).unwrap() - 0.09196986029286058).abs() < 1e-12);
        assert!((stdp_probabilistic(1.0, false, &p).unwrap() + 0.1875).abs() < 1e-12);
        assert!(stdp_probabilistic(-0.1, true, &p).is_err());
    }

    #[test]
    fn ltp_and_ltd_have_the_right_signs() {
        let mut rng = crate::rng::rng_create(5);
        let p = params(0.5, 4.0 / 3.0);
        for _ in 0..200 {
            let w: f64 = rng.gen_range(1e-3..0.999);
            assert!(stdp_original(w, true, &p).unwrap() > 0.0);
            assert!(stdp_original(w, false, &p).unwrap() < 0.0);
            assert!(stdp_probabilistic(w, true, &p).unwrap() > 0.0);
            assert!(stdp_probabilistic(w, false, &p).unwrap() < 0.0);
            let wn: f64 = rng.gen_range(-3.0..0.0);
            assert!(stdp_nessler(wn, p.epsilon / 2.0, &p) > 0.0);
            assert!(stdp_nessler(wn, p.epsilon * 2.0, &p) < 0.0);
        }
    }

    #[test]
    fn recursion_reproduces_the_first_terms() {
        assert!((ltp_recursion(0.0, 1.0, 1) - 1.0).abs() < 1e-12);
        assert!((ltp_recursion(0.0, 1.0, 2) - 1.3678794411714423).abs() < 1e-12);
        assert!((ltp_recursion(0.0, 1.0, 3) - 1.6225258212150248).abs() < 1e-12);
        assert_eq!(ltp_recursion(0.7, 0.25, 0), 0.7);
    }

    #[test]
    fn recursion_is_strictly_increasing_in_n() {
        let mut prev = ltp_recursion(0.0, 0.25, 0);
        for n in 1..200 {
            let next = ltp_recursion(0.0, 0.25, n);
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn printed_bound_formula_evaluates_verbatim() {
        // n = 1 collapses to a+
        assert!((ltp_bound_paper(0.3, 1).unwrap() - 0.3).abs() < 1e-12);
        assert!((ltp_bound_paper(0.25, 4).unwrap() - 0.7144244988812632).abs() < 1e-12);
        assert!((ltp_bound_paper_limit(1.0).unwrap() - 1.5819767068693265).abs() < 1e-12);
        assert!(ltp_bound_paper(0.0, 3).is_err());
    }

    #[test]
    fn equilibrium_weight_matches_hand_values() {
        let p = params(0.25, 4.0 / 3.0);
        // odds 3/4 cancel the ratio 4/3
        assert!(equilibrium_weight(3.0 / 7.0, &p).unwrap().abs() < 1e-12);
        assert!((equilibrium_weight(0.5, &p).unwrap() - 0.2876820724517809).abs() < 1e-12);
        let p1 = params(0.25, 1.0);
        assert!((equilibrium_weight(0.9, &p1).unwrap() - 2.1972245773362196).abs() < 1e-12);
        assert!(equilibrium_weight(0.0, &p).is_err());
        assert!(equilibrium_weight(1.0, &p).is_err());
    }

    #[test]
    fn mc_equilibrium_tracks_the_analytic_value() {
        let p = params(2f64.powi(-4), 4.0 / 3.0);
        let mut rng = crate::rng::rng_create(42);
        let mc = equilibrium_mc(0.5, &p, 100_000, &mut rng).unwrap();
        let analytic = equilibrium_weight(0.5, &p).unwrap();
        assert!((mc - analytic).abs() < 0.05, "mc={mc} analytic={analytic}");
        // near-zero equilibrium: clamp bias allowed up to 0.08
        let mc0 = equilibrium_mc(3.0 / 7.0, &p, 100_000, &mut rng).unwrap();
        assert!(mc0.abs() < 0.08, "mc0={mc0}");
        let mc9 = equilibrium_mc(0.9, &p, 100_000, &mut rng).unwrap();
        assert!((mc9 - 2.4849066497880004).abs() < 0.05, "mc9={mc9}");
        assert!(equilibrium_mc(0.5, &p, 100, &mut rng).is_err());
    }

    #[test]
    fn schedule_doubles_every_period_and_caps() {
        let cfg = RunConfig::default();
        assert_eq!(schedule_a_plus(&cfg, 0), 0.015625);
        assert_eq!(schedule_a_plus(&cfg, 399), 0.015625);
        assert_eq!(schedule_a_plus(&cfg, 400), 0.03125);
        assert_eq!(schedule_a_plus(&cfg, 1_000_000), 0.25);
        let mut sched = LearningSchedule::new(&cfg);
        for _ in 0..400 {
            sched.on_post_spike();
        }
        assert_eq!(sched.params().a_plus, 0.03125);
        assert!((sched.params().a_minus() - 0.03125 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn trajectories_stay_inside_rule_domains() {
        // quick version; the acceptance suite runs the full 1e4 trajectories
        let mut rng = crate::rng::rng_create(9);
        for _ in 0..200 {
            let p = params(rng.gen_range(1e-3..1.0), rng.gen_range(0.3..4.0));
            let mut w_orig: f64 = rng.gen_range(1e-3..0.999);
            let mut w_prob: f64 = rng.gen_range(0.0..2.0);
            for _ in 0..100 {
                let ltp = rng.gen_bool(0.5);
                w_orig = clamp_original(w_orig + stdp_original(w_orig, ltp, &p).unwrap());
                assert!(w_orig > 0.0 && w_orig < 1.0);
                w_prob = clamp_probabilistic(w_prob + stdp_probabilistic(w_prob, ltp, &p).unwrap());
                assert!(w_prob >= 0.0);
            }
        }
    }
}
