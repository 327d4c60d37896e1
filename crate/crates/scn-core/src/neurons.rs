//! Spike-generation models, restricted to first-spike semantics: a non-leaky
//! integrate-and-fire unit and a simplified regular-spiking unit
//!
//! ```text
//! C dV/dt = k (V - V_rest)(V - V_th) - U + I_tot
//!   dU/dt = a [ b (V - V_rest) - U ]
//! ```
//!
//! Only the first spike of a wave is used, so the after-spike reset never
//! runs and carries no parameters here.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::types::Latency;

/// Euler substeps per spike wave (one wave spans [0, 1) of virtual time).
pub const WAVE_SUBSTEPS: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IzhikevichParams {
    pub a: f64,
    pub b: f64,
    pub c_cap: f64,
    pub k: f64,
    pub v_rest: f64,
    pub v_th: f64,
    pub u0: f64,
}

impl IzhikevichParams {
    /// Regular-spiking parameter set used throughout.
    pub fn regular_spiking() -> IzhikevichParams {
        IzhikevichParams { a: 0.03, b: -2.0, c_cap: 100.0, k: 0.7, v_rest: 0.0, v_th: 0.49, u0: 0.0 }
    }

    pub fn from_config(cfg: &RunConfig) -> IzhikevichParams {
        IzhikevichParams {
            a: cfg.izh_a,
            b: cfg.izh_b,
            c_cap: cfg.izh_c,
            k: cfg.izh_k,
            v_rest: cfg.izh_vrest,
            v_th: cfg.izh_vth,
            u0: 0.0,
        }
    }
}

/// Membrane state of one cell. Once `fired` is set, V and U are frozen and
/// every further delivery or step leaves the state unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronState {
    pub v: f64,
    pub u: f64,
    pub fired: bool,
    pub fire_time: Latency,
}

impl NeuronState {
    pub fn resting_if() -> NeuronState {
        NeuronState { v: 0.0, u: 0.0, fired: false, fire_time: Latency::Never }
    }

    pub fn resting_izh(p: &IzhikevichParams) -> NeuronState {
        NeuronState { v: p.v_rest, u: p.u0, fired: false, fire_time: Latency::Never }
    }
}

/// Deliver one weighted spike to a non-leaky IF cell. The cell fires at the
/// delivering spike's latency when the accumulated potential reaches
/// `threshold`.
pub fn if_deliver(state: NeuronState, weight: f64, threshold: f64, at: f64) -> Result<NeuronState> {
    if weight < 0.0 {
        return Err(Error::Contract(format!("if_deliver: negative weight {weight}")));
    }
    if state.fired {
        return Ok(state);
    }
    let mut next = state;
    next.v += weight;
    if next.v >= threshold {
        next.fired = true;
        next.fire_time = Latency::at(at);
    }
    Ok(next)
}

/// One forward-Euler step of the regular-spiking dynamics under constant
/// input `i_tot`. `now` is the clock value at the end of the step; the spike
/// time is the clock at which V reaches `v_th`.
pub fn izh_step(
    state: NeuronState,
    p: &IzhikevichParams,
    i_tot: f64,
    dt: f64,
    now: f64,
) -> Result<NeuronState> {
    if state.fired {
        return Ok(state);
    }
    if !(state.v.is_finite() && state.u.is_finite()) {
        return Err(Error::Numerical(format!("izh_step: non-finite state V={} U={}", state.v, state.u)));
    }
    debug_assert!(dt > 0.0);
    let dv = (p.k * (state.v - p.v_rest) * (state.v - p.v_th) - state.u + i_tot) / p.c_cap;
    let du = p.a * (p.b * (state.v - p.v_rest) - state.u);
    let mut next = state;
    next.v += dv * dt;
    next.u += du * dt;
    if !(next.v.is_finite() && next.u.is_finite()) {
        return Err(Error::Numerical("izh_step: state diverged".into()));
    }
    if next.v >= p.v_th {
        next.fired = true;
        next.fire_time = Latency::at(now);
    }
    Ok(next)
}

/// Instantaneous charge injection: V += weight * q_scale / C, then the same
/// threshold check as the continuous dynamics.
pub fn izh_deliver(
    state: NeuronState,
    p: &IzhikevichParams,
    weight: f64,
    q_scale: f64,
    at: f64,
) -> Result<NeuronState> {
    if weight < 0.0 {
        return Err(Error::Contract(format!("izh_deliver: negative weight {weight}")));
    }
    if state.fired {
        return Ok(state);
    }
    let mut next = state;
    next.v += weight * q_scale / p.c_cap;
    if next.v >= p.v_th {
        next.fired = true;
        next.fire_time = Latency::at(at);
    }
    Ok(next)
}
