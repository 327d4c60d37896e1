//! Event-driven S2 sweep and C2 pooling.
//!
//! One wave processes the C1 spikes of a single image in latency order. Each
//! spike is delivered to every S2 cell whose receptive field covers it; a
//! firing cell is recorded, suppresses every feature at its scale within the
//! inhibition neighborhood for the rest of the wave, and (during training)
//! applies one STDP update to its feature's shared weight tensor.

use ndarray::Array3;

use crate::config::{NeuronKind, RuleKind, RunConfig};
use crate::error::{Error, Result};
use crate::neurons::{if_deliver, izh_deliver, izh_step, IzhikevichParams, NeuronState, WAVE_SUBSTEPS};
use crate::plasticity::{
    clamp_original, clamp_probabilistic, stdp_original, stdp_probabilistic, LearningSchedule,
};
use crate::types::{Latency, Layer, LatencyMap, SpikeEvent, SynapseBank};

#[derive(Debug, Clone)]
pub enum NeuronModel {
    If { threshold: f64 },
    Izhikevich { params: IzhikevichParams, q_scale: f64 },
}

impl NeuronModel {
    pub fn from_config(cfg: &RunConfig) -> NeuronModel {
        match cfg.neuron {
            NeuronKind::If => NeuronModel::If { threshold: cfg.if_threshold_value() },
            NeuronKind::IzhikevichRs => NeuronModel::Izhikevich {
                params: IzhikevichParams::from_config(cfg),
                q_scale: cfg.izh_qscale_value(),
            },
        }
    }
}

/// Final per-feature readout of one wave. The C2 latency is the minimum S2
/// fire latency over all positions and scales; the C2 potential is the
/// largest end-of-wave afferent sum over all positions and scales, divided by
/// the feature's total weight (contrast invariant). `winner` is the
/// (scale, row, col) of the cell attaining that maximum.
#[derive(Debug, Clone)]
pub struct WaveResult {
    pub c2_latency: Vec<Latency>,
    pub c2_potential: Vec<f64>,
    pub winner: Vec<Option<(usize, usize, usize)>>,
}

/// S2 grid extent over a C1 map, if the receptive field fits.
pub fn s2_grid(c1_rows: usize, c1_cols: usize, rf: usize) -> Option<(usize, usize)> {
    if c1_rows >= rf && c1_cols >= rf {
        Some((c1_rows - rf + 1, c1_cols - rf + 1))
    } else {
        None
    }
}

#[derive(Clone, Copy)]
struct Cell {
    state: NeuronState,
    /// Euler substeps already integrated (Izhikevich only).
    step: u64,
    touched: bool,
}

struct ScaleLattice {
    rows: usize,
    cols: usize,
    cells: Vec<Cell>,      // (row * cols + col) * n_features + feature
    suppressed: Vec<bool>, // row * cols + col
}

fn substep_of(t: f64) -> u64 {
    ((t * WAVE_SUBSTEPS as f64).floor() as u64).min(WAVE_SUBSTEPS)
}

/// Integrate an Izhikevich cell up to virtual time `t`. The cell sits at the
/// resting fixed point until first touched, so untouched cells skip the
/// integration entirely. A mid-advance threshold crossing fires at the clock
/// of its substep.
fn advance_cell(model: &NeuronModel, cell: &mut Cell, t: f64) -> Result<()> {
    if let NeuronModel::Izhikevich { params, .. } = model {
        if cell.state.fired || !cell.touched {
            return Ok(());
        }
        let dt = 1.0 / WAVE_SUBSTEPS as f64;
        let target = substep_of(t);
        while cell.step < target && !cell.state.fired {
            cell.step += 1;
            cell.state = izh_step(cell.state, params, 0.0, dt, cell.step as f64 * dt)?;
        }
        cell.step = cell.step.max(target);
    }
    Ok(())
}

fn deliver_to_cell(model: &NeuronModel, cell: &mut Cell, weight: f64, t: f64) -> Result<()> {
    if !cell.touched {
        cell.touched = true;
        cell.step = substep_of(t);
    }
    cell.state = match model {
        NeuronModel::If { threshold } => if_deliver(cell.state, weight, *threshold, t)?,
        NeuronModel::Izhikevich { params, q_scale } => {
            izh_deliver(cell.state, params, weight, *q_scale, t)?
        }
    };
    Ok(())
}

fn suppress_neighborhood(lattice: &mut ScaleLattice, row: usize, col: usize, radius: usize) {
    let r0 = row.saturating_sub(radius);
    let r1 = (row + radius).min(lattice.rows - 1);
    let c0 = col.saturating_sub(radius);
    let c1 = (col + radius).min(lattice.cols - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            lattice.suppressed[r * lattice.cols + c] = true;
        }
    }
}

/// Apply one STDP update to the firing feature's shared tensor: LTP for every
/// afferent in the receptive field whose spike latency is at or before the
/// fire time, LTD for all others including silent afferents.
fn apply_stdp(
    bank: &mut SynapseBank,
    c1: &[Vec<LatencyMap>],
    rule: RuleKind,
    schedule: &LearningSchedule,
    feature: usize,
    scale: usize,
    row: usize,
    col: usize,
    fire_time: f64,
) -> Result<()> {
    let params = schedule.params();
    let fire = Latency::at(fire_time);
    let maps = &c1[scale];
    let (rf_rows, rf_cols, n_orient) = bank.dims();
    let tensor = bank.feature_mut(feature);
    for u in 0..rf_rows {
        for v in 0..rf_cols {
            for (o, map) in maps.iter().enumerate().take(n_orient) {
                let pre = map.grid[[row + u, col + v]];
                let ltp = pre <= fire;
                let w = tensor[[u, v, o]];
                tensor[[u, v, o]] = match rule {
                    RuleKind::Original => clamp_original(w + stdp_original(w, ltp, &params)?),
                    RuleKind::Probabilistic => {
                        clamp_probabilistic(w + stdp_probabilistic(w, ltp, &params)?)
                    }
                    RuleKind::Nessler => {
                        return Err(Error::Config(
                            "the reference rule is not wired to the network trainer".into(),
                        ))
                    }
                };
            }
        }
    }
    Ok(())
}

/// Run the event-driven S2 sweep over sorted C1 spikes. With `plasticity`
/// set, every postsynaptic spike updates its feature's shared tensor and
/// advances the learning schedule. Returns the S2 spikes of the wave.
pub fn s2_wave(
    events: &[SpikeEvent],
    c1: &[Vec<LatencyMap>],
    bank: &mut SynapseBank,
    cfg: &RunConfig,
    model: &NeuronModel,
    mut plasticity: Option<&mut LearningSchedule>,
) -> Result<Vec<SpikeEvent>> {
    let resting = match model {
        NeuronModel::If { .. } => NeuronState::resting_if(),
        NeuronModel::Izhikevich { params, .. } => NeuronState::resting_izh(params),
    };
    let mut scales: Vec<Option<ScaleLattice>> = c1
        .iter()
        .map(|maps| {
            if maps.is_empty() {
                return None;
            }
            let (rows, cols) = s2_grid(maps[0].rows(), maps[0].cols(), cfg.s2_rf)?;
            Some(ScaleLattice {
                rows,
                cols,
                cells: vec![Cell { state: resting, step: 0, touched: false }; rows * cols * cfg.n_features],
                suppressed: vec![false; rows * cols],
            })
        })
        .collect();
    let mut spikes: Vec<SpikeEvent> = Vec::new();

    let mut prev_key: Option<(Latency, usize, usize, usize, usize)> = None;
    for event in events {
        if event.layer != Layer::C1 {
            return Err(Error::Contract(format!("s2_wave expects C1 events, got {:?}", event.layer)));
        }
        let key = event.sort_key();
        if let Some(prev) = &prev_key {
            if key < *prev {
                return Err(Error::Contract("s2_wave events must be sorted by latency".into()));
            }
        }
        prev_key = Some(key);
        let Some(lattice) = scales.get_mut(event.scale).and_then(|s| s.as_mut()) else {
            continue;
        };

        // S2 positions whose receptive field covers this C1 cell
        let lo_r = event.row.saturating_sub(cfg.s2_rf - 1);
        let hi_r = event.row.min(lattice.rows - 1);
        let lo_c = event.col.saturating_sub(cfg.s2_rf - 1);
        let hi_c = event.col.min(lattice.cols - 1);
        for i in lo_r..=hi_r {
            for j in lo_c..=hi_c {
                let pos = i * lattice.cols + j;
                for f in 0..cfg.n_features {
                    if lattice.suppressed[pos] {
                        break; // the whole position is out of the race
                    }
                    let cell = &mut lattice.cells[pos * cfg.n_features + f];
                    if cell.state.fired {
                        continue;
                    }
                    advance_cell(model, cell, event.latency)?;
                    if !cell.state.fired {
                        let weight = bank.feature(f)[[event.row - i, event.col - j, event.channel]];
                        deliver_to_cell(model, cell, weight, event.latency)?;
                    }
                    if cell.state.fired {
                        let t = cell.state.fire_time.finite().expect("fired cells have a time");
                        spikes.push(SpikeEvent {
                            layer: Layer::S2,
                            scale: event.scale,
                            channel: f,
                            row: i,
                            col: j,
                            latency: t,
                        });
                        suppress_neighborhood(lattice, i, j, cfg.inhibition_radius);
                        if let Some(schedule) = plasticity.as_deref_mut() {
                            apply_stdp(bank, c1, cfg.rule, schedule, f, event.scale, i, j, t)?;
                            schedule.on_post_spike();
                        }
                    }
                }
            }
        }
    }

    // Let the recovery dynamics finish the wave: a touched Izhikevich cell
    // close enough to threshold can still cross with no further input.
    if let NeuronModel::Izhikevich { params, .. } = model {
        let u_bound = params.b.abs() * (params.v_th - params.v_rest);
        let mut late: Vec<(f64, usize, usize, usize, usize)> = Vec::new();
        for (s, lattice) in scales.iter_mut().enumerate() {
            let Some(lattice) = lattice.as_mut() else { continue };
            for pos in 0..lattice.rows * lattice.cols {
                if lattice.suppressed[pos] {
                    continue;
                }
                for f in 0..cfg.n_features {
                    let cell = &mut lattice.cells[pos * cfg.n_features + f];
                    if cell.state.fired || !cell.touched {
                        continue;
                    }
                    let remaining = (WAVE_SUBSTEPS - cell.step) as f64 / WAVE_SUBSTEPS as f64;
                    let reachable =
                        cell.state.v + remaining * cell.state.u.abs().max(u_bound) / params.c_cap;
                    if reachable < params.v_th {
                        continue; // cannot cross without further input
                    }
                    let dt = 1.0 / WAVE_SUBSTEPS as f64;
                    while cell.step < WAVE_SUBSTEPS && !cell.state.fired {
                        cell.step += 1;
                        cell.state = izh_step(cell.state, params, 0.0, dt, cell.step as f64 * dt)?;
                    }
                    if cell.state.fired {
                        let t = cell.state.fire_time.finite().expect("fired cells have a time");
                        late.push((t, s, pos / lattice.cols, pos % lattice.cols, f));
                    }
                }
            }
        }
        // process late crossings in time order so their inhibition is sound
        late.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .expect("finite fire times")
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
                .then(a.3.cmp(&b.3))
                .then(a.4.cmp(&b.4))
        });
        for (t, s, i, j, f) in late {
            let lattice = scales[s].as_mut().expect("scale exists");
            if lattice.suppressed[i * lattice.cols + j] {
                continue;
            }
            spikes.push(SpikeEvent { layer: Layer::S2, scale: s, channel: f, row: i, col: j, latency: t });
            suppress_neighborhood(lattice, i, j, cfg.inhibition_radius);
            if let Some(schedule) = plasticity.as_deref_mut() {
                apply_stdp(bank, c1, cfg.rule, schedule, f, s, i, j, t)?;
                schedule.on_post_spike();
            }
        }
    }

    Ok(spikes)
}

/// Pool S2 activity into the per-feature C2 readout.
pub fn c2_pool(
    s2_spikes: &[SpikeEvent],
    c1: &[Vec<LatencyMap>],
    bank: &SynapseBank,
    cfg: &RunConfig,
) -> WaveResult {
    let n = bank.n_features();
    let mut c2_latency = vec![Latency::Never; n];
    for spike in s2_spikes {
        let t = Latency::at(spike.latency);
        if t < c2_latency[spike.channel] {
            c2_latency[spike.channel] = t;
        }
    }
    let (c2_potential, winner) = c2_potentials(c1, bank, cfg);
    WaveResult { c2_latency, c2_potential, winner }
}

/// End-of-wave afferent sums, maximized over positions and scales and
/// normalized by each feature's total weight. The readout keeps integrating
/// past any firing, which is what makes it contrast invariant.
pub fn c2_potentials(
    c1: &[Vec<LatencyMap>],
    bank: &SynapseBank,
    cfg: &RunConfig,
) -> (Vec<f64>, Vec<Option<(usize, usize, usize)>>) {
    let n = bank.n_features();
    let (rf_rows, rf_cols, n_orient) = bank.dims();
    let totals: Vec<f64> = (0..n).map(|f| bank.weight_sum(f)).collect();
    let tensors: Vec<&[f64]> = (0..n)
        .map(|f| bank.feature(f).as_slice().expect("standard layout"))
        .collect();
    let mut best = vec![0.0f64; n];
    let mut winner: Vec<Option<(usize, usize, usize)>> = vec![None; n];
    let mut spiked: Vec<usize> = Vec::with_capacity(rf_rows * rf_cols * n_orient);
    for (s, maps) in c1.iter().enumerate() {
        if maps.is_empty() {
            continue;
        }
        let Some((rows, cols)) = s2_grid(maps[0].rows(), maps[0].cols(), cfg.s2_rf) else {
            continue;
        };
        for i in 0..rows {
            for j in 0..cols {
                // flat tensor offsets of the afferents that spiked this wave
                spiked.clear();
                for u in 0..rf_rows {
                    for v in 0..rf_cols {
                        let base = (u * rf_cols + v) * n_orient;
                        for (o, map) in maps.iter().enumerate().take(n_orient) {
                            if !map.grid[[i + u, j + v]].is_never() {
                                spiked.push(base + o);
                            }
                        }
                    }
                }
                if spiked.is_empty() {
                    continue;
                }
                for (f, total) in totals.iter().enumerate() {
                    if *total <= 0.0 {
                        continue;
                    }
                    let tensor = tensors[f];
                    let acc: f64 = spiked.iter().map(|&idx| tensor[idx]).sum();
                    let value = acc / total;
                    if value > best[f] {
                        best[f] = value;
                        winner[f] = Some((s, i, j));
                    }
                }
            }
        }
    }
    (best, winner)
}

/// Initialize the bank where the configured rule has useful plasticity:
/// uniform [0.6, 1.0) for the multiplicative rule (the w(1-w) slope is live),
/// uniform [0.0, 0.3) for the probabilistic rule (LTP is maximal at 0).
pub fn init_bank(cfg: &RunConfig, rng: &mut crate::rng::Rng) -> SynapseBank {
    let (lo, hi) = match cfg.rule {
        RuleKind::Original => (0.6, 1.0),
        RuleKind::Probabilistic | RuleKind::Nessler => (0.0, 0.3),
    };
    SynapseBank::init_uniform(cfg.n_features, cfg.s2_rf, cfg.n_orientations, lo, hi, rng)
}

/// An all-zero bank with the configured shape.
pub fn zero_bank(cfg: &RunConfig) -> SynapseBank {
    SynapseBank::new(
        (0..cfg.n_features)
            .map(|_| Array3::zeros((cfg.s2_rf, cfg.s2_rf, cfg.n_orientations)))
            .collect(),
    )
}
