//! Collaboration cost model and the value-of-task-completion metric.
//!
//! A subtask offloaded from an initiator to a collaborator costs a
//! transmission phase (payload over the link, paid by the initiator's radio)
//! and an execution phase (cycles on the collaborator's CPU). Result return
//! and link setup are not charged.
//!
//! Execution energy uses `ε · f² · d · ρ` with `ε = 1e-11` and `f` in GHz,
//! i.e. joules per cycle per GHz². With `f` in Hz the same constant would
//! give energies around 1e16 J for megabyte payloads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DeviceSpec, Fleet, Subtask};

/// Joules per CPU cycle per GHz² of clock.
pub const EXECUTION_ENERGY_COEFF: f64 = 1e-11;

pub const DEFAULT_BANDWIDTH_HZ: f64 = 20e6;
pub const DEFAULT_NOISE_W: f64 = 1e-13;
pub const DEFAULT_PATH_LOSS_EXPONENT: f64 = 4.0;

/// Shannon-rate channel with a distance power-law gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    pub bandwidth_hz: f64,
    pub noise_w: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    DEFAULT_PATH_LOSS_EXPONENT
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            bandwidth_hz: DEFAULT_BANDWIDTH_HZ,
            noise_w: DEFAULT_NOISE_W,
            alpha: DEFAULT_PATH_LOSS_EXPONENT,
        }
    }
}

/// Either the path-loss model or measured rates, indexed by fleet order
/// (`rates_bps[from][to]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ChannelConfig {
    Pathloss(ChannelParams),
    Matrix { rates_bps: Vec<Vec<f64>> },
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig::Pathloss(ChannelParams::default())
    }
}

impl ChannelConfig {
    /// Link rate from fleet device `from` to fleet device `to`, bits/s.
    pub fn rate(&self, fleet: &Fleet, from: usize, to: usize) -> Result<f64> {
        let devices = fleet.devices();
        match self {
            ChannelConfig::Pathloss(params) => {
                transmission_rate(&devices[from], &devices[to], params)
            }
            ChannelConfig::Matrix { rates_bps } => rates_bps
                .get(from)
                .and_then(|row| row.get(to))
                .copied()
                .ok_or(Error::NoLink(devices[from].id, devices[to].id)),
        }
    }
}

/// `W · log2(1 + p·h / N0)` with `h = distance^-α`.
pub fn transmission_rate(
    sender: &DeviceSpec,
    receiver: &DeviceSpec,
    channel: &ChannelParams,
) -> Result<f64> {
    let distance = sender.distance_to(receiver);
    if distance <= 0.0 {
        return Err(Error::ZeroDistance(sender.id, receiver.id));
    }
    let gain = distance.powf(-channel.alpha);
    let snr = sender.tx_power_w * gain / channel.noise_w;
    Ok(channel.bandwidth_hz * snr.ln_1p() / std::f64::consts::LN_2)
}

/// Time and energy of one offloaded subtask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub t_tra_s: f64,
    pub t_exe_s: f64,
    pub t_total_s: f64,
    pub e_tra_j: f64,
    pub e_exe_j: f64,
    pub e_total_j: f64,
}

/// Energy for `cycles` CPU cycles at `cpu_hz`.
pub fn execution_energy(cpu_hz: f64, cycles: f64) -> f64 {
    let ghz = cpu_hz * 1e-9;
    EXECUTION_ENERGY_COEFF * ghz * ghz * cycles
}

/// Cost of sending `b` from `initiator` over a link of `rate_bps` and
/// running it on `collaborator`. Type support is not checked here.
pub fn collaboration_cost(
    b: &Subtask,
    processing_density: f64,
    initiator: &DeviceSpec,
    collaborator: &DeviceSpec,
    rate_bps: f64,
) -> Result<CompletionRecord> {
    if rate_bps.is_nan() || rate_bps <= 0.0 {
        return Err(Error::NoLink(initiator.id, collaborator.id));
    }
    let cycles = b.size_bits * processing_density;
    let t_tra_s = b.size_bits / rate_bps;
    let e_tra_j = initiator.tx_power_w * t_tra_s;
    let t_exe_s = cycles / collaborator.cpu_hz;
    let e_exe_j = execution_energy(collaborator.cpu_hz, cycles);
    Ok(CompletionRecord {
        t_tra_s,
        t_exe_s,
        t_total_s: t_tra_s + t_exe_s,
        e_tra_j,
        e_exe_j,
        e_total_j: e_tra_j + e_exe_j,
    })
}

/// Energy the initiator would spend running `b` itself.
pub fn expected_self_energy(b: &Subtask, processing_density: f64, initiator: &DeviceSpec) -> f64 {
    execution_energy(initiator.cpu_hz, b.size_bits * processing_density)
}

/// 1 when the deadline is met, otherwise `exp(-|(t - tmax) / tmax|)`.
pub fn value_time(t_total_s: f64, deadline_s: f64) -> f64 {
    if t_total_s <= deadline_s {
        1.0
    } else {
        (-((t_total_s - deadline_s) / deadline_s).abs()).exp()
    }
}

/// 1 when the collaborator spends no more than the initiator would,
/// otherwise `exp(-|(E - Eexp) / Eexp|)`.
pub fn value_energy(e_actual_j: f64, e_expected_j: f64) -> Result<f64> {
    if e_expected_j.is_nan() || e_expected_j <= 0.0 {
        return Err(Error::ZeroExpectedEnergy);
    }
    Ok(if e_expected_j >= e_actual_j {
        1.0
    } else {
        (-((e_actual_j - e_expected_j) / e_expected_j).abs()).exp()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueWeights {
    pub xi_time: f64,
    pub xi_energy: f64,
}

impl Default for ValueWeights {
    fn default() -> Self {
        Self {
            xi_time: 0.5,
            xi_energy: 0.5,
        }
    }
}

impl ValueWeights {
    pub fn new(xi_time: f64) -> Self {
        Self {
            xi_time,
            xi_energy: 1.0 - xi_time,
        }
    }
}

/// Value of completion together with the terms it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueBreakdown {
    pub value: f64,
    pub value_time: f64,
    pub value_energy: f64,
    pub expected_energy_j: f64,
    pub cost: CompletionRecord,
}

pub fn value_of_completion(
    b: &Subtask,
    processing_density: f64,
    initiator: &DeviceSpec,
    collaborator: &DeviceSpec,
    rate_bps: f64,
    weights: &ValueWeights,
) -> Result<ValueBreakdown> {
    let cost = collaboration_cost(b, processing_density, initiator, collaborator, rate_bps)?;
    let expected_energy_j = expected_self_energy(b, processing_density, initiator);
    let value_time = value_time(cost.t_total_s, b.deadline_s);
    let value_energy = value_energy(cost.e_total_j, expected_energy_j)?;
    Ok(ValueBreakdown {
        value: weights.xi_time * value_time + weights.xi_energy * value_energy,
        value_time,
        value_energy,
        expected_energy_j,
        cost,
    })
}
