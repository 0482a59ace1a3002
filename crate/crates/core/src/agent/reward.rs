use serde::{Deserialize, Serialize};

use super::TelemetrySample;
use crate::error::{Error, Result};
use crate::model::jain_fairness;

/// SLA thresholds and the weight of the load-imbalance penalty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub latency_sla_ms: f64,
    pub loss_sla: f64,
    pub throughput_sla_bps: f64,
    pub imbalance_weight: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            latency_sla_ms: 10.0,
            loss_sla: 0.01,
            throughput_sla_bps: 0.5e9,
            imbalance_weight: 1.0,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !pos(self.latency_sla_ms) {
            return Err(Error::invalid("latency_sla_ms", "must be > 0"));
        }
        if !pos(self.loss_sla) {
            return Err(Error::invalid("loss_sla", "must be > 0"));
        }
        if !pos(self.throughput_sla_bps) {
            return Err(Error::invalid("throughput_sla_bps", "must be > 0"));
        }
        if !(self.imbalance_weight.is_finite() && self.imbalance_weight >= 0.0) {
            return Err(Error::invalid("imbalance_weight", "must be >= 0"));
        }
        Ok(())
    }

    /// Closed interval every reward lies in.
    pub fn bounds(&self) -> (f64, f64) {
        (-3.0 - self.imbalance_weight, 3.0)
    }
}

/// +1 per SLA met, −1 per SLA violated, minus `λ·(1 − Jain(load_ratios))`.
pub fn compute_reward(t: &TelemetrySample, load_ratios: &[f64], rc: &RewardConfig) -> f64 {
    let sat = |ok: bool| if ok { 1.0 } else { -1.0 };
    sat(t.latency_ms <= rc.latency_sla_ms)
        + sat(t.packet_loss <= rc.loss_sla)
        + sat(t.throughput_bps >= rc.throughput_sla_bps)
        - rc.imbalance_weight * (1.0 - jain_fairness(load_ratios))
}
