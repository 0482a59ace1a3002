use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::UeId;

/// Per-UE observation handed to the agent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelemetrySample {
    pub ue_id: UeId,
    /// Fraction in [0, 1].
    pub packet_loss: f64,
    pub latency_ms: f64,
    pub throughput_bps: f64,
    pub speed_mps: f64,
    pub distance_to_serving_m: f64,
    /// Serving-station load divided by its nominal UE capacity.
    pub serving_load_ratio: f64,
}

/// Observation features, in mixed-radix order (most significant first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    PacketLoss,
    Latency,
    Throughput,
    Speed,
    Distance,
    LoadRatio,
}

impl Feature {
    pub const COUNT: usize = 6;
    pub const ORDER: [Feature; Feature::COUNT] = [
        Feature::PacketLoss,
        Feature::Latency,
        Feature::Throughput,
        Feature::Speed,
        Feature::Distance,
        Feature::LoadRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::PacketLoss => "packet_loss",
            Feature::Latency => "latency_ms",
            Feature::Throughput => "throughput_bps",
            Feature::Speed => "speed_mps",
            Feature::Distance => "distance_to_serving_m",
            Feature::LoadRatio => "serving_load_ratio",
        }
    }
}

impl TelemetrySample {
    pub fn features(&self) -> [f64; Feature::COUNT] {
        [
            self.packet_loss,
            self.latency_ms,
            self.throughput_bps,
            self.speed_mps,
            self.distance_to_serving_m,
            self.serving_load_ratio,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (f, v) in Feature::ORDER.iter().zip(self.features()) {
            if !v.is_finite() {
                return Err(Error::InvalidTelemetry(format!("{} is {v}", f.name())));
            }
            if v < 0.0 {
                return Err(Error::InvalidTelemetry(format!(
                    "{} is negative ({v})",
                    f.name()
                )));
            }
        }
        Ok(())
    }
}

pub type StateIndex = usize;

/// Bin boundaries per feature. A feature with `k` boundaries has `k + 1` bins.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StateBins {
    pub packet_loss: Vec<f64>,
    pub latency_ms: Vec<f64>,
    pub throughput_bps: Vec<f64>,
    pub speed_mps: Vec<f64>,
    pub distance_m: Vec<f64>,
    pub load_ratio: Vec<f64>,
}

impl Default for StateBins {
    fn default() -> Self {
        StateBins {
            packet_loss: vec![0.01, 0.05],
            latency_ms: vec![10.0, 50.0],
            throughput_bps: vec![1e8, 1e9],
            speed_mps: vec![5.0],
            distance_m: vec![50.0, 150.0],
            load_ratio: vec![0.5, 0.9],
        }
    }
}

impl StateBins {
    pub fn boundaries(&self) -> [&[f64]; Feature::COUNT] {
        [
            &self.packet_loss,
            &self.latency_ms,
            &self.throughput_bps,
            &self.speed_mps,
            &self.distance_m,
            &self.load_ratio,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (f, b) in Feature::ORDER.iter().zip(self.boundaries()) {
            if b.iter().any(|v| !v.is_finite()) || b.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidParameter {
                    name: "bins",
                    reason: format!(
                        "{} boundaries must be finite and strictly increasing",
                        f.name()
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn radices(&self) -> [usize; Feature::COUNT] {
        self.boundaries().map(|b| b.len() + 1)
    }

    pub fn state_count(&self) -> usize {
        self.radices().iter().product()
    }

    /// Bin of each feature: the number of boundaries `<=` the value.
    pub fn bin_tuple(&self, t: &TelemetrySample) -> Result<[usize; Feature::COUNT]> {
        if let Some((f, v)) = Feature::ORDER
            .iter()
            .zip(t.features())
            .find(|(_, v)| v.is_nan())
        {
            return Err(Error::InvalidTelemetry(format!(
                "{} is NaN ({v})",
                f.name()
            )));
        }
        let values = t.features();
        let mut bins = [0; Feature::COUNT];
        for (i, b) in self.boundaries().iter().enumerate() {
            bins[i] = b.partition_point(|&edge| edge <= values[i]);
        }
        Ok(bins)
    }

    pub fn index_of_bins(&self, bins: &[usize; Feature::COUNT]) -> StateIndex {
        self.radices()
            .iter()
            .zip(bins)
            .fold(0, |acc, (radix, bin)| acc * radix + bin)
    }

    pub fn discretize(&self, t: &TelemetrySample) -> Result<StateIndex> {
        Ok(self.index_of_bins(&self.bin_tuple(t)?))
    }
}
