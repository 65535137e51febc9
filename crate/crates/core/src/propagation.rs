//! Log-distance path loss with Gaussian shadowing, used to synthesize RSS
//! for both the offline survey and online beacons.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Position;
use crate::radio_map::Rssi;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationModel {
    /// dBm
    pub tx_power: f64,
    /// Path loss at the reference distance, dB.
    pub pl_d0: f64,
    /// Reference distance, m.
    pub d0: f64,
    pub exponent: f64,
    /// dB
    pub shadowing_sigma: f64,
    /// Hearing threshold, dBm.
    pub noise_floor: f64,
}

impl PropagationModel {
    pub fn indoor() -> Self {
        Self {
            tx_power: 20.0,
            pl_d0: 40.0,
            d0: 1.0,
            exponent: 2.2,
            shadowing_sigma: 3.0,
            noise_floor: -75.0,
        }
    }

    pub fn outdoor() -> Self {
        Self {
            exponent: 2.0,
            shadowing_sigma: 2.0,
            ..Self::indoor()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.tx_power,
            self.pl_d0,
            self.d0,
            self.exponent,
            self.shadowing_sigma,
            self.noise_floor,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite
            || self.d0 <= 0.0
            || self.exponent <= 0.0
            || self.shadowing_sigma < 0.0
            || self.noise_floor > Rssi::MIN as f64
        {
            return Err(Error::InvalidParameter(format!("propagation model {self:?}")));
        }
        Ok(())
    }

    /// Noise-free received power at distance `d` (clamped below at `d0`).
    pub fn mean_rss_at(&self, d: f64) -> f64 {
        self.tx_power - self.pl_d0 - 10.0 * self.exponent * (d.max(self.d0) / self.d0).log10()
    }

    /// Distance at which the noise-free power reaches the hearing threshold.
    pub fn hearing_range(&self) -> f64 {
        self.d0 * 10f64.powf((self.tx_power - self.pl_d0 - self.noise_floor) / (10.0 * self.exponent))
    }
}

/// Received power for one shadowing draw, or `None` below the hearing threshold.
pub fn predict_rss(model: &PropagationModel, tx: Position, rx: Position, noise_draw: f64) -> Option<f64> {
    let rss = model.mean_rss_at(tx.distance_to(&rx)) + noise_draw;
    (rss >= model.noise_floor).then_some(rss)
}

/// Round to the nearest dBm (ties toward −∞) and clamp to the RSSI range.
pub fn quantize_rssi(rss: f64) -> Rssi {
    let rounded = (rss - 0.5).ceil();
    let clamped = rounded.clamp(Rssi::MIN as f64, Rssi::MAX as f64);
    Rssi::new(clamped as i32).expect("clamped into range")
}

pub fn sample_rss<R: Rng + ?Sized>(model: &PropagationModel, tx: Position, rx: Position, rng: &mut R) -> Option<Rssi> {
    let noise = if model.shadowing_sigma > 0.0 {
        Normal::new(0.0, model.shadowing_sigma)
            .expect("sigma validated")
            .sample(rng)
    } else {
        0.0
    };
    predict_rss(model, tx, rx, noise).map(quantize_rssi)
}
