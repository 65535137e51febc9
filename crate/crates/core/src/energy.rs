//! Radio energy accounting per node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    /// V
    pub voltage: f64,
    /// A
    pub current_tx: f64,
    /// A
    pub current_rx: f64,
    /// A
    pub current_sleep: f64,
    /// Beacon airtime, s.
    pub tx_duration: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            voltage: 3.3,
            current_tx: 0.110,
            current_rx: 0.030,
            current_sleep: 1e-6,
            tx_duration: 0.001,
        }
    }
}

impl EnergyModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.voltage,
            self.current_tx,
            self.current_rx,
            self.current_sleep,
            self.tx_duration,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        if !positive || !(self.current_sleep < self.current_rx && self.current_rx < self.current_tx) {
            return Err(Error::InvalidParameter(format!("energy model {self:?}")));
        }
        Ok(())
    }

    pub fn power(&self, mode: RadioMode) -> f64 {
        self.voltage
            * match mode {
                RadioMode::Transmit => self.current_tx,
                RadioMode::Receive => self.current_rx,
                RadioMode::Sleep => self.current_sleep,
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RadioMode {
    Transmit,
    Receive,
    Sleep,
}

/// Energy of one sounding cycle: one beacon, then sleep until the next.
pub fn sounding_energy(model: &EnergyModel, period: f64) -> Result<f64> {
    if !(period >= model.tx_duration) {
        return Err(Error::InvalidPeriod {
            period_s: period,
            tx_duration_s: model.tx_duration,
        });
    }
    Ok(model.power(RadioMode::Transmit) * model.tx_duration
        + model.power(RadioMode::Sleep) * (period - model.tx_duration))
}

/// Inverse squared error per joule.
pub fn localization_efficiency(mean_error: f64, energy: f64) -> Result<f64> {
    if !(mean_error > 0.0 && energy > 0.0) || !mean_error.is_finite() || !energy.is_finite() {
        return Err(Error::UndefinedEfficiency { mean_error, energy });
    }
    Ok(1.0 / (mean_error * mean_error) / energy)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    /// m
    pub mean_error: f64,
    /// J
    pub energy: f64,
    /// 1/(m²·J)
    pub eta: f64,
}

impl EfficiencyReport {
    pub fn new(mean_error: f64, energy: f64) -> Result<Self> {
        Ok(Self {
            mean_error,
            energy,
            eta: localization_efficiency(mean_error, energy)?,
        })
    }
}

/// Accumulated joules and seconds per radio mode for one node.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub transmit_j: f64,
    pub receive_j: f64,
    pub sleep_j: f64,
    pub total_j: f64,
    pub transmit_s: f64,
    pub receive_s: f64,
    pub sleep_s: f64,
}

impl EnergyLedger {
    pub fn accounted_time(&self) -> f64 {
        self.transmit_s + self.receive_s + self.sleep_s
    }
}

pub fn ledger_accrue(ledger: &mut EnergyLedger, mode: RadioMode, duration: f64, model: &EnergyModel) -> Result<()> {
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(Error::InvalidDuration(duration));
    }
    let joules = model.power(mode) * duration;
    let (j, s) = match mode {
        RadioMode::Transmit => (&mut ledger.transmit_j, &mut ledger.transmit_s),
        RadioMode::Receive => (&mut ledger.receive_j, &mut ledger.receive_s),
        RadioMode::Sleep => (&mut ledger.sleep_j, &mut ledger.sleep_s),
    };
    *j += joules;
    *s += duration;
    ledger.total_j = ledger.transmit_j + ledger.receive_j + ledger.sleep_j;
    Ok(())
}
