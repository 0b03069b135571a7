//! Gate-class noise models.

use serde::{Deserialize, Serialize};

use crate::channels::{check_rate, make_channel, make_correlated_cswap_noise, NoiseFamily, QuantumChannel};
use crate::error::{Error, Result};

/// Single-qubit noise applied independently to every qubit a gate touches.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LocalNoise {
    Depolarizing {
        rate: f64,
    },
    Dephasing {
        rate: f64,
    },
    AmplitudeDamping {
        rate: f64,
    },
    /// Explicit Pauli table; the identity weight is `1 − x − y − z`.
    Pauli {
        x: f64,
        y: f64,
        z: f64,
    },
}

impl Default for LocalNoise {
    fn default() -> Self {
        LocalNoise::none()
    }
}

impl LocalNoise {
    pub fn none() -> Self {
        LocalNoise::Depolarizing { rate: 0.0 }
    }

    pub fn of(family: NoiseFamily, rate: f64) -> Self {
        match family {
            NoiseFamily::Depolarizing => LocalNoise::Depolarizing { rate },
            NoiseFamily::Dephasing => LocalNoise::Dephasing { rate },
            NoiseFamily::AmplitudeDamping => LocalNoise::AmplitudeDamping { rate },
        }
    }

    pub fn family(&self) -> Option<NoiseFamily> {
        match self {
            LocalNoise::Depolarizing { .. } => Some(NoiseFamily::Depolarizing),
            LocalNoise::Dephasing { .. } => Some(NoiseFamily::Dephasing),
            LocalNoise::AmplitudeDamping { .. } => Some(NoiseFamily::AmplitudeDamping),
            LocalNoise::Pauli { .. } => None,
        }
    }

    /// Total error probability (for Pauli tables, `x + y + z`).
    pub fn rate(&self) -> f64 {
        match *self {
            LocalNoise::Depolarizing { rate }
            | LocalNoise::Dephasing { rate }
            | LocalNoise::AmplitudeDamping { rate } => rate,
            LocalNoise::Pauli { x, y, z } => x + y + z,
        }
    }

    pub fn with_rate(&self, rate: f64) -> Self {
        match self.family() {
            Some(f) => LocalNoise::of(f, rate),
            None => {
                let LocalNoise::Pauli { x, y, z } = *self else { unreachable!() };
                let total = x + y + z;
                if total == 0.0 {
                    LocalNoise::Pauli { x: rate / 3.0, y: rate / 3.0, z: rate / 3.0 }
                } else {
                    let s = rate / total;
                    LocalNoise::Pauli { x: x * s, y: y * s, z: z * s }
                }
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.rate() == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LocalNoise::Pauli { x, y, z } => {
                for (name, v) in [("x", x), ("y", y), ("z", z)] {
                    check_rate(&format!("Pauli {name} weight"), v)?;
                }
                if x + y + z > 1.0 + 1e-12 {
                    return Err(Error::RateOutOfRange { what: "Pauli table total".into(), rate: x + y + z });
                }
                Ok(())
            }
            _ => check_rate(self.family().unwrap().name(), self.rate()),
        }
    }

    /// The noise tensored over `n` qubits.
    pub fn channel(&self, n: usize) -> Result<QuantumChannel> {
        self.validate()?;
        match *self {
            LocalNoise::Pauli { x, y, z } => {
                let single = QuantumChannel::from_pauli_probs(1, vec![1.0 - x - y - z, x, y, z])?;
                let mut ch = single.clone();
                for _ in 1..n {
                    ch = ch.tensor(&single)?;
                }
                Ok(ch)
            }
            _ => make_channel(self.family().unwrap(), self.rate(), n),
        }
    }
}

/// Noise attached to each controlled-permutation gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CswapNoise {
    pub local: LocalNoise,
    /// Rate of the global component for correlated noise (depolarizing or
    /// dephasing local families only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global_rate: Option<f64>,
}

impl CswapNoise {
    pub fn local(local: LocalNoise) -> Self {
        Self { local, global_rate: None }
    }

    pub fn correlated(family: NoiseFamily, p0: f64, p1: f64) -> Self {
        Self { local: LocalNoise::of(family, p0), global_rate: Some(p1) }
    }

    pub fn is_correlated(&self) -> bool {
        self.global_rate.is_some()
    }

    /// The full three-qubit correlated channel.
    pub fn correlated_channel(&self) -> Result<QuantumChannel> {
        let p1 = self.global_rate.ok_or_else(|| Error::Config("cSWAP noise has no global component".into()))?;
        let family = self
            .local
            .family()
            .ok_or_else(|| Error::Unsupported("correlated noise needs a named local family".into()))?;
        make_correlated_cswap_noise(family, self.local.rate(), p1)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    #[serde(default)]
    pub single_qubit: LocalNoise,
    #[serde(default)]
    pub two_qubit: LocalNoise,
    #[serde(default)]
    pub cswap: CswapNoise,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    /// One family at the given single-qubit, two-qubit and cSWAP rates.
    pub fn uniform(family: NoiseFamily, p1: f64, p2: f64, pc: f64) -> Self {
        Self {
            single_qubit: LocalNoise::of(family, p1),
            two_qubit: LocalNoise::of(family, p2),
            cswap: CswapNoise::local(LocalNoise::of(family, pc)),
        }
    }

    pub fn with_cswap(mut self, cswap: CswapNoise) -> Self {
        self.cswap = cswap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.single_qubit.validate()?;
        self.two_qubit.validate()?;
        self.cswap.local.validate()?;
        if let Some(p1) = self.cswap.global_rate {
            check_rate("global cSWAP noise", p1)?;
            self.cswap.correlated_channel()?;
        }
        Ok(())
    }
}
