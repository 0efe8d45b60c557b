//! Static network description and the N-dimensional tuples that flow through
//! every other module.
//!
//! Pair indices are zero-based throughout the API. `gains[m][n]` is the gain
//! from transmitter `m` to receiver `n`; the diagonal holds the direct links.

use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::inverse_q;

macro_rules! real_tuple {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(n: usize) -> Self {
                $name(vec![0.0; n])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                $name(v)
            }
        }

        impl From<&[f64]> for $name {
            fn from(v: &[f64]) -> Self {
                $name(v.to_vec())
            }
        }
    };
}

real_tuple!(
    /// Transmit power per pair for one slot.
    PowerTuple
);
real_tuple!(
    /// Rate per pair, in bits per channel use.
    RateTuple
);
real_tuple!(
    /// Bits waiting in each pair's queue.
    QueueState
);

impl RateTuple {
    /// `true` when every component is strictly positive.
    pub fn is_strictly_positive(&self) -> bool {
        self.iter().all(|&x| x > 0.0)
    }

    pub fn scaled(&self, c: f64) -> RateTuple {
        RateTuple(self.iter().map(|&x| x * c).collect())
    }
}

/// On-disk JSON layout of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub pairs: usize,
    pub gains: Vec<Vec<f64>>,
    pub noise: Vec<f64>,
    pub power_sets: Vec<Vec<f64>>,
    pub blocklength: u64,
    pub error_prob: f64,
}

/// Gains, noise powers, discrete power sets, blocklength and target error
/// probability of an N-pair interference network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct NetworkScenario {
    gains: Vec<Vec<f64>>,
    noise: Vec<f64>,
    power_sets: Vec<Vec<f64>>,
    blocklength: u64,
    error_prob: f64,
    q_inv: f64,
}

impl NetworkScenario {
    /// Validates and builds a scenario. Power sets are sorted and deduplicated.
    pub fn new(
        gains: Vec<Vec<f64>>,
        noise: Vec<f64>,
        power_sets: Vec<Vec<f64>>,
        blocklength: u64,
        error_prob: f64,
    ) -> Result<Self> {
        let n = noise.len();
        ScenarioFile {
            pairs: n,
            gains,
            noise,
            power_sets,
            blocklength,
            error_prob,
        }
        .try_into()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_path(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn n_pairs(&self) -> usize {
        self.noise.len()
    }

    /// Gain from transmitter `m` to receiver `n`.
    pub fn gain(&self, m: usize, n: usize) -> f64 {
        self.gains[m][n]
    }

    pub fn noise(&self, n: usize) -> f64 {
        self.noise[n]
    }

    pub fn power_set(&self, n: usize) -> &[f64] {
        &self.power_sets[n]
    }

    pub fn max_power(&self, n: usize) -> f64 {
        *self.power_sets[n].last().expect("power sets are non-empty")
    }

    pub fn blocklength(&self) -> u64 {
        self.blocklength
    }

    pub fn error_prob(&self) -> f64 {
        self.error_prob
    }

    /// Cached `Q^{-1}(error_prob)`.
    pub fn q_inv(&self) -> f64 {
        self.q_inv
    }

    /// Size of the full transmit-power-tuple set.
    pub fn product_size(&self) -> u128 {
        self.power_sets
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.len() as u128))
    }

    /// Drain tolerance on a queue component, in bits.
    pub fn queue_tolerance(&self) -> f64 {
        1e-9 * self.blocklength as f64
    }

    pub fn check_power(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.n_pairs() {
            return Err(Error::domain(format!(
                "power tuple has {} components, scenario has {} pairs",
                s.len(),
                self.n_pairs()
            )));
        }
        for (n, &p) in s.iter().enumerate() {
            if !self.power_sets[n].iter().any(|&q| q == p) {
                return Err(Error::domain(format!(
                    "power {p} is not in the power set of pair {n}"
                )));
            }
        }
        Ok(())
    }

    /// Short stable identifier derived from the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl TryFrom<ScenarioFile> for NetworkScenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let n = f.pairs;
        if n == 0 {
            return Err(Error::field("pairs", "must be at least 1"));
        }
        if f.gains.len() != n {
            return Err(Error::field(
                "gains",
                format!("expected {n} rows, found {}", f.gains.len()),
            ));
        }
        for (m, row) in f.gains.iter().enumerate() {
            if row.len() != n {
                return Err(Error::field(
                    format!("gains[{m}]"),
                    format!("expected {n} entries, found {}", row.len()),
                ));
            }
            for (k, &h) in row.iter().enumerate() {
                if !h.is_finite() || h < 0.0 {
                    return Err(Error::field(
                        format!("gains[{m}][{k}]"),
                        "must be finite and non-negative",
                    ));
                }
            }
            if row[m] <= 0.0 {
                return Err(Error::field(
                    format!("gains[{m}][{m}]"),
                    "direct gain must be strictly positive",
                ));
            }
        }
        if f.noise.len() != n {
            return Err(Error::field(
                "noise",
                format!("expected {n} entries, found {}", f.noise.len()),
            ));
        }
        for (k, &w) in f.noise.iter().enumerate() {
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::field(
                    format!("noise[{k}]"),
                    "must be finite and strictly positive",
                ));
            }
        }
        if f.power_sets.len() != n {
            return Err(Error::field(
                "power_sets",
                format!("expected {n} sets, found {}", f.power_sets.len()),
            ));
        }
        let mut power_sets = Vec::with_capacity(n);
        for (k, set) in f.power_sets.into_iter().enumerate() {
            if set.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::field(
                    format!("power_sets[{k}]"),
                    "powers must be finite and non-negative",
                ));
            }
            if !set.contains(&0.0) {
                return Err(Error::field(
                    format!("power_sets[{k}]"),
                    "must contain 0 (no transmission)",
                ));
            }
            let mut set = set;
            set.sort_by(f64::total_cmp);
            set.dedup();
            power_sets.push(set);
        }
        if f.blocklength == 0 {
            return Err(Error::field("blocklength", "must be at least 1"));
        }
        if !(f.error_prob > 0.0 && f.error_prob < 0.5) {
            return Err(Error::field("error_prob", "must lie in (0, 0.5)"));
        }
        let q_inv = inverse_q(f.error_prob)?;
        Ok(NetworkScenario {
            gains: f.gains,
            noise: f.noise,
            power_sets,
            blocklength: f.blocklength,
            error_prob: f.error_prob,
            q_inv,
        })
    }
}

impl From<NetworkScenario> for ScenarioFile {
    fn from(s: NetworkScenario) -> Self {
        ScenarioFile {
            pairs: s.noise.len(),
            gains: s.gains,
            noise: s.noise,
            power_sets: s.power_sets,
            blocklength: s.blocklength,
            error_prob: s.error_prob,
        }
    }
}
