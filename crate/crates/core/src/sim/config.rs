// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation parameters, stored as versioned TOML.

use serde::{Deserialize, Serialize};

use super::adversary::AdversaryStrategy;
use super::SimError;
use crate::field::FieldSpec;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub version: u32,
    /// Initial node count `N`, split evenly over the shards.
    pub nodes: usize,
    /// Shard count `m`.
    pub shards: usize,
    /// Malicious node count `T`.
    pub malicious: usize,
    pub k: usize,
    pub alpha: usize,
    /// Malicious helpers each bootstrap must tolerate.
    pub p: usize,
    pub block_size: u32,
    /// New blocks per shard per epoch.
    pub blocks_per_epoch: usize,
    pub joins_per_epoch: usize,
    #[serde(default)]
    pub leaves_per_epoch: usize,
    #[serde(default = "default_epsilon")]
    pub cuckoo_epsilon: f64,
    #[serde(default = "default_adversary")]
    pub adversary: AdversaryStrategy,
    /// Keep every shard at most `p` malicious members.
    #[serde(default = "default_true")]
    pub cap_malicious_per_shard: bool,
    /// Largest-to-smallest shard size ratio above which a warning is reported.
    #[serde(default = "default_balance")]
    pub balance_threshold: f64,
    pub seed: u64,
    pub epochs: u32,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_adversary() -> AdversaryStrategy {
    AdversaryStrategy::FlipRandomSymbols
}

fn default_true() -> bool {
    true
}

fn default_balance() -> f64 {
    2.0
}

impl SimConfig {
    /// 200 nodes in 4 shards, `k = 5`, `alpha = 8`, `p = 1`, 4 malicious,
    /// 2 KB blocks, 10 epochs of 6 blocks (two generations of 30).
    pub fn small() -> Self {
        Self {
            version: CONFIG_VERSION,
            nodes: 200,
            shards: 4,
            malicious: 4,
            k: 5,
            alpha: 8,
            p: 1,
            block_size: 2048,
            blocks_per_epoch: 6,
            joins_per_epoch: 2,
            leaves_per_epoch: 0,
            cuckoo_epsilon: default_epsilon(),
            adversary: default_adversary(),
            cap_malicious_per_shard: true,
            balance_threshold: default_balance(),
            seed: 7,
            epochs: 10,
        }
    }

    /// The coding field used by the simulator.
    pub fn field(&self) -> FieldSpec {
        FieldSpec::gf65536()
    }

    pub fn shard_size(&self) -> usize {
        self.nodes / self.shards.max(1)
    }

    /// Smallest shard that can still serve a bootstrap plus the joiner.
    pub fn min_shard_size(&self) -> usize {
        self.alpha + 2 * self.p + 1
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.version != CONFIG_VERSION {
            return bad(format!("unsupported config version {}", self.version));
        }
        if self.shards == 0 || self.nodes % self.shards != 0 {
            return bad(format!(
                "nodes = {} must be a positive multiple of shards = {}",
                self.nodes, self.shards
            ));
        }
        let n_s = self.shard_size();
        if self.k == 0 || self.k > self.alpha {
            return bad(format!("need 1 <= k <= alpha, got k = {}, alpha = {}", self.k, self.alpha));
        }
        if self.alpha + 2 * self.p >= n_s {
            return bad(format!(
                "alpha + 2p = {} must be below the shard size {n_s}",
                self.alpha + 2 * self.p
            ));
        }
        if self.k + 2 * self.p > n_s {
            return bad(format!("k + 2p = {} exceeds the shard size {n_s}", self.k + 2 * self.p));
        }
        if self.malicious > self.nodes {
            return bad("more malicious nodes than nodes".into());
        }
        if self.cap_malicious_per_shard && self.malicious > self.shards * self.p {
            return bad(format!(
                "{} malicious nodes cannot fit {} shards with at most p = {} each",
                self.malicious, self.shards, self.p
            ));
        }
        if self.block_size == 0 {
            return bad("block_size must be positive".into());
        }
        if !(0.0..1.0).contains(&self.cuckoo_epsilon) {
            return bad(format!("cuckoo_epsilon = {} must lie in [0, 1)", self.cuckoo_epsilon));
        }
        if !(self.balance_threshold >= 1.0) {
            return bad("balance_threshold must be at least 1".into());
        }
        if self.alpha > u16::MAX as usize || n_s >= self.field().order() as usize {
            return bad("parameters exceed the coding field".into());
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, SimError> {
        let cfg: SimConfig =
            toml::from_str(s).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// One-line `key=value` rendering.
    pub fn effective_line(&self) -> String {
        format!(
            "version={} nodes={} shards={} malicious={} k={} alpha={} p={} block_size={} blocks_per_epoch={} joins_per_epoch={} leaves_per_epoch={} cuckoo_epsilon={} adversary={} cap_malicious_per_shard={} balance_threshold={} seed={} epochs={}",
            self.version,
            self.nodes,
            self.shards,
            self.malicious,
            self.k,
            self.alpha,
            self.p,
            self.block_size,
            self.blocks_per_epoch,
            self.joins_per_epoch,
            self.leaves_per_epoch,
            self.cuckoo_epsilon,
            self.adversary,
            self.cap_malicious_per_shard,
            self.balance_threshold,
            self.seed,
            self.epochs
        )
    }
}
