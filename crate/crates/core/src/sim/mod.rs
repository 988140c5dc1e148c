// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Round-based shard simulator.
//!
//! Each epoch: draw epoch randomness, append new blocks to every shard
//! (encoding a generation whenever `L` blocks are pending), then apply churn
//! through the Cuckoo rule. Every node that enters a shard is bootstrapped for
//! each existing generation from `alpha + 2p` randomly chosen members, and the
//! result is checked against direct encoding of the retained source blocks.
//! Intra-shard consensus is not modeled: blocks simply arrive.

pub mod adversary;
pub mod config;
pub mod network;
pub mod report;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

pub use adversary::{adversary_corrupt, Adversary, AdversaryStrategy, Coalition};
pub use config::SimConfig;
pub use network::{shard_of, JoinOutcome, Network, NodeId, NodeRecord, Position};
pub use report::{BootstrapOutcome, BootstrapRecord, EpochRecord, SimReport};

use crate::codec::{BlockCodec, CodecError, RepairShare, StripeSet, FIXED_HEADER_LEN};
use crate::field::{Field, Symbol};
use crate::mbr::MbrParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shard underflow: shard {shard} has {size} nodes, needs at least {min}")]
    ShardUnderflow { shard: usize, size: usize, min: usize },
    #[error("shard {shard} ran out of fresh coefficients")]
    GammaExhausted { shard: usize },
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Membership published at the end of an epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceBlock {
    pub epoch: u32,
    pub randomness: u64,
    /// `(node, shard, gamma)` for every active node, by node id.
    pub members: Vec<(NodeId, usize, Symbol)>,
}

#[derive(Debug, Clone, Default)]
struct ShardLedger {
    pending: Vec<Vec<u8>>,
    /// Source blocks of every encoded generation, kept only to audit
    /// bootstraps.
    generations: Vec<StripeSet>,
}

pub struct Simulator {
    config: SimConfig,
    codec: BlockCodec,
    network: Network,
    rng: ChaCha20Rng,
    adversary: Adversary,
    ledgers: Vec<ShardLedger>,
    /// Nodes missing a generation after a failed bootstrap.
    incomplete: BTreeSet<NodeId>,
    epoch: u32,
    report: SimReport,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Result<Self, SimError> {
        config.validate()?;
        let field = Field::new(config.field());
        let params = MbrParams::new(config.k, config.alpha, config.shard_size(), config.p)
            .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
        let codec = BlockCodec::new(field.clone(), params, config.block_size)?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let mut setup = ChaCha20Rng::seed_from_u64(rng.gen());
        let cap = config.cap_malicious_per_shard.then_some(config.p);
        let mut network = Network::new(
            config.shards,
            config.cuckoo_epsilon,
            cap,
            config.min_shard_size(),
            field.order(),
        )?;
        network.populate_balanced(config.shard_size(), config.malicious, &mut setup)?;
        let adversary = Adversary::new(config.adversary, rng.gen(), config.alpha);
        let report = SimReport {
            config: config.clone(),
            message_len: params.message_len(),
            epochs: Vec::new(),
            bootstraps: Vec::new(),
            breaches: Vec::new(),
            warnings: Vec::new(),
        };
        Ok(Self {
            ledgers: vec![ShardLedger::default(); config.shards],
            config,
            codec,
            network,
            rng,
            adversary,
            incomplete: BTreeSet::new(),
            epoch: 0,
            report,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn codec(&self) -> &BlockCodec {
        &self.codec
    }

    pub fn report(&self) -> &SimReport {
        &self.report
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    /// Generations encoded so far in `shard`.
    pub fn generations(&self, shard: usize) -> usize {
        self.ledgers[shard].generations.len()
    }

    /// Run one epoch and publish its reference block.
    pub fn epoch_reconfigure(&mut self) -> Result<ReferenceBlock, SimError> {
        let randomness: u64 = self.rng.gen();
        let mut rng = ChaCha20Rng::seed_from_u64(randomness);
        let epoch = self.epoch;

        for shard in 0..self.config.shards {
            for _ in 0..self.config.blocks_per_epoch {
                let mut block = vec![0u8; self.config.block_size as usize];
                rng.fill(&mut block[..]);
                self.ledgers[shard].pending.push(block);
                if self.ledgers[shard].pending.len() == self.codec.params().message_len() {
                    self.encode_generation(shard)?;
                }
            }
        }

        let mut leaves = 0;
        for _ in 0..self.config.leaves_per_epoch {
            let ids: Vec<NodeId> = self.network.nodes().map(|n| n.id).collect();
            let id = ids[rng.gen_range(0..ids.len())];
            self.network.leave(id)?;
            self.incomplete.remove(&id);
            leaves += 1;
        }
        let mut entrants = BTreeSet::new();
        let mut moved = 0;
        for _ in 0..self.config.joins_per_epoch {
            let out = self.network.cuckoo_join(false, &mut rng)?;
            entrants.insert(out.id);
            for m in out.moved() {
                moved += 1;
                entrants.insert(m.id);
                self.incomplete.remove(&m.id);
            }
        }
        self.network.check_sizes()?;

        let first = self.report.bootstraps.len();
        let mut bootstrapped = 0;
        for &id in &entrants {
            if self.bootstrap(id, &mut rng)? {
                bootstrapped += 1;
            }
        }
        self.record_epoch(epoch, randomness, leaves, moved, first, bootstrapped);
        self.epoch += 1;
        Ok(self.reference_block(epoch, randomness))
    }

    /// Run the remaining configured epochs and return the report.
    pub fn run(mut self) -> Result<SimReport, SimError> {
        while self.epoch < self.config.epochs {
            self.epoch_reconfigure()?;
        }
        Ok(self.report)
    }

    fn reference_block(&self, epoch: u32, randomness: u64) -> ReferenceBlock {
        ReferenceBlock {
            epoch,
            randomness,
            members: self
                .network
                .nodes()
                .map(|n| (n.id, n.shard, n.gamma))
                .collect(),
        }
    }

    fn encode_generation(&mut self, shard: usize) -> Result<(), SimError> {
        let ledger = &mut self.ledgers[shard];
        let blocks = std::mem::take(&mut ledger.pending);
        let stripes = self.codec.stripe(&blocks)?;
        let generation = ledger.generations.len() as u32;
        let members = self.network.members(shard);
        let gammas: Vec<Symbol> = members
            .iter()
            .map(|id| self.network.node(*id).unwrap().gamma)
            .collect();
        let states = self.codec.encode_stripes(&stripes, &gammas, generation)?;
        for (id, state) in members.into_iter().zip(states) {
            self.network
                .node_mut(id)
                .unwrap()
                .storage
                .insert(generation, state);
        }
        self.ledgers[shard].generations.push(stripes);
        Ok(())
    }

    /// Bootstrap every generation of the node's shard. Returns whether any
    /// generation was fetched.
    fn bootstrap(&mut self, id: NodeId, rng: &mut ChaCha20Rng) -> Result<bool, SimError> {
        let (shard, gamma) = {
            let n = self.network.node(id).unwrap();
            (n.shard, n.gamma)
        };
        let need = self.codec.params().repair_degree();
        let generations = self.ledgers[shard].generations.len() as u32;
        for generation in 0..generations {
            let holders: Vec<NodeId> = self
                .network
                .members(shard)
                .into_iter()
                .filter(|h| {
                    *h != id && self.network.node(*h).unwrap().storage.contains_key(&generation)
                })
                .collect();
            if holders.len() < need {
                return Err(SimError::ShardUnderflow {
                    shard,
                    size: holders.len(),
                    min: need,
                });
            }
            let mut helpers: Vec<NodeId> = rand::seq::index::sample(rng, holders.len(), need)
                .into_iter()
                .map(|i| holders[i])
                .collect();
            helpers.sort_unstable();

            let mut shares = Vec::with_capacity(need);
            let mut wire_bytes = 0;
            let mut malicious_helpers = 0;
            for h in &helpers {
                let node = self.network.node(*h).unwrap();
                let mut share = self.codec.serve_repair(&node.storage[&generation], gamma)?;
                if node.malicious {
                    malicious_helpers += 1;
                    self.adversary.corrupt_share(self.codec.field(), &mut share, rng);
                }
                let bytes = share.to_bytes();
                wire_bytes += bytes.len();
                shares.push(RepairShare::from_bytes(&bytes)?);
            }

            let p = self.config.p;
            let (outcome, flagged, payload_bytes) = match self.codec.bootstrap_node(&shares, gamma) {
                Ok(b) => {
                    let oracle = self
                        .codec
                        .encode_stripes(&self.ledgers[shard].generations[generation as usize], &[gamma], generation)?
                        .pop()
                        .unwrap();
                    let flagged = b.flagged.len();
                    let payload = b.payload_bytes;
                    if b.state == oracle {
                        self.network
                            .node_mut(id)
                            .unwrap()
                            .storage
                            .insert(generation, b.state);
                        (BootstrapOutcome::Ok, flagged, payload)
                    } else {
                        // With alpha + p or more colluders the lies alone
                        // form a valid answer; no decoder can tell.
                        let msg = format!(
                            "epoch {} node {id} generation {generation}: bootstrap returned a wrong state with {malicious_helpers} malicious helpers",
                            self.epoch
                        );
                        if malicious_helpers >= self.config.alpha + p {
                            self.report.warnings.push(msg + " (undetectable)");
                        } else {
                            self.report.breaches.push(msg);
                        }
                        self.incomplete.insert(id);
                        (BootstrapOutcome::SilentCorruption, flagged, payload)
                    }
                }
                Err(e) if e.is_decode_failure() => {
                    if malicious_helpers <= p {
                        self.report.breaches.push(format!(
                            "epoch {} node {id} generation {generation}: bootstrap failed with only {malicious_helpers} malicious helpers",
                            self.epoch
                        ));
                    }
                    self.incomplete.insert(id);
                    let flagged = match e {
                        CodecError::RepairFailed { flagged, .. } => flagged,
                        _ => need,
                    };
                    (BootstrapOutcome::Failed, flagged, 0)
                }
                Err(e) => return Err(e.into()),
            };
            self.report.bootstraps.push(BootstrapRecord {
                epoch: self.epoch,
                node: id,
                shard,
                gamma,
                generation,
                helpers,
                malicious_helpers,
                flagged,
                wire_bytes,
                payload_bytes,
                outcome,
            });
        }
        Ok(generations > 0)
    }

    /// Bytes one node stores per generation, header included.
    pub fn state_bytes(&self) -> usize {
        FIXED_HEADER_LEN
            + 4 * self.codec.params().message_len()
            + self.codec.params().alpha() * self.codec.coded_block_bytes()
    }

    fn record_epoch(
        &mut self,
        epoch: u32,
        randomness: u64,
        leaves: usize,
        moved: usize,
        first_bootstrap: usize,
        bootstrapped_nodes: usize,
    ) {
        let per_gen = self.state_bytes();
        let generations: Vec<u32> = self.ledgers.iter().map(|l| l.generations.len() as u32).collect();
        let mut storage_min = usize::MAX;
        let mut storage_max = 0;
        for n in self.network.nodes() {
            let bytes: usize = n.storage.values().map(|s| s.encoded_len()).sum();
            storage_min = storage_min.min(bytes);
            storage_max = storage_max.max(bytes);
            let expected = generations[n.shard] as usize * per_gen;
            if bytes != expected && !self.incomplete.contains(&n.id) {
                self.report.breaches.push(format!(
                    "epoch {epoch} node {}: stores {bytes} bytes, expected {expected}",
                    n.id
                ));
            }
        }
        let new = &self.report.bootstraps[first_bootstrap..];
        let ok = new.iter().filter(|b| b.outcome == BootstrapOutcome::Ok).count();
        let sizes = self.network.shard_sizes();
        let balance = *sizes.iter().max().unwrap() as f64 / (*sizes.iter().min().unwrap()).max(1) as f64;
        if balance > self.config.balance_threshold {
            self.report.warnings.push(format!(
                "epoch {epoch}: shard size ratio {balance:.3} above {}",
                self.config.balance_threshold
            ));
        }
        let record = EpochRecord {
            epoch,
            randomness,
            joins: self.config.joins_per_epoch,
            leaves,
            moved,
            storage_expected: generations[0] as usize * per_gen,
            generations,
            storage_min,
            storage_max,
            bootstraps_ok: ok,
            bootstraps_failed: new.len() - ok,
            bootstrap_wire_bytes: new.iter().map(|b| b.wire_bytes).sum(),
            bootstrap_payload_bytes: new.iter().map(|b| b.payload_bytes).sum(),
            bootstrapped_nodes,
            shard_sizes: sizes,
            malicious: self.network.malicious_counts(),
            balance,
        };
        self.report.epochs.push(record);
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimReport, SimError> {
    Simulator::new(config.clone())?.run()
}
