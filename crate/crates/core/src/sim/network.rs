// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Node placement on (0, 1], shard regions and the Cuckoo join rule.

use std::collections::BTreeMap;

use rand::Rng;

use super::SimError;
use crate::codec::CodedNodeState;
use crate::field::Symbol;

pub type NodeId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRecord {
    pub id: NodeId,
    pub position: Position,
    pub shard: usize,
    pub gamma: Symbol,
    pub malicious: bool,
    /// Stored coded state per generation.
    pub storage: BTreeMap<u32, CodedNodeState>,
}

/// A point in (0, 1], kept as `f64` but compared by bit pattern so records
/// stay `Eq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Position(u64);

impl Position {
    pub fn new(x: f64) -> Self {
        assert!(x > 0.0 && x <= 1.0, "position {x} outside (0, 1]");
        Self(x.to_bits())
    }

    pub fn get(self) -> f64 {
        f64::from_bits(self.0)
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self::new(1.0 - rng.gen::<f64>())
    }
}

/// Region `i` is `(i/m, (i+1)/m]`.
pub fn shard_of(position: Position, shards: usize) -> usize {
    let x = position.get() * shards as f64;
    (x.ceil() as usize).clamp(1, shards) - 1
}

/// A node leaving its shard, possibly for another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Move {
    pub id: NodeId,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinOutcome {
    pub id: NodeId,
    pub position: Position,
    pub shard: usize,
    /// Nodes re-drawn out of the interval around the joiner, including those
    /// that landed back in their own shard.
    pub displaced: Vec<Move>,
}

impl JoinOutcome {
    /// Displaced nodes whose shard changed.
    pub fn moved(&self) -> impl Iterator<Item = &Move> {
        self.displaced.iter().filter(|m| m.from != m.to)
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    shards: usize,
    epsilon: f64,
    /// Max malicious nodes per shard, enforced by re-drawing positions.
    cap: Option<usize>,
    min_shard_size: usize,
    nodes: BTreeMap<NodeId, NodeRecord>,
    next_id: NodeId,
    next_gamma: Vec<Symbol>,
    gamma_limit: u32,
}

impl Network {
    pub fn new(
        shards: usize,
        epsilon: f64,
        cap: Option<usize>,
        min_shard_size: usize,
        gamma_limit: u32,
    ) -> Result<Self, SimError> {
        if shards == 0 {
            return Err(SimError::InvalidConfig("at least one shard is required".into()));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(SimError::InvalidConfig(format!(
                "cuckoo interval width {epsilon} must lie in [0, 1)"
            )));
        }
        Ok(Self {
            shards,
            epsilon,
            cap,
            min_shard_size,
            nodes: BTreeMap::new(),
            next_id: 0,
            next_gamma: vec![1; shards],
            gamma_limit,
        })
    }

    pub fn shards(&self) -> usize {
        self.shards
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id)
    }

    pub fn node_mut(&mut self, id: NodeId) -> Option<&mut NodeRecord> {
        self.nodes.get_mut(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    /// Members of a shard in id order.
    pub fn members(&self, shard: usize) -> Vec<NodeId> {
        self.nodes
            .values()
            .filter(|n| n.shard == shard)
            .map(|n| n.id)
            .collect()
    }

    pub fn shard_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.shards];
        for n in self.nodes.values() {
            sizes[n.shard] += 1;
        }
        sizes
    }

    pub fn malicious_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.shards];
        for n in self.nodes.values().filter(|n| n.malicious) {
            counts[n.shard] += 1;
        }
        counts
    }

    fn fresh_gamma(&mut self, shard: usize) -> Result<Symbol, SimError> {
        let g = self.next_gamma[shard];
        if g >= self.gamma_limit {
            return Err(SimError::GammaExhausted { shard });
        }
        self.next_gamma[shard] += 1;
        Ok(g)
    }

    fn malicious_in(&self, shard: usize, except: Option<NodeId>) -> usize {
        self.nodes
            .values()
            .filter(|n| n.malicious && n.shard == shard && Some(n.id) != except)
            .count()
    }

    /// Draw a position, re-drawing while a malicious node would exceed the cap.
    fn draw_position<R: Rng>(&self, malicious: bool, except: Option<NodeId>, rng: &mut R) -> Position {
        loop {
            let pos = Position::random(rng);
            match self.cap {
                Some(cap) if malicious => {
                    if self.malicious_in(shard_of(pos, self.shards), except) < cap {
                        return pos;
                    }
                }
                _ => return pos,
            }
        }
    }

    /// Insert a node at a given position without displacing anyone.
    pub fn place(&mut self, position: Position, malicious: bool) -> Result<NodeId, SimError> {
        let shard = shard_of(position, self.shards);
        let gamma = self.fresh_gamma(shard)?;
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(
            id,
            NodeRecord {
                id,
                position,
                shard,
                gamma,
                malicious,
                storage: BTreeMap::new(),
            },
        );
        Ok(id)
    }

    /// Place `per_shard` nodes uniformly inside each region, with malicious
    /// nodes dealt round-robin over the shards.
    pub fn populate_balanced<R: Rng>(
        &mut self,
        per_shard: usize,
        malicious: usize,
        rng: &mut R,
    ) -> Result<(), SimError> {
        let mut bad_left = vec![0; self.shards];
        for i in 0..malicious {
            bad_left[i % self.shards] += 1;
        }
        for (shard, bad) in bad_left.into_iter().enumerate() {
            if bad > per_shard {
                return Err(SimError::InvalidConfig(
                    "more malicious nodes than shard seats".into(),
                ));
            }
            for i in 0..per_shard {
                let u = 1.0 - rng.gen::<f64>();
                let pos = Position::new((shard as f64 + u) / self.shards as f64);
                let pos = if shard_of(pos, self.shards) == shard {
                    pos
                } else {
                    Position::new((shard + 1) as f64 / self.shards as f64)
                };
                self.place(pos, i < bad)?;
            }
        }
        Ok(())
    }

    /// New node at a uniform position; everyone within `epsilon / 2` of it is
    /// re-drawn uniformly. Nodes that change shard get a fresh coefficient and
    /// lose their stored state.
    pub fn cuckoo_join<R: Rng>(&mut self, malicious: bool, rng: &mut R) -> Result<JoinOutcome, SimError> {
        let position = self.draw_position(malicious, None, rng);
        let half = self.epsilon / 2.0;
        let evicted: Vec<NodeId> = self
            .nodes
            .values()
            .filter(|n| (n.position.get() - position.get()).abs() < half)
            .map(|n| n.id)
            .collect();
        let id = self.place(position, malicious)?;
        let mut displaced = Vec::with_capacity(evicted.len());
        for nid in evicted {
            let (from, bad) = {
                let n = &self.nodes[&nid];
                (n.shard, n.malicious)
            };
            let pos = self.draw_position(bad, Some(nid), rng);
            let to = shard_of(pos, self.shards);
            let gamma = if to != from { Some(self.fresh_gamma(to)?) } else { None };
            let n = self.nodes.get_mut(&nid).unwrap();
            n.position = pos;
            if let Some(g) = gamma {
                n.shard = to;
                n.gamma = g;
                n.storage.clear();
            }
            displaced.push(Move { id: nid, from, to });
        }
        Ok(JoinOutcome {
            id,
            position,
            shard: shard_of(position, self.shards),
            displaced,
        })
    }

    /// Remove a node, failing if its shard would drop below the minimum size.
    pub fn leave(&mut self, id: NodeId) -> Result<NodeRecord, SimError> {
        let shard = match self.nodes.get(&id) {
            Some(n) => n.shard,
            None => return Err(SimError::InvalidConfig(format!("unknown node {id}"))),
        };
        let size = self.shard_sizes()[shard];
        if size - 1 < self.min_shard_size {
            return Err(SimError::ShardUnderflow {
                shard,
                size: size - 1,
                min: self.min_shard_size,
            });
        }
        Ok(self.nodes.remove(&id).unwrap())
    }

    /// Fail if any shard has fewer members than the minimum.
    pub fn check_sizes(&self) -> Result<(), SimError> {
        for (shard, &size) in self.shard_sizes().iter().enumerate() {
            if size < self.min_shard_size {
                return Err(SimError::ShardUnderflow {
                    shard,
                    size,
                    min: self.min_shard_size,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn net(shards: usize, epsilon: f64, cap: Option<usize>) -> Network {
        Network::new(shards, epsilon, cap, 0, 65536).unwrap()
    }

    #[test]
    fn regions_partition_unit_interval() {
        assert_eq!(shard_of(Position::new(0.25), 4), 0);
        assert_eq!(shard_of(Position::new(0.2500001), 4), 1);
        assert_eq!(shard_of(Position::new(1.0), 4), 3);
        assert_eq!(shard_of(Position::new(f64::MIN_POSITIVE), 4), 0);
        assert_eq!(shard_of(Position::new(0.5), 1), 0);
    }

    #[test]
    fn join_into_empty_network() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let mut n = net(4, 0.5, None);
        let out = n.cuckoo_join(false, &mut rng).unwrap();
        assert!(out.displaced.is_empty());
        assert_eq!(n.len(), 1);
        assert_eq!(n.node(out.id).unwrap().shard, out.shard);
    }

    #[test]
    fn zero_width_interval_moves_nobody() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let mut n = net(4, 0.0, None);
        n.populate_balanced(20, 0, &mut rng).unwrap();
        let before: Vec<Position> = n.nodes().map(|r| r.position).collect();
        for _ in 0..50 {
            assert!(n.cuckoo_join(false, &mut rng).unwrap().displaced.is_empty());
        }
        let after: Vec<Position> = n.nodes().take(80).map(|r| r.position).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn displaced_nodes_were_inside_interval() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut n = net(4, 0.1, None);
        n.populate_balanced(25, 0, &mut rng).unwrap();
        for _ in 0..30 {
            let before: BTreeMap<NodeId, (Position, Symbol)> =
                n.nodes().map(|r| (r.id, (r.position, r.gamma))).collect();
            let out = n.cuckoo_join(false, &mut rng).unwrap();
            let x = out.position.get();
            let inside: Vec<NodeId> = before
                .iter()
                .filter(|(_, (p, _))| (p.get() - x).abs() < 0.05)
                .map(|(id, _)| *id)
                .collect();
            let moved: Vec<NodeId> = out.displaced.iter().map(|m| m.id).collect();
            assert_eq!(inside, moved);
            for m in &out.displaced {
                let r = n.node(m.id).unwrap();
                assert_eq!(r.shard, m.to);
                assert_eq!(shard_of(r.position, 4), r.shard);
                if m.from == m.to {
                    assert_eq!(r.gamma, before[&m.id].1);
                }
            }
        }
    }

    #[test]
    fn gammas_never_repeat_within_a_shard() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut n = net(4, 0.2, None);
        n.populate_balanced(10, 0, &mut rng).unwrap();
        let mut seen: Vec<Vec<Symbol>> = vec![Vec::new(); 4];
        for r in n.nodes() {
            seen[r.shard].push(r.gamma);
        }
        for _ in 0..100 {
            let out = n.cuckoo_join(false, &mut rng).unwrap();
            let r = n.node(out.id).unwrap();
            assert!(!seen[r.shard].contains(&r.gamma));
            seen[r.shard].push(r.gamma);
            for m in out.moved() {
                let r = n.node(m.id).unwrap();
                assert!(!seen[r.shard].contains(&r.gamma));
                seen[r.shard].push(r.gamma);
            }
        }
    }

    #[test]
    fn malicious_cap_holds() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let mut n = net(4, 0.3, Some(1));
        n.populate_balanced(8, 4, &mut rng).unwrap();
        assert_eq!(n.malicious_counts(), vec![1, 1, 1, 1]);
        for _ in 0..200 {
            n.cuckoo_join(false, &mut rng).unwrap();
            assert!(n.malicious_counts().iter().all(|&c| c <= 1));
        }
    }

    #[test]
    fn leave_underflow() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let mut n = Network::new(2, 0.0, None, 11, 65536).unwrap();
        n.populate_balanced(12, 0, &mut rng).unwrap();
        let first = n.members(0)[0];
        n.leave(first).unwrap();
        let second = n.members(0)[0];
        assert_eq!(
            n.leave(second),
            Err(SimError::ShardUnderflow {
                shard: 0,
                size: 10,
                min: 11
            })
        );
    }

    /// Frozen output of one seeded join.
    #[test]
    fn golden_cuckoo_join() {
        let mut rng = ChaCha20Rng::seed_from_u64(2024);
        let mut n = net(4, 0.05, None);
        n.populate_balanced(4, 0, &mut rng).unwrap();
        let out = n.cuckoo_join(false, &mut rng).unwrap();
        let summary = format!(
            "id={} shard={} pos={:.6} displaced={:?} sizes={:?}",
            out.id,
            out.shard,
            out.position.get(),
            out.displaced
                .iter()
                .map(|m| (m.id, m.from, m.to))
                .collect::<Vec<_>>(),
            n.shard_sizes()
        );
        assert_eq!(summary, GOLDEN_JOIN);
    }

    const GOLDEN_JOIN: &str = "id=16 shard=0 pos=0.078348 displaced=[(2, 0, 2)] sizes=[4, 4, 5, 4]";
}
