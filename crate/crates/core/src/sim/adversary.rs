// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Corruption strategies of malicious helpers.
//!
//! A malicious node corrupts everything it sends: a whole repair share, or a
//! whole stored state when asked for reconstruction.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{CodedNodeState, RepairShare};
use crate::field::{Field, Symbol};
use crate::mbr::NodeRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryStrategy {
    /// Each symbol is replaced by a different random value with probability
    /// 1/2; at least one symbol always changes.
    FlipRandomSymbols,
    /// Every symbol is sent as zero.
    ZeroOut,
    /// All colluders answer as if the generation held the same fabricated
    /// data, so their symbols agree with one wrong codeword.
    ConsistentWrongPolynomial,
}

impl AdversaryStrategy {
    pub const ALL: [AdversaryStrategy; 3] = [
        AdversaryStrategy::FlipRandomSymbols,
        AdversaryStrategy::ZeroOut,
        AdversaryStrategy::ConsistentWrongPolynomial,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdversaryStrategy::FlipRandomSymbols => "flip-random-symbols",
            AdversaryStrategy::ZeroOut => "zero-out",
            AdversaryStrategy::ConsistentWrongPolynomial => "consistent-wrong-polynomial",
        }
    }
}

impl fmt::Display for AdversaryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AdversaryStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown adversary strategy {s:?}"))
    }
}

/// Shared secret of colluding nodes: a fabricated message matrix offset per
/// stripe, derived on demand from one seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coalition {
    seed: u64,
    alpha: usize,
}

impl Coalition {
    pub fn new(seed: u64, alpha: usize) -> Self {
        Self { seed, alpha }
    }

    /// The nonzero offset `Delta_s` (row-major, `alpha x alpha`) for stripe `s`.
    pub fn delta(&self, field: &Field, stripe: usize) -> Vec<Symbol> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(stripe as u64);
        loop {
            let d: Vec<Symbol> = (0..self.alpha * self.alpha)
                .map(|_| rng.gen_range(0..field.order()))
                .collect();
            if d.iter().any(|&v| v != 0) {
                return d;
            }
        }
    }

    /// `psi_helper^T Delta_s`.
    pub fn row_offset(&self, field: &Field, stripe: usize, helper_gamma: Symbol) -> Vec<Symbol> {
        let d = self.delta(field, stripe);
        let psi = field.vandermonde_row(helper_gamma, self.alpha);
        (0..self.alpha)
            .map(|c| {
                let column: Vec<Symbol> = (0..self.alpha).map(|r| d[r * self.alpha + c]).collect();
                field.dot(&psi, &column)
            })
            .collect()
    }

    /// `psi_helper^T Delta_s psi_target`.
    pub fn share_offset(
        &self,
        field: &Field,
        stripe: usize,
        helper_gamma: Symbol,
        target_gamma: Symbol,
    ) -> Symbol {
        let row = self.row_offset(field, stripe, helper_gamma);
        field.dot(&row, &field.vandermonde_row(target_gamma, self.alpha))
    }
}

/// Corrupt `symbols` in place. `offset(i)` gives the coalition's additive
/// offset for symbol `i` and is only used by the consistent strategy.
pub fn adversary_corrupt<R: Rng>(
    field: &Field,
    symbols: &mut [Symbol],
    strategy: AdversaryStrategy,
    offset: impl Fn(usize) -> Symbol,
    rng: &mut R,
) {
    match strategy {
        AdversaryStrategy::ZeroOut => symbols.iter_mut().for_each(|s| *s = 0),
        AdversaryStrategy::FlipRandomSymbols => {
            if symbols.is_empty() {
                return;
            }
            loop {
                let mut changed = false;
                for s in symbols.iter_mut() {
                    if rng.gen_bool(0.5) {
                        *s = field.add(*s, rng.gen_range(1..field.order()));
                        changed = true;
                    }
                }
                if changed {
                    return;
                }
            }
        }
        AdversaryStrategy::ConsistentWrongPolynomial => {
            for (i, s) in symbols.iter_mut().enumerate() {
                *s = field.add(*s, offset(i));
            }
        }
    }
}

/// A malicious node's behavior: strategy plus coalition secret.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adversary {
    pub strategy: AdversaryStrategy,
    pub coalition: Coalition,
}

impl Adversary {
    pub fn new(strategy: AdversaryStrategy, coalition_seed: u64, alpha: usize) -> Self {
        Self {
            strategy,
            coalition: Coalition::new(coalition_seed, alpha),
        }
    }

    pub fn corrupt_share<R: Rng>(&self, field: &Field, share: &mut RepairShare, rng: &mut R) {
        let (h, t) = (share.helper_gamma, share.target_gamma);
        let c = &self.coalition;
        let consistent = self.strategy == AdversaryStrategy::ConsistentWrongPolynomial;
        let offsets: Vec<Symbol> = if consistent {
            (0..share.symbols.len())
                .map(|s| c.share_offset(field, s, h, t))
                .collect()
        } else {
            Vec::new()
        };
        adversary_corrupt(field, &mut share.symbols, self.strategy, |i| offsets[i], rng);
    }

    /// Corrupt a single-stripe row (stripe index 0).
    pub fn corrupt_row<R: Rng>(&self, field: &Field, row: &mut NodeRow, rng: &mut R) {
        let offsets = if self.strategy == AdversaryStrategy::ConsistentWrongPolynomial {
            self.coalition.row_offset(field, 0, row.gamma)
        } else {
            Vec::new()
        };
        adversary_corrupt(field, &mut row.symbols, self.strategy, |i| offsets[i], rng);
    }

    /// Corrupt a whole stored state, as served for reconstruction.
    pub fn corrupt_state<R: Rng>(&self, field: &Field, state: &mut CodedNodeState, rng: &mut R) {
        let alpha = state.blocks.len();
        let z = state.header.stripes as usize;
        let mut flat: Vec<Symbol> = (0..z)
            .flat_map(|s| state.blocks.iter().map(move |b| b[s]))
            .collect();
        let offsets: Vec<Symbol> = if self.strategy == AdversaryStrategy::ConsistentWrongPolynomial {
            (0..z)
                .flat_map(|s| self.coalition.row_offset(field, s, state.gamma))
                .collect()
        } else {
            Vec::new()
        };
        adversary_corrupt(field, &mut flat, self.strategy, |i| offsets[i], rng);
        for (i, v) in flat.into_iter().enumerate() {
            state.blocks[i % alpha][i / alpha] = v;
        }
    }
}
