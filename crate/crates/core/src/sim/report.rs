// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation output: per-epoch records, per-bootstrap records and a final
//! measured-versus-analytic table.

use std::fmt::{self, Write as _};

use super::config::SimConfig;
use super::network::NodeId;
use crate::field::Symbol;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BootstrapOutcome {
    /// Rebuilt state equals direct encoding.
    Ok,
    /// Decoder reported too many wrong shares.
    Failed,
    /// Decoder returned a state that differs from direct encoding.
    SilentCorruption,
}

impl fmt::Display for BootstrapOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BootstrapOutcome::Ok => "ok",
            BootstrapOutcome::Failed => "failed",
            BootstrapOutcome::SilentCorruption => "silent-corruption",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootstrapRecord {
    pub epoch: u32,
    pub node: NodeId,
    pub shard: usize,
    pub gamma: Symbol,
    pub generation: u32,
    pub helpers: Vec<NodeId>,
    pub malicious_helpers: usize,
    pub flagged: usize,
    /// Share files as sent, headers included.
    pub wire_bytes: usize,
    /// Symbol payload only.
    pub payload_bytes: usize,
    pub outcome: BootstrapOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: u32,
    pub randomness: u64,
    pub joins: usize,
    pub leaves: usize,
    /// Existing nodes that changed shard.
    pub moved: usize,
    pub generations: Vec<u32>,
    pub storage_min: usize,
    pub storage_max: usize,
    /// `generations * (alpha * coded block bytes + header)` for shard 0.
    pub storage_expected: usize,
    pub bootstraps_ok: usize,
    pub bootstraps_failed: usize,
    pub bootstrap_wire_bytes: usize,
    pub bootstrap_payload_bytes: usize,
    /// Nodes that bootstrapped at least one generation this epoch.
    pub bootstrapped_nodes: usize,
    pub shard_sizes: Vec<usize>,
    pub malicious: Vec<usize>,
    pub balance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub config: SimConfig,
    pub message_len: usize,
    pub epochs: Vec<EpochRecord>,
    pub bootstraps: Vec<BootstrapRecord>,
    pub breaches: Vec<String>,
    pub warnings: Vec<String>,
}

impl SimReport {
    pub fn bootstrap_failures(&self) -> usize {
        self.bootstraps
            .iter()
            .filter(|b| b.outcome != BootstrapOutcome::Ok)
            .count()
    }

    pub fn bootstrap_successes(&self) -> usize {
        self.bootstraps.len() - self.bootstrap_failures()
    }

    /// Mean payload bytes per bootstrapped generation.
    pub fn mean_bootstrap_payload(&self) -> Option<f64> {
        let ok: Vec<&BootstrapRecord> = self
            .bootstraps
            .iter()
            .filter(|b| b.outcome == BootstrapOutcome::Ok)
            .collect();
        if ok.is_empty() {
            return None;
        }
        Some(ok.iter().map(|b| b.payload_bytes).sum::<usize>() as f64 / ok.len() as f64)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let c = &self.config;
        let _ = writeln!(out, "# srb simulation report");
        let _ = writeln!(out, "config {}", c.effective_line());
        let _ = writeln!(out, "derived L={} n_S={} field={}", self.message_len, c.shard_size(), c.field());
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "epoch={} randomness={:016x} joins={} leaves={} moved={} generations={} storage_min={} storage_max={} storage_expected={} bootstraps_ok={} bootstraps_failed={} bootstrap_wire_bytes={} bootstrap_payload_bytes={} bootstrapped_nodes={} shard_sizes={} malicious={} balance={:.4}",
                e.epoch,
                e.randomness,
                e.joins,
                e.leaves,
                e.moved,
                join(&e.generations),
                e.storage_min,
                e.storage_max,
                e.storage_expected,
                e.bootstraps_ok,
                e.bootstraps_failed,
                e.bootstrap_wire_bytes,
                e.bootstrap_payload_bytes,
                e.bootstrapped_nodes,
                join(&e.shard_sizes),
                join(&e.malicious),
                e.balance
            );
        }
        for b in &self.bootstraps {
            let _ = writeln!(
                out,
                "bootstrap epoch={} node={} shard={} gamma={} generation={} helpers={} malicious_helpers={} flagged={} wire_bytes={} payload_bytes={} outcome={}",
                b.epoch,
                b.node,
                b.shard,
                b.gamma,
                b.generation,
                join(&b.helpers),
                b.malicious_helpers,
                b.flagged,
                b.wire_bytes,
                b.payload_bytes,
                b.outcome
            );
        }
        out += &self.comparison_table();
        for w in &self.warnings {
            let _ = writeln!(out, "warning {w}");
        }
        for b in &self.breaches {
            let _ = writeln!(out, "breach {b}");
        }
        let _ = writeln!(
            out,
            "summary bootstraps={} ok={} failed={} breaches={}",
            self.bootstraps.len(),
            self.bootstrap_successes(),
            self.bootstrap_failures(),
            self.breaches.len()
        );
        out
    }

    fn comparison_table(&self) -> String {
        let c = &self.config;
        let block = c.block_size as f64;
        let mut out = String::new();
        let _ = writeln!(out, "{:<34}| {:>14}| {:>14}", "metric", "measured", "analytic");
        let mut row = |name: &str, measured: String, analytic: String| {
            let _ = writeln!(out, "{name:<34}| {measured:>14}| {analytic:>14}");
        };
        if let Some(last) = self.epochs.last() {
            let gens = last.generations.first().copied().unwrap_or(0) as f64;
            if gens > 0.0 {
                let header = last.storage_expected as f64 / gens - c.alpha as f64 * coded_block(c);
                let payload = last.storage_max as f64 - gens * header;
                row(
                    "storage/node/generation (blocks)",
                    format!("{:.4}", payload / gens / block),
                    format!("{}", c.alpha),
                );
                row(
                    "storage overhead n_S*alpha/L",
                    format!(
                        "{:.4}",
                        last.shard_sizes[0] as f64 * payload / gens / block / self.message_len as f64
                    ),
                    format!(
                        "{:.4}",
                        last.shard_sizes[0] as f64 * c.alpha as f64 / self.message_len as f64
                    ),
                );
                row("header bytes/generation", format!("{header:.0}"), "-".into());
            }
        }
        match self.mean_bootstrap_payload() {
            Some(mean) => {
                row(
                    "bootstrap/generation (blocks)",
                    format!("{:.4}", mean / block),
                    format!("{}", c.alpha + 2 * c.p),
                );
                row(
                    "bootstrap, honest helpers (blocks)",
                    "-".into(),
                    format!("{}", c.alpha),
                );
            }
            None => row("bootstrap/generation (blocks)", "n/a".into(), format!("{}", c.alpha + 2 * c.p)),
        }
        row(
            "full-ledger download (blocks)",
            "-".into(),
            format!("{}", self.message_len),
        );
        out
    }
}

fn coded_block(c: &SimConfig) -> f64 {
    let f = c.field();
    (c.block_size as usize).div_ceil(f.data_bytes()) as f64 * f.symbol_bytes() as f64
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    let parts: Vec<String> = items.iter().map(|i| i.to_string()).collect();
    parts.join(",")
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}
