// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Secure regenerating-code storage for sharded ledgers.
//!
//! Each shard stripes its blocks into field symbols and stores them with a
//! product-matrix MBR code: every node keeps `alpha` coded blocks instead of
//! the full ledger, a joining node is bootstrapped by downloading one coded
//! block from each of `alpha + 2p` peers, and any `k + 2p` nodes can rebuild
//! the original blocks, all while up to `p` of the contacted nodes lie.
//!
//! - [`field`]: arithmetic in `GF(q)` and `GF(2^m)`.
//! - [`rs`]: Reed-Solomon error decoding at arbitrary evaluation points.
//! - [`mbr`]: the per-stripe code (encode, repair shares, secure repair and
//!   reconstruction).
//! - [`codec`]: block striping, coded node state, repair shares and their
//!   binary file formats.
//! - [`sim`]: a seeded shard simulator with Cuckoo-rule churn and Byzantine
//!   helpers.
//! - [`analytics`]: closed-form storage, bootstrap, security and throughput
//!   comparisons against full replication and fountain-code sharding.
//! - [`cli`]: the `srb` command-line front end.

pub mod analytics;
pub mod cli;
pub mod codec;
pub mod field;
pub mod mbr;
pub mod rs;
pub mod sim;

pub use field::{Field, FieldSpec, Symbol};
pub use mbr::{MbrCode, MbrParams, NodeRow};
