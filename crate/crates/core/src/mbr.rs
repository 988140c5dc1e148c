// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Product-matrix minimum-bandwidth regenerating (MBR) code, one stripe at a time.
//!
//! The `L = k*alpha - k(k-1)/2` message symbols of a stripe are laid out in a
//! symmetric `alpha x alpha` matrix
//!
//! ```text
//!     M = | U   V |      U: k x k symmetric
//!         | V^T 0 |      V: k x (alpha - k)
//! ```
//!
//! and node `i` stores `psi_i^T M` where `psi_i = [1, g_i, g_i^2, ...]` is the
//! Vandermonde row of its coefficient `g_i`. Because `M` is symmetric, a helper
//! holding `psi_j^T M` can compute `psi_j^T M psi_i` for any target without
//! knowing `M`, and those values are evaluations of the polynomial whose
//! coefficients are `M psi_i`. Repair and reconstruction are therefore
//! Reed-Solomon decodes, which is what makes them tolerate `p` liars when
//! `2p` extra nodes are contacted.

use thiserror::Error;

use crate::field::{Field, FieldError, Symbol};
use crate::rs::{self, DecodeError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MbrError {
    #[error("invalid code parameters: {0}")]
    InvalidParams(String),
    #[error("message has {got} symbols, expected {expected}")]
    MessageLength { expected: usize, got: usize },
    #[error("node row has {got} symbols, expected {expected}")]
    RowLength { expected: usize, got: usize },
    #[error("a node cannot serve a repair share to itself (gamma {0})")]
    SelfRepair(Symbol),
    #[error("coefficient {0} appears more than once")]
    DuplicateGamma(Symbol),
    #[error("expected {expected} inputs, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("repair failed: error budget exceeded")]
    RepairFailed,
    #[error("reconstruction failed: error budget exceeded")]
    ReconstructionFailed,
    #[error("message matrix integrity violated: {0}")]
    Integrity(&'static str),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Decode(DecodeError),
}

/// Code parameters. `d = alpha` and `beta = 1` throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MbrParams {
    k: usize,
    alpha: usize,
    n: usize,
    p: usize,
}

impl MbrParams {
    /// `k`: reconstruction threshold, `alpha`: symbols per node (= repair
    /// degree), `n`: nodes, `p`: malicious nodes tolerated by decoding.
    pub fn new(k: usize, alpha: usize, n: usize, p: usize) -> Result<Self, MbrError> {
        if k == 0 {
            return Err(MbrError::InvalidParams("k must be at least 1".into()));
        }
        if k > alpha {
            return Err(MbrError::InvalidParams(format!(
                "k = {k} exceeds alpha = {alpha}"
            )));
        }
        if alpha + 2 * p > n.saturating_sub(1) {
            return Err(MbrError::InvalidParams(format!(
                "repair degree alpha + 2p = {} needs at least {} nodes, have {n}",
                alpha + 2 * p,
                alpha + 2 * p + 1
            )));
        }
        if k + 2 * p > n {
            return Err(MbrError::InvalidParams(format!(
                "reconstruction degree k + 2p = {} exceeds n = {n}",
                k + 2 * p
            )));
        }
        Ok(Self { k, alpha, n, p })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Message symbols per stripe, `k*alpha - k(k-1)/2`.
    pub fn message_len(&self) -> usize {
        message_len(self.k, self.alpha)
    }

    /// Helpers contacted for a repair, `alpha + 2p`.
    pub fn repair_degree(&self) -> usize {
        self.alpha + 2 * self.p
    }

    /// Nodes contacted for a reconstruction, `k + 2p`.
    pub fn reconstruct_degree(&self) -> usize {
        self.k + 2 * self.p
    }
}

pub fn message_len(k: usize, alpha: usize) -> usize {
    k * alpha - k * (k.saturating_sub(1)) / 2
}

/// Symmetric message matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageMatrix {
    alpha: usize,
    entries: Vec<Symbol>,
}

impl MessageMatrix {
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn get(&self, row: usize, col: usize) -> Symbol {
        self.entries[row * self.alpha + col]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Symbol]> {
        self.entries.chunks(self.alpha)
    }

    /// Wrap raw entries without checking the structure. Used to feed tests and
    /// adversaries; [`MbrCode::extract_message`] performs the checks.
    pub fn from_entries(alpha: usize, entries: Vec<Symbol>) -> Self {
        assert_eq!(entries.len(), alpha * alpha);
        Self { alpha, entries }
    }

    fn set_symmetric(&mut self, row: usize, col: usize, value: Symbol) {
        self.entries[row * self.alpha + col] = value;
        self.entries[col * self.alpha + row] = value;
    }
}

/// One node's contents for one stripe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeRow {
    pub gamma: Symbol,
    pub symbols: Vec<Symbol>,
}

/// The code for one parameter set over one field.
#[derive(Debug, Clone)]
pub struct MbrCode {
    field: Field,
    params: MbrParams,
}

impl MbrCode {
    pub fn new(field: Field, params: MbrParams) -> Result<Self, MbrError> {
        if (field.order() as usize) < params.n {
            return Err(MbrError::InvalidParams(format!(
                "field order {} is smaller than n = {}",
                field.order(),
                params.n
            )));
        }
        Ok(Self { field, params })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn params(&self) -> &MbrParams {
        &self.params
    }

    /// Lay out `msg` as `[[U, V], [V^T, 0]]`: the upper triangle of `U`
    /// row-major first, then `V` row-major.
    pub fn build_message_matrix(&self, msg: &[Symbol]) -> Result<MessageMatrix, MbrError> {
        let (k, alpha) = (self.params.k, self.params.alpha);
        let expected = self.params.message_len();
        if msg.len() != expected {
            return Err(MbrError::MessageLength {
                expected,
                got: msg.len(),
            });
        }
        if let Some(&bad) = msg.iter().find(|&&s| !self.field.contains(s as u64)) {
            return Err(FieldError::OutOfRange {
                value: bad as u64,
                order: self.field.order(),
            }
            .into());
        }
        let mut m = MessageMatrix {
            alpha,
            entries: vec![0; alpha * alpha],
        };
        let mut it = msg.iter().copied();
        for r in 0..k {
            for c in r..k {
                m.set_symmetric(r, c, it.next().unwrap());
            }
        }
        for r in 0..k {
            for c in k..alpha {
                m.set_symmetric(r, c, it.next().unwrap());
            }
        }
        Ok(m)
    }

    /// Inverse of [`build_message_matrix`](Self::build_message_matrix).
    pub fn extract_message(&self, m: &MessageMatrix) -> Result<Vec<Symbol>, MbrError> {
        let (k, alpha) = (self.params.k, self.params.alpha);
        if m.alpha != alpha {
            return Err(MbrError::Integrity("matrix dimension does not match alpha"));
        }
        for r in 0..alpha {
            for c in (r + 1)..alpha {
                if m.get(r, c) != m.get(c, r) {
                    return Err(MbrError::Integrity("matrix is not symmetric"));
                }
            }
        }
        for r in k..alpha {
            for c in k..alpha {
                if m.get(r, c) != 0 {
                    return Err(MbrError::Integrity("bottom-right block is not zero"));
                }
            }
        }
        let mut msg = Vec::with_capacity(self.params.message_len());
        for r in 0..k {
            for c in r..k {
                msg.push(m.get(r, c));
            }
        }
        for r in 0..k {
            for c in k..alpha {
                msg.push(m.get(r, c));
            }
        }
        Ok(msg)
    }

    /// Vandermonde row `psi` of a node coefficient.
    pub fn psi(&self, gamma: Symbol) -> Vec<Symbol> {
        self.field.vandermonde_row(gamma, self.params.alpha)
    }

    /// `psi^T M` for node `gamma`.
    pub fn encode_node(&self, m: &MessageMatrix, gamma: Symbol) -> NodeRow {
        let psi = self.psi(gamma);
        NodeRow {
            gamma,
            symbols: self.encode_with_psi(m, &psi),
        }
    }

    /// Same as [`encode_node`](Self::encode_node) with a precomputed `psi`;
    /// performs exactly `alpha^2` multiplications.
    pub fn encode_with_psi(&self, m: &MessageMatrix, psi: &[Symbol]) -> Vec<Symbol> {
        self.encode_counted(m, psi, &mut |a, b| self.field.mul(a, b))
    }

    /// `encode_node` with a multiplication counter, returning the count.
    pub fn encode_node_instrumented(&self, m: &MessageMatrix, gamma: Symbol) -> (NodeRow, u64) {
        let psi = self.psi(gamma);
        let mut count = 0u64;
        let symbols = self.encode_counted(m, &psi, &mut |a, b| {
            count += 1;
            self.field.mul(a, b)
        });
        (NodeRow { gamma, symbols }, count)
    }

    fn encode_counted(
        &self,
        m: &MessageMatrix,
        psi: &[Symbol],
        mul: &mut dyn FnMut(Symbol, Symbol) -> Symbol,
    ) -> Vec<Symbol> {
        let alpha = self.params.alpha;
        let mut out = vec![0; alpha];
        for (i, row) in m.rows().enumerate() {
            for (o, &entry) in out.iter_mut().zip(row) {
                *o = self.field.add(*o, mul(psi[i], entry));
            }
        }
        out
    }

    /// The helper's repair symbol for a target: `psi_j^T M psi_i`, computed
    /// from the helper's stored row alone.
    pub fn repair_share(&self, helper: &NodeRow, target_gamma: Symbol) -> Result<Symbol, MbrError> {
        if helper.gamma == target_gamma {
            return Err(MbrError::SelfRepair(target_gamma));
        }
        self.check_row(helper)?;
        Ok(self.field.dot(&helper.symbols, &self.psi(target_gamma)))
    }

    /// Rebuild the target's row from `alpha + 2p` helper shares of which at
    /// most `p` are wrong.
    pub fn secure_repair(
        &self,
        shares: &[(Symbol, Symbol)],
        target_gamma: Symbol,
    ) -> Result<NodeRow, MbrError> {
        Ok(self.secure_repair_detailed(shares, target_gamma)?.0)
    }

    /// [`secure_repair`](Self::secure_repair) that also returns the indices of
    /// shares the decoder identified as wrong.
    pub fn secure_repair_detailed(
        &self,
        shares: &[(Symbol, Symbol)],
        target_gamma: Symbol,
    ) -> Result<(NodeRow, Vec<usize>), MbrError> {
        let expected = self.params.repair_degree();
        if shares.len() != expected {
            return Err(MbrError::WrongCount {
                expected,
                got: shares.len(),
            });
        }
        if shares.iter().any(|s| s.0 == target_gamma) {
            return Err(MbrError::SelfRepair(target_gamma));
        }
        match rs::decode(&self.field, shares, self.params.alpha) {
            // The decoded coefficients are M psi_i; by symmetry that is psi_i^T M.
            Ok(d) => Ok((
                NodeRow {
                    gamma: target_gamma,
                    symbols: d.coefficients,
                },
                d.error_positions,
            )),
            Err(DecodeError::DuplicatePoint(g)) => Err(MbrError::DuplicateGamma(g)),
            Err(DecodeError::TooManyErrors { .. }) => Err(MbrError::RepairFailed),
            Err(e) => Err(MbrError::Decode(e)),
        }
    }

    /// Recover the message from `k + 2p` full rows, at most `p` of them wrong.
    pub fn secure_reconstruct(&self, rows: &[NodeRow]) -> Result<Vec<Symbol>, MbrError> {
        Ok(self.secure_reconstruct_detailed(rows)?.0)
    }

    /// [`secure_reconstruct`](Self::secure_reconstruct) that also returns the
    /// sorted indices of every row found wrong in some column.
    ///
    /// With `Phi` the first `k` Vandermonde columns and `Delta` the remaining
    /// `alpha - k`, row `j` reads `[phi_j^T U + delta_j^T V^T, phi_j^T V]`.
    /// Each column of `V` is a dimension-`k` codeword over the rows; once `V`
    /// is known, subtracting `delta_j^T V^T` leaves `phi_j^T U`, whose columns
    /// are decoded the same way.
    pub fn secure_reconstruct_detailed(
        &self,
        rows: &[NodeRow],
    ) -> Result<(Vec<Symbol>, Vec<usize>), MbrError> {
        let (k, alpha) = (self.params.k, self.params.alpha);
        let expected = self.params.reconstruct_degree();
        if rows.len() != expected {
            return Err(MbrError::WrongCount {
                expected,
                got: rows.len(),
            });
        }
        for row in rows {
            self.check_row(row)?;
        }
        let f = &self.field;
        let mut bad = Vec::new();
        let decode_column = |values: Vec<(Symbol, Symbol)>, bad: &mut Vec<usize>| {
            match rs::decode(f, &values, k) {
                Ok(d) => {
                    bad.extend(d.error_positions);
                    Ok(d.coefficients)
                }
                Err(DecodeError::DuplicatePoint(g)) => Err(MbrError::DuplicateGamma(g)),
                Err(DecodeError::TooManyErrors { .. }) => Err(MbrError::ReconstructionFailed),
                Err(e) => Err(MbrError::Decode(e)),
            }
        };

        // v_cols[c] = column c of V (length k).
        let mut v_cols = Vec::with_capacity(alpha - k);
        for c in k..alpha {
            let values = rows.iter().map(|r| (r.gamma, r.symbols[c])).collect();
            v_cols.push(decode_column(values, &mut bad)?);
        }

        let psis: Vec<Vec<Symbol>> = rows.iter().map(|r| self.psi(r.gamma)).collect();
        let mut u_cols = Vec::with_capacity(k);
        for c in 0..k {
            let values = rows
                .iter()
                .zip(&psis)
                .map(|(r, psi)| {
                    // delta_j^T (V^T)[:, c] = sum_i psi[k + i] * V[c][i]
                    let v_contrib = (0..alpha - k)
                        .fold(0, |acc, i| f.add(acc, f.mul(psi[k + i], v_cols[i][c])));
                    (r.gamma, f.sub(r.symbols[c], v_contrib))
                })
                .collect();
            u_cols.push(decode_column(values, &mut bad)?);
        }

        let mut entries = vec![0; alpha * alpha];
        for r in 0..k {
            for c in 0..k {
                entries[r * alpha + c] = u_cols[c][r];
            }
            for c in k..alpha {
                let v = v_cols[c - k][r];
                entries[r * alpha + c] = v;
                entries[c * alpha + r] = v;
            }
        }
        let matrix = MessageMatrix { alpha, entries };
        let msg = self.extract_message(&matrix)?;
        bad.sort_unstable();
        bad.dedup();
        Ok((msg, bad))
    }

    fn check_row(&self, row: &NodeRow) -> Result<(), MbrError> {
        if row.symbols.len() != self.params.alpha {
            return Err(MbrError::RowLength {
                expected: self.params.alpha,
                got: row.symbols.len(),
            });
        }
        Ok(())
    }
}
