// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Block-level encoding, repair and reconstruction.
//!
//! A generation of `L` raw blocks is striped into field symbols; stripe `s` of
//! every block forms one message matrix, and the per-stripe code outputs are
//! merged back into `alpha` coded blocks per node. Repair shares and
//! reconstruction work stripe by stripe, with one extra rule across stripes:
//! a malicious peer corrupts whole shares, so the positions flagged as wrong in
//! any stripe must together stay within the `p` budget.
//!
//! # File formats
//!
//! Integers in headers are little-endian; symbols are big-endian and
//! `ceil(log2(q) / 8)` bytes wide.
//!
//! ```text
//! node state:   "SRB1" | version u16 | field kind u8 | field parameter u32
//!               | k u16 | alpha u16 | gamma u32 | generation u32
//!               | block_size u32 | Z u32 | L u32 | L x pad length u32
//!               | alpha x Z symbols (coded block 0 first)
//! repair share: same header with the helper's gamma, no payload
//!               | target gamma u32 | Z symbols
//! ```

use std::fmt;

use thiserror::Error;

use crate::field::{Field, FieldError, FieldSpec, Symbol};
use crate::mbr::{self, MbrCode, MbrError, MbrParams, NodeRow};

pub const MAGIC: [u8; 4] = *b"SRB1";
pub const FORMAT_VERSION: u16 = 1;

/// Fixed part of the header, before the pad-length table.
pub const FIXED_HEADER_LEN: usize = 4 + 2 + 1 + 4 + 2 + 2 + 4 + 4 + 4 + 4 + 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("block {index} has {len} bytes, more than the block size {block_size}")]
    BlockTooLarge {
        index: usize,
        len: usize,
        block_size: u32,
    },
    #[error("block {index} byte {offset} has value {value}, which is not an element of {field}")]
    ByteOutsideField {
        index: usize,
        offset: usize,
        value: u32,
        field: FieldSpec,
    },
    #[error("a generation needs exactly {expected} blocks, got {got}")]
    WrongBlockCount { expected: usize, got: usize },
    #[error("expected {expected} inputs, got {got}")]
    WrongInputCount { expected: usize, got: usize },
    #[error("block size must be positive")]
    ZeroBlockSize,
    #[error("header mismatch: {0}")]
    HeaderMismatch(String),
    #[error("malformed data: {0}")]
    Malformed(String),
    #[error("repair failed: error budget exceeded ({flagged} peers flagged, budget {budget})")]
    RepairFailed { flagged: usize, budget: usize },
    #[error("reconstruction failed: error budget exceeded ({flagged} nodes flagged, budget {budget})")]
    ReconstructionFailed { flagged: usize, budget: usize },
    #[error(transparent)]
    Mbr(#[from] MbrError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl CodecError {
    /// True for errors meaning "more liars than the decoding budget".
    pub fn is_decode_failure(&self) -> bool {
        matches!(
            self,
            CodecError::RepairFailed { .. }
                | CodecError::ReconstructionFailed { .. }
                | CodecError::Mbr(MbrError::RepairFailed)
                | CodecError::Mbr(MbrError::ReconstructionFailed)
                | CodecError::Mbr(MbrError::Integrity(_))
        )
    }
}

/// `L` blocks cut into `Z` field symbols each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StripeSet {
    pub field: FieldSpec,
    pub block_size: u32,
    /// `symbols[block][stripe]`.
    pub symbols: Vec<Vec<Symbol>>,
    pub pad_lengths: Vec<u32>,
}

impl StripeSet {
    pub fn stripes(&self) -> usize {
        stripe_count(self.field, self.block_size)
    }
}

/// `Z = ceil(block_size / data bytes per symbol)`.
pub fn stripe_count(field: FieldSpec, block_size: u32) -> usize {
    (block_size as usize).div_ceil(field.data_bytes())
}

/// Split blocks into big-endian symbols, zero-padding each to `block_size`.
pub fn stripe_blocks<B: AsRef<[u8]>>(
    blocks: &[B],
    field: FieldSpec,
    block_size: u32,
) -> Result<StripeSet, CodecError> {
    if block_size == 0 {
        return Err(CodecError::ZeroBlockSize);
    }
    let width = field.data_bytes();
    let z = stripe_count(field, block_size);
    let order = field.order();
    let mut symbols = Vec::with_capacity(blocks.len());
    let mut pad_lengths = Vec::with_capacity(blocks.len());
    for (index, block) in blocks.iter().enumerate() {
        let bytes = block.as_ref();
        if bytes.len() > block_size as usize {
            return Err(CodecError::BlockTooLarge {
                index,
                len: bytes.len(),
                block_size,
            });
        }
        let mut row = Vec::with_capacity(z);
        for s in 0..z {
            let mut v: u32 = 0;
            for b in 0..width {
                let byte = bytes.get(s * width + b).copied().unwrap_or(0);
                v = v << 8 | byte as u32;
            }
            if v >= order {
                return Err(CodecError::ByteOutsideField {
                    index,
                    offset: s * width,
                    value: v,
                    field,
                });
            }
            row.push(v);
        }
        symbols.push(row);
        pad_lengths.push(bytes.len() as u32);
    }
    Ok(StripeSet {
        field,
        block_size,
        symbols,
        pad_lengths,
    })
}

/// Inverse of [`stripe_blocks`].
pub fn unstripe_blocks(stripes: &StripeSet) -> Result<Vec<Vec<u8>>, CodecError> {
    let width = stripes.field.data_bytes();
    let limit = 1u64 << (8 * width);
    stripes
        .symbols
        .iter()
        .zip(&stripes.pad_lengths)
        .map(|(row, &len)| {
            let mut bytes = Vec::with_capacity(row.len() * width);
            for &sym in row {
                if sym as u64 >= limit {
                    return Err(CodecError::Malformed(format!(
                        "symbol {sym} does not fit in {width} data byte(s)"
                    )));
                }
                bytes.extend_from_slice(&sym.to_be_bytes()[4 - width..]);
            }
            if len as usize > bytes.len() {
                return Err(CodecError::Malformed(format!(
                    "pad length {len} exceeds striped length {}",
                    bytes.len()
                )));
            }
            bytes.truncate(len as usize);
            Ok(bytes)
        })
        .collect()
}

/// Window of `L` consecutive blocks encoded as one code instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Generation {
    pub index: u32,
    pub message_len: usize,
}

impl Generation {
    /// One-based inclusive block range `[g*L + 1, (g+1)*L]`.
    pub fn block_range(&self) -> (u64, u64) {
        let l = self.message_len as u64;
        let g = self.index as u64;
        (g * l + 1, (g + 1) * l)
    }
}

/// Everything in a file header except the node coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerationHeader {
    pub field: FieldSpec,
    pub k: u16,
    pub alpha: u16,
    pub generation: u32,
    pub block_size: u32,
    pub stripes: u32,
    pub pad_lengths: Vec<u32>,
}

impl GenerationHeader {
    pub fn message_len(&self) -> usize {
        self.pad_lengths.len()
    }

    /// Encoded header length including the pad table.
    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER_LEN + 4 * self.pad_lengths.len()
    }

    fn write(&self, gamma: Symbol, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.field.kind().tag());
        out.extend_from_slice(&self.field.parameter().to_le_bytes());
        out.extend_from_slice(&self.k.to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        out.extend_from_slice(&gamma.to_le_bytes());
        out.extend_from_slice(&self.generation.to_le_bytes());
        out.extend_from_slice(&self.block_size.to_le_bytes());
        out.extend_from_slice(&self.stripes.to_le_bytes());
        out.extend_from_slice(&(self.pad_lengths.len() as u32).to_le_bytes());
        for pad in &self.pad_lengths {
            out.extend_from_slice(&pad.to_le_bytes());
        }
    }

    fn read(r: &mut Reader<'_>) -> Result<(Self, Symbol), CodecError> {
        if r.take(4)? != MAGIC {
            return Err(CodecError::Malformed("bad magic".into()));
        }
        let version = r.u16()?;
        if version != FORMAT_VERSION {
            return Err(CodecError::Malformed(format!(
                "unsupported format version {version}"
            )));
        }
        let kind = r.u8()?;
        let parameter = r.u32()?;
        let field = FieldSpec::from_parts(kind, parameter)?;
        let k = r.u16()?;
        let alpha = r.u16()?;
        let gamma = r.u32()?;
        let generation = r.u32()?;
        let block_size = r.u32()?;
        let stripes = r.u32()?;
        let l = r.u32()? as usize;
        if k == 0 || k > alpha {
            return Err(CodecError::Malformed(format!("invalid k = {k}, alpha = {alpha}")));
        }
        if l != mbr::message_len(k as usize, alpha as usize) {
            return Err(CodecError::Malformed(format!(
                "L = {l} does not match k = {k}, alpha = {alpha}"
            )));
        }
        if block_size == 0 || stripes as usize != stripe_count(field, block_size) {
            return Err(CodecError::Malformed(format!(
                "Z = {stripes} does not match block size {block_size}"
            )));
        }
        if gamma >= field.order() {
            return Err(CodecError::Malformed(format!("gamma {gamma} outside {field}")));
        }
        let mut pad_lengths = Vec::with_capacity(l.min(r.remaining() / 4));
        for _ in 0..l {
            let pad = r.u32()?;
            if pad > block_size {
                return Err(CodecError::Malformed(format!(
                    "pad length {pad} exceeds block size {block_size}"
                )));
            }
            pad_lengths.push(pad);
        }
        Ok((
            Self {
                field,
                k,
                alpha,
                generation,
                block_size,
                stripes,
                pad_lengths,
            },
            gamma,
        ))
    }
}

/// One node's stored data for one generation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedNodeState {
    pub header: GenerationHeader,
    pub gamma: Symbol,
    /// `blocks[j][s]`: coded block `j`, stripe `s`.
    pub blocks: Vec<Vec<Symbol>>,
}

impl CodedNodeState {
    pub fn encoded_len(&self) -> usize {
        self.header.encoded_len()
            + self.header.alpha as usize
                * self.header.stripes as usize
                * self.header.field.symbol_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.header.write(self.gamma, &mut out);
        let width = self.header.field.symbol_bytes();
        for block in &self.blocks {
            write_symbols(block, width, &mut out);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let (header, gamma) = GenerationHeader::read(&mut r)?;
        let blocks = (0..header.alpha)
            .map(|_| read_symbols(&mut r, &header))
            .collect::<Result<_, _>>()?;
        r.finish()?;
        Ok(Self {
            header,
            gamma,
            blocks,
        })
    }

    /// The node's row for one stripe.
    pub fn row(&self, stripe: usize) -> NodeRow {
        NodeRow {
            gamma: self.gamma,
            symbols: self.blocks.iter().map(|b| b[stripe]).collect(),
        }
    }
}

/// One helper's contribution to a bootstrap: one coded block for the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairShare {
    pub header: GenerationHeader,
    pub helper_gamma: Symbol,
    pub target_gamma: Symbol,
    pub symbols: Vec<Symbol>,
}

impl RepairShare {
    pub fn encoded_len(&self) -> usize {
        self.header.encoded_len() + 4 + self.symbols.len() * self.header.field.symbol_bytes()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.header.write(self.helper_gamma, &mut out);
        out.extend_from_slice(&self.target_gamma.to_le_bytes());
        write_symbols(&self.symbols, self.header.field.symbol_bytes(), &mut out);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader::new(bytes);
        let (header, helper_gamma) = GenerationHeader::read(&mut r)?;
        let target_gamma = r.u32()?;
        if target_gamma >= header.field.order() {
            return Err(CodecError::Malformed(format!(
                "target gamma {target_gamma} outside {}",
                header.field
            )));
        }
        let symbols = read_symbols(&mut r, &header)?;
        r.finish()?;
        Ok(Self {
            header,
            helper_gamma,
            target_gamma,
            symbols,
        })
    }
}

/// Result of [`BlockCodec::bootstrap_node`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bootstrap {
    pub state: CodedNodeState,
    /// Indices of shares the decoder found wrong in at least one stripe.
    pub flagged: Vec<usize>,
    /// Payload bytes received: `(alpha + 2p) * Z * symbol bytes`.
    pub payload_bytes: usize,
}

/// The MBR code applied to whole blocks of a fixed size.
#[derive(Debug, Clone)]
pub struct BlockCodec {
    code: MbrCode,
    block_size: u32,
}

impl BlockCodec {
    pub fn new(field: Field, params: MbrParams, block_size: u32) -> Result<Self, CodecError> {
        if block_size == 0 {
            return Err(CodecError::ZeroBlockSize);
        }
        if params.alpha() > u16::MAX as usize {
            return Err(CodecError::Malformed("alpha does not fit in u16".into()));
        }
        Ok(Self {
            code: MbrCode::new(field, params)?,
            block_size,
        })
    }

    pub fn code(&self) -> &MbrCode {
        &self.code
    }

    pub fn params(&self) -> &MbrParams {
        self.code.params()
    }

    pub fn field(&self) -> &Field {
        self.code.field()
    }

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    pub fn stripes(&self) -> usize {
        stripe_count(self.field().spec(), self.block_size)
    }

    /// Bytes of one coded block on disk or on the wire.
    pub fn coded_block_bytes(&self) -> usize {
        self.stripes() * self.field().spec().symbol_bytes()
    }

    pub fn stripe(&self, blocks: &[impl AsRef<[u8]>]) -> Result<StripeSet, CodecError> {
        let expected = self.params().message_len();
        if blocks.len() != expected {
            return Err(CodecError::WrongBlockCount {
                expected,
                got: blocks.len(),
            });
        }
        stripe_blocks(blocks, self.field().spec(), self.block_size)
    }

    /// Encode one generation for the node with coefficient `gamma`.
    pub fn encode_generation(
        &self,
        blocks: &[impl AsRef<[u8]>],
        gamma: Symbol,
        generation: u32,
    ) -> Result<CodedNodeState, CodecError> {
        let stripes = self.stripe(blocks)?;
        Ok(self
            .encode_stripes(&stripes, &[gamma], generation)?
            .pop()
            .unwrap())
    }

    /// Encode pre-striped blocks for several nodes, building each stripe's
    /// message matrix once.
    pub fn encode_stripes(
        &self,
        stripes: &StripeSet,
        gammas: &[Symbol],
        generation: u32,
    ) -> Result<Vec<CodedNodeState>, CodecError> {
        let header = self.header_for(stripes, generation)?;
        let alpha = self.params().alpha();
        let z = self.stripes();
        let psis: Vec<Vec<Symbol>> = gammas.iter().map(|&g| self.code.psi(g)).collect();
        let mut out: Vec<CodedNodeState> = gammas
            .iter()
            .map(|&gamma| {
                if !self.field().contains(gamma as u64) {
                    return Err(CodecError::Field(FieldError::OutOfRange {
                        value: gamma as u64,
                        order: self.field().order(),
                    }));
                }
                Ok(CodedNodeState {
                    header: header.clone(),
                    gamma,
                    blocks: vec![vec![0; z]; alpha],
                })
            })
            .collect::<Result<_, _>>()?;
        let mut msg = vec![0; self.params().message_len()];
        for s in 0..z {
            for (m, block) in msg.iter_mut().zip(&stripes.symbols) {
                *m = block[s];
            }
            let matrix = self.code.build_message_matrix(&msg)?;
            for (state, psi) in out.iter_mut().zip(&psis) {
                for (j, v) in self.code.encode_with_psi(&matrix, psi).into_iter().enumerate() {
                    state.blocks[j][s] = v;
                }
            }
        }
        Ok(out)
    }

    fn header_for(&self, stripes: &StripeSet, generation: u32) -> Result<GenerationHeader, CodecError> {
        let expected = self.params().message_len();
        if stripes.symbols.len() != expected {
            return Err(CodecError::WrongBlockCount {
                expected,
                got: stripes.symbols.len(),
            });
        }
        if stripes.field != self.field().spec() || stripes.block_size != self.block_size {
            return Err(CodecError::HeaderMismatch(
                "stripe set was built for a different field or block size".into(),
            ));
        }
        Ok(GenerationHeader {
            field: self.field().spec(),
            k: self.params().k() as u16,
            alpha: self.params().alpha() as u16,
            generation,
            block_size: self.block_size,
            stripes: self.stripes() as u32,
            pad_lengths: stripes.pad_lengths.clone(),
        })
    }

    fn check_header(&self, header: &GenerationHeader) -> Result<(), CodecError> {
        let p = self.params();
        if header.field != self.field().spec() {
            return Err(CodecError::HeaderMismatch(format!(
                "field {} differs from {}",
                header.field,
                self.field().spec()
            )));
        }
        if header.k as usize != p.k() || header.alpha as usize != p.alpha() {
            return Err(CodecError::HeaderMismatch(format!(
                "k = {}, alpha = {} differ from k = {}, alpha = {}",
                header.k,
                header.alpha,
                p.k(),
                p.alpha()
            )));
        }
        if header.block_size != self.block_size {
            return Err(CodecError::HeaderMismatch(format!(
                "block size {} differs from {}",
                header.block_size, self.block_size
            )));
        }
        Ok(())
    }

    /// The helper's share for `target_gamma`: per stripe, its stored row
    /// dotted with the target's Vandermonde row.
    pub fn serve_repair(
        &self,
        state: &CodedNodeState,
        target_gamma: Symbol,
    ) -> Result<RepairShare, CodecError> {
        self.check_header(&state.header)?;
        if state.gamma == target_gamma {
            return Err(MbrError::SelfRepair(target_gamma).into());
        }
        if !self.field().contains(target_gamma as u64) {
            return Err(FieldError::OutOfRange {
                value: target_gamma as u64,
                order: self.field().order(),
            }
            .into());
        }
        let f = self.field();
        let psi = self.code.psi(target_gamma);
        let z = self.stripes();
        let mut symbols = vec![0; z];
        for (block, &weight) in state.blocks.iter().zip(&psi) {
            for (acc, &v) in symbols.iter_mut().zip(block) {
                *acc = f.add(*acc, f.mul(v, weight));
            }
        }
        Ok(RepairShare {
            header: state.header.clone(),
            helper_gamma: state.gamma,
            target_gamma,
            symbols,
        })
    }

    /// Rebuild the target's state from `alpha + 2p` shares.
    pub fn bootstrap_node(
        &self,
        shares: &[RepairShare],
        target_gamma: Symbol,
    ) -> Result<Bootstrap, CodecError> {
        let p = self.params();
        let expected = p.repair_degree();
        if shares.len() != expected {
            return Err(CodecError::WrongInputCount {
                expected,
                got: shares.len(),
            });
        }
        let header = &shares[0].header;
        for share in shares {
            self.check_header(&share.header)?;
            if share.header != *header {
                return Err(CodecError::HeaderMismatch(
                    "shares disagree on generation or block layout".into(),
                ));
            }
            if share.target_gamma != target_gamma {
                return Err(CodecError::HeaderMismatch(format!(
                    "share for target {} offered to target {target_gamma}",
                    share.target_gamma
                )));
            }
            if share.symbols.len() != header.stripes as usize {
                return Err(CodecError::Malformed("share length differs from Z".into()));
            }
        }
        let z = header.stripes as usize;
        let mut blocks = vec![vec![0; z]; p.alpha()];
        let mut flagged = Vec::new();
        let mut points: Vec<(Symbol, Symbol)> =
            shares.iter().map(|s| (s.helper_gamma, 0)).collect();
        for s in 0..z {
            for (pt, share) in points.iter_mut().zip(shares) {
                pt.1 = share.symbols[s];
            }
            let (row, bad) = match self.code.secure_repair_detailed(&points, target_gamma) {
                Ok(r) => r,
                Err(MbrError::RepairFailed) => {
                    return Err(CodecError::RepairFailed {
                        flagged: expected,
                        budget: p.p(),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            merge_flags(&mut flagged, &bad);
            if flagged.len() > p.p() {
                return Err(CodecError::RepairFailed {
                    flagged: flagged.len(),
                    budget: p.p(),
                });
            }
            for (j, v) in row.symbols.into_iter().enumerate() {
                blocks[j][s] = v;
            }
        }
        Ok(Bootstrap {
            state: CodedNodeState {
                header: header.clone(),
                gamma: target_gamma,
                blocks,
            },
            flagged,
            payload_bytes: expected * z * self.field().spec().symbol_bytes(),
        })
    }

    /// Recover the generation's original blocks from `k + 2p` node states.
    pub fn reconstruct_generation(
        &self,
        states: &[CodedNodeState],
    ) -> Result<Vec<Vec<u8>>, CodecError> {
        let p = self.params();
        let expected = p.reconstruct_degree();
        if states.len() != expected {
            return Err(CodecError::WrongInputCount {
                expected,
                got: states.len(),
            });
        }
        let header = &states[0].header;
        for state in states {
            self.check_header(&state.header)?;
            if state.header != *header {
                return Err(CodecError::HeaderMismatch(
                    "states disagree on generation or block layout".into(),
                ));
            }
            if state.blocks.len() != p.alpha()
                || state.blocks.iter().any(|b| b.len() != header.stripes as usize)
            {
                return Err(CodecError::Malformed("state payload has the wrong shape".into()));
            }
        }
        let z = header.stripes as usize;
        let l = p.message_len();
        let mut symbols = vec![vec![0; z]; l];
        let mut flagged = Vec::new();
        for s in 0..z {
            let rows: Vec<NodeRow> = states.iter().map(|st| st.row(s)).collect();
            let (msg, bad) = match self.code.secure_reconstruct_detailed(&rows) {
                Ok(r) => r,
                Err(MbrError::ReconstructionFailed) => {
                    return Err(CodecError::ReconstructionFailed {
                        flagged: expected,
                        budget: p.p(),
                    })
                }
                Err(e) => return Err(e.into()),
            };
            merge_flags(&mut flagged, &bad);
            if flagged.len() > p.p() {
                return Err(CodecError::ReconstructionFailed {
                    flagged: flagged.len(),
                    budget: p.p(),
                });
            }
            for (b, v) in msg.into_iter().enumerate() {
                symbols[b][s] = v;
            }
        }
        unstripe_blocks(&StripeSet {
            field: header.field,
            block_size: header.block_size,
            symbols,
            pad_lengths: header.pad_lengths.clone(),
        })
    }
}

fn merge_flags(acc: &mut Vec<usize>, new: &[usize]) {
    for &i in new {
        if !acc.contains(&i) {
            acc.push(i);
        }
    }
    acc.sort_unstable();
}

fn write_symbols(symbols: &[Symbol], width: usize, out: &mut Vec<u8>) {
    for s in symbols {
        out.extend_from_slice(&s.to_be_bytes()[4 - width..]);
    }
}

fn read_symbols(r: &mut Reader<'_>, header: &GenerationHeader) -> Result<Vec<Symbol>, CodecError> {
    let width = header.field.symbol_bytes();
    let order = header.field.order();
    let raw = r.take(header.stripes as usize * width)?;
    raw.chunks(width)
        .map(|c| {
            let v = c.iter().fold(0u32, |acc, &b| acc << 8 | b as u32);
            if v >= order {
                Err(CodecError::Malformed(format!("symbol {v} outside {}", header.field)))
            } else {
                Ok(v)
            }
        })
        .collect()
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::Malformed(format!(
                "truncated: needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn finish(self) -> Result<(), CodecError> {
        if self.remaining() != 0 {
            return Err(CodecError::Malformed(format!(
                "{} trailing bytes",
                self.remaining()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for CodedNodeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node gamma={} generation={} field={} k={} alpha={} block_size={} Z={} L={}",
            self.gamma,
            self.header.generation,
            self.header.field,
            self.header.k,
            self.header.alpha,
            self.header.block_size,
            self.header.stripes,
            self.header.message_len()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gf13() -> Field {
        Field::new(FieldSpec::prime(13).unwrap())
    }

    fn random_blocks(rng: &mut impl Rng, l: usize, block_size: usize) -> Vec<Vec<u8>> {
        (0..l)
            .map(|_| {
                let len = rng.gen_range(0..=block_size);
                (0..len).map(|_| rng.gen()).collect()
            })
            .collect()
    }

    #[test]
    fn stripe_big_endian_packing() {
        let s = stripe_blocks(&[vec![0xAA, 0xBB, 0xCC, 0xDD]], FieldSpec::gf65536(), 4).unwrap();
        assert_eq!(s.symbols, vec![vec![0xAABB, 0xCCDD]]);
        assert_eq!(s.pad_lengths, vec![4]);
    }

    #[test]
    fn stripe_empty_block_is_padding() {
        let s = stripe_blocks(&[Vec::<u8>::new()], FieldSpec::gf65536(), 6).unwrap();
        assert_eq!(s.symbols, vec![vec![0, 0, 0]]);
        assert_eq!(s.pad_lengths, vec![0]);
        assert_eq!(unstripe_blocks(&s).unwrap(), vec![Vec::<u8>::new()]);
    }

    #[test]
    fn stripe_odd_block_size_and_single_symbol() {
        let s = stripe_blocks(&[vec![1, 2, 3]], FieldSpec::gf65536(), 3).unwrap();
        assert_eq!(s.symbols, vec![vec![0x0102, 0x0300]]);
        assert_eq!(unstripe_blocks(&s).unwrap(), vec![vec![1, 2, 3]]);
        let s = stripe_blocks(&[vec![9]], FieldSpec::prime(13).unwrap(), 1).unwrap();
        assert_eq!(s.symbols, vec![vec![9]]);
        assert_eq!(unstripe_blocks(&s).unwrap(), vec![vec![9]]);
    }

    #[test]
    fn stripe_errors() {
        assert!(matches!(
            stripe_blocks(&[vec![0; 5]], FieldSpec::gf65536(), 4),
            Err(CodecError::BlockTooLarge { .. })
        ));
        assert!(matches!(
            stripe_blocks(&[vec![13]], FieldSpec::prime(13).unwrap(), 1),
            Err(CodecError::ByteOutsideField { .. })
        ));
    }

    proptest! {
        #[test]
        fn stripe_round_trip(blocks in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..40), 1..6)) {
            for spec in [FieldSpec::gf65536(), FieldSpec::prime(257).unwrap()] {
                let s = stripe_blocks(&blocks, spec, 40).unwrap();
                prop_assert_eq!(unstripe_blocks(&s).unwrap(), blocks.clone());
            }
        }
    }

    fn example_codec() -> BlockCodec {
        BlockCodec::new(gf13(), MbrParams::new(3, 4, 6, 0).unwrap(), 1).unwrap()
    }

    #[test]
    fn encode_generation_matches_per_stripe_code() {
        let codec = example_codec();
        let blocks: Vec<Vec<u8>> = (1..=9).map(|b| vec![b]).collect();
        let m = codec
            .code()
            .build_message_matrix(&(1..=9).collect::<Vec<_>>())
            .unwrap();
        for gamma in 1..=5 {
            let st = codec.encode_generation(&blocks, gamma, 0).unwrap();
            assert_eq!(st.row(0), codec.code().encode_node(&m, gamma));
        }
    }

    #[test]
    fn zero_blocks_encode_to_zero() {
        let codec = example_codec();
        let st = codec.encode_generation(&vec![vec![0u8]; 9], 4, 0).unwrap();
        assert!(st.blocks.iter().flatten().all(|&v| v == 0));
        assert!(matches!(
            codec.encode_generation(&vec![vec![0u8]; 8], 4, 0),
            Err(CodecError::WrongBlockCount {
                expected: 9,
                got: 8
            })
        ));
    }

    #[test]
    fn stripes_encode_independently() {
        let field = Field::new(FieldSpec::prime(257).unwrap());
        let params = MbrParams::new(2, 3, 4, 0).unwrap();
        let two = BlockCodec::new(field.clone(), params, 2).unwrap();
        let one = BlockCodec::new(field, params, 1).unwrap();
        let blocks: Vec<Vec<u8>> = (0..5).map(|i| vec![i * 3 + 1, 200 - i]).collect();
        let first: Vec<Vec<u8>> = blocks.iter().map(|b| vec![b[0]]).collect();
        let second: Vec<Vec<u8>> = blocks.iter().map(|b| vec![b[1]]).collect();
        let full = two.encode_generation(&blocks, 7, 0).unwrap();
        let a = one.encode_generation(&first, 7, 0).unwrap();
        let b = one.encode_generation(&second, 7, 0).unwrap();
        for j in 0..3 {
            assert_eq!(full.blocks[j], vec![a.blocks[j][0], b.blocks[j][0]]);
        }
    }

    #[test]
    fn serve_repair_examples() {
        let field = gf13();
        let codec = BlockCodec::new(field, MbrParams::new(2, 3, 4, 0).unwrap(), 1).unwrap();
        let blocks: Vec<Vec<u8>> = (1..=5).map(|b| vec![b]).collect();
        let helper = codec.encode_generation(&blocks, 2, 0).unwrap();
        assert_eq!(codec.serve_repair(&helper, 3).unwrap().symbols, vec![10]);
        assert_eq!(
            codec.serve_repair(&helper, 0).unwrap().symbols,
            helper.blocks[0]
        );
        assert!(matches!(
            codec.serve_repair(&helper, 2),
            Err(CodecError::Mbr(MbrError::SelfRepair(2)))
        ));
    }

    #[test]
    fn serve_repair_two_stripes() {
        let field = Field::new(FieldSpec::prime(257).unwrap());
        let params = MbrParams::new(2, 3, 4, 0).unwrap();
        let two = BlockCodec::new(field.clone(), params, 2).unwrap();
        let one = BlockCodec::new(field, params, 1).unwrap();
        let blocks: Vec<Vec<u8>> = (0..5).map(|i| vec![i + 10, 90 + i]).collect();
        let full = two.serve_repair(&two.encode_generation(&blocks, 4, 0).unwrap(), 9).unwrap();
        for s in 0..2 {
            let part: Vec<Vec<u8>> = blocks.iter().map(|b| vec![b[s]]).collect();
            let share = one.serve_repair(&one.encode_generation(&part, 4, 0).unwrap(), 9).unwrap();
            assert_eq!(full.symbols[s], share.symbols[0]);
        }
    }

    #[test]
    fn five_node_bootstrap() {
        let codec = example_codec();
        let blocks: Vec<Vec<u8>> = (1..=9).map(|b| vec![b]).collect();
        let shares: Vec<RepairShare> = (2..=5)
            .map(|g| {
                let st = codec.encode_generation(&blocks, g, 0).unwrap();
                codec.serve_repair(&st, 6).unwrap()
            })
            .collect();
        let out = codec.bootstrap_node(&shares, 6).unwrap();
        assert_eq!(out.state, codec.encode_generation(&blocks, 6, 0).unwrap());
        assert_eq!(out.payload_bytes, 4);
        assert!(out.flagged.is_empty());
    }

    fn setup(
        seed: u64,
        k: usize,
        alpha: usize,
        p: usize,
        block_size: u32,
    ) -> (BlockCodec, Vec<Vec<u8>>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = MbrParams::new(k, alpha, alpha + 2 * p + 4, p).unwrap();
        let codec = BlockCodec::new(Field::gf65536(), params, block_size).unwrap();
        let blocks = random_blocks(&mut rng, params.message_len(), block_size as usize);
        (codec, blocks, rng)
    }

    #[test]
    fn bootstrap_with_zeroed_share() {
        let (codec, blocks, _) = setup(1, 3, 4, 1, 64);
        let mut shares: Vec<RepairShare> = (1..=6)
            .map(|g| {
                let st = codec.encode_generation(&blocks, g, 2).unwrap();
                codec.serve_repair(&st, 100).unwrap()
            })
            .collect();
        shares[3].symbols.iter_mut().for_each(|s| *s = 0);
        let out = codec.bootstrap_node(&shares, 100).unwrap();
        assert_eq!(out.state, codec.encode_generation(&blocks, 100, 2).unwrap());
        assert_eq!(out.flagged, vec![3]);
        assert_eq!(out.payload_bytes, 6 * 64);
    }

    #[test]
    fn bootstrap_over_budget_is_reported() {
        let (codec, blocks, mut rng) = setup(2, 3, 4, 1, 64);
        let mut shares: Vec<RepairShare> = (1..=6)
            .map(|g| {
                let st = codec.encode_generation(&blocks, g, 0).unwrap();
                codec.serve_repair(&st, 100).unwrap()
            })
            .collect();
        for i in [0, 4] {
            for s in shares[i].symbols.iter_mut() {
                *s ^= rng.gen_range(1..65536);
            }
        }
        let err = codec.bootstrap_node(&shares, 100).unwrap_err();
        assert!(err.is_decode_failure(), "{err}");
    }

    #[test]
    fn bootstrap_header_checks() {
        let (codec, blocks, _) = setup(3, 2, 3, 0, 16);
        let st1 = codec.encode_generation(&blocks, 1, 0).unwrap();
        let st2 = codec.encode_generation(&blocks, 2, 1).unwrap();
        let st3 = codec.encode_generation(&blocks, 3, 0).unwrap();
        let shares = vec![
            codec.serve_repair(&st1, 9).unwrap(),
            codec.serve_repair(&st2, 9).unwrap(),
            codec.serve_repair(&st3, 9).unwrap(),
        ];
        assert!(matches!(
            codec.bootstrap_node(&shares, 9),
            Err(CodecError::HeaderMismatch(_))
        ));
        assert!(matches!(
            codec.bootstrap_node(&shares[..2], 9),
            Err(CodecError::WrongInputCount { .. })
        ));
    }

    #[test]
    fn end_to_end_bootstrap_then_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let k = rng.gen_range(1..=4);
            let alpha = rng.gen_range(k..=k + 3);
            let p = rng.gen_range(0..=2);
            let n = alpha + 2 * p + 2;
            let params = MbrParams::new(k, alpha, n + 1, p).unwrap();
            let codec = BlockCodec::new(Field::gf65536(), params, 32).unwrap();
            let blocks = random_blocks(&mut rng, params.message_len(), 32);
            let gammas: Vec<Symbol> = (0..=n as Symbol).map(|g| g * 7 + 3).collect();
            let (fresh_gamma, existing) = gammas.split_last().unwrap();
            let stripes = codec.stripe(&blocks).unwrap();
            let states = codec.encode_stripes(&stripes, existing, 0).unwrap();
            let helpers = rand::seq::index::sample(&mut rng, n, alpha + 2 * p);
            let mut shares: Vec<RepairShare> = helpers
                .iter()
                .map(|h| codec.serve_repair(&states[h], *fresh_gamma).unwrap())
                .collect();
            for i in 0..p {
                shares[i].symbols.iter_mut().for_each(|s| *s = rng.gen_range(0..65536));
            }
            let fresh = codec.bootstrap_node(&shares, *fresh_gamma).unwrap().state;
            assert_eq!(fresh, codec.encode_generation(&blocks, *fresh_gamma, 0).unwrap());

            let mut pool = states.clone();
            pool.push(fresh);
            let pick = rand::seq::index::sample(&mut rng, pool.len(), k + 2 * p);
            let mut chosen: Vec<CodedNodeState> = pick.iter().map(|i| pool[i].clone()).collect();
            for st in chosen.iter_mut().take(p) {
                st.blocks
                    .iter_mut()
                    .flatten()
                    .for_each(|s| *s = rng.gen_range(0..65536));
            }
            assert_eq!(codec.reconstruct_generation(&chosen).unwrap(), blocks);
        }
    }

    #[test]
    fn reconstruct_any_three_of_five() {
        let codec = example_codec();
        let blocks: Vec<Vec<u8>> = (1..=9).map(|b| vec![b]).collect();
        let states: Vec<CodedNodeState> = (1..=5)
            .map(|g| codec.encode_generation(&blocks, g, 0).unwrap())
            .collect();
        for a in 0..5 {
            for b in (a + 1)..5 {
                for c in (b + 1)..5 {
                    let set = vec![states[a].clone(), states[b].clone(), states[c].clone()];
                    assert_eq!(codec.reconstruct_generation(&set).unwrap(), blocks);
                }
            }
        }
    }

    #[test]
    fn node_state_file_layout() {
        let codec = example_codec();
        let blocks: Vec<Vec<u8>> = (1..=9).map(|b| vec![b]).collect();
        let st = codec.encode_generation(&blocks, 1, 3).unwrap();
        let bytes = st.to_bytes();
        assert_eq!(bytes.len(), FIXED_HEADER_LEN + 4 * 9 + 4);
        assert_eq!(&bytes[..4], b"SRB1");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], 0);
        assert_eq!(&bytes[7..11], &13u32.to_le_bytes());
        assert_eq!(&bytes[11..13], &3u16.to_le_bytes());
        assert_eq!(&bytes[13..15], &4u16.to_le_bytes());
        assert_eq!(&bytes[15..19], &1u32.to_le_bytes());
        assert_eq!(&bytes[19..23], &3u32.to_le_bytes());
        assert_eq!(&bytes[23..27], &1u32.to_le_bytes());
        assert_eq!(&bytes[27..31], &1u32.to_le_bytes());
        assert_eq!(&bytes[31..35], &9u32.to_le_bytes());
        assert_eq!(&bytes[35..39], &1u32.to_le_bytes());
        let payload: Vec<u8> = st.blocks.iter().map(|b| b[0] as u8).collect();
        assert_eq!(&bytes[71..], &payload[..]);
        assert_eq!(CodedNodeState::from_bytes(&bytes).unwrap(), st);
    }

    #[test]
    fn share_file_layout_gf65536() {
        let (codec, blocks, _) = setup(4, 2, 3, 0, 4);
        let st = codec.encode_generation(&blocks, 0x1234, 0).unwrap();
        let share = codec.serve_repair(&st, 0xBEEF).unwrap();
        let bytes = share.to_bytes();
        let hdr = FIXED_HEADER_LEN + 4 * 5;
        assert_eq!(bytes.len(), hdr + 4 + 2 * 2);
        assert_eq!(bytes[6], 1);
        assert_eq!(&bytes[7..11], &0x1100Bu32.to_le_bytes());
        assert_eq!(&bytes[hdr..hdr + 4], &0xBEEFu32.to_le_bytes());
        assert_eq!(&bytes[hdr + 4..hdr + 6], &share.symbols[0].to_be_bytes()[2..]);
        assert_eq!(RepairShare::from_bytes(&bytes).unwrap(), share);
    }

    #[test]
    fn parse_rejects_damage() {
        let codec = example_codec();
        let blocks: Vec<Vec<u8>> = (1..=9).map(|b| vec![b]).collect();
        let bytes = codec.encode_generation(&blocks, 1, 0).unwrap().to_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(CodedNodeState::from_bytes(&bad).is_err());
        assert!(CodedNodeState::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(CodedNodeState::from_bytes(&long).is_err());
        let mut sym = bytes.clone();
        *sym.last_mut().unwrap() = 13;
        assert!(CodedNodeState::from_bytes(&sym).is_err());
        let mut ver = bytes;
        ver[4] = 2;
        assert!(CodedNodeState::from_bytes(&ver).is_err());
    }

    proptest! {
        #[test]
        fn node_state_bytes_round_trip(seed in any::<u64>(), gamma in 0u32..65536, generation in any::<u32>()) {
            let (codec, blocks, _) = setup(seed, 2, 4, 0, 10);
            let st = codec.encode_generation(&blocks, gamma, generation).unwrap();
            let bytes = st.to_bytes();
            prop_assert_eq!(bytes.len(), st.encoded_len());
            prop_assert_eq!(CodedNodeState::from_bytes(&bytes).unwrap(), st);
        }
    }

    #[test]
    fn generation_block_ranges() {
        let g = Generation {
            index: 1,
            message_len: 1065,
        };
        assert_eq!(g.block_range(), (1066, 2130));
    }

    #[test]
    fn storage_accounting() {
        let (codec, blocks, _) = setup(5, 3, 4, 0, 2048);
        let st = codec.encode_generation(&blocks, 9, 0).unwrap();
        assert_eq!(
            st.to_bytes().len(),
            4 * 2048 + FIXED_HEADER_LEN + 4 * codec.params().message_len()
        );
        assert!(codec.params().alpha() <= codec.params().message_len());
    }
}
