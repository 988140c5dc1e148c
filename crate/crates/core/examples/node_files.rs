// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! SRB1 node-state and repair-share files: sizes and round trips.

use srb::codec::{BlockCodec, CodedNodeState, RepairShare, FIXED_HEADER_LEN};
use srb::{Field, MbrParams};

fn main() {
    let codec = BlockCodec::new(Field::gf65536(), MbrParams::new(2, 3, 4, 0).unwrap(), 1024).unwrap();
    let l = codec.params().message_len();
    let blocks: Vec<Vec<u8>> = (0..l).map(|i| vec![0xA0 + i as u8; 1000]).collect();
    let state = codec.encode_generation(&blocks, 5, 3).unwrap();
    let bytes = state.to_bytes();
    println!(
        "state: {} bytes = header {} ({} fixed + 4*L) + 3 coded blocks of {}",
        bytes.len(),
        FIXED_HEADER_LEN + 4 * l,
        FIXED_HEADER_LEN,
        codec.coded_block_bytes()
    );
    println!("magic {:?}, generation {}, block range {:?}", std::str::from_utf8(&bytes[..4]).unwrap(), state.header.generation,
        srb::codec::Generation { index: 3, message_len: l }.block_range());
    assert_eq!(CodedNodeState::from_bytes(&bytes).unwrap(), state);

    let share = codec.serve_repair(&state, 9).unwrap();
    let wire = share.to_bytes();
    println!("share: {} bytes, payload {} bytes", wire.len(), share.symbols.len() * 2);
    assert_eq!(RepairShare::from_bytes(&wire).unwrap(), share);

    let mut broken = bytes.clone();
    broken[0] = b'X';
    println!("bad magic: {}", CodedNodeState::from_bytes(&broken).unwrap_err());
}
