// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Recover a whole generation from k + 2p stored states, p of them forged.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use srb::codec::BlockCodec;
use srb::sim::{Adversary, AdversaryStrategy};
use srb::{Field, MbrParams};

fn main() {
    let (k, alpha, p) = (3, 5, 1);
    let codec = BlockCodec::new(Field::gf65536(), MbrParams::new(k, alpha, alpha + 2 * p + 1, p).unwrap(), 32).unwrap();
    let l = codec.params().message_len();
    // Blocks of uneven length come back at their original length.
    let blocks: Vec<Vec<u8>> = (0..l).map(|i| vec![i as u8; 3 + 2 * i]).collect();
    let adversary = Adversary::new(AdversaryStrategy::ConsistentWrongPolynomial, 9, alpha);
    let mut rng = ChaCha20Rng::seed_from_u64(0);
    let states: Vec<_> = (10..10 + (k + 2 * p) as u32)
        .map(|g| {
            let mut st = codec.encode_generation(&blocks, g, 0).unwrap();
            if g == 10 {
                adversary.corrupt_state(codec.field(), &mut st, &mut rng);
            }
            st
        })
        .collect();
    let recovered = codec.reconstruct_generation(&states).unwrap();
    println!("L = {l}, {} states (1 forged), recovered identical: {}", states.len(), recovered == blocks);
    let lens: Vec<usize> = recovered.iter().map(Vec::len).collect();
    println!("block lengths {lens:?}");
}
