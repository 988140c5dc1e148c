// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Bootstrap with malicious helpers: alpha + 2p shares, up to p of them
//! corrupted, under each corruption strategy.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use srb::codec::{BlockCodec, CodecError};
use srb::sim::{Adversary, AdversaryStrategy};
use srb::{Field, MbrParams};

fn main() {
    let (k, alpha, p) = (4, 6, 2);
    let d = alpha + 2 * p;
    let codec = BlockCodec::new(Field::gf65536(), MbrParams::new(k, alpha, d + 1, p).unwrap(), 64).unwrap();
    let l = codec.params().message_len();
    let blocks: Vec<Vec<u8>> = (0..l).map(|i| format!("block {i} payload").into_bytes()).collect();
    let helpers: Vec<u32> = (1..=d as u32).collect();
    let target = 1000;
    let states: Vec<_> = helpers
        .iter()
        .map(|&g| codec.encode_generation(&blocks, g, 0).unwrap())
        .collect();
    let expected = codec.encode_generation(&blocks, target, 0).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(1);

    for strategy in AdversaryStrategy::ALL {
        let adversary = Adversary::new(strategy, 42, alpha);
        for liars in [p, p + 1] {
            let shares: Vec<_> = states
                .iter()
                .enumerate()
                .map(|(i, st)| {
                    let mut s = codec.serve_repair(st, target).unwrap();
                    if i < liars {
                        adversary.corrupt_share(codec.field(), &mut s, &mut rng);
                    }
                    s
                })
                .collect();
            match codec.bootstrap_node(&shares, target) {
                Ok(b) => println!(
                    "{strategy:<28} liars={liars}: rebuilt, flagged {:?}, exact={}",
                    b.flagged,
                    b.state == expected
                ),
                Err(e @ CodecError::RepairFailed { .. }) => {
                    println!("{strategy:<28} liars={liars}: {e}")
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
}
