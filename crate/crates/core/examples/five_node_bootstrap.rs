// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Five nodes with k = 3, alpha = 4 store nine blocks. A sixth node joins
//! and rebuilds its coded blocks from one block each of nodes 2 to 5.

use srb::codec::BlockCodec;
use srb::{Field, FieldSpec, MbrParams};

fn main() {
    let field = Field::new(FieldSpec::prime(13).unwrap());
    let params = MbrParams::new(3, 4, 5, 0).unwrap();
    let codec = BlockCodec::new(field, params, 1).unwrap();

    let blocks: Vec<Vec<u8>> = (1..=9u8).map(|b| vec![b]).collect();
    let m = codec.code().build_message_matrix(&(1..=9).collect::<Vec<_>>()).unwrap();
    println!("M (B_i written as i):");
    for row in m.rows() {
        println!("  {row:?}");
    }

    let stripes = codec.stripe(&blocks).unwrap();
    let nodes = codec.encode_stripes(&stripes, &[1, 2, 3, 4, 5, 6], 0).unwrap();
    for n in &nodes[..5] {
        println!("node {} stores {:?}", n.gamma, n.row(0).symbols);
    }

    let shares: Vec<_> = nodes[1..5]
        .iter()
        .map(|n| codec.serve_repair(n, 6).unwrap())
        .collect();
    for s in &shares {
        println!("node {} sends {:?}", s.helper_gamma, s.symbols);
    }
    let joined = codec.bootstrap_node(&shares, 6).unwrap();
    println!("node 6 rebuilt {:?}", joined.state.row(0).symbols);
    println!("direct encoding {:?}", nodes[5].row(0).symbols);
    assert_eq!(joined.state, nodes[5]);
}
