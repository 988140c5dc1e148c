// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Storage, bootstrap cost and tolerated faults for RapidChain, SeF and SRB.

use srb::analytics::{self, ProtocolParams, Table1Inputs};

fn main() {
    let example = Table1Inputs::example();
    println!("{}", analytics::table1_report(&example).unwrap());

    let hostile = Table1Inputs {
        params: ProtocolParams::new(1000, 30, 50, 5),
        malicious: Some(2000),
        ..example
    };
    println!("{}", analytics::table1_report(&hostile).unwrap());
    println!("SRB overhead n_S*alpha/L = {}", analytics::srb_storage_overhead_exact(&hostile.params).unwrap());
}
