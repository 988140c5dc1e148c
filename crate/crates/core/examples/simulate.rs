// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Run the shard simulator epoch by epoch on the small configuration.

use srb::sim::{SimConfig, Simulator};

fn main() {
    let config = SimConfig::small();
    println!("{}", config.to_toml_string());
    let mut sim = Simulator::new(config).unwrap();
    while sim.epoch() < sim.config().epochs {
        let reference = sim.epoch_reconfigure().unwrap();
        let e = sim.report().epochs.last().unwrap();
        println!(
            "epoch {:>2} randomness {:016x} sizes {:?} malicious {:?} generations {:?} moved {} bootstraps {}/{}",
            reference.epoch,
            reference.randomness,
            e.shard_sizes,
            e.malicious,
            e.generations,
            e.moved,
            e.bootstraps_ok,
            e.bootstraps_ok + e.bootstraps_failed
        );
    }
    let report = sim.run().unwrap();
    let text = report.render();
    for line in text.lines().filter(|l| !l.starts_with("epoch=") && !l.starts_with("bootstrap ")) {
        println!("{line}");
    }
}
