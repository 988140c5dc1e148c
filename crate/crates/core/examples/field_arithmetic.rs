// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Arithmetic in the supported coding fields.

use srb::{Field, FieldSpec};

fn main() {
    for spec in [
        FieldSpec::prime(13).unwrap(),
        FieldSpec::prime(257).unwrap(),
        FieldSpec::gf65536(),
        "binary:0x13".parse::<FieldSpec>().unwrap(),
    ] {
        let f = Field::new(spec);
        let (a, b) = (7, 11 % f.order());
        let inv = f.inv(a).unwrap();
        println!(
            "{spec}: order={} symbol_bytes={} {a}+{b}={} {a}*{b}={} {a}^-1={inv} check={} psi(3)={:?}",
            f.order(),
            spec.symbol_bytes(),
            f.add(a, b),
            f.mul(a, b),
            f.mul(a, inv),
            f.vandermonde_row(3, 4),
        );
    }
}
