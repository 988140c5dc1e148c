// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Committee failure probabilities: exact tail, sampling, Hoeffding bound and
//! the per-epoch union bound. Also the throughput factor.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use srb::analytics::{self, ThroughputParams};

fn main() {
    println!("P[X >= 3], N=10 T=4 n_S=5: {}", analytics::hypergeom_tail_exact(10, 4, 5, 3).unwrap());

    let (n, t, shards) = (16_000, 2_000, 16);
    let n_s = n / shards;
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    for t_s in [150, 200, 250, 333] {
        let h = analytics::hypergeom_tail(n, t, n_s, t_s).unwrap();
        let g = analytics::hoeffding_bound(n, t, n_s, t_s).unwrap();
        let u = analytics::failure_upper_bound(shards, None, g).unwrap();
        let mc = analytics::hypergeom_tail_monte_carlo(n, t, n_s, t_s, 2_000, &mut rng).unwrap();
        println!("t_S={t_s:>3}: H={h:.3e} MC~{mc:.3} G={g:.3e} U={:.3e}{}", u.value, if u.clamped { " (clamped)" } else { "" });
    }

    for alpha in [0.0, 1.0, 3.0, 6.0] {
        let p = ThroughputParams { mu: 0.9, tau: 1.0, n: 1000.0, p_frac: 0.1, v: 1.0, alpha };
        match analytics::throughput_factor(&p) {
            Ok(t) => println!("alpha={alpha}: a_SRB={:.4} sigma_SRB={:.3} sigma_RC={:.3}", t.a_srb, t.sigma_srb, t.sigma_rc),
            Err(e) => println!("alpha={alpha}: {e}"),
        }
    }
}
