// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance checks 1 to 7. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use srb::analytics::{self, Protocol, Table1Inputs, ThroughputParams};
use srb::codec::{BlockCodec, CodecError, CodedNodeState, FIXED_HEADER_LEN};
use srb::sim::{self, Adversary, AdversaryStrategy, BootstrapOutcome, SimConfig};
use srb::{Field, FieldSpec, MbrParams, Symbol};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const Q: u64 = 257;

/// Row `psi^T M` over GF(257) straight from the message layout
/// `[[U, V], [V^T, 0]]`, with `U`'s upper triangle then `V` row-major.
fn oracle_row(msg: &[u64], k: usize, alpha: usize, gamma: u64) -> Vec<u64> {
    let mut m = vec![vec![0u64; alpha]; alpha];
    let mut it = msg.iter().copied();
    for r in 0..k {
        for c in r..k {
            let v = it.next().unwrap();
            m[r][c] = v;
            m[c][r] = v;
        }
    }
    for r in 0..k {
        for c in k..alpha {
            let v = it.next().unwrap();
            m[r][c] = v;
            m[c][r] = v;
        }
    }
    let mut psi = vec![1u64; alpha];
    for i in 1..alpha {
        psi[i] = psi[i - 1] * gamma % Q;
    }
    (0..alpha)
        .map(|c| (0..alpha).map(|r| psi[r] * m[r][c] % Q).sum::<u64>() % Q)
        .collect()
}

/// Coded state of `gamma` computed by [`oracle_row`] stripe by stripe.
/// Blocks are `block_size` bytes, one symbol per byte.
fn oracle_state(blocks: &[Vec<u8>], k: usize, alpha: usize, gamma: u64) -> Vec<Vec<Symbol>> {
    let z = blocks[0].len();
    let mut out = vec![vec![0; z]; alpha];
    for s in 0..z {
        let msg: Vec<u64> = blocks.iter().map(|b| b[s] as u64).collect();
        for (j, v) in oracle_row(&msg, k, alpha, gamma).into_iter().enumerate() {
            out[j][s] = v as Symbol;
        }
    }
    out
}

const GRID: [(usize, usize, usize); 3] = [(2, 3, 1), (3, 4, 1), (4, 6, 2)];
const SUITE_BLOCK: u32 = 16;

fn grid_codec(k: usize, alpha: usize, p: usize) -> BlockCodec {
    let field = Field::new(FieldSpec::prime(257).unwrap());
    let n = (alpha + 2 * p + 1).max(k + 2 * p);
    BlockCodec::new(field, MbrParams::new(k, alpha, n, p).unwrap(), SUITE_BLOCK).unwrap()
}

fn random_blocks(rng: &mut ChaCha20Rng, count: usize) -> Vec<Vec<u8>> {
    (0..count)
        .map(|_| (0..SUITE_BLOCK).map(|_| rng.gen()).collect())
        .collect()
}

/// Distinct nonzero evaluation points.
fn random_gammas(rng: &mut ChaCha20Rng, count: usize) -> Vec<Symbol> {
    sample(rng, (Q - 1) as usize, count)
        .into_iter()
        .map(|i| i as Symbol + 1)
        .collect()
}

fn criterion_1() -> Outcome {
    let l = srb::mbr::message_len(30, 50);
    ensure(l == 1065, || format!("L = {l}, expected 1065"))?;
    let inputs = Table1Inputs::example();
    ensure(inputs.params.n_s == 1000, || "n_S != 1000".into())?;
    let report = analytics::table1_report(&inputs).map_err(|e| e.to_string())?;
    let row = |p: Protocol| report.rows.iter().find(|r| r.protocol == p).unwrap();
    let block = 2_000_000.0;
    let checks = [
        ("SRB storage blocks", row(Protocol::Srb).storage_blocks, 50.0),
        ("SRB bootstrap blocks", row(Protocol::Srb).bootstrap.blocks, 50.0),
        ("RapidChain storage blocks", row(Protocol::RapidChain).storage_blocks, 1065.0),
        ("RapidChain bootstrap blocks", row(Protocol::RapidChain).bootstrap.blocks, 1065.0),
        ("SeF storage blocks", row(Protocol::SeF).storage_blocks, 2.0),
    ];
    for (name, got, want) in checks {
        ensure(got == want, || format!("{name} = {got}, expected {want}"))?;
    }
    let bytes = [
        ("SRB storage", row(Protocol::Srb).storage_bytes, 100e6),
        ("SRB bootstrap", row(Protocol::Srb).bootstrap_bytes, 100e6),
        ("RapidChain storage", row(Protocol::RapidChain).storage_bytes, 2.13e9),
        ("RapidChain bootstrap", row(Protocol::RapidChain).bootstrap_bytes, 2.13e9),
        ("SeF storage", row(Protocol::SeF).storage_bytes, 4e6),
    ];
    for (name, got, want) in bytes {
        ensure((got - want).abs() < 1024.0, || format!("{name} = {got} B, expected {want} B"))?;
        ensure((got / block).fract() == 0.0, || format!("{name} not a whole number of blocks"))?;
    }
    let sef_boot = row(Protocol::SeF).bootstrap_bytes;
    ensure(sef_boot > 2.13e9, || format!("SeF bootstrap {sef_boot} B not above 2.13 GB"))?;
    let text = report.to_string();
    for s in ["100MB", "2.13GB", "4MB"] {
        ensure(text.contains(s), || format!("rendered table lacks {s}"))?;
    }
    let file_header = FIXED_HEADER_LEN + 4 * l;
    Ok(format!(
        "L=1065; SRB 100MB/100MB, RapidChain 2.13GB/2.13GB, SeF 4MB; analytic byte error 0 B (SRB1 file header at L=1065 is {file_header} B, not counted)"
    ))
}

fn criterion_2() -> Outcome {
    let mut detail = Vec::new();
    for spec in [FieldSpec::prime(13).unwrap(), FieldSpec::gf65536()] {
        let field = Field::new(spec);
        let codec = BlockCodec::new(field, MbrParams::new(3, 4, 5, 0).unwrap(), 4).unwrap();
        ensure(codec.params().message_len() == 9, || "L != 9".into())?;
        // Nine blocks B1..B9, each byte below 13 so both fields accept them.
        let blocks: Vec<Vec<u8>> = (0..9u8).map(|i| vec![i + 1, (3 * i + 2) % 13, 12 - i, 0]).collect();
        let stripes = codec.stripe(&blocks).map_err(|e| e.to_string())?;
        let gammas: Vec<Symbol> = (1..=6).collect();
        let states = codec.encode_stripes(&stripes, &gammas, 0).map_err(|e| e.to_string())?;
        let shares: Vec<_> = states[1..5]
            .iter()
            .map(|st| codec.serve_repair(st, 6))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let boot = codec.bootstrap_node(&shares, 6).map_err(|e| e.to_string())?;
        ensure(boot.state.to_bytes() == states[5].to_bytes(), || {
            format!("{spec}: bootstrapped node 6 differs from direct encoding")
        })?;
        ensure(shares.len() == 4, || "expected 4 downloads".into())?;
        if spec.order() == 13 {
            // Check M's layout against the 4x4 arrangement B1 B2 B3 B7 / B2 B4 B5 B8 /
            // B3 B5 B6 B9 / B7 B8 B9 0 by direct arithmetic mod 13.
            let stripe0: Vec<u64> = blocks.iter().map(|b| b[0] as u64).collect();
            let b = |i: usize| stripe0[i - 1];
            let m = [
                [b(1), b(2), b(3), b(7)],
                [b(2), b(4), b(5), b(8)],
                [b(3), b(5), b(6), b(9)],
                [b(7), b(8), b(9), 0],
            ];
            let psi = [1u64, 6, 36 % 13, 216 % 13];
            for j in 0..4 {
                let want = (0..4).map(|r| psi[r] * m[r][j]).sum::<u64>() % 13;
                let got = boot.state.blocks[j][0] as u64;
                ensure(got == want, || format!("GF(13) node 6 block {j}: {got} != {want}"))?;
            }
        }
        detail.push(format!("{spec} ok"));
    }
    Ok(format!("node 6 from helpers 2..5 byte-identical: {}", detail.join(", ")))
}

fn criterion_3() -> Outcome {
    const TRIALS: usize = 1000;
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let mut exact = 0usize;
    let mut total = 0usize;
    let (mut over_ok, mut over_failed, mut over_silent) = (0usize, 0usize, 0usize);
    for (k, alpha, p) in GRID {
        let codec = grid_codec(k, alpha, p);
        let l = codec.params().message_len();
        let d = alpha + 2 * p;
        for strategy in AdversaryStrategy::ALL {
            for trial in 0..TRIALS {
                let blocks = random_blocks(&mut rng, l);
                let gammas = random_gammas(&mut rng, d + 1);
                let (target, helpers) = (gammas[d], &gammas[..d]);
                let states: Vec<CodedNodeState> = helpers
                    .iter()
                    .map(|&g| codec.encode_generation(&blocks, g, 0).unwrap())
                    .collect();
                let expected = oracle_state(&blocks, k, alpha, target as u64);
                let adversary = Adversary::new(strategy, rng.gen(), alpha);
                // Exactly p corrupted shares, then p + 1.
                for liars in [p, p + 1] {
                    let bad = sample(&mut rng, d, liars).into_vec();
                    let shares: Vec<_> = states
                        .iter()
                        .enumerate()
                        .map(|(i, st)| {
                            let mut s = codec.serve_repair(st, target).unwrap();
                            if bad.contains(&i) {
                                adversary.corrupt_share(codec.field(), &mut s, &mut rng);
                            }
                            s
                        })
                        .collect();
                    let result = codec.bootstrap_node(&shares, target);
                    if liars == p {
                        total += 1;
                        match result {
                            Ok(b) if b.state.blocks == expected => exact += 1,
                            Ok(_) => {
                                return Err(format!(
                                    "({k},{alpha},{p}) {strategy} trial {trial}: wrong repair with p liars"
                                ))
                            }
                            Err(e) => {
                                return Err(format!(
                                    "({k},{alpha},{p}) {strategy} trial {trial}: {e} with p liars"
                                ))
                            }
                        }
                    } else {
                        match result {
                            Ok(b) if b.state.blocks == expected => over_ok += 1,
                            Ok(_) => over_silent += 1,
                            Err(CodecError::RepairFailed { .. }) => over_failed += 1,
                            Err(e) => return Err(format!("unexpected error {e}")),
                        }
                    }
                }
            }
        }
    }
    ensure(exact == total, || format!("{exact}/{total} exact"))?;
    ensure(over_silent == 0, || {
        format!("p+1 liars: {over_silent} silent wrong answers ({over_ok} correct, {over_failed} reported)")
    })?;
    Ok(format!(
        "p liars: {exact}/{total} exact; p+1 liars: {over_ok} correct, {over_failed} reported failures, 0 silent"
    ))
}

fn criterion_4() -> Outcome {
    const TRIALS: usize = 1000;
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let mut total = 0usize;
    for (k, alpha, p) in GRID {
        let codec = grid_codec(k, alpha, p);
        let l = codec.params().message_len();
        let count = k + 2 * p;
        for strategy in AdversaryStrategy::ALL {
            for trial in 0..TRIALS {
                let len: Vec<usize> = (0..l).map(|_| rng.gen_range(0..=SUITE_BLOCK as usize)).collect();
                let blocks: Vec<Vec<u8>> = random_blocks(&mut rng, l)
                    .into_iter()
                    .zip(&len)
                    .map(|(mut b, &n)| {
                        b.truncate(n);
                        b
                    })
                    .collect();
                let gammas = random_gammas(&mut rng, count);
                let adversary = Adversary::new(strategy, rng.gen(), alpha);
                let liars = rng.gen_range(0..=p);
                let bad = sample(&mut rng, count, liars).into_vec();
                let states: Vec<CodedNodeState> = gammas
                    .iter()
                    .enumerate()
                    .map(|(i, &g)| {
                        let mut st = codec.encode_generation(&blocks, g, 0).unwrap();
                        if bad.contains(&i) {
                            adversary.corrupt_state(codec.field(), &mut st, &mut rng);
                        }
                        st
                    })
                    .collect();
                let recovered = codec
                    .reconstruct_generation(&states)
                    .map_err(|e| format!("({k},{alpha},{p}) {strategy} trial {trial}: {e}"))?;
                ensure(recovered == blocks, || {
                    format!("({k},{alpha},{p}) {strategy} trial {trial}: blocks differ")
                })?;
                total += 1;
            }
        }
    }
    Ok(format!("{total}/{total} generations recovered byte-identical with up to p corrupted states"))
}

fn binomial(n: u64, r: u64) -> BigUint {
    if r > n {
        return BigUint::from(0u32);
    }
    let mut acc = BigUint::from(1u32);
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `P[X >= t_s]` by summing the hypergeometric mass directly.
fn tail_oracle(n: u64, t: u64, n_s: u64, t_s: u64) -> BigRational {
    let num: BigUint = (t_s..=n_s.min(t))
        .map(|x| binomial(t, x) * binomial(n - t, n_s - x))
        .sum();
    BigRational::new(num.into(), binomial(n, n_s).into())
}

fn criterion_5() -> Outcome {
    let exact = analytics::hypergeom_tail_exact(10, 4, 5, 3).map_err(|e| e.to_string())?;
    let want = BigRational::new(66.into(), 252.into());
    ensure(exact == want, || format!("hypergeom_tail(10,4,5,3) = {exact}"))?;
    ensure(tail_oracle(10, 4, 5, 3) == want, || "oracle disagrees".into())?;

    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let n = rng.gen_range(10..=40u64);
        let t = rng.gen_range(1..n);
        let n_s = rng.gen_range(1..=n.min(15));
        let t_s = rng.gen_range(0..=n_s.min(t));
        let p = analytics::hypergeom_tail(n, t, n_s, t_s).map_err(|e| e.to_string())?;
        let oracle: f64 = num_traits::ToPrimitive::to_f64(&tail_oracle(n, t, n_s, t_s)).unwrap();
        ensure((p - oracle).abs() <= 1e-12, || format!("instance {i}: tail {p} vs oracle {oracle}"))?;
        let samples = 1_000_000u64;
        let mc = analytics::hypergeom_tail_monte_carlo(n, t, n_s, t_s, samples, &mut rng)
            .map_err(|e| e.to_string())?;
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        let dev = (mc - p).abs();
        ensure(dev <= 3.0 * sigma, || {
            format!("({n},{t},{n_s},{t_s}): MC {mc} vs exact {p}, |diff| {dev:.3e} > 3 sigma {:.3e}", 3.0 * sigma)
        })?;
        if sigma > 0.0 {
            worst = worst.max(dev / sigma);
        }
    }

    let mut checked = 0;
    while checked < 100 {
        let n = rng.gen_range(20..=400u64);
        let t = rng.gen_range(0..n);
        let n_s = rng.gen_range(1..=n.min(120));
        let t_s = rng.gen_range(0..=n_s.min(t));
        // Valid regime: t_s / n_s > t / n.
        if t_s * n <= t * n_s {
            continue;
        }
        let h = analytics::hypergeom_tail(n, t, n_s, t_s).map_err(|e| e.to_string())?;
        let g = analytics::hoeffding_bound(n, t, n_s, t_s).map_err(|e| e.to_string())?;
        ensure(g >= h, || format!("({n},{t},{n_s},{t_s}): G = {g:e} < H = {h:e}"))?;
        checked += 1;
    }
    Ok(format!(
        "66/252 exact; 10 Monte-Carlo instances within {worst:.2} sigma at 1e6 samples; G >= H on {checked} instances"
    ))
}

fn criterion_6() -> Outcome {
    let cfg = SimConfig::small();
    ensure(
        cfg.nodes == 200 && cfg.shards == 4 && cfg.shard_size() == 50 && cfg.k == 5 && cfg.alpha == 8
            && cfg.p == 1 && cfg.malicious == 4 && cfg.epochs == 10 && cfg.joins_per_epoch == 2
            && cfg.block_size == 2048 && cfg.cap_malicious_per_shard,
        || "small configuration drifted".into(),
    )?;
    let report = sim::run_simulation(&cfg).map_err(|e| e.to_string())?;
    ensure(report.message_len == 30, || "L != 30".into())?;
    ensure(!report.bootstraps.is_empty(), || "no bootstraps happened".into())?;
    ensure(report.bootstrap_failures() == 0, || {
        format!("{} bootstrap failures", report.bootstrap_failures())
    })?;
    ensure(report.breaches.is_empty(), || report.breaches.join("; "))?;
    let last = report.epochs.last().unwrap();
    ensure(last.generations.iter().all(|&g| g == 2), || {
        format!("generations {:?}, expected 2 per shard", last.generations)
    })?;
    ensure(last.malicious.iter().all(|&m| m <= cfg.p), || {
        format!("malicious per shard {:?} exceeds p", last.malicious)
    })?;

    let block = cfg.block_size as usize;
    let header = FIXED_HEADER_LEN + 4 * report.message_len;
    let per_node = 2 * (cfg.alpha * block + header);
    ensure(last.storage_min == per_node && last.storage_max == per_node, || {
        format!(
            "storage min/max {}/{} B, expected 2*(alpha*block_size + {header}) = {per_node}",
            last.storage_min, last.storage_max
        )
    })?;
    for b in &report.bootstraps {
        ensure(b.outcome == BootstrapOutcome::Ok, || format!("bootstrap {b:?}"))?;
        ensure(b.payload_bytes == (cfg.alpha + 2 * cfg.p) * block, || {
            format!("bootstrap payload {} B, expected (alpha+2p)*block_size", b.payload_bytes)
        })?;
        let share_header = header + 4;
        ensure(b.wire_bytes == b.payload_bytes + (cfg.alpha + 2 * cfg.p) * share_header, || {
            format!("bootstrap wire bytes {} inconsistent with shares", b.wire_bytes)
        })?;
    }

    let replay = sim::run_simulation(&cfg).map_err(|e| e.to_string())?;
    ensure(replay.render() == report.render(), || "replay under the same seed differs".into())?;
    Ok(format!(
        "{} bootstraps, 0 failures; storage/node {per_node} B = 2*(8*2048 + {header}); download {} B/generation; replay identical",
        report.bootstraps.len(),
        (cfg.alpha + 2 * cfg.p) * block
    ))
}

fn sigma_oracle(mu: f64, tau: f64, n: f64, p_frac: f64, v: f64, a: f64) -> f64 {
    let x = a - p_frac;
    mu * tau * n / n.ln() * x * x / (2.0 + x) / v
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let mut checked = 0;
    for _ in 0..10_000 {
        let n: f64 = 10f64.powf(rng.gen_range(2.0..7.0));
        let p_frac = rng.gen_range(0.0..0.45);
        // Valid regime a_SRB > p_frac means alpha < (1 - 2 p_frac) ln n.
        let alpha_max = (1.0 - 2.0 * p_frac) * n.ln();
        let alpha = rng.gen_range(0.0..alpha_max);
        if alpha == 0.0 {
            continue;
        }
        let params = ThroughputParams {
            mu: rng.gen_range(0.01..=1.0),
            tau: rng.gen_range(0.1..10.0),
            n,
            p_frac,
            v: rng.gen_range(0.1..10.0),
            alpha,
        };
        let t = analytics::throughput_factor(&params).map_err(|e| e.to_string())?;
        ensure(t.a_srb > p_frac, || format!("{params:?}: sweep left the valid regime"))?;
        ensure(t.sigma_srb < t.sigma_rc, || {
            format!("{params:?}: sigma_SRB {} >= sigma_RC {}", t.sigma_srb, t.sigma_rc)
        })?;
        let a = 0.5 - alpha / (2.0 * n.ln());
        let o = sigma_oracle(params.mu, params.tau, n, p_frac, params.v, a);
        ensure(((t.sigma_srb - o) / o).abs() < 1e-12, || format!("{params:?}: oracle mismatch"))?;
        checked += 1;
    }
    let mut worst = 0.0f64;
    for alpha in [0.0, 1e-15, 1e-14] {
        let params = ThroughputParams {
            mu: 0.9,
            tau: 1.5,
            n: 16_000.0,
            p_frac: 0.25,
            v: 2.0,
            alpha,
        };
        let t = analytics::throughput_factor(&params).map_err(|e| e.to_string())?;
        let rel = ((t.sigma_srb - t.sigma_rc) / t.sigma_rc).abs();
        ensure(rel < 1e-12, || format!("alpha = {alpha:e}: relative gap {rel:e}"))?;
        worst = worst.max(rel);
    }
    Ok(format!(
        "sigma_SRB < sigma_RC on {checked} sweep points; alpha -> 0 relative gap {worst:.1e}"
    ))
}

fn main() {
    // Only the libtest `--list` probe and filters are expected here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let limits: [(u32, fn() -> Outcome, Duration); 7] = [
        (1, criterion_1, Duration::from_secs(1)),
        (2, criterion_2, Duration::from_secs(1)),
        (3, criterion_3, Duration::from_secs(60)),
        (4, criterion_4, Duration::from_secs(60)),
        (5, criterion_5, Duration::from_secs(120)),
        (6, criterion_6, Duration::from_secs(120)),
        (7, criterion_7, Duration::from_secs(5)),
    ];
    let mut failed = 0;
    for (id, check, limit) in limits {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed > limit {
                Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}"))
            } else {
                Ok(detail)
            }
        });
        match result {
            Ok(detail) => println!("PASS criterion {id} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {id} ({elapsed:.2?}): {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
