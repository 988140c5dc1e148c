// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Closed-form cost and security figures for uncoded sharding (RapidChain),
//! fountain-coded sharding (SeF) and regenerating-coded sharding (SRB).
//!
//! Logarithms are natural. The SeF overhead term `O(sqrt(L) log^2(L/delta))` is
//! evaluated with an explicit constant `c`.

use std::fmt::{self, Write as _};

use num_bigint::{BigInt, BigUint};
use num_integer::binomial;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::mbr;

/// Committee-election failure probability of the base protocol, `2^-26.36`.
pub fn default_p_bootstrap() -> f64 {
    (-26.36f64).exp2()
}

/// Bytes per megabyte in reports.
pub const MB: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("message length L must be positive")]
    ZeroMessageLength,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bound regime violated: r = {r} must exceed g = {g}")]
    BoundRegime { r: f64, g: f64 },
    #[error("resiliency exhausted: a = {a} does not exceed the malicious fraction {p_frac}")]
    ResiliencyExhausted { a: f64, p_frac: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    RapidChain,
    SeF,
    Srb,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::RapidChain, Protocol::SeF, Protocol::Srb];
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::RapidChain => "RapidChain",
            Protocol::SeF => "SeF",
            Protocol::Srb => "SRB",
        })
    }
}

/// Shard and code parameters shared by all three protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    pub n_s: u64,
    /// Blocks per generation (SRB) or per shard ledger (others).
    pub l: u64,
    pub k: u64,
    pub alpha: u64,
    pub p: u64,
    /// SeF storage slack, in (0, 1).
    pub delta: f64,
    /// SeF coded blocks stored per node.
    pub rho: f64,
    /// Constant in front of the SeF overhead term.
    pub c: f64,
}

impl ProtocolParams {
    /// Parameters with `L = k*alpha - C(k, 2)` and SeF defaults `delta = 0.1`,
    /// `rho = 2`, `c = 1`.
    pub fn new(n_s: u64, k: u64, alpha: u64, p: u64) -> Self {
        Self {
            n_s,
            l: mbr::message_len(k as usize, alpha as usize) as u64,
            k,
            alpha,
            p,
            delta: 0.1,
            rho: 2.0,
            c: 1.0,
        }
    }

    fn check_sef(&self) -> Result<(), AnalyticsError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AnalyticsError::InvalidArgument(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        if self.l == 0 {
            return Err(AnalyticsError::ZeroMessageLength);
        }
        Ok(())
    }

    /// `L + c sqrt(L) ln^2(L / delta)`.
    pub fn sef_download(&self) -> Result<f64, AnalyticsError> {
        self.check_sef()?;
        let l = self.l as f64;
        Ok(l + self.c * l.sqrt() * (l / self.delta).ln().powi(2))
    }
}

pub fn storage_overhead(protocol: Protocol, params: &ProtocolParams) -> Result<f64, AnalyticsError> {
    match protocol {
        Protocol::RapidChain => Ok(params.n_s as f64),
        Protocol::SeF => {
            params.check_sef()?;
            Ok(1.0 + params.delta)
        }
        Protocol::Srb => Ok(srb_storage_overhead_exact(params)?.to_f64().unwrap()),
    }
}

/// `n_S * alpha / L` as an exact ratio.
pub fn srb_storage_overhead_exact(params: &ProtocolParams) -> Result<Ratio<u64>, AnalyticsError> {
    if params.l == 0 {
        return Err(AnalyticsError::ZeroMessageLength);
    }
    Ok(Ratio::new(params.n_s * params.alpha, params.l))
}

/// Blocks downloaded by a joining node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BootstrapCost {
    /// Download with honest helpers only (`alpha` for SRB).
    pub blocks: f64,
    /// Download when tolerating `p` malicious helpers (`alpha + 2p` for SRB).
    pub secure_blocks: f64,
}

pub fn bootstrap_cost(protocol: Protocol, params: &ProtocolParams) -> Result<BootstrapCost, AnalyticsError> {
    let (blocks, secure_blocks) = match protocol {
        Protocol::RapidChain => (params.l as f64, params.l as f64),
        Protocol::SeF => {
            let d = params.sef_download()?;
            (d, d)
        }
        Protocol::Srb => (
            params.alpha as f64,
            (params.alpha + 2 * params.p) as f64,
        ),
    };
    Ok(BootstrapCost {
        blocks,
        secure_blocks,
    })
}

/// Tolerated malicious nodes per shard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSecurity {
    /// Whole nodes, floored and clamped at zero.
    pub t_s: u64,
    pub exact: f64,
    /// The exact value was negative and has been reported as zero.
    pub clamped: bool,
}

impl EpochSecurity {
    fn from_exact(exact: f64) -> Self {
        Self {
            t_s: exact.max(0.0).floor() as u64,
            exact,
            clamped: exact < 0.0,
        }
    }
}

pub fn epoch_security(protocol: Protocol, params: &ProtocolParams) -> Result<EpochSecurity, AnalyticsError> {
    let n_s = params.n_s as f64;
    let exact = match protocol {
        Protocol::RapidChain => n_s / 2.0,
        Protocol::SeF => {
            if params.rho <= 0.0 {
                return Err(AnalyticsError::InvalidArgument("rho must be positive".into()));
            }
            n_s - params.sef_download()? / params.rho
        }
        Protocol::Srb => (n_s - params.alpha as f64) / 2.0,
    };
    Ok(EpochSecurity::from_exact(exact))
}

fn check_hypergeom(n: u64, t: u64, n_s: u64, t_s: u64) -> Result<(), AnalyticsError> {
    if t > n || n_s > n || t_s > n_s {
        return Err(AnalyticsError::InvalidArgument(format!(
            "need T <= N, n_S <= N, t_S <= n_S (got N={n}, T={t}, n_S={n_s}, t_S={t_s})"
        )));
    }
    Ok(())
}

/// `P[X >= t_S]` for `X` hypergeometric: `n_S` draws from `N` nodes of which
/// `T` are malicious.
pub fn hypergeom_tail_exact(n: u64, t: u64, n_s: u64, t_s: u64) -> Result<BigRational, AnalyticsError> {
    check_hypergeom(n, t, n_s, t_s)?;
    let honest = n - t;
    let den = binomial(BigUint::from(n), BigUint::from(n_s));
    let first = t_s.max(n_s.saturating_sub(honest));
    let last = n_s.min(t);
    let mut num = BigUint::zero();
    if first <= last {
        // term(l) = C(T, l) C(N-T, n_S-l); consecutive terms differ by a
        // rational factor and every term is an integer, so division is exact.
        let mut term = binomial(BigUint::from(t), BigUint::from(first))
            * binomial(BigUint::from(honest), BigUint::from(n_s - first));
        for l in first..=last {
            num += &term;
            if l < last {
                term *= BigUint::from((t - l) * (n_s - l));
                term /= BigUint::from((l + 1) * (honest + l + 1 - n_s));
            }
        }
    }
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

pub fn hypergeom_tail(n: u64, t: u64, n_s: u64, t_s: u64) -> Result<f64, AnalyticsError> {
    Ok(hypergeom_tail_exact(n, t, n_s, t_s)?.to_f64().unwrap_or(0.0))
}

/// Fraction of `samples` simulated committees with at least `t_S` malicious
/// members, each drawn member by member without replacement.
pub fn hypergeom_tail_monte_carlo<R: Rng>(
    n: u64,
    t: u64,
    n_s: u64,
    t_s: u64,
    samples: u64,
    rng: &mut R,
) -> Result<f64, AnalyticsError> {
    check_hypergeom(n, t, n_s, t_s)?;
    let mut hits = 0u64;
    for _ in 0..samples {
        let (mut left, mut bad_left, mut bad) = (n, t, 0);
        for _ in 0..n_s {
            if rng.gen_range(0..left) < bad_left {
                bad_left -= 1;
                bad += 1;
            }
            left -= 1;
        }
        if bad >= t_s {
            hits += 1;
        }
    }
    Ok(hits as f64 / samples as f64)
}

/// `G = ((g/r)^r ((1-g)/(1-r))^(1-r))^n_S` with `g = T/N`, `r = t_S/n_S`.
pub fn hoeffding_bound(n: u64, t: u64, n_s: u64, t_s: u64) -> Result<f64, AnalyticsError> {
    check_hypergeom(n, t, n_s, t_s)?;
    if n_s == 0 {
        return Err(AnalyticsError::InvalidArgument("n_S must be positive".into()));
    }
    let g = t as f64 / n as f64;
    let r = t_s as f64 / n_s as f64;
    if r <= g {
        return Err(AnalyticsError::BoundRegime { r, g });
    }
    if g == 0.0 {
        return Ok(0.0);
    }
    if t_s == n_s {
        return Ok(g.powf(n_s as f64));
    }
    let exponent = r * (g / r).ln() + (1.0 - r) * ((1.0 - g) / (1.0 - r)).ln();
    Ok((n_s as f64 * exponent).exp())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FailureBound {
    /// `p_bootstrap + m G`, possibly above 1.
    pub raw: f64,
    /// `raw` clamped to 1.
    pub value: f64,
    pub clamped: bool,
}

/// `U = p_bootstrap + m G`. `None` uses [`default_p_bootstrap`].
pub fn failure_upper_bound(m: u64, p_bootstrap: Option<f64>, g: f64) -> Result<FailureBound, AnalyticsError> {
    let pb = p_bootstrap.unwrap_or_else(default_p_bootstrap);
    for (name, v) in [("p_bootstrap", pb), ("G", g)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(AnalyticsError::InvalidArgument(format!("{name} = {v} outside [0, 1]")));
        }
    }
    let raw = pb + m as f64 * g;
    Ok(FailureBound {
        raw,
        value: raw.min(1.0),
        clamped: raw > 1.0,
    })
}

/// Inputs of the throughput-factor bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputParams {
    /// Ratio of honest blocks.
    pub mu: f64,
    /// Latency factor.
    pub tau: f64,
    /// Total node count.
    pub n: f64,
    /// Malicious fraction.
    pub p_frac: f64,
    /// Transaction-size factor.
    pub v: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Throughput {
    pub a_srb: f64,
    pub sigma_srb: f64,
    pub a_rc: f64,
    pub sigma_rc: f64,
}

fn sigma(params: &ThroughputParams, a: f64) -> Result<f64, AnalyticsError> {
    let slack = a - params.p_frac;
    if slack <= 0.0 {
        return Err(AnalyticsError::ResiliencyExhausted {
            a,
            p_frac: params.p_frac,
        });
    }
    let ln_n = params.n.ln();
    Ok(params.mu * params.tau * (params.n / ln_n) * (slack * slack / (2.0 + slack)) / params.v)
}

/// Throughput factor with `a = 1/2 - alpha / (2 ln n)`, next to the same
/// expression at `a = 1/2`.
pub fn throughput_factor(params: &ThroughputParams) -> Result<Throughput, AnalyticsError> {
    if !(params.n > 1.0) {
        return Err(AnalyticsError::InvalidArgument("n must exceed 1".into()));
    }
    if !(params.v > 0.0) {
        return Err(AnalyticsError::InvalidArgument("v must be positive".into()));
    }
    if !(0.0..1.0).contains(&params.p_frac) {
        return Err(AnalyticsError::InvalidArgument("p_frac must lie in [0, 1)".into()));
    }
    if params.alpha < 0.0 {
        return Err(AnalyticsError::InvalidArgument("alpha must be non-negative".into()));
    }
    let a_srb = 0.5 - params.alpha / (2.0 * params.n.ln());
    let a_rc = 0.5;
    Ok(Throughput {
        a_srb,
        sigma_srb: sigma(params, a_srb)?,
        a_rc,
        sigma_rc: sigma(params, a_rc)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingPhase {
    Init,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingCost {
    /// Nominal cost in field-multiplication units.
    pub units: f64,
    /// Multiplications the encoder actually performs per node and stripe
    /// (`alpha^2`); only set for [`EncodingPhase::Init`].
    pub actual_per_row: Option<u64>,
    /// `r <= e`, so `r^2` was reported instead of `r^2 ln^2 r ln ln r`.
    pub degenerate: bool,
}

pub fn encoding_cost(alpha: u64, p: u64, phase: EncodingPhase) -> EncodingCost {
    match phase {
        EncodingPhase::Init => EncodingCost {
            units: (alpha as f64).powi(3),
            actual_per_row: Some(alpha * alpha),
            degenerate: false,
        },
        EncodingPhase::Bootstrap => {
            let r = (alpha + 2 * p) as f64;
            if r <= std::f64::consts::E {
                EncodingCost {
                    units: r * r,
                    actual_per_row: None,
                    degenerate: true,
                }
            } else {
                EncodingCost {
                    units: r * r * r.ln().powi(2) * r.ln().ln(),
                    actual_per_row: None,
                    degenerate: false,
                }
            }
        }
    }
}

/// Inputs for the three-protocol comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Inputs {
    pub block_bytes: u64,
    pub nodes: u64,
    pub shards: u64,
    pub params: ProtocolParams,
    /// Malicious node count; when set, failure probabilities are reported.
    pub malicious: Option<u64>,
}

impl Table1Inputs {
    /// 2 MB blocks, 16000 nodes in 16 shards, `k = 30`, `alpha = 50`, `rho = 2`.
    pub fn example() -> Self {
        Self {
            block_bytes: 2_000_000,
            nodes: 16_000,
            shards: 16,
            params: ProtocolParams::new(1000, 30, 50, 0),
            malicious: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolMetrics {
    pub protocol: Protocol,
    pub storage_overhead: f64,
    pub storage_blocks: f64,
    pub storage_bytes: f64,
    pub bootstrap: BootstrapCost,
    pub bootstrap_bytes: f64,
    pub security: EpochSecurity,
    /// `(H, G, U)` at `t_S + 1` malicious members, when `malicious` is set and
    /// the bound regime holds.
    pub failure: Option<(f64, Option<f64>, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub inputs: Table1Inputs,
    pub rows: Vec<ProtocolMetrics>,
    pub warnings: Vec<String>,
}

pub fn table1_report(inputs: &Table1Inputs) -> Result<MetricsReport, AnalyticsError> {
    let params = &inputs.params;
    if params.l == 0 {
        return Err(AnalyticsError::ZeroMessageLength);
    }
    let block = inputs.block_bytes as f64;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for protocol in Protocol::ALL {
        let storage_blocks = match protocol {
            Protocol::RapidChain => params.l as f64,
            Protocol::SeF => params.rho,
            Protocol::Srb => params.alpha as f64,
        };
        let bootstrap = bootstrap_cost(protocol, params)?;
        let security = epoch_security(protocol, params)?;
        if security.clamped {
            warnings.push(format!(
                "{protocol} security guarantee is negative ({:.2}); reported as 0",
                security.exact
            ));
        }
        let failure = match inputs.malicious {
            Some(t) => {
                let threshold = (security.t_s + 1).min(params.n_s);
                let h = hypergeom_tail(inputs.nodes, t, params.n_s, threshold)?;
                let g = hoeffding_bound(inputs.nodes, t, params.n_s, threshold).ok();
                let u = match g {
                    Some(g) => Some(failure_upper_bound(inputs.shards, None, g)?.value),
                    None => None,
                };
                Some((h, g, u))
            }
            None => None,
        };
        rows.push(ProtocolMetrics {
            protocol,
            storage_overhead: storage_overhead(protocol, params)?,
            storage_blocks,
            storage_bytes: storage_blocks * block,
            bootstrap,
            bootstrap_bytes: bootstrap.blocks * block,
            security,
            failure,
        });
    }
    Ok(MetricsReport {
        inputs: *inputs,
        rows,
        warnings,
    })
}

/// `2130000000.0` → `"2.13GB"`, `4e6` → `"4MB"`.
pub fn format_bytes(bytes: f64) -> String {
    let (v, unit) = if bytes >= 1e9 {
        (bytes / 1e9, "GB")
    } else if bytes >= MB {
        (bytes / MB, "MB")
    } else if bytes >= 1e3 {
        (bytes / 1e3, "KB")
    } else {
        (bytes, "B")
    };
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{s}{unit}")
}

fn fmt_blocks(v: f64) -> String {
    if v.fract() == 0.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.inputs.params;
        writeln!(
            f,
            "inputs: block={} N={} m={} n_S={} k={} alpha={} p={} L={} rho={} delta={} c={}",
            format_bytes(self.inputs.block_bytes as f64),
            self.inputs.nodes,
            self.inputs.shards,
            p.n_s,
            p.k,
            p.alpha,
            p.p,
            p.l,
            p.rho,
            p.delta,
            p.c
        )?;
        let mut table = String::new();
        let _ = writeln!(
            table,
            "{:<26}| {:<26}| {:<26}| {:<26}",
            "metric", "RapidChain", "SeF", "SRB"
        );
        let symbolic = [
            ("storage overhead", ["n_S", "1+delta", "n_S*alpha/L"]),
            ("bootstrap cost", ["L", "L+c*sqrt(L)*ln^2(L/delta)", "alpha"]),
            ("security t_S", ["n_S/2", "n_S-(L+..)/rho", "(n_S-alpha)/2"]),
        ];
        for (name, cells) in symbolic {
            let _ = writeln!(
                table,
                "{:<26}| {:<26}| {:<26}| {:<26}",
                name, cells[0], cells[1], cells[2]
            );
        }
        let row = |name: &str, cell: &dyn Fn(&ProtocolMetrics) -> String| {
            let cells: Vec<String> = self.rows.iter().map(cell).collect();
            format!(
                "{:<26}| {:<26}| {:<26}| {:<26}\n",
                name, cells[0], cells[1], cells[2]
            )
        };
        table += &row("storage overhead (value)", &|m| format!("{:.4}", m.storage_overhead));
        table += &row("storage/node (blocks)", &|m| fmt_blocks(m.storage_blocks));
        table += &row("storage/node (bytes)", &|m| format_bytes(m.storage_bytes));
        table += &row("bootstrap (blocks)", &|m| fmt_blocks(m.bootstrap.blocks));
        table += &row("bootstrap, p>0 (blocks)", &|m| fmt_blocks(m.bootstrap.secure_blocks));
        table += &row("bootstrap (bytes)", &|m| format_bytes(m.bootstrap_bytes));
        table += &row("security t_S (nodes)", &|m| m.security.t_s.to_string());
        table += &row("security t_S (exact)", &|m| format!("{:.2}", m.security.exact));
        if self.rows.iter().any(|m| m.failure.is_some()) {
            let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3e}"));
            table += &row("shard failure H", &|m| opt(m.failure.map(|x| x.0)));
            table += &row("Hoeffding G", &|m| opt(m.failure.and_then(|x| x.1)));
            table += &row("system bound U", &|m| opt(m.failure.and_then(|x| x.2)));
        }
        f.write_str(&table)?;
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        writeln!(
            f,
            "notes: natural logarithms; SeF overhead constant c={}; Hoeffding g = T/N; MB = 10^6 bytes; byte figures exclude file headers",
            p.c
        )
    }
}
