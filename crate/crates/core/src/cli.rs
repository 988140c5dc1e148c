// Copyright (c) The SRB Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O error, 2 usage or argument error, 3 decoding
//! failure (too many corrupted inputs), 4 simulator invariant breach. Every
//! subcommand first prints an `effective:` line that replays the run.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analytics::{self, EncodingPhase, ProtocolParams, Table1Inputs};
use crate::codec::{BlockCodec, CodecError, CodedNodeState, RepairShare};
use crate::field::{Field, FieldSpec, Symbol};
use crate::mbr::MbrParams;
use crate::sim::{self, SimConfig, SimError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DECODE: i32 = 3;
pub const EXIT_BREACH: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "srb", version, about = "Regenerating-code storage and bootstrap for sharded ledgers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode one generation of blocks into a node state file.
    Encode {
        /// Directory holding exactly L block files, ordered by file name.
        #[arg(long)]
        blocks: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: usize,
        #[arg(long)]
        gamma: Symbol,
        /// gf65536, prime:<q> or binary:<poly>.
        #[arg(long, default_value = "gf65536")]
        field: FieldSpec,
        #[arg(long)]
        block_size: u32,
        #[arg(long, default_value_t = 0)]
        gen: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute a helper's repair share for a joining node.
    ServeRepair {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        target_gamma: Symbol,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild a joining node's state from alpha + 2p repair shares.
    Bootstrap {
        #[arg(long)]
        target_gamma: Symbol,
        #[arg(long, num_args = 1.., required = true)]
        shares: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        p: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover the original blocks from k + 2p node states.
    Reconstruct {
        #[arg(long, num_args = 1.., required = true)]
        states: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        p: usize,
        /// Output directory; blocks are written as block-0001.bin, ...
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the shard simulator.
    Simulate {
        /// TOML configuration; the built-in small configuration if omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the three-protocol comparison table.
    Metrics {
        /// Use 2 MB blocks, 16000 nodes, 16 shards, k = 30, alpha = 50, rho = 2.
        #[arg(long)]
        paper_example: bool,
        #[arg(long, default_value_t = 2_000_000)]
        block_bytes: u64,
        #[arg(long, default_value_t = 16_000)]
        nodes: u64,
        #[arg(long, default_value_t = 16)]
        shards: u64,
        #[arg(long, default_value_t = 30)]
        k: u64,
        #[arg(long, default_value_t = 50)]
        alpha: u64,
        #[arg(long, default_value_t = 0)]
        p: u64,
        #[arg(long, default_value_t = 2.0)]
        rho: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Malicious node count; adds failure probabilities to the table.
        #[arg(long)]
        malicious: Option<u64>,
    },
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<CodecError> for CliError {
    fn from(e: CodecError) -> Self {
        let code = if e.is_decode_failure() {
            EXIT_DECODE
        } else {
            EXIT_USAGE
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Codec(c) => c.into(),
            other => CliError::usage(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| io_err(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Regular files in `dir`, sorted by file name.
pub fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let entry = entry.map_err(|e| io_err(dir, e))?;
        if entry.file_type().map_err(|e| io_err(dir, e))?.is_file() {
            files.push(entry.path());
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn paths(list: &[PathBuf]) -> String {
    list.iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Codec for files whose header fixes field, k, alpha and block size.
fn codec_for(field: FieldSpec, k: usize, alpha: usize, p: usize, block_size: u32) -> Result<BlockCodec, CliError> {
    let n = (alpha + 2 * p + 1).max(k + 2 * p);
    let params = MbrParams::new(k, alpha, n, p).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(BlockCodec::new(Field::new(field), params, block_size)?)
}

/// Parse arguments and run, writing normal output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut say = |s: String| {
        let _ = writeln!(out, "{s}");
    };
    match cli.command {
        Command::Encode {
            blocks,
            k,
            alpha,
            gamma,
            field,
            block_size,
            gen,
            out: dest,
        } => {
            say(format!(
                "effective: srb encode --blocks {} --k {k} --alpha {alpha} --gamma {gamma} --field {} --block-size {block_size} --gen {gen} --out {}",
                blocks.display(),
                field.to_cli_string(),
                dest.display()
            ));
            let codec = codec_for(field, k, alpha, 0, block_size)?;
            let files = sorted_files(&blocks)?;
            let l = codec.params().message_len();
            if files.len() != l {
                return Err(CliError::usage(format!(
                    "k = {k}, alpha = {alpha} needs exactly L = {l} block files, found {}",
                    files.len()
                )));
            }
            let data = files.iter().map(|f| read(f)).collect::<Result<Vec<_>, _>>()?;
            let state = codec.encode_generation(&data, gamma, gen)?;
            let bytes = state.to_bytes();
            write(&dest, &bytes)?;
            say(format!(
                "stored {alpha} coded blocks ({} payload bytes, {} bytes with header) for {l} source blocks",
                alpha * codec.coded_block_bytes(),
                bytes.len()
            ));
        }
        Command::ServeRepair {
            state,
            target_gamma,
            out: dest,
        } => {
            say(format!(
                "effective: srb serve-repair --state {} --target-gamma {target_gamma} --out {}",
                state.display(),
                dest.display()
            ));
            let st = CodedNodeState::from_bytes(&read(&state)?)?;
            let h = &st.header;
            let codec = codec_for(h.field, h.k as usize, h.alpha as usize, 0, h.block_size)?;
            let share = codec.serve_repair(&st, target_gamma)?;
            let bytes = share.to_bytes();
            write(&dest, &bytes)?;
            say(format!(
                "share from gamma {} to gamma {target_gamma}: 1 coded block, {} bytes",
                st.gamma,
                bytes.len()
            ));
        }
        Command::Bootstrap {
            target_gamma,
            shares,
            p,
            out: dest,
        } => {
            say(format!(
                "effective: srb bootstrap --target-gamma {target_gamma} --p {p} --out {} --shares {}",
                dest.display(),
                paths(&shares)
            ));
            let parsed = shares
                .iter()
                .map(|f| Ok(RepairShare::from_bytes(&read(f)?)?))
                .collect::<Result<Vec<_>, CliError>>()?;
            let h = &parsed[0].header;
            let codec = codec_for(h.field, h.k as usize, h.alpha as usize, p, h.block_size)?;
            let wire: usize = parsed.iter().map(|s| s.encoded_len()).sum();
            let result = codec.bootstrap_node(&parsed, target_gamma)?;
            let bytes = result.state.to_bytes();
            write(&dest, &bytes)?;
            say(format!(
                "downloaded {} blocks: {} payload bytes, {wire} bytes with headers; {} share(s) flagged as corrupt",
                parsed.len(),
                result.payload_bytes,
                result.flagged.len()
            ));
        }
        Command::Reconstruct { states, p, out: dest } => {
            say(format!(
                "effective: srb reconstruct --p {p} --out {} --states {}",
                dest.display(),
                paths(&states)
            ));
            let parsed = states
                .iter()
                .map(|f| Ok(CodedNodeState::from_bytes(&read(f)?)?))
                .collect::<Result<Vec<_>, CliError>>()?;
            let h = &parsed[0].header;
            let codec = codec_for(h.field, h.k as usize, h.alpha as usize, p, h.block_size)?;
            let blocks = codec.reconstruct_generation(&parsed)?;
            fs::create_dir_all(&dest).map_err(|e| io_err(&dest, e))?;
            for (i, b) in blocks.iter().enumerate() {
                write(&dest.join(format!("block-{:04}.bin", i + 1)), b)?;
            }
            say(format!("recovered {} blocks into {}", blocks.len(), dest.display()));
        }
        Command::Simulate { config, seed, out: dest } => {
            let mut cfg = match &config {
                Some(path) => {
                    let text = String::from_utf8(read(path)?)
                        .map_err(|_| CliError::usage("config is not UTF-8"))?;
                    SimConfig::from_toml_str(&text)?
                }
                None => SimConfig::small(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            say(format!("effective: {}", cfg.effective_line()));
            let report = sim::run_simulation(&cfg)?;
            let text = report.render();
            match &dest {
                Some(path) => write(path, text.as_bytes())?,
                None => say(text.trim_end().to_string()),
            }
            say(format!(
                "bootstraps={} failed={} breaches={}",
                report.bootstraps.len(),
                report.bootstrap_failures(),
                report.breaches.len()
            ));
            if !report.breaches.is_empty() {
                return Err(CliError {
                    code: EXIT_BREACH,
                    message: format!("{} invariant breach(es)", report.breaches.len()),
                });
            }
        }
        Command::Metrics {
            paper_example: example,
            block_bytes,
            nodes,
            shards,
            k,
            alpha,
            p,
            rho,
            delta,
            c,
            malicious,
        } => {
            let inputs = if example {
                Table1Inputs {
                    malicious,
                    ..Table1Inputs::example()
                }
            } else {
                if shards == 0 || nodes % shards != 0 {
                    return Err(CliError::usage("nodes must be a positive multiple of shards"));
                }
                let params = ProtocolParams {
                    rho,
                    delta,
                    c,
                    ..ProtocolParams::new(nodes / shards, k, alpha, p)
                };
                Table1Inputs {
                    block_bytes,
                    nodes,
                    shards,
                    params,
                    malicious,
                }
            };
            let pp = &inputs.params;
            say(format!(
                "effective: srb metrics --block-bytes {} --nodes {} --shards {} --k {} --alpha {} --p {} --rho {} --delta {} --c {}{}",
                inputs.block_bytes,
                inputs.nodes,
                inputs.shards,
                pp.k,
                pp.alpha,
                pp.p,
                pp.rho,
                pp.delta,
                pp.c,
                inputs.malicious.map_or(String::new(), |t| format!(" --malicious {t}"))
            ));
            let report = analytics::table1_report(&inputs).map_err(|e| CliError::usage(e.to_string()))?;
            say(report.to_string().trim_end().to_string());
            let init = analytics::encoding_cost(pp.alpha, pp.p, EncodingPhase::Init);
            let boot = analytics::encoding_cost(pp.alpha, pp.p, EncodingPhase::Bootstrap);
            say(format!(
                "encoding: init {:.0} mult-units per node and stripe (encoder performs {}); bootstrap {:.0} units{}",
                init.units,
                init.actual_per_row.unwrap_or(0),
                boot.units,
                if boot.degenerate { " (r <= e, reported as r^2)" } else { "" }
            ));
        }
    }
    Ok(())
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{e}")
            } else {
                write!(out, "{e}")
            };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("srb").chain(args.iter().copied()), &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn metrics_example_table() {
        let (code, out, _) = run_args(&["metrics", "--paper-example"]);
        assert_eq!(code, 0);
        assert!(out.contains("100MB"));
        assert!(out.contains("2.13GB"));
        assert!(out.contains("4MB"));
        assert!(out.starts_with("effective: srb metrics"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_args(&["encode"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["bogus"]).0, EXIT_USAGE);
        assert_eq!(run_args(&["metrics", "--nodes", "10", "--shards", "3"]).0, EXIT_USAGE);
    }

    #[test]
    fn encode_requires_exactly_l_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("node.srb");
        let blocks = dir.path().join("blocks");
        fs::create_dir(&blocks).unwrap();
        let (code, _, err) = run_args(&[
            "encode",
            "--blocks",
            blocks.to_str().unwrap(),
            "--k",
            "1",
            "--alpha",
            "1",
            "--gamma",
            "1",
            "--field",
            "prime:13",
            "--block-size",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("L = 1"), "{err}");
    }

    #[test]
    fn files_sorted_by_name() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b", "a10", "a2"] {
            fs::write(dir.path().join(name), b"x").unwrap();
        }
        fs::create_dir(dir.path().join("sub")).unwrap();
        let names: Vec<String> = sorted_files(dir.path())
            .unwrap()
            .iter()
            .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["a10", "a2", "b"]);
    }
}
