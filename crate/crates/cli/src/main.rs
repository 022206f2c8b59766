//! `aes-dfa`: simulate glitch campaigns, characterize faults and recover keys.
//!
//! Exit codes: 0 on success, 1 when a search finds nothing, 2 for bad input.

mod config;

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aes_dfa::aes::{expand_key, parse_block, Block, KeySchedule, KeySize};
use aes_dfa::attack::{pools_from_localization, recover, AttackConfig, AttackData, Mode, DEFAULT_MAX_GROUPINGS};
use aes_dfa::buster::recover_hidden_with;
use aes_dfa::fault::{generate_campaign, BorrowArtifacts};
use aes_dfa::localize::{localize_batch, Localization};
use aes_dfa::profile::{recommend_offsets, OffsetProfile};
use aes_dfa::record::{read_jsonl, write_jsonl, CiphertextRecord, GlitchTime, RecordError};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "aes-dfa", version, about = "AES fault campaign toolkit")]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a simulated campaign from a config file.
    Simulate {
        config: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Locate the fault in every record (needs the key).
    Localize {
        records: PathBuf,
        #[arg(long)]
        key: String,
    },
    /// Tables of faulted operations and corrupted bit counts per offset.
    Histogram {
        records: PathBuf,
        #[arg(long)]
        key: String,
    },
    /// Best glitch offset for each target round.
    Recommend {
        records: PathBuf,
        #[arg(long)]
        key: String,
        /// Target rounds; defaults to the two rounds the attack needs.
        #[arg(long, value_delimiter = ',')]
        rounds: Vec<u8>,
    },
    /// Recover the key from faulty ciphertexts.
    Attack {
        records: PathBuf,
        #[arg(long, default_value = "auto")]
        mode: Mode,
        /// Offsets whose records fault two rounds before the end.
        #[arg(long, value_delimiter = ',')]
        r2: Vec<GlitchTime>,
        /// Offsets whose records fault three rounds before the end.
        #[arg(long, value_delimiter = ',')]
        r3: Vec<GlitchTime>,
        /// Pool records by localizing with this key instead of by offset.
        #[arg(long)]
        split_key: Option<String>,
        /// Correct ciphertext; defaults to the most frequent unfaulted one.
        #[arg(long)]
        clean: Option<String>,
        #[arg(long, default_value_t = 256)]
        key_bits: u32,
        #[arg(long, default_value_t = DEFAULT_MAX_GROUPINGS)]
        max_groupings: u64,
        /// Evaluate every grouping even after a key is found.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Recover hidden blocks from borrow-chain artifacts (JSON object or array).
    Bust { artifacts: PathBuf },
}

fn load_records(path: &Path) -> Result<Vec<CiphertextRecord>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_jsonl(BufReader::new(file)).map_err(|e| match e {
        RecordError::Parse { line, message } => {
            anyhow!("{}: line {line}: {message}", path.display())
        }
        RecordError::Io(e) => anyhow!("reading {}: {e}", path.display()),
    })
}

fn parse_key(hex_key: &str) -> Result<KeySchedule> {
    let bytes = hex::decode(hex_key.trim()).map_err(|e| anyhow!("key: {e}"))?;
    expand_key(&bytes).map_err(|e| anyhow!("key: {e}"))
}

#[derive(Serialize)]
struct LocalizedLine {
    index: usize,
    n: GlitchTime,
    m: GlitchTime,
    step: Option<String>,
    mask: Option<String>,
    hamming: Option<u32>,
    ambiguous: Option<bool>,
}

fn simulate(config: &Path, output: Option<&Path>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = config::parse_config(&text).map_err(|e| anyhow!("{}: {e}", config.display()))?;
    let records = generate_campaign(&cfg)?;
    let faulted = records.iter().filter(|r| r.faulted).count();
    match output {
        Some(p) => write_jsonl(BufWriter::new(File::create(p)?), &records)?,
        None => write_jsonl(io::stdout().lock(), &records)?,
    }
    eprintln!("simulated {} records, {faulted} faulted", records.len());
    Ok(ExitCode::SUCCESS)
}

fn localize_cmd(records: &Path, key: &str) -> Result<ExitCode> {
    let ks = parse_key(key)?;
    let records = load_records(records)?;
    let mut out = BufWriter::new(io::stdout().lock());
    for (index, (rec, loc)) in localize_batch(&ks, &records).into_iter().enumerate() {
        let mut line = LocalizedLine {
            index,
            n: rec.n,
            m: rec.m,
            step: None,
            mask: None,
            hamming: None,
            ambiguous: None,
        };
        if let Localization::Fault(r) = loc {
            line.step = Some(r.step.to_string());
            line.mask = Some(r.mask.to_hex());
            line.hamming = Some(r.hamming);
            line.ambiguous = Some(r.ambiguous);
        }
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn histogram(records: &Path, key: &str) -> Result<ExitCode> {
    let ks = parse_key(key)?;
    let records = load_records(records)?;
    let profile = OffsetProfile::from_records(&ks, &records);
    let n = ks.rounds();
    println!("faulted operation\n{}", profile.render_operations());
    println!("corrupted bits\n{}", profile.render_bits());
    println!("offsets\n{}", profile.render_offsets(&[n - 2, n - 3]));
    Ok(ExitCode::SUCCESS)
}

fn recommend(records: &Path, key: &str, rounds: &[u8]) -> Result<ExitCode> {
    let ks = parse_key(key)?;
    let records = load_records(records)?;
    let profile = OffsetProfile::from_records(&ks, &records);
    let n = ks.rounds();
    let targets = if rounds.is_empty() { vec![n - 2, n - 3] } else { rounds.to_vec() };
    match recommend_offsets(&profile, &targets) {
        Ok(picks) => {
            for (round, off) in picks {
                let rate = profile.offsets[&off].rate(round);
                println!("round {round}: offset {off} (rate {rate:.3})");
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(ExitCode::from(1))
        }
    }
}

/// Most frequent ciphertext among runs not flagged as faulted, or among all
/// runs when every one is flagged.
fn most_frequent(records: &[CiphertextRecord]) -> Option<Block> {
    let any_clean = records.iter().any(|r| !r.faulted);
    let mut counts: HashMap<Block, (usize, usize)> = HashMap::new();
    for (i, r) in records.iter().enumerate().filter(|(_, r)| !(any_clean && r.faulted)) {
        counts.entry(r.ciphertext).or_insert((0, i)).0 += 1;
    }
    counts
        .into_iter()
        .max_by_key(|(_, (c, first))| (*c, std::cmp::Reverse(*first)))
        .map(|(b, _)| b)
}

#[allow(clippy::too_many_arguments)]
fn attack(
    records: &Path,
    mode: Mode,
    r2: &[GlitchTime],
    r3: &[GlitchTime],
    split_key: Option<&str>,
    clean: Option<&str>,
    key_bits: u32,
    max_groupings: u64,
    exhaustive: bool,
) -> Result<ExitCode> {
    let size = KeySize::from_bits(key_bits).ok_or_else(|| anyhow!("unsupported key size {key_bits}"))?;
    let records = load_records(records)?;
    let first = records.first().ok_or_else(|| anyhow!("no records"))?;
    let pt = first.plaintext;
    if let Some(i) = records.iter().position(|r| r.plaintext != pt) {
        bail!("record {} uses a different plaintext", i + 1);
    }
    let clean_ct = match clean {
        Some(h) => parse_block(h).map_err(|e| anyhow!("clean: {e}"))?,
        None => most_frequent(&records).expect("records not empty"),
    };
    let faulty: Vec<CiphertextRecord> = records.into_iter().filter(|r| r.ciphertext != clean_ct).collect();
    let pools = match split_key {
        Some(k) => {
            let ks = parse_key(k)?;
            if ks.size() != size {
                bail!("--split-key is AES-{}, --key-bits is {key_bits}", ks.size().bits());
            }
            pools_from_localization(&ks, &faulty)
        }
        None => {
            let lists = [r2, r3];
            let needed = size.trailing_keys_needed();
            if lists[..needed].iter().any(|l| l.is_empty()) {
                bail!("give --r2{} offsets or --split-key", if needed > 1 { " and --r3" } else { "" });
            }
            lists[..needed]
                .iter()
                .map(|l| faulty.iter().filter(|r| l.contains(&r.n)).map(|r| r.ciphertext).collect())
                .collect()
        }
    };
    for (i, p) in pools.iter().enumerate() {
        eprintln!("pool r{}: {} faulty ciphertexts", i + 2, p.len());
    }
    let data = AttackData::new(size, pt, clean_ct, pools)?;
    let cfg = AttackConfig {
        mode,
        max_groupings,
        exhaustive,
    };
    let report = recover(&data, &cfg);
    eprintln!(
        "{} groupings in {:.2} s",
        report.total_groupings(),
        report.wall_time.as_secs_f64()
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(if report.recovered_key.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn bust(path: &Path, workers: usize) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let sets: Vec<BorrowArtifacts> = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value),
        other => serde_json::from_value(other).map(|a| vec![a]),
    }
    .map_err(|e| anyhow!("{}: {e}", path.display()))?;

    let mut failed = 0;
    for (i, art) in sets.iter().enumerate() {
        match recover_hidden_with(art, workers) {
            Ok((hidden, stats)) => {
                println!("{}", hex::encode(hidden));
                eprintln!(
                    "set {i}: {} AES ops in {:.2} s ({:.1} M/s)",
                    stats.aes_ops,
                    stats.elapsed.as_secs_f64(),
                    stats.ops_per_second() / 1e6
                );
            }
            Err(e) => {
                failed += 1;
                println!("error");
                eprintln!("set {i}: {e}");
            }
        }
    }
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("configuring worker threads")?;
    }
    let workers = rayon::current_num_threads();
    match cli.command {
        Command::Simulate { config, output } => simulate(&config, output.as_deref()),
        Command::Localize { records, key } => localize_cmd(&records, &key),
        Command::Histogram { records, key } => histogram(&records, &key),
        Command::Recommend { records, key, rounds } => recommend(&records, &key, &rounds),
        Command::Attack {
            records,
            mode,
            r2,
            r3,
            split_key,
            clean,
            key_bits,
            max_groupings,
            exhaustive,
        } => attack(
            &records,
            mode,
            &r2,
            &r3,
            split_key.as_deref(),
            clean.as_deref(),
            key_bits,
            max_groupings,
            exhaustive,
        ),
        Command::Bust { artifacts } => bust(&artifacts, workers),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
