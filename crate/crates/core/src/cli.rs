//! Batch driver behind the `reparo` binary. Every command writes its
//! machine-readable result to `out` and diagnostics to `err`, and returns the
//! process exit code: 0 valid, 1 invalid or rejected, 2 usage or config error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::codec::{decode_chain, encode_chain, BlockRecord, Export};
use crate::reparo::{propose_repair, validate_chain_detailed, validate_proposal, RepairKind};
use crate::simnet::{monte_carlo_malicious_approval, ScenarioConfig, Simulation};
use crate::types::{Height, TxEntry};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "reparo", version, about = "Repairable ledger toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation scenario.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory receiving the report and node 0's chain export.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// json: full report; csv: the event timeline.
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Validate a chain export from genesis.
    Validate {
        #[arg(long)]
        chain: PathBuf,
    },
    /// Build and check a repair proposal against a chain export.
    Propose {
        #[arg(long)]
        chain: PathBuf,
        /// Proposal file: {"target_height", "new_txs", "kind"}.
        #[arg(long)]
        config: PathBuf,
        /// Where to write the full proposal.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-encode a chain export as a JSON document or a per-block CSV.
    Export {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Read a JSON document or JSON-lines export, validate it and write the
    /// canonical JSON-lines export.
    Import {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the chance that a Byzantine minority wins an approval vote.
    Montecarlo {
        ell: u64,
        rho_tilde: f64,
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli.command, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{}", e.render());
            if code == EXIT_OK {
                let _ = write!(out, "{e}");
            }
            code
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let res = match cmd {
        Command::Run { config, out: dir, seed, format } => cmd_run(&config, dir.as_deref(), seed, format, out),
        Command::Validate { chain } => cmd_validate(&chain, out),
        Command::Propose { chain, config, out: path } => cmd_propose(&chain, &config, path.as_deref(), out),
        Command::Export { chain, out: path, format } => cmd_export(&chain, path.as_deref(), format, out),
        Command::Import { chain, out: path } => cmd_import(&chain, path.as_deref(), out),
        Command::Montecarlo { ell, rho_tilde, trials, seed } => cmd_montecarlo(ell, rho_tilde, trials, seed, out),
    };
    match res {
        Ok(code) => code,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

struct Failure(i32, String);

type CmdResult = Result<i32, Failure>;

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn invalid(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_INVALID, msg.to_string())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Result<(), Failure> {
    fs::write(path, body).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, body: &str) -> Result<(), Failure> {
    out.write_all(body.as_bytes()).map_err(|e| usage(e))
}

fn load_chain(path: &Path) -> Result<Export, Failure> {
    let text = read(path)?;
    decode_chain(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_run(config: &Path, dir: Option<&Path>, seed: Option<u64>, format: Format, out: &mut dyn Write) -> CmdResult {
    let mut cfg = ScenarioConfig::from_json(&read(config)?).map_err(usage)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let sim = Simulation::new(cfg).map_err(usage)?.run();
    let report = sim.report();
    let body = match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report.timeline_csv(),
    };
    if let Some(dir) = dir {
        fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
        let name = match format {
            Format::Json => "report.json",
            Format::Csv => "timeline.csv",
        };
        write_file(&dir.join(name), &body)?;
        let v = sim.view(0);
        write_file(&dir.join("chain.jsonl"), &encode_chain(sim.params(), &v.chain, &v.layer))?;
    }
    emit(out, &body)?;
    Ok(EXIT_OK)
}

fn cmd_validate(chain: &Path, out: &mut dyn Write) -> CmdResult {
    let ex = load_chain(chain)?;
    match validate_chain_detailed(&ex.chain, &ex.layer, &ex.params) {
        Ok(()) => {
            emit(out, &format!("{}\n", json!({"valid": true, "length": ex.chain.len()})))?;
            Ok(EXIT_OK)
        }
        Err(e) => {
            let v = json!({"valid": false, "height": e.height, "clause": format!("{:?}", e.fault)});
            emit(out, &format!("{v}\n"))?;
            Err(invalid(e))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProposalFile {
    target_height: Height,
    new_txs: Vec<TxEntry>,
    kind: RepairKind,
}

fn cmd_propose(chain: &Path, proposal: &Path, dest: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let ex = load_chain(chain)?;
    let file: ProposalFile = serde_json::from_str(&read(proposal)?).map_err(|e| usage(format!("{}: {e}", proposal.display())))?;
    let checked = propose_repair(&ex.chain, file.target_height, file.new_txs, &ex.params).and_then(|rp| {
        validate_proposal(&ex.chain, &rp, &ex.params)?;
        Ok(rp)
    });
    let rp = match checked {
        Ok(rp) if rp.kind == file.kind => rp,
        Ok(rp) => {
            emit(out, &format!("{}\n", json!({"accepted": false, "reason": "kind mismatch", "kind": rp.kind})))?;
            return Err(invalid(format!("proposal is a {:?} repair, file says {:?}", rp.kind, file.kind)));
        }
        Err(e) => {
            emit(out, &format!("{}\n", json!({"accepted": false, "reason": e.to_string()})))?;
            return Err(invalid(e));
        }
    };
    if let Some(dest) = dest {
        write_file(dest, &(serde_json::to_string_pretty(&rp).expect("proposal serializes") + "\n"))?;
    }
    let v = json!({
        "accepted": true,
        "id": rp.id,
        "kind": rp.kind,
        "request_data": hex::encode(rp.request_data()),
    });
    emit(out, &format!("{v}\n"))?;
    Ok(EXIT_OK)
}

fn records(text: &str) -> Vec<BlockRecord> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("decoded export re-parses"))
        .collect()
}

fn block_csv(ex: &Export) -> String {
    let mut s = String::from("height,slot,hash,txs,redacted,repaired,approvals\n");
    for (h, b) in ex.chain.blocks.iter().enumerate() {
        let redacted = b.txs.iter().filter(|t| matches!(t, TxEntry::Redacted(_))).count();
        s += &format!(
            "{h},{},{},{},{redacted},{},{}\n",
            b.header.slot,
            b.hash().to_hex(),
            b.txs.len(),
            ex.layer.rdb[h].is_some(),
            ex.layer.adb[h].len()
        );
    }
    s
}

fn cmd_export(chain: &Path, dest: Option<&Path>, format: Format, out: &mut dyn Write) -> CmdResult {
    let ex = load_chain(chain)?;
    let body = match format {
        Format::Json => {
            let recs = records(&encode_chain(&ex.params, &ex.chain, &ex.layer));
            serde_json::to_string_pretty(&recs).expect("records serialize") + "\n"
        }
        Format::Csv => block_csv(&ex),
    };
    match dest {
        Some(p) => write_file(p, &body)?,
        None => emit(out, &body)?,
    }
    Ok(EXIT_OK)
}

fn cmd_import(chain: &Path, dest: Option<&Path>, out: &mut dyn Write) -> CmdResult {
    let text = read(chain)?;
    let lines = match serde_json::from_str::<Vec<BlockRecord>>(&text) {
        Ok(recs) => recs
            .iter()
            .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
            .collect(),
        Err(_) => text,
    };
    let ex = decode_chain(&lines).map_err(|e| usage(format!("{}: {e}", chain.display())))?;
    if let Err(e) = validate_chain_detailed(&ex.chain, &ex.layer, &ex.params) {
        let v = json!({"valid": false, "height": e.height, "clause": format!("{:?}", e.fault)});
        emit(out, &format!("{v}\n"))?;
        return Err(invalid(e));
    }
    let canonical = encode_chain(&ex.params, &ex.chain, &ex.layer);
    match dest {
        Some(p) => {
            write_file(p, &canonical)?;
            emit(out, &format!("{}\n", json!({"valid": true, "length": ex.chain.len()})))?;
        }
        None => emit(out, &canonical)?,
    }
    Ok(EXIT_OK)
}

fn cmd_montecarlo(ell: u64, rho_tilde: f64, trials: u64, seed: u64, out: &mut dyn Write) -> CmdResult {
    if ell == 0 || trials == 0 || !(0.0..=1.0).contains(&rho_tilde) {
        return Err(usage("need ell >= 1, trials >= 1 and rho_tilde in [0,1]"));
    }
    let r = monte_carlo_malicious_approval(ell, rho_tilde, trials, seed);
    emit(out, &(serde_json::to_string_pretty(&r).expect("result serializes") + "\n"))?;
    Ok(EXIT_OK)
}
