//! Command implementations for the `povmctx` binary.
//!
//! Every command returns an [`Output`]: the text to print and the exit code.
//! Exit codes: 0 success, 1 failed check, 2 usage or parse error, 3 a
//! confirmed impossibility (non-colorable, no one-to-one extension, no
//! mismatch-free slot assignment).

use std::fs;
use std::io::Read;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use povmctx::dilation::{
    exhaustive_extension_audit, extension_audit, one_to_one_feasibility, sequential_dilation,
    sequential_dilations, verify_dilation,
};
use povmctx::hv::{simulate_povm, MonteCarlo};
use povmctx::ks::{enumerate_assignments_with_workers, ContextHypergraph};
use povmctx::povm::{check_family, family_by_name, FamilyDocument};
use povmctx::{BlochVector, PovmFamily, TOL};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IMPOSSIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "povmctx", version, about = "Contextual qubit POVM workbench")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a POVM family as JSON.
    Family(Common),
    /// Validate completeness, incidence and positivity of a family.
    Check(Common),
    /// Exhaustive noncontextual 0/1 assignment search.
    KsSearch(Common),
    /// Hidden-variable Monte Carlo of one context against the Born rule.
    Simulate(Common),
    /// Verify sequential Naimark dilations.
    Dilate(Common),
    /// Compare extended projectors of shared elements across contexts.
    Audit(Common),
    /// Test the one-to-one extension hypothesis symbolically.
    Feasibility(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Nakamura,
    Cabello,
}

impl Model {
    fn name(self) -> &'static str {
        match self {
            Model::Nakamura => "nakamura",
            Model::Cabello => "cabello",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Built-in family.
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Family JSON file (`-` for stdin), used by `check`.
    #[arg(long)]
    pub family: Option<PathBuf>,
    /// Hypergraph text file (`-` for stdin), used by `ks-search`.
    #[arg(long)]
    pub hypergraph: Option<PathBuf>,
    /// 1-based context number.
    #[arg(long)]
    pub context: Option<usize>,
    /// State Bloch vector `x,y,z`; normalized on ingest.
    #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
    pub state: String,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub samples: u64,
    /// Master seed; drawn from entropy when omitted and always echoed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; never changes the output.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolved configuration echoed in every output. The worker count is left
/// out so that it cannot change any output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: Option<Model>,
    pub family_file: Option<String>,
    pub hypergraph_file: Option<String>,
    pub context: Option<usize>,
    pub state: BlochVector,
    pub samples: u64,
    pub seed: u64,
    pub format: Format,
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn usage(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: msg.into(),
        }
    }
}

pub fn parse_state(text: &str) -> Result<BlochVector, String> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("invalid --state `{text}`: {e}"))?;
    match parts.as_slice() {
        [x, y, z] => BlochVector::normalized(*x, *y, *z)
            .map_err(|e| format!("invalid --state `{text}`: {e}")),
        _ => Err(format!("--state needs three components, got `{text}`")),
    }
}

fn read_input(path: &PathBuf) -> Result<String, String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| format!("reading stdin: {e}"))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))
    }
}

fn resolve(common: &Common) -> Result<RunConfig, String> {
    Ok(RunConfig {
        model: common.model,
        family_file: common.family.as_ref().map(|p| p.display().to_string()),
        hypergraph_file: common.hypergraph.as_ref().map(|p| p.display().to_string()),
        context: common.context,
        state: parse_state(&common.state)?,
        samples: common.samples,
        seed: common.seed.unwrap_or_else(rand::random),
        format: common.format,
        out: common.out.as_ref().map(|p| p.display().to_string()),
    })
}

fn builtin(cfg: &RunConfig) -> Result<PovmFamily, String> {
    let model = cfg.model.ok_or("--model is required")?;
    Ok(family_by_name(model.name()).expect("built-in model"))
}

/// Zero-based context index from the 1-based `--context`.
fn context_index(cfg: &RunConfig, f: &PovmFamily) -> Result<Option<usize>, String> {
    match cfg.context {
        None => Ok(None),
        Some(c) if c >= 1 && c <= f.contexts().len() => Ok(Some(c - 1)),
        Some(c) => Err(format!(
            "--context {c} is out of range 1..={} for {}",
            f.contexts().len(),
            f.name()
        )),
    }
}

fn envelope(command: &str, cfg: &RunConfig, result: impl Serialize) -> String {
    let v = json!({
        "command": command,
        "config": cfg,
        "result": result,
    });
    serde_json::to_string_pretty(&v).expect("serializable") + "\n"
}

fn json_only(cfg: &RunConfig, command: &str) -> Result<(), String> {
    match cfg.format {
        Format::Json => Ok(()),
        Format::Csv => Err(format!("`{command}` has no CSV output")),
    }
}

fn done(code: i32, stdout: String) -> Output {
    Output {
        code,
        stdout,
        stderr: String::new(),
    }
}

/// A family document either bare or wrapped in a command envelope.
fn family_from_text(text: &str) -> Result<Result<PovmFamily, String>, String> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| format!("family file is not JSON: {e}"))?;
    let doc = match value.get("result") {
        Some(inner) if value.get("command").is_some() => inner.clone(),
        _ => value,
    };
    Ok(serde_json::from_value::<FamilyDocument>(doc)
        .map_err(|e| format!("family document rejected: {e}"))
        .and_then(|d| PovmFamily::from_document(d).map_err(|e| e.to_string())))
}

fn cmd_family(cfg: &RunConfig) -> Result<Output, String> {
    json_only(cfg, "family")?;
    let f = builtin(cfg)?;
    Ok(done(EXIT_OK, envelope("family", cfg, f.to_document())))
}

fn cmd_check(cfg: &RunConfig, common: &Common) -> Result<Output, String> {
    json_only(cfg, "check")?;
    let f = match &common.family {
        Some(path) => match family_from_text(&read_input(path)?)? {
            Ok(f) => f,
            Err(msg) => {
                let stdout = envelope(
                    "check",
                    cfg,
                    json!({ "passed": false, "failures": [format!("load: {msg}")] }),
                );
                return Ok(Output {
                    code: EXIT_CHECK_FAILED,
                    stdout,
                    stderr: format!("check failed: {msg}"),
                });
            }
        },
        None => builtin(cfg)?,
    };
    let report = check_family(&f);
    let code = if report.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    let stderr = report
        .failures
        .iter()
        .map(|m| format!("check failed: {m}"))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Output {
        code,
        stdout: envelope("check", cfg, &report),
        stderr,
    })
}

fn cmd_ks(cfg: &RunConfig, common: &Common) -> Result<Output, String> {
    json_only(cfg, "ks-search")?;
    let h = match &common.hypergraph {
        Some(path) => ContextHypergraph::parse(&read_input(path)?).map_err(|e| e.to_string())?,
        None => ContextHypergraph::from_family(&builtin(cfg)?),
    };
    let verdict = enumerate_assignments_with_workers(&h, common.workers as usize)
        .map_err(|e| e.to_string())?;
    let code = if verdict.colorable {
        EXIT_OK
    } else {
        EXIT_IMPOSSIBLE
    };
    Ok(done(code, envelope("ks-search", cfg, &verdict)))
}

fn cmd_simulate(cfg: &RunConfig, common: &Common) -> Result<Output, String> {
    let f = builtin(cfg)?;
    let c = context_index(cfg, &f)?.unwrap_or(0);
    let mc = MonteCarlo::new(cfg.samples, cfg.seed).with_workers(common.workers as usize);
    let report = simulate_povm(&f, c, &cfg.state, &mc).map_err(|e| e.to_string())?;
    let code = if report.passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    };
    let stdout = match cfg.format {
        Format::Json => envelope("simulate", cfg, &report),
        Format::Csv => {
            let mut head = format!(
                "# model={} context={} state={},{},{} samples={} seed={}\n",
                f.name(),
                c + 1,
                cfg.state.x(),
                cfg.state.y(),
                cfg.state.z(),
                cfg.samples,
                cfg.seed
            );
            head.push_str(&report.to_csv());
            head
        }
    };
    Ok(done(code, stdout))
}

fn cmd_dilate(cfg: &RunConfig) -> Result<Output, String> {
    json_only(cfg, "dilate")?;
    let f = builtin(cfg)?;
    let contexts: Vec<usize> = match context_index(cfg, &f)? {
        Some(c) => vec![c],
        None => (0..f.contexts().len()).collect(),
    };
    let residuals = contexts
        .iter()
        .map(|&c| {
            let s = sequential_dilation(&f, c)?;
            verify_dilation(&s, &f, c)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let passed = residuals.iter().all(|r| r.passes(TOL));
    let result = json!({
        "family": f.name(),
        "tensor_order": "ancilla ⊗ qubit, partial trace over the ancilla",
        "tolerance": TOL,
        "contexts": residuals,
        "passed": passed,
    });
    let code = if passed { EXIT_OK } else { EXIT_CHECK_FAILED };
    Ok(done(code, envelope("dilate", cfg, result)))
}

fn cmd_audit(cfg: &RunConfig) -> Result<Output, String> {
    let f = builtin(cfg)?;
    let schemes = sequential_dilations(&f).map_err(|e| e.to_string())?;
    let rows = extension_audit(&f, &schemes).map_err(|e| e.to_string())?;
    let exhaustive = exhaustive_extension_audit(&f).map_err(|e| e.to_string())?;
    let code = if exhaustive.mismatch_free == 0 {
        EXIT_IMPOSSIBLE
    } else {
        EXIT_OK
    };
    let stdout = match cfg.format {
        Format::Json => envelope(
            "audit",
            cfg,
            json!({
                "family": f.name(),
                "rows": rows,
                "mismatched": rows.iter().filter(|r| !r.equal).map(|r| &r.label).collect::<Vec<_>>(),
                "exhaustive": exhaustive,
            }),
        ),
        Format::Csv => {
            let mut s = format!("# model={}\nlabel,context_a,context_b,equal\n", f.name());
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    r.label, r.contexts.0, r.contexts.1, r.equal
                ));
            }
            s
        }
    };
    Ok(done(code, stdout))
}

fn cmd_feasibility(cfg: &RunConfig) -> Result<Output, String> {
    json_only(cfg, "feasibility")?;
    let f = builtin(cfg)?;
    let out = one_to_one_feasibility(&f);
    let code = if out.is_contradiction() {
        EXIT_IMPOSSIBLE
    } else {
        EXIT_OK
    };
    Ok(done(code, envelope("feasibility", cfg, &out)))
}

/// Runs a parsed command line, writing nothing; the caller prints or saves.
pub fn execute(cli: &Cli) -> Output {
    let common = match &cli.command {
        Command::Family(c)
        | Command::Check(c)
        | Command::KsSearch(c)
        | Command::Simulate(c)
        | Command::Dilate(c)
        | Command::Audit(c)
        | Command::Feasibility(c) => c,
    };
    let cfg = match resolve(common) {
        Ok(cfg) => cfg,
        Err(msg) => return Output::usage(msg),
    };
    let result = match &cli.command {
        Command::Family(_) => cmd_family(&cfg),
        Command::Check(c) => cmd_check(&cfg, c),
        Command::KsSearch(c) => cmd_ks(&cfg, c),
        Command::Simulate(c) => cmd_simulate(&cfg, c),
        Command::Dilate(_) => cmd_dilate(&cfg),
        Command::Audit(_) => cmd_audit(&cfg),
        Command::Feasibility(_) => cmd_feasibility(&cfg),
    };
    result.unwrap_or_else(Output::usage)
}
