//! `chrconf`: confluence checking for CHR programs from the command line.
//!
//! Exit codes: 0 confluent or locally confluent, 1 not confluent, 2 cannot
//! prove (or oracle inconclusive), 3 usage, input or parse error.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use chrconf_core::confluence::join::JoinLimits;
use chrconf_core::confluence::report::{classical_dot, corner_dot, OracleCrossCheck, Report};
use chrconf_core::confluence::spec::{parse_spec, Spec, SpecEquivalence};
use chrconf_core::confluence::{check, Config, Mode, Verdict};
use chrconf_core::lang::{parse_constraints, parse_program, ParseError, Program};
use chrconf_core::semantics::explore::Limits;
use chrconf_core::semantics::oracle::{oracle_local_confluence, Equivalence, Identity, OracleReport};
use chrconf_core::semantics::{canonicalize, CanonState, StateRepr};

const USAGE_ERROR: u8 = 3;

#[derive(Parser)]
#[command(name = "chrconf", version, about = "Confluence checker for Constraint Handling Rules programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Classical,
    Invariant,
    ModEquiv,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Classical => Mode::Classical,
            ModeArg::Invariant => Mode::Invariant,
            ModeArg::ModEquiv => Mode::ModEquiv,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a program for confluence.
    Check {
        /// CHR source file.
        program: PathBuf,
        #[arg(long, value_enum, default_value = "classical")]
        mode: ModeArg,
        /// Invariant and equivalence declarations (`.cspec`).
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Take termination as given, so local confluence yields confluence.
        #[arg(long)]
        assume_terminating: bool,
        #[arg(long, default_value_t = 8)]
        join_depth: usize,
        #[arg(long, default_value_t = 4)]
        split_depth: usize,
        /// State limit for exhaustive enumeration.
        #[arg(long, default_value_t = 10_000)]
        max_states: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write one Graphviz file per corner into this directory.
        #[arg(long)]
        export_dot: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Sampled groundings per meta transition for the simulation audit
        /// (0 disables it).
        #[arg(long, default_value_t = 1)]
        audit_samples: usize,
        /// Sampled states per invariant template for checking that
        /// transitions preserve the invariant (0 disables it).
        #[arg(long, default_value_t = 0)]
        audit_invariant: usize,
        /// Ground initial state to cross-check with the exhaustive oracle;
        /// repeatable.
        #[arg(long = "cross-check", value_name = "INIT")]
        cross_check: Vec<String>,
    },
    /// Enumerate every state reachable from ground initial states and audit
    /// all corners for joinability.
    Oracle {
        program: PathBuf,
        /// Initial state, e.g. `item(a), item(b), set([])`; repeatable.
        #[arg(long = "init", value_name = "STATE")]
        inits: Vec<String>,
        /// File with one initial state per line (`%` starts a comment).
        #[arg(long)]
        inits_file: Option<PathBuf>,
        /// Join modulo the equivalences of this specification.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 10_000)]
        max_states: usize,
        #[arg(long, default_value_t = 200)]
        max_depth: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the transition graph as Graphviz to this file.
        #[arg(long)]
        export_dot: Option<PathBuf>,
    },
}

/// Writes to stdout; a reader that went away (`| head`) is not an error.
fn emit(s: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(s.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn located(path: &Path, e: ParseError) -> anyhow::Error {
    anyhow!("{}:{e}", path.display())
}

fn load_program(path: &Path) -> Result<Program> {
    parse_program(&read(path)?).map_err(|e| located(path, e))
}

fn load_spec(path: Option<&Path>) -> Result<Spec> {
    match path {
        None => Ok(Spec::default()),
        Some(p) => parse_spec(&read(p)?).map_err(|e| located(p, e)),
    }
}

fn parse_init(src: &str, origin: &str) -> Result<CanonState> {
    let src = src.trim().trim_end_matches('.');
    let atoms = parse_constraints(src).map_err(|e| anyhow!("{origin}:{e}"))?;
    if atoms.is_empty() {
        bail!("{origin}: empty initial state");
    }
    Ok(canonicalize(&StateRepr::query(atoms)))
}

fn load_inits(inline: &[String], file: Option<&Path>) -> Result<Vec<CanonState>> {
    let mut out = Vec::new();
    for (i, s) in inline.iter().enumerate() {
        out.push(parse_init(s, &format!("init {}", i + 1))?);
    }
    if let Some(p) = file {
        for (n, line) in read(p)?.lines().enumerate() {
            let line = line.split('%').next().unwrap_or("").trim();
            if !line.is_empty() {
                out.push(parse_init(line, &format!("{}:{}", p.display(), n + 1))?);
            }
        }
    }
    Ok(out)
}

fn run_oracle(inits: &[CanonState], prog: &Program, spec: &Spec, modulo: bool, limits: Limits) -> OracleReport {
    let eq: &dyn Equivalence = if modulo { &SpecEquivalence(spec) } else { &Identity };
    oracle_local_confluence(inits, prog, eq, limits)
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    program: &Path,
    mode: Mode,
    spec_path: Option<&Path>,
    assume_terminating: bool,
    join: JoinLimits,
    max_states: usize,
    invariant_samples: usize,
    format: Format,
    export_dot: Option<&Path>,
    cross_check: &[String],
) -> Result<u8> {
    let prog = load_program(program)?;
    if mode != Mode::Classical && spec_path.is_none() {
        bail!("mode {mode} needs --spec");
    }
    let spec = load_spec(spec_path)?;
    let limits = Limits { max_states, ..Limits::default() };
    let cfg = Config { mode, assume_terminating, join, limits, invariant_samples };
    let result = check(&prog, &spec, &cfg)?;
    let mut report = Report::new(&result, &prog);
    report.program = Some(program.display().to_string());
    report.spec = spec_path.map(|p| p.display().to_string());
    if !cross_check.is_empty() {
        let inits = load_inits(cross_check, None)?;
        let o = run_oracle(&inits, &prog, &spec, mode == Mode::ModEquiv, cfg.limits);
        let outside: Vec<String> = if mode == Mode::Classical {
            Vec::new()
        } else {
            inits.iter().filter(|s| !spec.admits(s)).map(ToString::to_string).collect()
        };
        let lc = o.locally_confluent();
        // the instances can confirm a positive verdict only inside the
        // invariant, and can confirm but never refute a negative one
        let agrees = match (result.verdict, lc) {
            (Verdict::Confluent | Verdict::LocallyConfluent, Some(l)) if outside.is_empty() => Some(l),
            (Verdict::NotConfluent, Some(false)) => Some(true),
            _ => None,
        };
        report.oracle = Some(OracleCrossCheck {
            inits: inits.iter().map(ToString::to_string).collect(),
            outside_invariant: outside,
            states: o.graph.len(),
            corners_checked: o.corners_checked,
            non_joinable: o.non_joinable.len(),
            locally_confluent: lc,
            agrees,
        });
    }
    if let Some(dir) = export_dot {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        for (i, c) in report.classical_corners.iter().enumerate() {
            let p = dir.join(format!("corner_{}.dot", i + 1));
            fs::write(&p, classical_dot(c)).with_context(|| format!("cannot write {}", p.display()))?;
        }
        for (i, c) in report.meta_corners.iter().enumerate() {
            let p = dir.join(format!("corner_{}.dot", i + 1));
            fs::write(&p, corner_dot(c)).with_context(|| format!("cannot write {}", p.display()))?;
        }
    }
    match format {
        Format::Text => emit(&report.to_text())?,
        Format::Json => emit(&format!("{}\n", report.to_json()))?,
    }
    Ok(result.verdict.exit_code() as u8)
}

#[allow(clippy::too_many_arguments)]
fn cmd_oracle(
    program: &Path,
    inits: &[String],
    inits_file: Option<&Path>,
    spec_path: Option<&Path>,
    limits: Limits,
    format: Format,
    export_dot: Option<&Path>,
) -> Result<u8> {
    let prog = load_program(program)?;
    let spec = load_spec(spec_path)?;
    let inits = load_inits(inits, inits_file)?;
    if inits.is_empty() {
        bail!("no initial states given (use --init or --inits-file)");
    }
    let modulo = !spec.equivs.is_empty();
    let o = run_oracle(&inits, &prog, &spec, modulo, limits);
    let lc = o.locally_confluent();
    if let Some(p) = export_dot {
        fs::write(p, o.graph.to_dot(&prog)).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let finals: Vec<String> = o.finals().iter().map(|s| s.to_string()).collect();
    let corners: Vec<serde_json::Value> = o
        .non_joinable
        .iter()
        .map(|c| {
            serde_json::json!({
                "kind": c.kind,
                "ancestor": o.graph.nodes[c.ancestor].to_string(),
                "left": o.graph.nodes[c.left].to_string(),
                "right": o.graph.nodes[c.right].to_string(),
                "left_label": c.left_label.as_ref().map(|l| l.render(&prog)),
                "right_label": c.right_label.render(&prog),
            })
        })
        .collect();
    match format {
        Format::Json => {
            let v = serde_json::json!({
                "schema_version": 1,
                "program": program.display().to_string(),
                "modulo_equivalence": modulo,
                "inits": inits.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "states": o.graph.len(),
                "truncated": o.graph.truncated(),
                "finals": finals,
                "corners_checked": o.corners_checked,
                "non_joinable": corners,
                "locally_confluent": lc,
            });
            emit(&format!("{}\n", serde_json::to_string_pretty(&v)?))?;
        }
        Format::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "states: {}{}", o.graph.len(), if o.graph.truncated() { " (truncated)" } else { "" });
            let _ = writeln!(out, "finals:");
            for f in &finals {
                let _ = writeln!(out, "  {f}");
            }
            let _ = writeln!(out, "corners checked: {}", o.corners_checked);
            for c in &corners {
                let _ = writeln!(
                    out,
                    "non-joinable: {} <-[{}]- {} -[{}]-> {}",
                    c["left"].as_str().unwrap_or(""),
                    c["left_label"].as_str().unwrap_or("~"),
                    c["ancestor"].as_str().unwrap_or(""),
                    c["right_label"].as_str().unwrap_or(""),
                    c["right"].as_str().unwrap_or("")
                );
            }
            let _ = writeln!(
                out,
                "{}",
                match lc {
                    Some(true) => "all corners joinable",
                    Some(false) => "NOT locally confluent",
                    None => "inconclusive: enumeration truncated",
                }
            );
            emit(&out)?;
        }
    }
    Ok(match lc {
        Some(true) => 0,
        Some(false) => 1,
        None => 2,
    })
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check {
            program,
            mode,
            spec,
            assume_terminating,
            join_depth,
            split_depth,
            max_states,
            format,
            export_dot,
            seed,
            audit_samples,
            audit_invariant,
            cross_check,
        } => {
            let join = JoinLimits { depth: join_depth, split_depth, seed, audit_samples, ..JoinLimits::default() };
            cmd_check(
                &program,
                mode.into(),
                spec.as_deref(),
                assume_terminating,
                join,
                max_states,
                audit_invariant,
                format,
                export_dot.as_deref(),
                &cross_check,
            )
        }
        Command::Oracle { program, inits, inits_file, spec, max_states, max_depth, format, export_dot } => cmd_oracle(
            &program,
            &inits,
            inits_file.as_deref(),
            spec.as_deref(),
            Limits { max_states, max_depth },
            format,
            export_dot.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
