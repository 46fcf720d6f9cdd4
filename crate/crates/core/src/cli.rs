//! The `ppf` command line.
//!
//! Protocol files are either plain protocol documents or compilation
//! documents. Compilation documents embed explicit protocols where there
//! are some and otherwise record the formula and cutoff the generated
//! stages are rebuilt from.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formula::{AtomKind, Formula, Node, Valuation};
use crate::large::{atom_rdi, compile_large, normalize, remove_helpers, HelperFree};
use crate::pipeline::{compile, compute_cutoff, large_stats, small_stats, CompiledDoc, CompiledProtocol, StageStat};
use crate::protocol::fixtures::{p_n, pp_n};
use crate::protocol::json::{from_doc, rdi_to_doc, to_doc, ProtocolDoc};
use crate::protocol::{Protocol, RdiProtocol};
use crate::small::{compile_small, greater_sum, SmallProtocol};
use crate::system::Population;
use crate::verify::{
    check_computes, check_halting, check_rdi, default_node_cap, inputs_of_size, simulate, RdiCheckParams, SimulationParams,
    VerificationReport,
};

#[derive(Parser, Debug)]
#[command(name = "ppf", version, about = "Compile Presburger predicates into population protocols, then verify and simulate them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Large,
    Small,
    Full,
    RdiThreshold,
    RdiRemainder,
    GreaterSum,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RdiKind {
    Threshold,
    Remainder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FixtureName {
    Pn,
    Ppn,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compile a formula and emit the protocol document.
    Compile {
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum, default_value = "full")]
        mode: Mode,
        /// Cutoff for `small`, population size for `greater-sum`.
        #[arg(long)]
        size: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the construction statistics of a protocol file.
    Stats {
        #[arg(long)]
        protocol: PathBuf,
    },
    /// Run one seeded random execution.
    Simulate {
        #[arg(long)]
        protocol: PathBuf,
        /// Input as `x=3,y=1`.
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = crate::verify::simulate::DEFAULT_MAX_STEPS)]
        max_steps: u64,
        #[arg(long, default_value_t = crate::verify::simulate::DEFAULT_WINDOW)]
        window: u64,
    },
    /// Exhaustively check that a protocol computes a formula.
    Verify {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        formula: String,
        /// `none`, `ge:L` for `(|v| >= L) -> φ` or `lt:L` for `(|v| < L) -> φ`.
        #[arg(long, default_value = "none")]
        guard: String,
        #[arg(long)]
        max_size: u64,
        #[arg(long)]
        min_size: Option<u64>,
        #[arg(long)]
        node_cap: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check the reversible dynamic initialization properties of an atom.
    CheckRdi {
        #[arg(long)]
        formula: String,
        #[arg(long, value_enum)]
        kind: RdiKind,
        #[arg(long, default_value_t = 3)]
        max_pop: u64,
        #[arg(long, default_value_t = 64)]
        depth: usize,
    },
    /// Check that every fair run on inputs of one size halts.
    CheckHalting {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        size: u64,
    },
    /// Emit a built-in example protocol.
    Fixtures {
        #[arg(long, value_enum)]
        name: FixtureName,
        #[arg(long)]
        n: u32,
    },
}

/// Expected-bit guard of `verify`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Guard {
    None,
    AtLeast(u64),
    Below(u64),
}

impl Guard {
    pub fn parse(s: &str) -> Result<Guard> {
        let bad = || Error::Parse { position: 0, message: format!("guard must be none, ge:L or lt:L, got `{s}`") };
        match s.split_once(':') {
            None if s == "none" => Ok(Guard::None),
            Some(("ge", l)) => Ok(Guard::AtLeast(l.parse().map_err(|_| bad())?)),
            Some(("lt", l)) => Ok(Guard::Below(l.parse().map_err(|_| bad())?)),
            _ => Err(bad()),
        }
    }

    pub fn expected(self, phi: &Formula, v: &Valuation) -> bool {
        let n: u64 = v.values().sum();
        match self {
            Guard::None => phi.evaluate(v),
            Guard::AtLeast(l) => n < l || phi.evaluate(v),
            Guard::Below(l) => n >= l || phi.evaluate(v),
        }
    }
}

/// A protocol file, loaded into something that can be run.
pub enum Loaded {
    Explicit(Protocol),
    Large(HelperFree),
    Small(SmallProtocol),
    Full(Box<CompiledProtocol>),
}

macro_rules! with_loaded {
    ($l:expr, $p:ident => $e:expr) => {
        match $l {
            Loaded::Explicit($p) => $e,
            Loaded::Large($p) => $e,
            Loaded::Small($p) => $e,
            Loaded::Full($p) => {
                let $p = &**$p;
                $e
            }
        }
    };
}

pub enum Document {
    Plain(ProtocolDoc),
    Compiled(CompiledDoc),
}

impl Document {
    pub fn parse(text: &str) -> Result<Document> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        if v.get("kind").is_some() && v.get("stage_stats").is_some() {
            Ok(Document::Compiled(serde_json::from_value(v)?))
        } else {
            Ok(Document::Plain(serde_json::from_value(v)?))
        }
    }

    pub fn stage_stats(&self) -> Result<Vec<StageStat>> {
        match self {
            Document::Compiled(d) => Ok(d.stage_stats.clone()),
            Document::Plain(d) => Ok(vec![StageStat::of("protocol", &from_doc(d)?)]),
        }
    }

    pub fn load(&self) -> Result<Loaded> {
        let d = match self {
            Document::Plain(d) => return Ok(Loaded::Explicit(from_doc(d)?)),
            Document::Compiled(d) => d,
        };
        let embedded = || {
            let p = d.protocol.as_ref().ok_or_else(|| Error::Document(format!("`{}` document without protocol", d.kind)))?;
            from_doc(p)
        };
        let formula = || -> Result<Formula> {
            let mut phi = Formula::parse(&d.formula)?;
            if !d.variables.is_empty() {
                let (mut a, mut b) = (phi.vars.clone(), d.variables.clone());
                a.sort();
                b.sort();
                if a != b {
                    return Err(Error::VariableMismatch(format!("{:?} vs {:?}", phi.vars, d.variables)));
                }
                phi.vars = d.variables.clone();
            }
            Ok(phi)
        };
        let ell = || d.ell.ok_or_else(|| Error::Document(format!("`{}` document without ell", d.kind)));
        Ok(match d.kind.as_str() {
            "large" => Loaded::Large(remove_helpers(&embedded()?)?),
            "small" => Loaded::Small(compile_small(&formula()?, ell()?)?),
            "full" => {
                let phi = formula()?;
                let r = compile(&phi)?;
                if r.ell != ell()? || Some(to_doc(&r.large.two_way)) != d.protocol {
                    return Err(Error::Document("embedded protocol does not match the formula".into()));
                }
                Loaded::Full(Box::new(r.protocol))
            }
            "rdi-threshold" | "rdi-remainder" | "greater-sum" => Loaded::Explicit(embedded()?),
            k => return Err(Error::Document(format!("unknown kind `{k}`"))),
        })
    }
}

/// The single atom of `phi` after normalization, looking through negation.
fn single_atom(phi: &Formula, kind: AtomKind) -> Result<crate::formula::Atom> {
    let node = normalize(&phi.node)?;
    let inner = match &node {
        Node::Not(a) => &**a,
        n => n,
    };
    match inner {
        Node::Atom(a) if a.kind == kind => Ok(a.clone()),
        _ => Err(Error::Precondition(format!("`{phi}` does not normalize to a single {kind:?} atom"))),
    }
}

pub fn rdi_for(phi: &Formula, kind: RdiKind) -> Result<RdiProtocol> {
    let k = match kind {
        RdiKind::Threshold => AtomKind::Threshold,
        RdiKind::Remainder => AtomKind::ModThreshold,
    };
    atom_rdi(&single_atom(phi, k)?, &phi.vars, 1)
}

fn rdi_doc(phi: &Formula, kind: RdiKind, name: &str) -> Result<CompiledDoc> {
    let r = rdi_for(phi, kind)?;
    Ok(CompiledDoc {
        kind: name.into(),
        formula: phi.to_string(),
        variables: phi.vars.clone(),
        ell: None,
        size: None,
        stage_stats: vec![StageStat {
            stage: "rdi".into(),
            states: r.num_states() as u64,
            transitions: r.num_transitions() as u64,
            helpers: r.helpers(),
            max_width: r.max_width() as u64,
        }],
        protocol: Some(rdi_to_doc(&r)),
    })
}

/// The document `compile` emits.
pub fn compile_doc(phi: &Formula, mode: Mode, size: Option<u64>) -> Result<CompiledDoc> {
    let base = |kind: &str, stage_stats, ell, size, protocol| CompiledDoc {
        kind: kind.into(),
        formula: phi.to_string(),
        variables: phi.vars.clone(),
        ell,
        size,
        stage_stats,
        protocol,
    };
    Ok(match mode {
        Mode::Full => compile(phi)?.to_doc(),
        Mode::Large => {
            let l = compile_large(phi)?;
            base("large", large_stats(&l), Some(l.ell as u32), None, Some(to_doc(&l.two_way)))
        }
        Mode::Small => {
            let ell = match size {
                Some(s) => u32::try_from(s).map_err(|_| Error::Precondition(format!("cutoff {s} too large")))?,
                None => compute_cutoff(phi)?,
            };
            let s = compile_small(phi, ell)?;
            base("small", small_stats(&s), Some(ell), None, None)
        }
        Mode::RdiThreshold => rdi_doc(phi, RdiKind::Threshold, "rdi-threshold")?,
        Mode::RdiRemainder => rdi_doc(phi, RdiKind::Remainder, "rdi-remainder")?,
        Mode::GreaterSum => {
            let i = size.ok_or_else(|| Error::Precondition("greater-sum needs --size".into()))?;
            let a = single_atom(phi, AtomKind::Threshold)?;
            let p = greater_sum(&phi.vars, &a.coeffs, a.bound, i)?;
            base("greater-sum", vec![StageStat::of("greater-sum", &p)], None, Some(i), Some(to_doc(&p)))
        }
    })
}

pub fn parse_input(s: &str, vars: &[String]) -> Result<Valuation> {
    let mut v: Valuation = vars.iter().map(|x| (x.clone(), 0)).collect();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::Parse { position: 0, message: format!("bad input assignment `{part}`") };
        let (x, n) = part.split_once('=').ok_or_else(bad)?;
        let slot = v.get_mut(x.trim()).ok_or_else(|| Error::VariableMismatch(format!("unknown variable `{}`", x.trim())))?;
        *slot = n.trim().parse().map_err(|_| bad())?;
    }
    Ok(v)
}

fn read_doc(path: &Path) -> Result<Document> {
    Document::parse(&std::fs::read_to_string(path)?)
}

fn json<T: Serialize>(t: &T) -> String {
    serde_json::to_string_pretty(t).expect("reports always serialize")
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    formula: String,
    guard: &'a str,
    passed: usize,
    failed: usize,
    inconclusive: usize,
    explored_nodes: u64,
    all_pass: bool,
    rows: &'a [crate::verify::InputReport],
}

fn verify_out(phi: &Formula, guard: &str, r: &VerificationReport) -> String {
    json(&VerifyOutput {
        formula: phi.to_string(),
        guard,
        passed: r.passed,
        failed: r.failed,
        inconclusive: r.inconclusive,
        explored_nodes: r.explored_nodes as u64,
        all_pass: r.all_pass(),
        rows: &r.rows,
    })
}

/// Executes one command, writing to `out`. `Ok(false)` means a check
/// failed.
pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<bool> {
    match cmd {
        Command::Compile { formula, mode, size, out: path } => {
            let phi = Formula::parse(&formula)?;
            let text = serde_json::to_string_pretty(&compile_doc(&phi, mode, size)?)?;
            match path {
                Some(p) => std::fs::write(p, text + "\n")?,
                None => writeln!(out, "{text}")?,
            }
            Ok(true)
        }
        Command::Stats { protocol } => {
            writeln!(out, "{}", json(&read_doc(&protocol)?.stage_stats()?))?;
            Ok(true)
        }
        Command::Simulate { protocol, input, seed, max_steps, window } => {
            let loaded = read_doc(&protocol)?.load()?;
            let params = SimulationParams { seed, max_steps, window, record_trace: false };
            let report = with_loaded!(&loaded, p => {
                let v = parse_input(&input, p.variables())?;
                simulate(p, &v, params)?
            });
            writeln!(out, "{}", json(&report))?;
            Ok(true)
        }
        Command::Verify { protocol, formula, guard, max_size, min_size, node_cap, jobs } => {
            let g = Guard::parse(&guard)?;
            let phi = Formula::parse(&formula)?;
            let loaded = read_doc(&protocol)?.load()?;
            let cap = node_cap.unwrap_or_else(default_node_cap);
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.unwrap_or(0))
                .build()
                .map_err(|e| Error::Precondition(e.to_string()))?;
            let report = with_loaded!(&loaded, p => {
                let vars = p.variables().to_vec();
                let mut sorted = vars.clone();
                sorted.sort();
                let mut fv = phi.vars.clone();
                fv.sort();
                if !fv.iter().all(|x| sorted.contains(x)) {
                    return Err(Error::VariableMismatch(format!("formula uses {:?}, protocol has {:?}", phi.vars, vars)));
                }
                let lo = min_size.unwrap_or(if crate::system::Agents::leader_states(p).is_empty() { 2 } else { 0 });
                let inputs = inputs_of_size(&vars, lo..=max_size);
                pool.install(|| check_computes(p, |v: &Valuation| g.expected(&phi, v), &inputs, cap))
            });
            writeln!(out, "{}", verify_out(&phi, &guard, &report))?;
            Ok(report.all_pass())
        }
        Command::CheckRdi { formula, kind, max_pop, depth } => {
            let phi = Formula::parse(&formula)?;
            let r = rdi_for(&phi, kind)?;
            let params = RdiCheckParams { max_pop, max_depth: depth, node_cap: default_node_cap(), ..Default::default() };
            let report = check_rdi(&r, params);
            writeln!(out, "{}", json(&report))?;
            Ok(report.passed())
        }
        Command::CheckHalting { protocol, size } => {
            let loaded = read_doc(&protocol)?.load()?;
            let cap = default_node_cap();
            let report = with_loaded!(&loaded, p => check_halting(p, &inputs_of_size(p.variables(), [size]), cap));
            let mut rows = BTreeMap::new();
            rows.insert("all_pass", serde_json::to_value(report.all_pass())?);
            rows.insert("rows", serde_json::to_value(&report.rows)?);
            writeln!(out, "{}", json(&rows))?;
            Ok(report.all_pass())
        }
        Command::Fixtures { name, n } => {
            let p = match name {
                FixtureName::Pn => p_n(n),
                FixtureName::Ppn => pp_n(n),
            };
            writeln!(out, "{}", json(&to_doc(&p)))?;
            Ok(true)
        }
    }
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return 2;
            }
            let _ = write!(out, "{}", e.render());
            return 0;
        }
    };
    match execute(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            2
        }
    }
}
