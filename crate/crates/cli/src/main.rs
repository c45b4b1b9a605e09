//! `uds`: batch front end for generator-presented differential spaces.
//!
//! Every subcommand prints a JSON report on stdout that embeds the resolved
//! configuration. Exit status: 0 when the analysis ran (refutations and
//! suspect findings included), 2 for malformed specs or flags, 3 when a
//! generator could not be evaluated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use uds_core::completion::{self, CompletionError};
use uds_core::entourage::{self, AxiomError};
use uds_core::extension::{self, ExtensionError};
use uds_core::model::SpaceError;
use uds_core::uniformity::{
    self, MapCheckOptions, PairConstraint, SpaceMap, UniformityError, Verdict,
};
use uds_core::{load_space, parse, Entourage, EvalError, Interval, Space};

#[derive(Parser)]
#[command(
    name = "uds",
    version,
    about = "Uniform structures of generator-presented differential spaces"
)]
struct Cli {
    /// Worker threads for parallel stages; reports do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Refute,
    Certify,
}

#[derive(Subcommand)]
enum Command {
    /// Check base axioms B1-B3 for a list of entourages over the domain sample.
    CheckAxioms {
        #[arg(long)]
        space: PathBuf,
        /// Entourage `i,j,...:eps`; repeatable. Defaults to every single
        /// generator and the whole family at radii 1 and 0.1.
        #[arg(long = "entourage")]
        entourages: Vec<Entourage>,
    },
    /// Exact uniform-structure axiom check on a finite domain.
    Oracle {
        #[arg(long)]
        space: PathBuf,
    },
    /// Decide an entourage inclusion V(sub) ⊆ V(sup).
    Include {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        sub: Entourage,
        #[arg(long)]
        sup: Entourage,
        #[arg(long, value_enum, default_value_t = Mode::Refute)]
        mode: Mode,
        /// Search box `lo:hi[,lo:hi...]`; defaults to the domain box.
        #[arg(long = "box", allow_hyphen_values = true, value_parser = parse_box)]
        search_box: Option<BoxArg>,
        /// Pair evaluations (refute) or pair boxes (certify).
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Check uniform continuity of a map between two spaces.
    MapUniform {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Map component over the source variables, one per target coordinate.
        #[arg(long = "component", required = true)]
        components: Vec<String>,
        /// Target entourage `i,j,...:eps`; repeatable. Defaults to the whole
        /// target family at radius 1.
        #[arg(long = "target-entourage")]
        targets: Vec<Entourage>,
        /// Certification box `lo:hi[,lo:hi...]`; defaults to the source domain box.
        #[arg(long = "box", allow_hyphen_values = true, value_parser = parse_box)]
        search_box: Option<BoxArg>,
        /// Candidate radii are δ·2^-t for t = 0..=levels.
        #[arg(long, default_value_t = 20)]
        levels: u32,
        #[arg(long, default_value_t = 20_000)]
        refute_budget: u64,
        #[arg(long, default_value_t = 40)]
        expansions: u32,
        #[arg(long, default_value_t = 10_000)]
        certify_budget: u64,
        /// Largest source generator subset tried.
        #[arg(long)]
        max_subset: Option<usize>,
    },
    /// Classify probe sequences and report the points the completion adds.
    ///
    /// CSV columns (--emit-csv): probe label, n, embedding components.
    Complete {
        #[arg(long)]
        space: PathBuf,
        /// JSON list of {"label", "term", "count"} probe specs.
        #[arg(long)]
        probes: PathBuf,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        emit_csv: Option<PathBuf>,
    },
    /// Restriction and continuity checks for an extension spec.
    Extend {
        #[arg(long)]
        spec: PathBuf,
        /// Allowed excess of a jump over the inner oscillation; defaults to
        /// a tenth of the outer grid step.
        #[arg(long)]
        slack: Option<f64>,
    },
    /// Membership of the domain sample in the ball V[center].
    ///
    /// CSV columns: point components, member flag (0/1). Written to
    /// --emit-csv when given, otherwise to stdout.
    Ball {
        #[arg(long)]
        space: PathBuf,
        /// Centre `x0,x1,...`.
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        center: PointArg,
        #[arg(long)]
        entourage: Entourage,
        #[arg(long)]
        emit_csv: Option<PathBuf>,
    },
}

#[derive(Clone)]
struct BoxArg(Vec<Interval>);

#[derive(Clone)]
struct PointArg(Vec<f64>);

fn parse_box(s: &str) -> Result<BoxArg, String> {
    s.split(',')
        .map(|axis| {
            let (lo, hi) = axis
                .split_once(':')
                .ok_or_else(|| format!("expected lo:hi, got {axis:?}"))?;
            let lo: f64 = lo.trim().parse().map_err(|e| format!("{lo:?}: {e}"))?;
            let hi: f64 = hi.trim().parse().map_err(|e| format!("{hi:?}: {e}"))?;
            if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(format!("bad interval {axis:?}"));
            }
            Ok(Interval::new(lo, hi))
        })
        .collect::<Result<_, _>>()
        .map(BoxArg)
}

fn parse_point(s: &str) -> Result<PointArg, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()
        .map(PointArg)
}

enum Failure {
    Spec(String),
    Eval(String),
}

impl Failure {
    fn spec(e: impl std::fmt::Display) -> Failure {
        Failure::Spec(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::Eval(e.to_string())
    }
}

impl From<SpaceError> for Failure {
    fn from(e: SpaceError) -> Self {
        match e {
            SpaceError::TermEval { .. } => Failure::Eval(e.to_string()),
            _ => Failure::spec(e),
        }
    }
}

impl From<UniformityError> for Failure {
    fn from(e: UniformityError) -> Self {
        match e {
            UniformityError::Eval(_) => Failure::Eval(e.to_string()),
            _ => Failure::spec(e),
        }
    }
}

impl From<CompletionError> for Failure {
    fn from(e: CompletionError) -> Self {
        match e {
            CompletionError::Eval { .. } | CompletionError::Embed(_) => {
                Failure::Eval(e.to_string())
            }
            CompletionError::Space(s) => s.into(),
            _ => Failure::spec(e),
        }
    }
}

impl From<ExtensionError> for Failure {
    fn from(e: ExtensionError) -> Self {
        match e {
            ExtensionError::Eval { .. } => Failure::Eval(e.to_string()),
            ExtensionError::Space(s) => s.into(),
            _ => Failure::spec(e),
        }
    }
}

impl From<AxiomError> for Failure {
    fn from(e: AxiomError) -> Self {
        match e {
            AxiomError::Eval(_) => Failure::Eval(e.to_string()),
            _ => Failure::spec(e),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))
}

fn space_at(path: &Path) -> Result<Space, Failure> {
    load_space(&read(path)?).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, body: &str) -> Result<(), Failure> {
    std::fs::write(path, body).map_err(|e| Failure::Spec(format!("{}: {e}", path.display())))
}

fn domain_box(space: &Space, given: Option<BoxArg>) -> Result<Vec<Interval>, Failure> {
    given
        .map(|b| b.0)
        .or_else(|| space.domain.as_box())
        .ok_or_else(|| Failure::Spec("--box is required when the domain is not a box".into()))
}

fn run(cli: Cli) -> Result<Value, Failure> {
    Ok(match cli.command {
        Command::CheckAxioms { space, entourages } => {
            let s = space_at(&space)?;
            let entourages = if entourages.is_empty() {
                let mut v = Vec::new();
                for eps in [1.0, 0.1] {
                    for i in 0..s.generators.len() {
                        v.push(Entourage::new([i], eps).map_err(Failure::spec)?);
                    }
                    v.push(Entourage::full(&s, eps).map_err(Failure::spec)?);
                }
                v
            } else {
                entourages
            };
            let report = entourage::check_base_axioms(&s, &s.sample()?, &entourages)?;
            json!({
                "command": "check-axioms",
                "config": { "space": space, "entourages": entourages.iter().map(ToString::to_string).collect::<Vec<_>>() },
                "report": report,
            })
        }
        Command::Oracle { space } => {
            let s = space_at(&space)?;
            let report = entourage::check_uniform_axioms_finite(&s)?;
            json!({ "command": "oracle", "config": { "space": space }, "all_pass": report.all_pass(), "report": report })
        }
        Command::Include {
            space,
            sub,
            sup,
            mode,
            search_box,
            budget,
        } => {
            let s = space_at(&space)?;
            let bx = domain_box(&s, search_box)?;
            let subc = PairConstraint::from_entourage(&s, &sub).map_err(Failure::spec)?;
            let supc = PairConstraint::from_entourage(&s, &sup).map_err(Failure::spec)?;
            if bx.len() != s.arity() {
                return Err(Failure::Spec(format!(
                    "--box has {} axes, the space has arity {}",
                    bx.len(),
                    s.arity()
                )));
            }
            let run = match mode {
                Mode::Refute => uniformity::refute_counted(&subc, &supc, &bx, budget)?,
                Mode::Certify => uniformity::certify_counted(&subc, &supc, &bx, budget)?,
            };
            let mut out = json!({
                "command": "include",
                "config": { "space": space, "mode": mode, "box": bx, "budget": budget },
                "instance": { "space": s.name, "sub": sub.to_string(), "sup": sup.to_string() },
                "verdict": run.verdict.class(),
                "boxes": run.work,
                "budget": budget,
            });
            match run.verdict {
                Verdict::Certified { bound, .. } => out["bound"] = json!(bound),
                Verdict::Refuted { witness, margin } => {
                    out["witness"] = json!([witness.0, witness.1]);
                    out["margin"] = json!(margin);
                }
                Verdict::Unknown {
                    best_bound,
                    budget_exhausted,
                } => {
                    out["best_bound"] = json!(best_bound);
                    out["budget_exhausted"] = json!(budget_exhausted);
                }
            }
            out
        }
        Command::MapUniform {
            source,
            target,
            components,
            targets,
            search_box,
            levels,
            refute_budget,
            expansions,
            certify_budget,
            max_subset,
        } => {
            let src = space_at(&source)?;
            let tgt = space_at(&target)?;
            let comps = components
                .iter()
                .map(|c| parse(c).map_err(|e| Failure::Spec(format!("component {c:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let bx = domain_box(&src, search_box)?;
            let targets = if targets.is_empty() {
                vec![Entourage::full(&tgt, 1.0).map_err(Failure::spec)?]
            } else {
                targets
            };
            let m = SpaceMap::new(src, tgt, comps)?;
            let opts = MapCheckOptions {
                levels,
                refute_budget,
                expansions,
                certify_budget,
                max_subset,
            };
            let reports = uniformity::check_uniform_map(&m, &targets, &bx, &opts)?;
            json!({
                "command": "map-uniform",
                "config": {
                    "source": source,
                    "target": target,
                    "components": m.components.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "targets": targets.iter().map(ToString::to_string).collect::<Vec<_>>(),
                    "box": bx,
                    "options": opts,
                },
                "reports": reports,
            })
        }
        Command::Complete {
            space,
            probes,
            tol,
            emit_csv,
        } => {
            let s = space_at(&space)?;
            let ps = completion::load_probes(&read(&probes)?)?;
            let report = completion::complete(&s, &ps, tol)?;
            if let Some(path) = &emit_csv {
                let dim = s.generators.len();
                let mut csv = String::from("probe,n");
                for k in 0..dim {
                    let _ = write!(csv, ",e{k}");
                }
                csv.push('\n');
                let mut sorted: Vec<_> = ps.iter().collect();
                sorted.sort_by(|a, b| a.label.cmp(&b.label));
                for p in sorted {
                    let Ok(images) = p.images(&s) else { continue };
                    for (n, e) in images {
                        let _ = write!(csv, "{},{n}", p.label);
                        for v in e {
                            let _ = write!(csv, ",{v}");
                        }
                        csv.push('\n');
                    }
                }
                write_csv(path, &csv)?;
            }
            json!({
                "command": "complete",
                "config": { "space": space, "probes": probes, "tol": tol, "emit_csv": emit_csv },
                "report": report,
            })
        }
        Command::Extend { spec, slack } => {
            let ext = extension::load_extension(&read(&spec)?)?;
            let restriction = extension::restriction_check(&ext)?;
            let step = match &ext.outer_domain {
                uds_core::Domain::Box { lo, hi, grid } => (0..lo.len())
                    .map(|a| (hi[a] - lo[a]) / (grid[a] - 1) as f64)
                    .fold(0.0, f64::max),
                _ => 0.0,
            };
            let slack = slack.unwrap_or(0.1 * step);
            let continuity = match extension::continuity_check(&ext, slack) {
                Ok(r) => json!(r),
                Err(ExtensionError::NotBox) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            json!({
                "command": "extend",
                "config": { "spec": spec, "slack": slack },
                "restriction": restriction,
                "continuity": continuity,
            })
        }
        Command::Ball {
            space,
            center,
            entourage: v,
            emit_csv,
        } => {
            let center = center.0;
            let s = space_at(&space)?;
            v.check_against(&s).map_err(Failure::spec)?;
            if center.len() != s.arity() {
                return Err(Failure::Spec(format!(
                    "--center has {} coordinates, the space has arity {}",
                    center.len(),
                    s.arity()
                )));
            }
            let sample = s.sample()?;
            let mut csv = String::new();
            for k in 0..s.arity() {
                let _ = write!(csv, "x{k},");
            }
            csv.push_str("member\n");
            let mut members = 0usize;
            for p in &sample.points {
                let m = v.member(&s, &center, p)?;
                members += usize::from(m);
                for c in p {
                    let _ = write!(csv, "{c},");
                }
                csv.push_str(if m { "1\n" } else { "0\n" });
            }
            match &emit_csv {
                Some(path) => write_csv(path, &csv)?,
                None => {
                    print!("{csv}");
                    return Ok(Value::Null);
                }
            }
            json!({
                "command": "ball",
                "config": { "space": space, "center": center, "entourage": v.to_string(), "emit_csv": emit_csv },
                "sample_size": sample.points.len(),
                "members": members,
            })
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.max(1))
        .build_global()
    {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(report) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("reports serialize")
            );
            ExitCode::SUCCESS
        }
        Err(Failure::Spec(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Eval(msg)) => {
            eprintln!("evaluation error: {msg}");
            ExitCode::from(3)
        }
    }
}
