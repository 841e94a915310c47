//! The `tallynet` command line.
//!
//! Exit status: 0 on success, 1 on internal or output errors, 2 on usage,
//! input or configuration errors. Human-readable summaries go to standard
//! output; files are written only through explicit `--*-out`/`--out` flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::adversary::detection_report;
use crate::analysis::{discrepancy_stats, final_counts_by_canton, load_results};
use crate::secauth::{KeyHandle, Pki, SchemeKind};
use crate::simnet::{build_scenario, publish_timeline, run as run_sim, swiss_preset, ScenarioConfig, TreeFile};
use crate::tally::{
    min_flips_double, min_flips_popular_allocated, referendum_outcome, Decision, FlipPlan,
    JurisdictionTree, MajorityRule, ReferendumSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tallynet", version, about = "Preliminary-result aggregation: simulate, attack, sign, analyze")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario and report what the federal office published.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        summary_out: Option<PathBuf>,
    },
    /// Largest preliminary-vs-final discrepancy per canton.
    Analyze {
        #[arg(long)]
        results: PathBuf,
        /// Machine-readable summary (CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fewest ballots to flip to change a referendum's outcome.
    Flip {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        referendum: String,
        #[arg(long, value_enum)]
        rule: Rule,
        /// Defaults to the opposite of the actual outcome.
        #[arg(long, value_enum)]
        target: Option<Target>,
        /// Tree file or `builtin:swiss` (the default).
        #[arg(long, default_value = "builtin:swiss")]
        tree: String,
    },
    /// Issue the certificate hierarchy for a tree into a trust-store directory.
    Keys {
        /// Tree file or `builtin:swiss`.
        #[arg(long)]
        tree: String,
        #[arg(long)]
        out_dir: PathBuf,
        /// Derive keys deterministically from this seed instead of the OS RNG.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "ed25519")]
        scheme: Scheme,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Rule {
    Popular,
    Double,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Target {
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Scheme {
    Ed25519,
    ToySchnorr,
}

/// A failed command: message and exit status.
struct Failure(i32, String);

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_USAGE, msg.to_string())
}

fn internal(msg: impl std::fmt::Display) -> Failure {
    Failure(EXIT_INTERNAL, msg.to_string())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{}", e.render()) } else { write!(err, "{}", e.render()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate { scenario, seed, trace_out, summary_out } => {
            simulate(&scenario, seed, trace_out.as_deref(), summary_out.as_deref(), out)
        }
        Command::Analyze { results, out: csv } => analyze(&results, csv.as_deref(), out),
        Command::Flip { results, referendum, rule, target, tree } => flip(&results, &referendum, rule, target, &tree, out),
        Command::Keys { tree, out_dir, seed, scheme } => keys(&tree, &out_dir, seed, scheme, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure(code, msg)) => {
            let _ = writeln!(err, "error: {msg}");
            code
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| internal(format!("{}: {e}", path.display())))
}

fn say(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(internal)
}

fn simulate(
    scenario: &Path,
    seed: Option<u64>,
    trace_out: Option<&Path>,
    summary_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let mut cfg = ScenarioConfig::from_file(scenario).map_err(|e| usage(format!("{}: {e}", scenario.display())))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let truth = cfg.ground_truth();
    let election = cfg.election_id.clone();
    let sim = build_scenario(cfg).map_err(|e| usage(format!("{}: {e}", scenario.display())))?;
    let trace = run_sim(sim);
    let summary = detection_report(&trace, &truth);
    if let Some(p) = trace_out {
        write_file(p, &trace.to_text())?;
    }
    if let Some(p) = summary_out {
        write_file(p, &summary.to_text())?;
    }
    let timeline = publish_timeline(&trace);
    let prelims = timeline.iter().filter(|p| p.kind == crate::simnet::ReportKind::Preliminary).count();
    let mut s = format!("election: {election}\nevents: {}\npreliminary publications: {prelims}\n", trace.records.len());
    match (summary.final_at, summary.final_totals) {
        (Some(t), Some(c)) => s.push_str(&format!("final at {t}: {c}\n")),
        _ => s.push_str("final: not published\n"),
    }
    s.push_str(&format!(
        "divergences: {}\ndetections: {}\ncoverage gaps: {}\n",
        summary.divergences.len(),
        summary.detections.len(),
        summary.coverage_gaps.len()
    ));
    if let Some(first) = summary.first_divergence() {
        s.push_str(&format!(
            "divergence window: {first}..{} ({} ticks)\n",
            summary.final_at.map_or("?".into(), |t| t.to_string()),
            summary.integrity_gap.map_or("?".into(), |t| t.to_string())
        ));
    }
    if !summary.wrong_outcome.is_empty() {
        s.push_str(&format!("complete preliminary results with the wrong outcome: {}\n", summary.wrong_outcome.len()));
    }
    say(out, &s)
}

fn analyze(results: &Path, csv_out: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let records = load_results(results).map_err(|e| usage(format!("{}: {e}", results.display())))?;
    let summary = discrepancy_stats(&records);
    if let Some(p) = csv_out {
        write_file(p, &summary.to_csv())?;
    }
    say(out, &summary.to_text())
}

fn load_tree(reference: &str) -> Result<JurisdictionTree, Failure> {
    let file = match reference {
        "builtin:swiss" => swiss_preset(),
        path => TreeFile::from_file(Path::new(path)).map_err(usage)?,
    };
    Ok(file.tree)
}

fn flip(
    results: &Path,
    referendum: &str,
    rule: Rule,
    target: Option<Target>,
    tree: &str,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let tree = load_tree(tree)?;
    let records = load_results(results).map_err(|e| usage(format!("{}: {e}", results.display())))?;
    if !records.iter().any(|r| r.referendum_id == referendum) {
        return Err(usage(format!("no records for referendum {referendum:?}")));
    }
    let per_canton = final_counts_by_canton(&records, &tree, referendum).map_err(usage)?;
    let majority_rule = match rule {
        Rule::Popular => MajorityRule::PopularOnly,
        Rule::Double => MajorityRule::DoubleMajority,
    };
    let spec = ReferendumSpec::new(referendum, majority_rule);
    let outcome = referendum_outcome(&spec, &per_canton, &tree).map_err(usage)?;
    let target = match target {
        Some(Target::Accepted) => Decision::Accepted,
        Some(Target::Rejected) => Decision::Rejected,
        None => outcome.overall.opposite(),
    };
    let plan: FlipPlan = match majority_rule {
        MajorityRule::PopularOnly if outcome.popular == target => FlipPlan::empty(target),
        MajorityRule::PopularOnly => min_flips_popular_allocated(&per_canton, target).map_err(usage)?,
        MajorityRule::DoubleMajority => min_flips_double(&per_canton, &tree, &spec, target).map_err(usage)?,
    };
    let mut s = format!("referendum: {referendum}\n");
    let n = &outcome.national;
    s.push_str(&format!(
        "popular: {:?} ({} yes, {} no, {:.2}% yes)\n",
        outcome.popular,
        n.yes,
        n.no,
        100.0 * n.yes as f64 / (n.yes + n.no).max(1) as f64
    ));
    if let Some(c) = &outcome.cantonal {
        s.push_str(&format!("cantonal: {:?} ({} of {} votes yes)\n", c.decision, c.yes_weight, c.total_weight));
    }
    s.push_str(&format!("outcome: {:?}\ntarget: {target:?}\ntotal_flips: {}\n", outcome.overall, plan.total_flips));
    for (id, k) in &plan.flips {
        s.push_str(&format!("  {} ({}): {k}\n", tree.label(id), id.last()));
    }
    say(out, &s)
}

fn keys(tree: &str, out_dir: &Path, seed: Option<u64>, scheme: Scheme, out: &mut dyn Write) -> Result<(), Failure> {
    let tree = load_tree(tree)?;
    let scheme = match scheme {
        Scheme::Ed25519 => SchemeKind::Ed25519,
        Scheme::ToySchnorr => SchemeKind::ToySchnorr,
    };
    let pki = match seed {
        Some(seed) => Pki::bootstrap(&tree, scheme, seed),
        None => Pki::bootstrap_with(&tree, |id| KeyHandle::generate(scheme, id.clone(), &mut rand::rngs::OsRng)),
    };
    let n = pki
        .trust_store()
        .write(out_dir)
        .map_err(|e| internal(format!("{}: {e}", out_dir.display())))?;
    say(out, &format!("wrote {n} certificates to {}\n", out_dir.display()))
}
