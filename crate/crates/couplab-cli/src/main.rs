//! Command line front end for the coupling laboratory.
//!
//! Four reports: `threshold` scans alphabet sizes with exact rational
//! arithmetic, `verify` runs order/marginal/invariance checks for one
//! coupling kind, `mtp-audit` measures transported mass at the origin, and
//! `dump` prints a single replicate edge by edge.
//!
//! Exit codes: 0 everything came out as predicted, 1 a statistical assertion
//! failed, 2 no result within the requested limits, 64 usage or setup error.

mod manifest;
mod svg;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::json;

use couplab::{
    audit_origin, check_invariance_window, check_marginal, check_monotone, mtp_balance,
    BalanceProcess, CouplingKind, CouplingOutput, CouplingPlan, End, Gen, ProductBall, Shift,
    TransportRule, TreeBall, WindowProcess,
};
use couplab::oracle;
use couplab::stats::{self, TestResult, DEFAULT_ALPHA, DEFAULT_CI_LEVEL};

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "couplab", version, about = "coupling laboratory on the 3-regular tree")]
struct Cli {
    /// master seed; every random stream is derived from it
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// worker threads, 0 picks the machine default
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// directory that also receives the report files
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan alphabet sizes for the smallest n whose 20-label distinctness
    /// probability reaches 5/6, with an exact certificate.
    Threshold {
        /// largest alphabet size to consider
        #[arg(long, default_value_t = 1050)]
        max_n: u32,
    },
    /// Check one coupling kind: pointwise order, both marginals, and window
    /// invariance under generator shifts (plus a rotation for lifted-bits).
    Verify {
        /// coupling kind: end-bits, disagreement-bits, end-sets,
        /// lifted-bits or independent-sets
        #[arg(long)]
        kind: String,
        /// alphabet size (cycle length for lifted-bits)
        #[arg(long, default_value_t = 1050)]
        n: u32,
        /// tree ball radius
        #[arg(long, default_value_t = 5)]
        radius: u32,
        /// replicates per check
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
        /// a failing order check is reported as expected-fail instead
        #[arg(long)]
        expect_nonmonotone: bool,
    },
    /// Audit transported mass at the origin. Set-valued couplings get the
    /// distinctness transport; bit couplings get the neighbor-indicator
    /// balance check.
    MtpAudit {
        /// coupling kind, as in verify
        #[arg(long)]
        kind: String,
        /// alphabet size (cycle length for lifted-bits)
        #[arg(long, default_value_t = 1050)]
        n: u32,
        /// tree ball radius
        #[arg(long, default_value_t = 5)]
        radius: u32,
        /// replicates
        #[arg(long, default_value_t = 100_000)]
        replicates: u64,
    },
    /// Print one replicate of the lower and upper configurations.
    Dump {
        /// coupling kind, as in verify
        #[arg(long)]
        kind: String,
        /// alphabet size (cycle length for lifted-bits)
        #[arg(long, default_value_t = 1050)]
        n: u32,
        /// tree ball radius
        #[arg(long, default_value_t = 5)]
        radius: u32,
        /// which replicate to draw
        #[arg(long, default_value_t = 0)]
        replicate: u64,
    },
}

/// Anything that prevents a report from being evaluated maps to exit 64.
struct UsageError(String);

impl From<couplab::Error> for UsageError {
    fn from(e: couplab::Error) -> UsageError {
        UsageError(e.to_string())
    }
}

impl From<std::io::Error> for UsageError {
    fn from(e: std::io::Error) -> UsageError {
        UsageError(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(64)
        }
    }
}

fn run(cli: Cli) -> Result<u8, UsageError> {
    let workers = if cli.workers == 0 { None } else { Some(cli.workers) };
    match &cli.cmd {
        Cmd::Threshold { max_n } => cmd_threshold(*max_n, &cli),
        Cmd::Verify {
            kind,
            n,
            radius,
            replicates,
            expect_nonmonotone,
        } => cmd_verify(kind, *n, *radius, *replicates, *expect_nonmonotone, &cli, workers),
        Cmd::MtpAudit {
            kind,
            n,
            radius,
            replicates,
        } => cmd_mtp_audit(kind, *n, *radius, *replicates, &cli, workers),
        Cmd::Dump {
            kind,
            n,
            radius,
            replicate,
        } => cmd_dump(kind, *n, *radius, *replicate, &cli),
    }
}

fn parse_kind(name: &str) -> Result<CouplingKind, UsageError> {
    CouplingKind::from_name(name).ok_or_else(|| {
        let names: Vec<&str> = CouplingKind::ALL.iter().map(|k| k.name()).collect();
        UsageError(format!(
            "unknown coupling kind {name:?}; expected one of {}",
            names.join(", ")
        ))
    })
}

/// Write the report files under --out, if given. Paths inside the manifest
/// were fixed before rendering, so the written names must match them.
fn emit(out: &Option<PathBuf>, files: &[(String, String)]) -> Result<(), UsageError> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        for (name, content) in files {
            std::fs::write(dir.join(name), content)?;
        }
    }
    Ok(())
}

fn outputs_if(out: &Option<PathBuf>, names: &[&str]) -> Vec<String> {
    if out.is_some() {
        names.iter().map(|s| s.to_string()).collect()
    } else {
        Vec::new()
    }
}

/// Quote a CSV cell if it holds a comma or a quote. Lifted-bits violation
/// ids are "word,cycle", everything else passes through bare.
fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn rational_json(r: &num::BigRational) -> serde_json::Value {
    json!({
        "fraction": r.to_string(),
        "decimal": oracle::decimal(r, 6),
    })
}

fn cmd_threshold(max_n: u32, cli: &Cli) -> Result<u8, UsageError> {
    if max_n == 0 {
        return Err(UsageError("--max-n must be positive".into()));
    }
    let mut man = RunManifest::new("threshold", cli.seed, json!({ "max_n": max_n }));
    man.outputs = outputs_if(&cli.out, &["threshold.json"]);

    let target = oracle::five_sixths();
    let minimal = oracle::threshold_n(&target, 20, max_n);
    let cert_json = |n: u32| {
        let c = oracle::certificate(n);
        json!({
            "n": c.n,
            "p_distinct_20": rational_json(&c.p_distinct_20),
            "p_distinct_9": rational_json(&c.p_distinct_9),
            "union_lower_bound": rational_json(&c.union_lower_bound),
            "meets_target": c.meets_target,
        })
    };
    let doc = json!({
        "manifest": man,
        "target": "5/6",
        "scan_limit": max_n,
        "minimal_n": minimal,
        "minimal_certificate": minimal.map(cert_json),
        "certificate_at_1050": if max_n >= 1050 { Some(cert_json(1050)) } else { None },
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&doc).expect("json"));
    print!("{text}");
    emit(&cli.out, &[("threshold.json".into(), text)])?;
    Ok(if minimal.is_some() { 0 } else { 2 })
}

struct VerifyRow {
    check: String,
    shift: String,
    statistic: String,
    p_value: String,
    verdict: &'static str,
}

fn test_row(check: &str, shift: &str, t: &TestResult) -> VerifyRow {
    VerifyRow {
        check: check.into(),
        shift: shift.into(),
        statistic: format!("{:.6}", t.statistic),
        p_value: format!("{:.6}", t.p_value),
        verdict: if t.reject { "fail" } else { "pass" },
    }
}

/// Window processes exercised by `verify`, one per side, with the window
/// radius each can afford under the category cap.
fn verify_windows(kind: CouplingKind, n: u32, end: End) -> Vec<(WindowProcess, &'static str, u32)> {
    match kind {
        CouplingKind::EndBits => vec![
            (WindowProcess::EndMaxBits(end), "lower", 1),
            (WindowProcess::IncidentMaxBits, "upper", 1),
        ],
        CouplingKind::DisagreementBits => vec![
            (WindowProcess::DisagreementBits, "lower", 1),
            (WindowProcess::IncidentMaxBits, "upper", 1),
        ],
        CouplingKind::EndSets => vec![
            (WindowProcess::AwaySets(end, n), "lower", 0),
            (WindowProcess::IncidentSets(n), "upper", 0),
        ],
        CouplingKind::LiftedBits => vec![
            (WindowProcess::LiftedAwayBits(end, n), "lower", 1),
            (WindowProcess::LiftedIncidentBits(n), "upper", 1),
        ],
        CouplingKind::IndependentSets => vec![
            (WindowProcess::IidPairSets(n), "lower", 0),
            (WindowProcess::IncidentSets(n), "upper", 0),
        ],
    }
}

fn cmd_verify(
    kind_name: &str,
    n: u32,
    radius: u32,
    replicates: u64,
    expect_nonmonotone: bool,
    cli: &Cli,
    workers: Option<usize>,
) -> Result<u8, UsageError> {
    let kind = parse_kind(kind_name)?;
    let ball = TreeBall::build(radius)?;
    let end = End::new(Gen::A);
    let plan = CouplingPlan::new(kind, n, end);

    let mut man = RunManifest::new(
        "verify",
        cli.seed,
        json!({
            "kind": kind.name(),
            "n": n,
            "radius": radius,
            "replicates": replicates,
            "alpha": DEFAULT_ALPHA,
            "expect_nonmonotone": expect_nonmonotone,
        }),
    );
    man.outputs = outputs_if(&cli.out, &["verify.csv"]);

    let mut rows: Vec<VerifyRow> = Vec::new();

    // Pointwise order on every interior vertex of every replicate. A single
    // counterexample is already a refutation, so the row carries the count
    // and the first offending vertex.
    plan.sample(&ball, cli.seed, 0)?;
    type MonoAcc = (u64, Option<String>, Option<couplab::Error>);
    let (violations, first, err) = stats::run_replicated(
        replicates,
        workers,
        |i| plan.sample(&ball, cli.seed, i).map(|out| check_monotone(&out, &ball)),
        (0u64, None, None) as MonoAcc,
        |mut acc: MonoAcc, r| {
            match r {
                Ok(rep) => {
                    if !rep.ok {
                        acc.0 += 1;
                        if acc.1.is_none() {
                            acc.1 = rep.violation;
                        }
                    }
                }
                Err(e) => {
                    if acc.2.is_none() {
                        acc.2 = Some(e);
                    }
                }
            }
            acc
        },
    );
    if let Some(e) = err {
        return Err(e.into());
    }
    rows.push(VerifyRow {
        check: "monotone".into(),
        shift: String::new(),
        statistic: format!("{violations}"),
        p_value: csv_cell(&first.unwrap_or_default()),
        verdict: match (violations, expect_nonmonotone) {
            (0, false) => "pass",
            (0, true) => "unexpected-pass",
            (_, false) => "fail",
            (_, true) => "expected-fail",
        },
    });

    for side in ["lower", "upper"] {
        let s = if side == "lower" {
            couplab::Side::Lower
        } else {
            couplab::Side::Upper
        };
        let t = check_marginal(&plan, &ball, s, replicates, DEFAULT_ALPHA, cli.seed, workers)?;
        rows.push(test_row(&format!("marginal-{side}"), "", &t));
    }

    let mut shifts = vec![
        Shift::Letter(Gen::A),
        Shift::Letter(Gen::B),
        Shift::Letter(Gen::C),
    ];
    if kind == CouplingKind::LiftedBits {
        shifts.push(Shift::Rotate(1));
    }
    for (process, side, w) in verify_windows(kind, n, end) {
        for &shift in &shifts {
            let t = check_invariance_window(
                &process, &ball, shift, w, replicates, DEFAULT_ALPHA, cli.seed, workers,
            )?;
            rows.push(test_row(
                &format!("invariance-{side}"),
                &shift.to_string(),
                &t,
            ));
        }
    }

    let mut text = format!("{}\n", man.comment_line());
    text.push_str("kind,check,shift,statistic,p_value,verdict\n");
    for r in &rows {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            kind.name(),
            r.check,
            r.shift,
            r.statistic,
            r.p_value,
            r.verdict
        )
        .expect("string write");
    }
    print!("{text}");
    emit(&cli.out, &[("verify.csv".into(), text)])?;

    let failed = rows
        .iter()
        .any(|r| r.verdict == "fail" || r.verdict == "unexpected-pass");
    Ok(if failed { 1 } else { 0 })
}

struct AuditRow {
    mean_sent: f64,
    sent_ci: Option<(f64, f64)>,
    mean_received: f64,
    received_ci: Option<(f64, f64)>,
    imbalance: f64,
    imbalance_ci: Option<(f64, f64)>,
    max_received: Option<u8>,
    event_rate: Option<f64>,
    z_score: Option<f64>,
    verdict: &'static str,
}

fn opt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn cmd_mtp_audit(
    kind_name: &str,
    n: u32,
    radius: u32,
    replicates: u64,
    cli: &Cli,
    workers: Option<usize>,
) -> Result<u8, UsageError> {
    let kind = parse_kind(kind_name)?;
    let ball = TreeBall::build(radius)?;
    let end = End::new(Gen::A);

    let mut man = RunManifest::new(
        "mtp-audit",
        cli.seed,
        json!({
            "kind": kind.name(),
            "n": n,
            "radius": radius,
            "replicates": replicates,
            "ci_level": DEFAULT_CI_LEVEL,
        }),
    );
    man.outputs = outputs_if(&cli.out, &["mtp_audit.csv", "mtp_audit.svg"]);

    // Monotone set couplings are audited against the distinctness transport,
    // where the interesting outcome is a strict imbalance. Everything else
    // is a control that has to balance.
    let row = match kind {
        CouplingKind::EndSets | CouplingKind::LiftedBits => {
            let plan = CouplingPlan::new(CouplingKind::EndSets, n, end);
            let rep = audit_origin(&plan, &ball, replicates, DEFAULT_CI_LEVEL, cli.seed, workers)?;
            let ok = rep.sent_ci.0 >= 4.0 / 3.0
                && rep.max_received <= 1
                && rep.received_above_one == 0
                && rep.sent_support_violations == 0
                && rep.imbalance_ci.0 > 0.0;
            AuditRow {
                mean_sent: rep.mean_sent,
                sent_ci: Some(rep.sent_ci),
                mean_received: rep.mean_received,
                received_ci: Some(rep.received_ci),
                imbalance: rep.imbalance,
                imbalance_ci: Some(rep.imbalance_ci),
                max_received: Some(rep.max_received),
                event_rate: Some(rep.event_rate),
                z_score: None,
                verdict: if ok { "violates-mtp" } else { "unexpected" },
            }
        }
        CouplingKind::EndBits | CouplingKind::DisagreementBits => {
            let rep = mtp_balance(
                BalanceProcess::DisagreementCoupling,
                TransportRule::UpperNeighborIndicator,
                &ball,
                replicates,
                cli.seed,
                workers,
            )?;
            AuditRow {
                mean_sent: rep.mean_sent,
                sent_ci: None,
                mean_received: rep.mean_received,
                received_ci: None,
                imbalance: rep.mean_imbalance,
                imbalance_ci: None,
                max_received: None,
                event_rate: None,
                z_score: Some(rep.z_score),
                verdict: if rep.balanced { "balanced" } else { "unexpected" },
            }
        }
        CouplingKind::IndependentSets => {
            let rep = mtp_balance(
                BalanceProcess::IndependentSetsCoupling { n, end },
                TransportRule::Distinctness,
                &ball,
                replicates,
                cli.seed,
                workers,
            )?;
            AuditRow {
                mean_sent: rep.mean_sent,
                sent_ci: None,
                mean_received: rep.mean_received,
                received_ci: None,
                imbalance: rep.mean_imbalance,
                imbalance_ci: None,
                max_received: None,
                event_rate: None,
                z_score: Some(rep.z_score),
                verdict: if rep.balanced { "balanced" } else { "unexpected" },
            }
        }
    };

    let mut text = format!("{}\n", man.comment_line());
    text.push_str(
        "kind,n,radius,replicates,seed,mean_sent,sent_ci_lo,sent_ci_hi,mean_received,\
         received_ci_lo,received_ci_hi,imbalance,imbalance_ci_lo,imbalance_ci_hi,\
         max_received,event_rate,z_score,verdict\n",
    );
    writeln!(
        text,
        "{},{},{},{},{},{:.6},{},{},{:.6},{},{},{:.6},{},{},{},{},{},{}",
        kind.name(),
        n,
        radius,
        replicates,
        cli.seed,
        row.mean_sent,
        opt_f(row.sent_ci.map(|c| c.0)),
        opt_f(row.sent_ci.map(|c| c.1)),
        row.mean_received,
        opt_f(row.received_ci.map(|c| c.0)),
        opt_f(row.received_ci.map(|c| c.1)),
        row.imbalance,
        opt_f(row.imbalance_ci.map(|c| c.0)),
        opt_f(row.imbalance_ci.map(|c| c.1)),
        row.max_received.map(|m| m.to_string()).unwrap_or_default(),
        opt_f(row.event_rate),
        opt_f(row.z_score),
        row.verdict
    )
    .expect("string write");

    print!("{text}");
    let chart = svg::bar_chart(
        &format!("origin transport, {}", kind.name()),
        &[("sent", row.mean_sent), ("received", row.mean_received)],
        &man.json(),
    );
    emit(
        &cli.out,
        &[("mtp_audit.csv".into(), text), ("mtp_audit.svg".into(), chart)],
    )?;
    Ok(if row.verdict == "unexpected" { 1 } else { 0 })
}

fn cmd_dump(
    kind_name: &str,
    n: u32,
    radius: u32,
    replicate: u64,
    cli: &Cli,
) -> Result<u8, UsageError> {
    let kind = parse_kind(kind_name)?;
    let ball = TreeBall::build(radius)?;
    let plan = CouplingPlan::new(kind, n, End::new(Gen::A));

    let mut man = RunManifest::new(
        "dump",
        cli.seed,
        json!({
            "kind": kind.name(),
            "n": n,
            "radius": radius,
            "replicate": replicate,
        }),
    );
    man.outputs = outputs_if(&cli.out, &["dump.txt"]);

    let out = plan.sample(&ball, cli.seed, replicate)?;
    let (lower, upper) = match &out {
        CouplingOutput::Bits(cs) => (cs.lower.dump_lines(&ball), cs.upper.dump_lines(&ball)),
        CouplingOutput::Sets(cs) => (cs.lower.dump_lines(&ball), cs.upper.dump_lines(&ball)),
        CouplingOutput::ProductBits(cs) => {
            let product = ProductBall::build(radius, n)?;
            (cs.lower.dump_lines(&product), cs.upper.dump_lines(&product))
        }
    };

    let mut text = format!("{}\n# lower\n", man.comment_line());
    for line in &lower {
        text.push_str(line);
        text.push('\n');
    }
    text.push_str("# upper\n");
    for line in &upper {
        text.push_str(line);
        text.push('\n');
    }
    print!("{text}");
    emit(&cli.out, &[("dump.txt".into(), text)])?;
    Ok(0)
}
