//! `opt`: evaluate circuits and audit theory files.
//!
//! Every command prints one JSON document on standard output. Exit status is
//! 0 on success, 1 when an audit finds a violation (the JSON carries the
//! witness), and 2 for usage, parse and precondition errors.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use opt_core::audit::{
    check_causality, niwd_check, purify_state, steering_measurement, stinespring_dilate, AuditError,
    ObservationTest,
};
use opt_core::dsl::{self, LoadedTheory};
use opt_core::eval::run_complete_test_circuit;
use opt_core::tomography::{equivalent_transfers, faithful_state, local_tomography_check, verify_faithfulness, RefPolicy};
use opt_core::{run_test_circuit, SystemType, Tolerances};

#[derive(Parser)]
#[command(name = "opt", version, about = "Operational-probabilistic theory workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Physicality tolerance.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random instances for sampled audits.
    #[arg(long, global = true, default_value_t = 100)]
    trials: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer matrix of a circuit without non-trivial tests.
    Eval {
        file: PathBuf,
        #[arg(long)]
        circuit: String,
    },
    /// Outcome distribution of a closed test circuit.
    Prob {
        file: PathBuf,
        #[arg(long = "test-circuit")]
        test_circuit: String,
    },
    /// Check one axiom against everything declared in the file.
    Audit {
        file: PathBuf,
        #[arg(long, value_enum)]
        axiom: Axiom,
    },
    /// Purify a state.
    Purify {
        file: PathBuf,
        #[arg(long)]
        state: String,
    },
    /// Minimal pure dilation of a deterministic box.
    Dilate {
        file: PathBuf,
        #[arg(long = "box")]
        box_name: String,
    },
    /// Measurement on the purifying system that steers a state into the branches of a preparation test.
    Steer {
        file: PathBuf,
        #[arg(long)]
        state: String,
        #[arg(long)]
        test: String,
    },
    /// Operational equivalence of two boxes.
    Equiv {
        file: PathBuf,
        #[arg(long = "box")]
        box_name: String,
        #[arg(long)]
        box2: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Axiom {
    Causality,
    Purification,
    Faithfulness,
    LocalTomography,
    Niwd,
}

/// What a command produced: the report and its exit status.
enum Outcome {
    Pass(Value),
    Fail(Value),
}

struct Failure(Value);

impl From<dsl::DslError> for Failure {
    fn from(e: dsl::DslError) -> Self {
        Failure(e.report())
    }
}

impl From<AuditError> for Failure {
    fn from(e: AuditError) -> Self {
        precondition(e)
    }
}

impl From<opt_core::theory::TheoryError> for Failure {
    fn from(e: opt_core::theory::TheoryError) -> Self {
        precondition(e)
    }
}

impl From<opt_core::eval::EvalError> for Failure {
    fn from(e: opt_core::eval::EvalError) -> Self {
        precondition(e)
    }
}

fn precondition(e: impl std::fmt::Display) -> Failure {
    Failure(json!({ "error": "PreconditionFailed", "message": e.to_string() }))
}

fn usage(message: String) -> Failure {
    Failure(json!({ "error": "UsageError", "message": message }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, code) = match run(&cli) {
        Ok(Outcome::Pass(v)) => (v, 0),
        Ok(Outcome::Fail(v)) => (v, 1),
        Err(Failure(v)) => (v, 2),
    };
    let mut out = std::io::stdout().lock();
    // a closed pipe downstream is not an error of ours
    let _ = writeln!(out, "{}", serde_json::to_string(&report).expect("report serializes"));
    ExitCode::from(code)
}

fn load(file: &PathBuf, tol: f64) -> Result<LoadedTheory, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| usage(format!("cannot read {}: {e}", file.display())))?;
    let document = dsl::parse(&text)?;
    let tolerances = Tolerances {
        physical: tol,
        ..Tolerances::default()
    };
    Ok(dsl::load_document(document, tolerances)?)
}

fn verdict(pass: bool, v: Value) -> Outcome {
    if pass {
        Outcome::Pass(v)
    } else {
        Outcome::Fail(v)
    }
}

fn run(cli: &Cli) -> Result<Outcome, Failure> {
    match &cli.command {
        Command::Eval { file, circuit } => {
            let th = load(file, cli.tol)?;
            let c = th.circuit(circuit).ok_or_else(|| usage(format!("no circuit named {circuit}")))?;
            let d = c
                .diagram()
                .ok_or_else(|| usage(format!("circuit {circuit} contains tests; use `prob`")))?;
            let t = th.model().evaluate(d)?;
            let mut report = json!({
                "circuit": circuit,
                "input": t.input_type().to_string(),
                "output": t.output_type().to_string(),
                "transfer": t,
                "deterministic": c.complete,
            });
            if t.input_type().is_unit() && t.output_type().is_unit() {
                report["probability"] = json!(th.backend().prob(&t)?);
            }
            Ok(Outcome::Pass(report))
        }
        Command::Prob { file, test_circuit } => {
            let th = load(file, cli.tol)?;
            let c = th
                .circuit(test_circuit)
                .ok_or_else(|| usage(format!("no circuit named {test_circuit}")))?;
            let dist = if c.complete {
                run_complete_test_circuit(&c.test, th.model())?
            } else {
                run_test_circuit(&c.test, th.model())?
            };
            Ok(Outcome::Pass(serde_json::to_value(&dist).expect("distribution serializes")))
        }
        Command::Audit { file, axiom } => {
            let th = load(file, cli.tol)?;
            match axiom {
                Axiom::Causality => audit_causality(&th),
                Axiom::Purification => audit_purification(&th),
                Axiom::Faithfulness => audit_faithfulness(&th, cli.trials, cli.seed),
                Axiom::LocalTomography => audit_local_tomography(&th),
                Axiom::Niwd => audit_niwd(&th),
            }
        }
        Command::Purify { file, state } => {
            let th = load(file, cli.tol)?;
            let rho = th.state(state).ok_or_else(|| usage(format!("no state named {state}")))?;
            purification_report(&th, state, rho)
                .map(|(ok, v)| verdict(ok, v))
        }
        Command::Dilate { file, box_name } => {
            let th = load(file, cli.tol)?;
            let m = th.transfer(box_name).ok_or_else(|| usage(format!("no box named {box_name}")))?;
            match stinespring_dilate(th.backend(), &m) {
                Ok(r) => Ok(Outcome::Pass(json!({ "box": box_name, "verdict": "Dilated", "dilation": r }))),
                Err(e @ AuditError::BackendLacksDilation(_)) => Ok(Outcome::Fail(json!({
                    "box": box_name,
                    "verdict": "Failure",
                    "witness": e.to_string(),
                }))),
                Err(e) => Err(e.into()),
            }
        }
        Command::Steer { file, state, test } => {
            let th = load(file, cli.tol)?;
            let rho = th.state(state).ok_or_else(|| usage(format!("no state named {state}")))?;
            let lt = th.test(test).ok_or_else(|| usage(format!("no test named {test}")))?;
            let b = th.backend();
            // branch order is label order, so the kernel goes to the first label
            let mut labelled: Vec<(String, _)> = lt
                .test
                .outcome_space()
                .labels()
                .iter()
                .map(|l| l.to_string())
                .zip(&lt.branches)
                .collect();
            labelled.sort_by(|x, y| x.0.cmp(&y.0));
            let mut branches = Vec::with_capacity(labelled.len());
            for (l, t) in &labelled {
                if !t.input_type().is_unit() {
                    return Err(usage(format!("branch {l} of {test} is not a state")));
                }
                branches.push(b.state_of(t)?);
            }
            let purification = match purify_state(b, rho) {
                Ok(p) => p,
                Err(AuditError::PurificationFailure(w)) => {
                    return Ok(Outcome::Fail(json!({ "state": state, "verdict": "Failure", "witness": w, "reason": w.to_string() })));
                }
                Err(e) => return Err(e.into()),
            };
            let r = steering_measurement(b, &branches, &purification.pure_state, &rho.system)?;
            let labels: Vec<&String> = labelled.iter().map(|x| &x.0).collect();
            Ok(Outcome::Pass(json!({
                "state": state,
                "test": test,
                "purifying_system": purification.purifying_system,
                "labels": labels,
                "steering": r,
            })))
        }
        Command::Equiv { file, box_name, box2 } => {
            let th = load(file, cli.tol)?;
            let t = th.transfer(box_name).ok_or_else(|| usage(format!("no box named {box_name}")))?;
            let t2 = th.transfer(box2).ok_or_else(|| usage(format!("no box named {box2}")))?;
            if t.input_type() != t2.input_type() || t.output_type() != t2.output_type() {
                return Err(usage(format!(
                    "{box_name}: {} -> {} and {box2}: {} -> {} have different types",
                    t.input_type(),
                    t.output_type(),
                    t2.input_type(),
                    t2.output_type()
                )));
            }
            let r = equivalent_transfers(th.backend(), &t, &t2, &RefPolicy::default_for(th.backend()))?;
            Ok(verdict(r.is_equivalent(), json!({ "box": box_name, "box2": box2, "report": r })))
        }
    }
}

fn purification_report(th: &LoadedTheory, name: &str, rho: &opt_core::StateVector) -> Result<(bool, Value), Failure> {
    match purify_state(th.backend(), rho) {
        Ok(r) => Ok((true, json!({ "state": name, "verdict": "Purified", "purification": r }))),
        Err(AuditError::PurificationFailure(w)) => Ok((
            false,
            json!({ "state": name, "verdict": "Failure", "witness": w, "reason": w.to_string() }),
        )),
        Err(e) => Err(e.into()),
    }
}

fn declared(th: &LoadedTheory) -> Vec<SystemType> {
    th.backend().declared_systems().map(|(l, _)| SystemType::primitive(l)).collect()
}

/// Every test, closed with the trace on its output, must sum to the trace.
fn audit_causality(th: &LoadedTheory) -> Result<Outcome, Failure> {
    let b = th.backend();
    let mut tests = Vec::new();
    for (name, t) in th.tests() {
        let tr = b.trace_transfer(t.test.output_type())?;
        let effects = t
            .branches
            .iter()
            .map(|m| b.effect_of(&b.compose(m, &tr)?))
            .collect::<Result<Vec<_>, _>>()?;
        tests.push(ObservationTest {
            name: name.to_string(),
            effects,
        });
    }
    match check_causality(b, &tests) {
        Ok(r) => Ok(Outcome::Pass(json!({ "axiom": "causality", "verdict": "Holds", "report": r }))),
        Err(AuditError::CausalityViolation { test, residual }) => Ok(Outcome::Fail(json!({
            "axiom": "causality",
            "verdict": "Violated",
            "witness": { "test": test, "residual": residual },
        }))),
        Err(e) => Err(e.into()),
    }
}

/// Every normalized state must have a purification.
fn audit_purification(th: &LoadedTheory) -> Result<Outcome, Failure> {
    let b = th.backend();
    let mut results = Vec::new();
    let mut skipped = Vec::new();
    let mut failure = None;
    for (name, rho) in th.states() {
        let norm = b.trace_effect(&rho.system)?.pair(rho);
        if (norm - 1.0).abs() > b.tolerances().normalization {
            skipped.push(json!({ "state": name, "trace": norm }));
            continue;
        }
        let (ok, v) = purification_report(th, name, rho)?;
        if !ok && failure.is_none() {
            failure = Some(v.clone());
        }
        results.push(v);
    }
    if results.is_empty() {
        return Err(usage("no normalized state to purify".into()));
    }
    let report = json!({
        "axiom": "purification",
        "verdict": if failure.is_some() { "Violated" } else { "Holds" },
        "witness": failure,
        "states": results,
        "skipped": skipped,
    });
    Ok(verdict(failure.is_none(), report))
}

/// Every declared system must have a faithful state.
fn audit_faithfulness(th: &LoadedTheory, trials: usize, seed: u64) -> Result<Outcome, Failure> {
    let b = th.backend();
    let systems = declared(th);
    if systems.is_empty() {
        return Err(usage("no declared system".into()));
    }
    let mut reports = Vec::new();
    let mut holds = true;
    for a in &systems {
        let omega = faithful_state(b, a)?;
        let r = verify_faithfulness(b, &omega, trials, seed)?;
        holds &= r.holds;
        reports.push(json!({ "state": omega.state, "certificate": omega.certificate, "report": r }));
    }
    let report = json!({
        "axiom": "faithfulness",
        "verdict": if holds { "Holds" } else { "Violated" },
        "systems": reports,
    });
    Ok(verdict(holds, report))
}

/// Dimension count for every ordered pair of declared systems.
fn audit_local_tomography(th: &LoadedTheory) -> Result<Outcome, Failure> {
    let b = th.backend();
    let systems = declared(th);
    if systems.is_empty() {
        return Err(usage("no declared system".into()));
    }
    let mut pairs = Vec::new();
    let mut holds = true;
    for x in &systems {
        for y in &systems {
            let r = local_tomography_check(b, x, y)?;
            holds &= r.holds();
            pairs.push(json!({ "a": x, "b": y, "result": r }));
        }
    }
    let report = json!({
        "axiom": "local-tomography",
        "verdict": if holds { "Holds" } else { "Fails" },
        "pairs": pairs,
    });
    Ok(verdict(holds, report))
}

/// Every test on `A → A` summing to the identity must leave no trace but its weights.
fn audit_niwd(th: &LoadedTheory) -> Result<Outcome, Failure> {
    let b = th.backend();
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut holds = true;
    for (name, t) in th.tests() {
        let a = t.test.input_type();
        if a != t.test.output_type() || a.is_unit() {
            skipped.push(json!({ "test": name, "reason": "input and output differ" }));
            continue;
        }
        match niwd_check(b, &t.branches) {
            Ok(r) => {
                holds &= r.holds();
                reports.push(json!({ "test": name, "report": r }));
            }
            Err(AuditError::BranchSumMismatch { error }) => {
                skipped.push(json!({ "test": name, "reason": "branches do not sum to the identity", "error": error }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if reports.is_empty() {
        return Err(usage("no test summing to the identity".into()));
    }
    let report = json!({
        "axiom": "niwd",
        "verdict": if holds { "Holds" } else { "Violated" },
        "tests": reports,
        "skipped": skipped,
    });
    Ok(verdict(holds, report))
}
