//! `cyc` — command-line driver for the cyclic-datatype engine.
//!
//! Each subcommand loads a source file and acts on it: `check`
//! elaborates and typechecks, `eval`/`prove`/`bisim` run the matching
//! directives, `gscheck` runs the termination checker over the file's
//! generated rule system, and `rules` lists that system. Output is
//! plain text by default or a single JSON document with `--json`; both
//! are byte-deterministic for a given input.
//!
//! Exit status is the worst outcome across the directives processed:
//! 0 success, 1 a negative verdict (inequality, failed termination
//! check), 2 an error or a refusal.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use cyc_core::bisim::eq_mod_bisim;
use cyc_core::prover::{prove, Verdict};
use cyc_core::rewrite::{check_in_theory, normalize, RewriteError, Trace, DEFAULT_FUEL};
use cyc_core::rules::{
    default_fold_insts, fixpoint_fixture, gen_all, gen_foldr, RuleInstance, RuleSet,
};
use cyc_core::surface::{load, Directive, Program};
use cyc_core::termcheck::{check_system, refine_signature, GsReport};
use cyc_core::{FoldInst, Signature, Term};

#[derive(Parser)]
#[command(name = "cyc", version, about = "Engine for cyclic algebraic datatypes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Emit a single JSON document instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Rewrite fuel (default 1000000; the CYC_FUEL environment variable
    /// overrides the default, this flag overrides both).
    #[arg(long, global = true)]
    fuel: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse, elaborate and typecheck a file.
    Check { file: PathBuf },
    /// Run the file's eval directives: normalize and print each term.
    Eval {
        file: PathBuf,
        /// Use only the fold rules (no cycle simplification).
        #[arg(long)]
        foldr_only: bool,
        /// Print every rewrite step.
        #[arg(long)]
        trace: bool,
    },
    /// Run the file's prove directives through the decision procedure.
    Prove { file: PathBuf },
    /// Run the file's bisim directives: normalize both sides and compare
    /// their charts.
    Bisim { file: PathBuf },
    /// Run the termination check over the file's generated rule system.
    Gscheck {
        file: PathBuf,
        /// Also check the cycle-unfolding fixture rule, which is expected
        /// to fail.
        #[arg(long)]
        with_fixture: bool,
    },
    /// List the file's generated rule system.
    Rules {
        file: PathBuf,
        /// Print every rule instance as `lhs -> rhs`.
        #[arg(long)]
        dump: bool,
    },
}

/// Restore default SIGPIPE behaviour so that piping output into a pager
/// or `head` terminates the process quietly instead of panicking on a
/// closed stream.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    let fuel = cli
        .fuel
        .or_else(|| std::env::var("CYC_FUEL").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(DEFAULT_FUEL);
    let code = match run(&cli, fuel) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e);
            2
        }
    };
    ExitCode::from(code)
}

fn load_file(path: &Path) -> anyhow::Result<Program> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {}", path.display(), e))?;
    load(&src).map_err(|e| anyhow::anyhow!("{}: {}", path.display(), e))
}

/// The rule instances of the file's rule system: every generated rule,
/// instantiated at the default fold shapes plus every fold instance the
/// program itself uses.
fn rule_instances(prog: &Program, rules: &RuleSet) -> Vec<RuleInstance> {
    let mut folds: Vec<FoldInst> = default_fold_insts(&prog.sig);
    for fi in prog.fold_insts() {
        if !folds.contains(&fi) {
            folds.push(fi);
        }
    }
    rules.representatives(&prog.sig, &folds)
}

fn run(cli: &Cli, fuel: usize) -> anyhow::Result<u8> {
    match &cli.cmd {
        Cmd::Check { file } => {
            let prog = load_file(file)?;
            cmd_check(file, &prog, cli.json)
        }
        Cmd::Eval { file, foldr_only, trace } => {
            let prog = load_file(file)?;
            cmd_eval(file, &prog, *foldr_only, *trace, fuel, cli.json)
        }
        Cmd::Prove { file } => {
            let prog = load_file(file)?;
            cmd_prove(file, &prog, fuel, cli.json)
        }
        Cmd::Bisim { file } => {
            let prog = load_file(file)?;
            cmd_bisim(file, &prog, fuel, cli.json)
        }
        Cmd::Gscheck { file, with_fixture } => {
            let prog = load_file(file)?;
            cmd_gscheck(file, &prog, *with_fixture, cli.json)
        }
        Cmd::Rules { file, dump } => {
            let prog = load_file(file)?;
            cmd_rules(file, &prog, *dump, cli.json)
        }
    }
}

// ---------------------------------------------------------------------
// check
// ---------------------------------------------------------------------

fn cmd_check(file: &Path, prog: &Program, as_json: bool) -> anyhow::Result<u8> {
    let types: Vec<String> = prog.sig.datatypes().map(|d| d.name.to_string()).collect();
    if as_json {
        let funs: Vec<Value> = prog
            .funs
            .values()
            .map(|f| {
                json!({
                    "name": f.name,
                    "params": f.param_tys.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
                    "result": f.result.to_string(),
                    "equation_style": f.primrec,
                })
            })
            .collect();
        emit(json!({
            "schema": 1,
            "command": "check",
            "file": file.display().to_string(),
            "types": types,
            "functions": funs,
            "specs": prog.specs.len(),
            "directives": prog.directives.len(),
            "exit": 0,
        }));
        return Ok(0);
    }
    println!("{}: ok", file.display());
    println!("  types: {}", comma(&types));
    for f in prog.funs.values() {
        let params: Vec<String> = f.param_tys.iter().map(|t| t.to_string()).collect();
        let style = if f.primrec { " (equation style)" } else { "" };
        println!("  fun {} : {} -> {}{}", f.name, comma(&params), f.result, style);
    }
    println!("  specs: {}", prog.specs.len());
    println!("  directives: {}", prog.directives.len());
    Ok(0)
}

// ---------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------

fn cmd_eval(
    file: &Path,
    prog: &Program,
    foldr_only: bool,
    trace: bool,
    fuel: usize,
    as_json: bool,
) -> anyhow::Result<u8> {
    let rules = if foldr_only { gen_foldr(&prog.sig) } else { gen_all(&prog.sig) };
    // The fold rules alone are confluent on the decidable fragment, so
    // their result is canonical; with simplification included we print
    // "a" normal form.
    let article = if foldr_only { "the" } else { "a" };
    let mut worst = 0u8;
    let mut results: Vec<Value> = Vec::new();
    let mut any = false;

    for d in &prog.directives {
        let Directive::Eval { term, line } = d else { continue };
        any = true;
        match normalize(&prog.sig, &rules, term, fuel) {
            Ok((nf, steps)) => {
                if let Err(v) = check_in_theory(&nf) {
                    worst = worst.max(2);
                    if as_json {
                        results.push(json!({
                            "line": line,
                            "input": term.to_string(),
                            "status": "refused",
                            "reason": v.to_string(),
                            "exit": 2,
                        }));
                    } else {
                        println!("eval (line {}): {}", line, term);
                        println!("  refused: {}", v);
                    }
                } else {
                    if as_json {
                        results.push(json!({
                            "line": line,
                            "input": term.to_string(),
                            "status": "normal",
                            "output": nf.to_string(),
                            "steps": steps.steps.len(),
                            "rules": steps.rule_names(),
                            "exit": 0,
                        }));
                    } else {
                        println!("eval (line {}): {}", line, term);
                        print_trace(trace, &steps);
                        println!(
                            "  {}  ({} normal form; {} steps)",
                            nf,
                            article,
                            steps.steps.len()
                        );
                    }
                }
            }
            Err(RewriteError::FuelExhausted { steps, last }) => {
                worst = worst.max(2);
                if as_json {
                    results.push(json!({
                        "line": line,
                        "input": term.to_string(),
                        "status": "fuel-exhausted",
                        "steps": steps,
                        "last": last.to_string(),
                        "exit": 2,
                    }));
                } else {
                    println!("eval (line {}): {}", line, term);
                    println!("  no normal form within {} steps; stopped at {}", steps, last);
                }
            }
        }
    }
    finish(file, "eval", as_json, any, results, worst)
}

fn print_trace(enabled: bool, trace: &Trace) {
    if !enabled {
        return;
    }
    for (i, s) in trace.steps.iter().enumerate() {
        println!("  step {:>3}: {} at [{}]", i + 1, s.rule, path_str(&s.path));
    }
}

fn path_str(path: &[usize]) -> String {
    path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
}

// ---------------------------------------------------------------------
// prove
// ---------------------------------------------------------------------

fn cmd_prove(file: &Path, prog: &Program, fuel: usize, as_json: bool) -> anyhow::Result<u8> {
    let foldr = gen_foldr(&prog.sig);
    let mut worst = 0u8;
    let mut results: Vec<Value> = Vec::new();
    let mut any = false;

    for d in &prog.directives {
        let Directive::Prove { lhs, rhs, line } = d else { continue };
        any = true;
        let report = prove(&prog.sig, &foldr, lhs, rhs, fuel);
        let code = report.verdict.exit_code() as u8;
        worst = worst.max(code);
        if as_json {
            let (verdict, incomplete, evidence, reason) = match &report.verdict {
                Verdict::Equal { incomplete } => ("equal", *incomplete, None, None),
                Verdict::NotEqual { incomplete, evidence } => (
                    "not-equal",
                    *incomplete,
                    evidence.as_ref().map(|(root, f)| json!({
                        "root": root,
                        "formula": f.to_string(),
                    })),
                    None,
                ),
                Verdict::Refused { reason, .. } => ("refused", false, None, Some(reason.clone())),
            };
            results.push(json!({
                "line": line,
                "lhs": lhs.to_string(),
                "rhs": rhs.to_string(),
                "verdict": verdict,
                "incomplete": incomplete,
                "evidence": evidence,
                "reason": reason,
                "blocks": report.block_count,
                "steps": [report.lhs_trace.steps.len(), report.rhs_trace.steps.len()],
                "exit": code,
            }));
            continue;
        }
        println!("prove (line {}): {} = {}", line, lhs, rhs);
        match &report.verdict {
            Verdict::Equal { incomplete } => {
                println!(
                    "  equal  ({} blocks; {} + {} steps{})",
                    report.block_count,
                    report.lhs_trace.steps.len(),
                    report.rhs_trace.steps.len(),
                    incomplete_note(*incomplete),
                );
            }
            Verdict::NotEqual { incomplete, evidence } => {
                println!("  not equal{}", incomplete_note(*incomplete));
                if let Some((root, f)) = evidence {
                    println!("  evidence (root {}): left satisfies {}, right does not", root, f);
                }
            }
            Verdict::Refused { reason, offending } => {
                println!("  refused: {}", reason);
                if let Some(t) = offending {
                    println!("  offending term: {}", t);
                }
            }
        }
    }
    finish(file, "prove", as_json, any, results, worst)
}

fn incomplete_note(incomplete: bool) -> &'static str {
    if incomplete {
        "; opaque subterms compared by shape"
    } else {
        ""
    }
}

// ---------------------------------------------------------------------
// bisim
// ---------------------------------------------------------------------

fn cmd_bisim(file: &Path, prog: &Program, fuel: usize, as_json: bool) -> anyhow::Result<u8> {
    let rules = gen_all(&prog.sig);
    let mut worst = 0u8;
    let mut results: Vec<Value> = Vec::new();
    let mut any = false;

    for d in &prog.directives {
        let Directive::Bisim { lhs, rhs, line } = d else { continue };
        any = true;
        match bisim_one(&prog.sig, &rules, lhs, rhs, fuel) {
            Ok(r) => {
                let code = if r.equal { 0 } else { 1 };
                worst = worst.max(code);
                if as_json {
                    results.push(json!({
                        "line": line,
                        "lhs": lhs.to_string(),
                        "rhs": rhs.to_string(),
                        "bisimilar": r.equal,
                        "incomplete": r.incomplete,
                        "evidence": r.evidence.as_ref().map(|(root, f)| json!({
                            "root": root,
                            "formula": f.to_string(),
                        })),
                        "blocks": r.block_count,
                        "exit": code,
                    }));
                } else {
                    println!("bisim (line {}): {} ~ {}", line, lhs, rhs);
                    if r.equal {
                        println!(
                            "  bisimilar  ({} blocks{})",
                            r.block_count,
                            incomplete_note(r.incomplete)
                        );
                    } else {
                        println!("  not bisimilar{}", incomplete_note(r.incomplete));
                        if let Some((root, f)) = &r.evidence {
                            println!(
                                "  evidence (root {}): left satisfies {}, right does not",
                                root, f
                            );
                        }
                    }
                }
            }
            Err(reason) => {
                worst = worst.max(2);
                if as_json {
                    results.push(json!({
                        "line": line,
                        "lhs": lhs.to_string(),
                        "rhs": rhs.to_string(),
                        "status": "refused",
                        "reason": reason,
                        "exit": 2,
                    }));
                } else {
                    println!("bisim (line {}): {} ~ {}", line, lhs, rhs);
                    println!("  refused: {}", reason);
                }
            }
        }
    }
    finish(file, "bisim", as_json, any, results, worst)
}

fn bisim_one(
    sig: &Signature,
    rules: &RuleSet,
    lhs: &Term,
    rhs: &Term,
    fuel: usize,
) -> Result<cyc_core::bisim::BisimResult, String> {
    let nf = |side: &str, t: &Term| match normalize(sig, rules, t, fuel) {
        Ok((nf, _)) => Ok(nf),
        Err(RewriteError::FuelExhausted { steps, .. }) => {
            Err(format!("{} side did not normalize within {} steps", side, steps))
        }
    };
    let l = nf("left", lhs)?;
    let r = nf("right", rhs)?;
    eq_mod_bisim(sig, &l, &r).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------
// gscheck
// ---------------------------------------------------------------------

fn cmd_gscheck(
    file: &Path,
    prog: &Program,
    with_fixture: bool,
    as_json: bool,
) -> anyhow::Result<u8> {
    let rules = gen_all(&prog.sig);
    let mut instances = rule_instances(prog, &rules);
    if with_fixture {
        if let Some(dt) = prog.sig.datatypes().next() {
            instances.push(fixpoint_fixture(&dt.name));
        }
    }
    let rsig = refine_signature(&prog.sig);
    let report = check_system(&rsig, &instances);
    let code = if report.pass { 0 } else { 1 };
    if as_json {
        emit(gs_json(file, &report, code));
        return Ok(code);
    }
    println!("termination check: {} over {}", rules.name, file.display());
    println!("  type order well-founded: {}", yes_no(report.type_order_wf));
    for (ty, ok) in &report.positivity {
        println!("  positivity {}: {}", ty, yes_no(*ok));
    }
    println!("  precedence well-founded: {}", yes_no(report.precedence_wf));
    for r in &report.rules {
        if r.pass {
            println!("  rule {} [{}]: pass (clauses {})", r.rule, r.label, r.clauses.join(" "));
        } else {
            let why = r.failure.as_ref().map(|f| f.to_string()).unwrap_or_default();
            println!("  rule {} [{}]: FAIL — {}", r.rule, r.label, why);
        }
    }
    println!("result: {}", if report.pass { "pass" } else { "FAIL" });
    Ok(code)
}

fn gs_json(file: &Path, report: &GsReport, code: u8) -> Value {
    json!({
        "schema": 1,
        "command": "gscheck",
        "file": file.display().to_string(),
        "type_order_wf": report.type_order_wf,
        "positivity": report.positivity.iter()
            .map(|(ty, ok)| json!({"type": ty, "positive": ok}))
            .collect::<Vec<_>>(),
        "precedence_wf": report.precedence_wf,
        "rules": report.rules.iter().map(|r| json!({
            "rule": r.rule,
            "label": r.label,
            "pass": r.pass,
            "clauses": r.clauses,
            "failure": r.failure.as_ref().map(|f| f.to_string()),
        })).collect::<Vec<_>>(),
        "pass": report.pass,
        "exit": code,
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "NO"
    }
}

// ---------------------------------------------------------------------
// rules
// ---------------------------------------------------------------------

fn cmd_rules(file: &Path, prog: &Program, dump: bool, as_json: bool) -> anyhow::Result<u8> {
    let rules = gen_all(&prog.sig);
    let instances = rule_instances(prog, &rules);
    if as_json {
        emit(json!({
            "schema": 1,
            "command": "rules",
            "file": file.display().to_string(),
            "ruleset": rules.name,
            "count": instances.len(),
            "rules": instances.iter().map(|i| json!({
                "rule": i.rule,
                "label": i.label,
                "lhs": i.pair.lhs.to_string(),
                "rhs": i.pair.rhs.to_string(),
            })).collect::<Vec<_>>(),
            "exit": 0,
        }));
        return Ok(0);
    }
    println!("rule system {} over {}: {} instances", rules.name, file.display(), instances.len());
    if dump {
        for i in &instances {
            println!("  {} [{}]:", i.rule, i.label);
            println!("    {}  ->  {}", i.pair.lhs, i.pair.rhs);
        }
    } else {
        // Group counts by rule name, preserving first-seen order.
        let mut names: Vec<&'static str> = Vec::new();
        for i in &instances {
            if !names.contains(&i.rule) {
                names.push(i.rule);
            }
        }
        for name in names {
            let n = instances.iter().filter(|i| i.rule == name).count();
            println!("  {}: {} instances", name, n);
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// shared output helpers
// ---------------------------------------------------------------------

fn comma(items: &[String]) -> String {
    items.join(", ")
}

fn emit(v: Value) {
    println!("{}", v);
}

fn finish(
    file: &Path,
    command: &str,
    as_json: bool,
    any: bool,
    results: Vec<Value>,
    worst: u8,
) -> anyhow::Result<u8> {
    if as_json {
        emit(json!({
            "schema": 1,
            "command": command,
            "file": file.display().to_string(),
            "results": results,
            "exit": worst,
        }));
    } else if !any {
        println!("{}: no {} directives", file.display(), command);
    }
    Ok(worst)
}
