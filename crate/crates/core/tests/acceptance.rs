//! One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{load, CORPUS};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use tcm_reduce::checker::{check_bounded, check_report, check_report_with, CheckerConfig, Verdict};
use tcm_reduce::encoder::{compute_d, encode, EncodingVariant};
use tcm_reduce::logic::{is_horn, max_vars_per_clause, predicate_to_function, to_cnf, Flavor};
use tcm_reduce::machine::{extend_halting, run, Configuration, Counter, Instruction, Op, Program};
use tcm_reduce::model::{
    build_canonical, build_fixed_width, check_observations, chunk_start, decode, BitModel,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn configs(name: &str, m: u64, n: u64, h: usize) -> Vec<Configuration> {
    let p = load(name);
    let r = run(&p, m, n, h - 1, None).unwrap();
    extend_halting(&p, &r, h).unwrap()
}

/// Models built for criteria 1 and 2, reused by 8.
fn run_models() -> Vec<(&'static str, BitModel)> {
    vec![
        ("m_loop/4", build_canonical(&configs("m_loop", 0, 0, 4), 8).unwrap()),
        ("m_inc/4", build_canonical(&configs("m_inc", 0, 0, 4), 7).unwrap()),
        ("m_inc/3", build_canonical(&configs("m_inc", 0, 0, 3), 7).unwrap()),
    ]
}

fn c1_loop_satisfiable() -> Outcome {
    let p = load("m_loop");
    let d = compute_d(&p, 0, 0);
    ensure(d == 8, || format!("d = {d}"))?;
    let bound = chunk_start(3, d).unwrap();
    ensure(bound == 512, || format!("B = {bound}"))?;
    let model = build_canonical(&configs("m_loop", 0, 0, 4), d).unwrap();
    let enc = encode(&p, 0, 0, EncodingVariant::Standard).unwrap();
    let start = Instant::now();
    let report =
        check_report(&enc, &model, &CheckerConfig::new(bound).serial()).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(report.all_ok(), || format!("failures {:?}", report.failures()))?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{} sentences satisfied, B=512, serial, {took:.2?}", report.sentences.len()))
}

fn c2_inc_violates_phi4() -> Outcome {
    let p = load("m_inc");
    let enc = encode(&p, 0, 0, EncodingVariant::Standard).unwrap();
    let mut details = Vec::new();
    // Four configurations reach B=448 without leaving the model; three give B=112.
    for (h, bound) in [(4usize, 448u64), (3, 112)] {
        ensure(chunk_start(h as u64 - 1, 7).unwrap() == bound, || format!("B for h={h}"))?;
        let model = build_canonical(&configs("m_inc", 0, 0, h), 7).unwrap();
        let report = check_report(&enc, &model, &CheckerConfig::new(bound)).map_err(|e| e.to_string())?;
        ensure(report.failures() == ["phi4"], || format!("h={h}: failures {:?}", report.failures()))?;
        match report.verdict("phi4") {
            Some(Verdict::Violated { witness, failing_literal }) => {
                ensure(witness.get("x") == Some(&28) && witness.len() == 1, || {
                    format!("witness {witness:?}")
                })?;
                details.push(format!("B={bound}: phi4 violated at x=28 ({failing_literal})"));
            }
            other => return Err(format!("phi4: {other:?}")),
        }
    }
    Ok(details.join("; "))
}

fn c3_horn() -> Outcome {
    let mut clauses = 0;
    for &(name, m, n) in CORPUS {
        let enc = encode(&load(name), m, n, EncodingVariant::FnHornNat).unwrap();
        for s in &enc.sentences {
            let cs = to_cnf(&s.formula).map_err(|e| e.to_string())?;
            ensure(is_horn(&cs), || format!("{name} {} not Horn", s.name))?;
            clauses += cs.len();
        }
    }
    let enc = encode(&load("m_branch"), 0, 0, EncodingVariant::NondetRecurrence).unwrap();
    let mut non_horn = Vec::new();
    for s in enc.sentences.iter().filter(|s| !s.formula.has_existential()) {
        let (f, _) = predicate_to_function(&s.formula, Flavor::Nat);
        if !is_horn(&to_cnf(&f).map_err(|e| e.to_string())?) {
            non_horn.push(s.name.clone());
        }
    }
    ensure(!non_horn.is_empty(), || "nondet encoding is Horn".into())?;
    Ok(format!(
        "{} corpus machines, {clauses} Horn clauses; nondet m_branch non-Horn in {non_horn:?}",
        CORPUS.len()
    ))
}

fn c4_two_variables() -> Outcome {
    for &(name, m, n) in CORPUS {
        let p = load(name);
        let enc = encode(&p, m, n, EncodingVariant::TwoVar).unwrap();
        let mut max = 0;
        for s in &enc.sentences {
            max = max.max(max_vars_per_clause(&to_cnf(&s.formula).map_err(|e| e.to_string())?));
        }
        ensure(max == 2, || format!("{name}: two-var max {max}"))?;

        let enc = encode(&p, m, n, EncodingVariant::Standard).unwrap();
        for s in enc.sentences.iter().filter(|s| s.name.starts_with("instr.")) {
            let line: usize = s.name.split('.').nth(1).unwrap().parse().unwrap();
            let vars = max_vars_per_clause(&to_cnf(&s.formula).map_err(|e| e.to_string())?);
            let expected = match p.lines()[line].op {
                Op::Inc(_) => Some(3),
                Op::TestDec(..) if s.name.ends_with(".pos") => Some(4),
                _ => None,
            };
            if let Some(e) = expected {
                ensure(vars == e, || format!("{name} {}: {vars} variables, expected {e}", s.name))?;
            }
        }
    }
    Ok("two-var max 2 on every corpus machine; standard inc 3, test-and-decrement positive 4".into())
}

fn c5_fixed_width() -> Outcome {
    let p = load("m_inc");
    let enc = encode(&p, 0, 0, EncodingVariant::FixedWidth).unwrap();
    let constants = [("d".to_string(), 7), ("e".to_string(), 21)].into_iter().collect();
    let mut details = Vec::new();
    // The halting run itself (two configurations), and the same run padded
    // with a repeated halting configuration.
    for h in [2usize, 3] {
        let model = build_fixed_width(&configs("m_inc", 0, 0, h), 7).map_err(|e| e.to_string())?;
        ensure(model.finite_support(), || "support not finite".into())?;
        let last_one = model.ones().into_iter().max().unwrap_or(0);
        ensure(last_one <= 69, || format!("h={h}: bit {last_one} set"))?;
        let bound = 3 * 7 * h as u64;
        let report = check_report_with(&enc, &model, &CheckerConfig::new(bound), &constants)
            .map_err(|e| e.to_string())?;
        ensure(report.all_ok(), || format!("h={h}: failures {:?}", report.failures()))?;
        details.push(format!("{h} configs: e={:?}, last 1 at {last_one}", model.e()));
    }
    Ok(format!("all satisfied with d=7, e=21; {}", details.join("; ")))
}

fn c6_recurrence() -> Outcome {
    let p = load("m_branch");
    let d = compute_d(&p, 0, 0);
    let choices = [false; 3];
    let r = run(&p, 0, 0, 3, Some(&choices)).map_err(|e| e.to_string())?;
    ensure(!r.halted(), || "m_branch halted".into())?;
    let model = build_canonical(&r.configs, d).unwrap();
    let bound = chunk_start(2, d).unwrap();
    let inner = chunk_start(3, d).unwrap();
    let enc = encode(&p, 0, 0, EncodingVariant::NondetRecurrence).unwrap();
    let phi5 = enc.get("phi5").ok_or("no phi5")?;
    let cfg = CheckerConfig::new(bound).with_inner_bound(inner);
    match check_bounded(phi5, &model, &cfg).map_err(|e| e.to_string())? {
        Verdict::BoundedSatisfied { witnesses } => {
            let xs: Vec<u64> = witnesses.iter().map(|w| w["x"]).collect();
            ensure(xs == (0..=bound).collect::<Vec<_>>(), || format!("outer values {xs:?}"))?;
            ensure(witnesses.iter().all(|w| w.contains_key("y")), || "missing y".into())?;
            Ok(format!("witness y for each of x=0..={bound} (inner bound {inner})"))
        }
        other => Err(format!("{other:?}")),
    }
}

fn random_program(rng: &mut StdRng) -> Program {
    let k = rng.gen_range(1..=5);
    let counter = |rng: &mut StdRng| if rng.gen() { Counter::C1 } else { Counter::C2 };
    let mut lines: Vec<Instruction> = (0..k)
        .map(|_| {
            if rng.gen_bool(0.5) {
                Instruction::inc(counter(rng))
            } else {
                Instruction::tdec(counter(rng), rng.gen_range(0..=k))
            }
        })
        .collect();
    lines.push(Instruction::halt());
    Program::new(lines).unwrap()
}

fn c7_round_trip() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x2c0_u64);
    let trials = 500;
    let mut halted = 0;
    for i in 0..trials {
        let p = random_program(&mut rng);
        let (m, n) = (rng.gen_range(0..6), rng.gen_range(0..6));
        let h = rng.gen_range(1..=6);
        let r = run(&p, m, n, h - 1, None).map_err(|e| e.to_string())?;
        halted += r.halted() as usize;
        let cs = extend_halting(&p, &r, h).map_err(|e| e.to_string())?;
        let model = build_canonical(&cs, compute_d(&p, m, n)).map_err(|e| e.to_string())?;
        let back = decode(&model).map_err(|e| format!("trial {i}: {e}"))?;
        ensure(back == cs, || format!("trial {i}: {:?} decoded as {back:?}", cs))?;
    }
    Ok(format!("{trials} seeded trials, h<=6, {halted} halted within horizon"))
}

fn c8_observations() -> Outcome {
    let models = run_models();
    for (label, m) in &models {
        check_observations(m).map_err(|e| format!("{label}: {e}"))?;
    }
    let labels: Vec<&str> = models.iter().map(|(l, _)| *l).collect();
    Ok(format!("observations hold on {labels:?}"))
}

fn z3_verdict(script: &str, seconds: u64) -> Option<String> {
    let dir = tempfile::tempdir().ok()?;
    let file = dir.path().join("enc.smt2");
    std::fs::write(&file, script).ok()?;
    let out = Command::new("z3").arg(format!("-T:{seconds}")).arg(&file).output().ok()?;
    Some(String::from_utf8_lossy(&out.stdout).trim().to_string())
}

/// Informational only: never fails.
fn c9_external_solver() -> String {
    let script =
        |name: &str| encode(&load(name), 0, 0, EncodingVariant::Standard).unwrap().to_smtlib().unwrap();
    let budget = std::env::var("TCM_SMT_BUDGET").ok().and_then(|s| s.parse().ok()).unwrap_or(10);
    match z3_verdict(&script("m_inc"), 60) {
        None => "SKIP [9] external solver: z3 not found".into(),
        Some(inc) => {
            let lp = z3_verdict(&script("m_loop"), budget).unwrap_or_default();
            format!(
                "INFO [9] external solver (not gating): m_inc -> {inc}; m_loop -> {lp} ({budget}s budget)"
            )
        }
    }
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("satisfiable direction: m_loop canonical model", c1_loop_satisfiable),
        ("unsatisfiable direction: m_inc violates phi4", c2_inc_violates_phi4),
        ("Horn form of the function encoding", c3_horn),
        ("two variables per clause", c4_two_variables),
        ("fixed width, finite support", c5_fixed_width),
        ("recurrence sentence witnesses", c6_recurrence),
        ("round trip on random machines", c7_round_trip),
        ("layout observations", c8_observations),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or(e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why}", i + 1);
            }
        }
    }
    println!("{}", c9_external_solver());
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
