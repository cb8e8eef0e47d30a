mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use tcm_reduce::checker::{check_bounded, check_report, eval_ground, CheckerConfig, Verdict};
use tcm_reduce::encoder::{compute_d, encode, EncodingVariant};
use tcm_reduce::logic::{to_cnf, Clause, Formula};
use tcm_reduce::machine::{extend_halting, run, Configuration, Counter, Instruction, Program};
use tcm_reduce::model::{
    build_canonical, build_fixed_width, check_observations, chunk_start, decode, BitModel,
};

fn counter(second: bool) -> Counter {
    if second {
        Counter::C2
    } else {
        Counter::C1
    }
}

/// Deterministic programs with one to four working lines and a final halt.
fn program() -> impl Strategy<Value = Program> {
    (1usize..=4)
        .prop_flat_map(|k| proptest::collection::vec((any::<bool>(), any::<bool>(), 0..=k), k))
        .prop_map(|lines| {
            let k = lines.len();
            let mut instrs: Vec<Instruction> = lines
                .into_iter()
                .map(|(inc, c, target)| {
                    if inc {
                        Instruction::inc(counter(c))
                    } else {
                        Instruction::tdec(counter(c), target.min(k))
                    }
                })
                .collect();
            instrs.push(Instruction::halt());
            Program::new(instrs).unwrap()
        })
}

fn prefix(p: &Program, m: u64, n: u64, h: usize) -> Vec<Configuration> {
    let r = run(p, m, n, h - 1, None).unwrap();
    extend_halting(p, &r, h).unwrap()
}

#[derive(Debug)]
struct Case {
    program: Program,
    configs: Vec<Configuration>,
    d: u64,
    model: BitModel,
    bound: u64,
}

fn case() -> impl Strategy<Value = Case> {
    (program(), 0u64..3, 0u64..3, 1usize..=3).prop_map(|(program, m, n, h)| {
        let configs = prefix(&program, m, n, h);
        let d = compute_d(&program, m, n);
        let model = build_canonical(&configs, d).unwrap();
        let bound = chunk_start(h as u64 - 1, d).unwrap();
        Case { program, configs, d, model, bound }
    })
}

fn input_of(c: &Case) -> (u64, u64) {
    (c.configs[0].c1, c.configs[0].c2)
}

fn flip(m: &BitModel, positions: &[u64]) -> BitModel {
    let mut bits = m.bits();
    for &p in positions {
        let i = (p % bits.len() as u64) as usize;
        bits[i] = !bits[i];
    }
    BitModel::from_bits(&bits, m.layout(), m.finite_support())
}

/// `∀v. (a₁ ∧ … ∧ aₖ) → (b₁ ∨ … ∨ bₗ)` for the clause `¬a₁ ∨ … ∨ bₗ`, the
/// shape the bounded checker can prune on.
fn as_implication(c: &Clause) -> Formula {
    let premise = c.literals.iter().filter(|l| !l.positive).map(|l| l.negated().to_formula()).collect();
    let conclusion = c.literals.iter().filter(|l| l.positive).map(|l| l.to_formula()).collect();
    let body = Formula::implies(Formula::And(premise), Formula::Or(conclusion));
    let vars: Vec<&str> = c.variables.iter().map(String::as_str).collect();
    if vars.is_empty() {
        body
    } else {
        Formula::forall(&vars, body)
    }
}

/// Verdict kind and witness, ignoring how the failing literal is spelled.
fn shape(v: &Verdict) -> (&'static str, Option<&BTreeMap<String, u64>>) {
    match v {
        Verdict::Violated { witness, .. } => (v.name(), Some(witness)),
        _ => (v.name(), None),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn canonical_models_round_trip(p in program(), m in 0u64..4, n in 0u64..4, h in 1usize..=6) {
        let configs = prefix(&p, m, n, h);
        let d = compute_d(&p, m, n);
        let model = build_canonical(&configs, d).unwrap();
        prop_assert_eq!(model.len(), chunk_start(h as u64, d).unwrap() + 6);
        check_observations(&model).unwrap();
        prop_assert_eq!(decode(&model).unwrap(), configs.clone());
        let again = BitModel::parse_dump(&model.dump()).unwrap();
        prop_assert_eq!(again.bits(), model.bits());
        prop_assert_eq!(decode(&again).unwrap(), configs);
    }

    #[test]
    fn fixed_width_models_round_trip(p in program(), m in 0u64..4, n in 0u64..4, h in 1usize..=6) {
        let configs = prefix(&p, m, n, h);
        let d_val = compute_d(&p, m, n) + h as u64;
        let model = build_fixed_width(&configs, d_val).unwrap();
        prop_assert!(model.finite_support());
        check_observations(&model).unwrap();
        prop_assert_eq!(decode(&model).unwrap(), configs);
    }

    #[test]
    fn single_bit_flips_break_observations_or_decoding(c in case(), pos in any::<u64>()) {
        let broken = flip(&c.model, &[pos]);
        let observed = check_observations(&broken).is_ok();
        let decoded = decode(&broken).ok();
        prop_assert!(!observed || decoded.as_ref() != Some(&c.configs));
    }

    /// On the model of a run prefix, only the halting sentence can fail, and
    /// it fails exactly at the first chunk on the last line.
    #[test]
    fn canonical_models_satisfy_the_run_sentences(c in case()) {
        let (m, n) = input_of(&c);
        let enc = encode(&c.program, m, n, EncodingVariant::Standard).unwrap();
        let report = check_report(&enc, &c.model, &CheckerConfig::new(c.bound)).unwrap();
        for s in &report.sentences {
            if s.name != "phi4" {
                prop_assert!(s.verdict.is_ok(), "{} {:?}", s.name, s.verdict);
            }
        }
        let halt_at = c.configs.iter().position(|cf| cf.line == c.program.last_line());
        match (halt_at, report.verdict("phi4").unwrap()) {
            (None, Verdict::Satisfied) => {}
            (Some(i), Verdict::Violated { witness, .. }) => {
                prop_assert_eq!(witness["x"], chunk_start(i as u64, c.d).unwrap());
            }
            (h, v) => prop_assert!(false, "halt index {:?} but {:?}", h, v),
        }
    }

    /// Every reported counterexample really falsifies the sentence.
    #[test]
    fn violation_witnesses_are_sound(c in case(), flips in proptest::collection::vec(any::<u64>(), 0..3)) {
        let (m, n) = input_of(&c);
        let model = flip(&c.model, &flips);
        let cfg = CheckerConfig::new(c.bound);
        for v in [EncodingVariant::Standard, EncodingVariant::TwoVar] {
            let enc = encode(&c.program, m, n, v).unwrap();
            for s in &enc.sentences {
                if let Ok(Verdict::Violated { witness, .. }) = check_bounded(&s.formula, &model, &cfg) {
                    let (_, body) = s.formula.strip_forall();
                    let ground = body.instantiate(&witness);
                    prop_assert_eq!(eval_ground(&ground, &model).ok(), Some(false), "{} {}", v, s.name);
                }
            }
        }
    }

    /// A violation found on a shorter prefix survives a longer one with the
    /// same witness.
    #[test]
    fn violations_persist_as_the_horizon_grows(c in case()) {
        let (m, n) = input_of(&c);
        let enc = encode(&c.program, m, n, EncodingVariant::Standard).unwrap();
        let short = check_report(&enc, &c.model, &CheckerConfig::new(c.bound)).unwrap();
        let h = c.configs.len() + 1;
        let longer = build_canonical(&prefix(&c.program, m, n, h), c.d).unwrap();
        let bound = chunk_start(h as u64 - 1, c.d).unwrap();
        let long = check_report(&enc, &longer, &CheckerConfig::new(bound)).unwrap();
        for s in &short.sentences {
            if let Verdict::Violated { .. } = s.verdict {
                prop_assert_eq!(long.verdict(&s.name), Some(&s.verdict));
            }
        }
    }

    #[test]
    fn clause_form_agrees_with_sentences(c in case(), flips in proptest::collection::vec(any::<u64>(), 0..3)) {
        let (m, n) = input_of(&c);
        let enc = encode(&c.program, m, n, EncodingVariant::Standard).unwrap();
        let model = flip(&c.model, &flips);
        let cfg = CheckerConfig::new(c.bound);
        for s in &enc.sentences {
            let whole = check_bounded(&s.formula, &model, &cfg);
            let clauses: Result<Vec<bool>, _> = to_cnf(&s.formula.expand_macros())
                .unwrap()
                .clauses
                .iter()
                .map(|cl| check_bounded(&as_implication(cl), &model, &cfg).map(|v| v.is_ok()))
                .collect();
            if let (Ok(whole), Ok(clauses)) = (whole, clauses) {
                prop_assert_eq!(whole.is_ok(), clauses.iter().all(|&b| b), "{}", s.name);
            }
        }
    }

    #[test]
    fn function_encoding_agrees_with_predicate_encoding(c in case(), flips in proptest::collection::vec(any::<u64>(), 0..3)) {
        let (m, n) = input_of(&c);
        let model = flip(&c.model, &flips);
        let cfg = CheckerConfig::new(c.bound);
        let standard = encode(&c.program, m, n, EncodingVariant::Standard).unwrap();
        for v in [EncodingVariant::FnHornNat, EncodingVariant::FnHornReal] {
            let fenc = encode(&c.program, m, n, v).unwrap();
            prop_assert!(check_bounded(fenc.get("range").unwrap(), &model, &cfg).unwrap().is_ok());
            for s in &standard.sentences {
                let a = check_bounded(&s.formula, &model, &cfg);
                let b = check_bounded(fenc.get(&s.name).unwrap(), &model, &cfg);
                if let (Ok(a), Ok(b)) = (a, b) {
                    prop_assert_eq!(shape(&a), shape(&b), "{} {}", v, s.name);
                }
            }
        }
    }

    #[test]
    fn parallel_and_serial_reports_match(c in case(), flips in proptest::collection::vec(any::<u64>(), 0..3)) {
        let (m, n) = input_of(&c);
        let model = flip(&c.model, &flips);
        for v in [EncodingVariant::Standard, EncodingVariant::TwoVar] {
            let enc = encode(&c.program, m, n, v).unwrap();
            let par = CheckerConfig::new(c.bound);
            let ser = CheckerConfig::new(c.bound).serial();
            let a = check_report(&enc, &model, &par).map(|r| serde_json::to_string(&r).unwrap());
            let b = check_report(&enc, &model, &ser).map(|r| serde_json::to_string(&r).unwrap());
            prop_assert_eq!(a.ok(), b.ok());
        }
    }

    #[test]
    fn two_var_agrees_with_standard_on_run_models(c in case()) {
        let (m, n) = input_of(&c);
        let cfg = CheckerConfig::new(c.bound);
        let a = check_report(&encode(&c.program, m, n, EncodingVariant::Standard).unwrap(), &c.model, &cfg).unwrap();
        let b = check_report(&encode(&c.program, m, n, EncodingVariant::TwoVar).unwrap(), &c.model, &cfg).unwrap();
        prop_assert_eq!(a.all_ok(), b.all_ok());
        prop_assert_eq!(a.verdict("phi4"), b.verdict("phi4"));
        prop_assert_eq!(a.failures(), b.failures());
    }
}
