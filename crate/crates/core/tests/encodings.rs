mod common;

use common::{golden_dir, load, CORPUS};
use tcm_reduce::encoder::{encode, EncodingVariant};
use tcm_reduce::logic::smtlib::parse_script_asserts;
use tcm_reduce::logic::{is_horn, max_vars_per_clause, to_cnf};

fn golden(machine: &str, m: u64, n: u64, variant: EncodingVariant) {
    let enc = encode(&load(machine), m, n, variant).unwrap();
    let file = golden_dir().join(format!("{machine}.{}.txt", variant.name()));
    let expected = std::fs::read_to_string(&file).unwrap();
    assert_eq!(enc.to_string(), expected, "{}", file.display());
}

#[test]
fn golden_m_inc_standard() {
    golden("m_inc", 0, 0, EncodingVariant::Standard);
}

#[test]
fn golden_m_drain_standard() {
    golden("m_drain", 2, 0, EncodingVariant::Standard);
}

#[test]
fn golden_m_drain_two_var() {
    golden("m_drain", 2, 0, EncodingVariant::TwoVar);
}

#[test]
fn golden_m_c2_two_var() {
    golden("m_c2", 0, 0, EncodingVariant::TwoVar);
}

#[test]
fn golden_m_inc_fixed_width() {
    golden("m_inc", 0, 0, EncodingVariant::FixedWidth);
}

#[test]
fn golden_m_branch_nondet() {
    golden("m_branch", 0, 0, EncodingVariant::NondetRecurrence);
}

#[test]
fn golden_smt2() {
    let enc = encode(&load("m_inc"), 0, 0, EncodingVariant::Standard).unwrap();
    let expected = std::fs::read_to_string(golden_dir().join("m_inc.standard.smt2")).unwrap();
    assert_eq!(enc.to_smtlib().unwrap(), expected);
}

#[test]
fn encodings_are_byte_stable() {
    for &(name, m, n) in CORPUS {
        let p = load(name);
        for v in EncodingVariant::ALL {
            if v == EncodingVariant::NondetRecurrence {
                continue;
            }
            let a = encode(&p, m, n, v).unwrap();
            let b = encode(&p, m, n, v).unwrap();
            assert_eq!(a.to_string(), b.to_string());
            assert_eq!(a.to_smtlib().unwrap(), b.to_smtlib().unwrap());
            assert_eq!(a.machine_hash, b.machine_hash);
        }
    }
}

#[test]
fn smt2_asserts_parse_back() {
    for &(name, m, n) in CORPUS {
        let p = load(name);
        for v in EncodingVariant::ALL {
            if v == EncodingVariant::NondetRecurrence {
                continue;
            }
            let enc = encode(&p, m, n, v).unwrap();
            let script = enc.to_smtlib().unwrap();
            let asserts = parse_script_asserts(&script).unwrap();
            assert_eq!(asserts.len(), enc.sentences.len(), "{name} {v}");
            for f in &asserts {
                assert!(f.free_symbols().iter().all(|s| s == "d" || s == "e"), "{name} {v}: {f}");
            }
        }
    }
}

#[test]
fn two_var_uses_two_variables_per_clause() {
    for &(name, m, n) in CORPUS {
        let enc = encode(&load(name), m, n, EncodingVariant::TwoVar).unwrap();
        for s in &enc.sentences {
            let cs = to_cnf(&s.formula).unwrap();
            assert!(max_vars_per_clause(&cs) <= 2, "{name} {}", s.name);
        }
    }
}

#[test]
fn function_variants_are_horn() {
    for &(name, m, n) in CORPUS {
        for v in [EncodingVariant::FnHornNat, EncodingVariant::FnHornReal] {
            let enc = encode(&load(name), m, n, v).unwrap();
            for s in &enc.sentences {
                assert!(is_horn(&to_cnf(&s.formula).unwrap()), "{name} {v} {}", s.name);
            }
        }
    }
}

#[test]
fn predicate_encoding_is_not_horn() {
    let enc = encode(&load("m_inc"), 0, 0, EncodingVariant::Standard).unwrap();
    let non_horn =
        enc.sentences.iter().filter(|s| !is_horn(&to_cnf(&s.formula.expand_macros()).unwrap())).count();
    assert!(non_horn > 0);
}

#[test]
fn every_variant_declares_distinct_names() {
    for &(name, m, n) in CORPUS {
        for v in EncodingVariant::ALL {
            if v == EncodingVariant::NondetRecurrence {
                continue;
            }
            let enc = encode(&load(name), m, n, v).unwrap();
            let mut names = enc.names();
            let total = names.len();
            names.sort();
            names.dedup();
            assert_eq!(names.len(), total, "{name} {v}");
        }
    }
}
