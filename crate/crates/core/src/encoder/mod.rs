//! Compile a two-counter machine and its input into sentence sets over one
//! unary predicate.

mod schemes;

use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::logic::{
    predicate_to_function, range_axiom, smtlib, Flavor, Formula, LinearTerm, LogicError, MacroKind,
    SmtHeader, Sort,
};
use crate::machine::{validate_program, Program, Violation};

use schemes::Successor;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("invalid program: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("variant {0} does not accept branch annotations")]
    BranchesNotAllowed(EncodingVariant),
    #[error("variant {0} requires a branch-annotated program")]
    BranchesRequired(EncodingVariant),
    #[error("variant {variant} requires input (0,0), got ({m},{n})")]
    NonzeroInput { variant: EncodingVariant, m: u64, n: u64 },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncodingVariant {
    Standard,
    TwoVar,
    FnHornNat,
    FnHornReal,
    NondetRecurrence,
    FiniteExists,
    FixedWidth,
}

impl EncodingVariant {
    pub const ALL: [EncodingVariant; 7] = [
        EncodingVariant::Standard,
        EncodingVariant::TwoVar,
        EncodingVariant::FnHornNat,
        EncodingVariant::FnHornReal,
        EncodingVariant::NondetRecurrence,
        EncodingVariant::FiniteExists,
        EncodingVariant::FixedWidth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EncodingVariant::Standard => "standard",
            EncodingVariant::TwoVar => "two-var",
            EncodingVariant::FnHornNat => "fn-horn-nat",
            EncodingVariant::FnHornReal => "fn-horn-real",
            EncodingVariant::NondetRecurrence => "nondet-recurrence",
            EncodingVariant::FiniteExists => "finite-exists",
            EncodingVariant::FixedWidth => "fixed-width",
        }
    }

    pub fn parse(s: &str) -> Option<EncodingVariant> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    /// True for the variants that lay chunks out at `d·4^i`.
    pub fn is_growing(self) -> bool {
        !matches!(self, EncodingVariant::FixedWidth)
    }
}

impl fmt::Display for EncodingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "layout", rename_all = "kebab-case")]
pub enum EncodingParams {
    /// Chunk `i` starts at `d·4^i`.
    Growing { d: u64 },
    /// `d` and `e` are uninterpreted constants; `k` is the numeral lower
    /// bound on `d`.
    FixedWidth { k: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSentence {
    pub name: String,
    pub formula: Formula,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingResult {
    pub variant: EncodingVariant,
    pub sentences: Vec<NamedSentence>,
    pub params: EncodingParams,
    pub machine_hash: String,
}

impl EncodingResult {
    pub fn get(&self, name: &str) -> Option<&Formula> {
        self.sentences.iter().find(|s| s.name == name).map(|s| &s.formula)
    }

    pub fn names(&self) -> Vec<&str> {
        self.sentences.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn pairs(&self) -> Vec<(String, Formula)> {
        self.sentences.iter().map(|s| (s.name.clone(), s.formula.clone())).collect()
    }

    pub fn smt_header(&self) -> SmtHeader {
        let sort = match self.variant {
            EncodingVariant::FnHornReal => Sort::Real,
            _ => Sort::Int,
        };
        let (constants, unguarded) = match self.variant {
            EncodingVariant::FixedWidth => {
                (vec!["d".to_string(), "e".to_string()], vec![NEGATIVE_EMPTY.to_string()])
            }
            _ => (vec![], vec![]),
        };
        SmtHeader {
            variant: self.variant.name().to_string(),
            machine_hash: self.machine_hash.clone(),
            sort,
            constants,
            nat_guards: sort == Sort::Int,
            unguarded,
        }
    }

    pub fn to_smtlib(&self) -> Result<String, LogicError> {
        smtlib::to_smtlib(&self.pairs(), &self.smt_header())
    }
}

impl fmt::Display for EncodingResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.sentences {
            writeln!(f, "{}: {}", s.name, s.formula)?;
        }
        Ok(())
    }
}

/// Name of the fixed-width sentence `∀x. x < 0 → ¬P(x)`.
const NEGATIVE_EMPTY: &str = "phi1.5";

pub(crate) fn var(name: &str) -> LinearTerm {
    LinearTerm::var(name)
}

pub(crate) fn num(n: u64) -> LinearTerm {
    LinearTerm::num(n)
}

/// The abbreviation `kind` applied at `t`, kept folded until expansion.
pub fn macro_formula(kind: MacroKind, t: LinearTerm) -> Formula {
    Formula::macro_app(kind, t)
}

/// `χ_j(t) = End(t + 5 + j)`.
pub fn chi(j: usize, t: LinearTerm) -> Formula {
    Formula::macro_app(MacroKind::Chi(j), t)
}

pub(crate) fn chunk(t: LinearTerm) -> Formula {
    macro_formula(MacroKind::Chunk, t)
}

pub(crate) fn brk(t: LinearTerm) -> Formula {
    macro_formula(MacroKind::Break, t)
}

pub(crate) fn start(t: LinearTerm) -> Formula {
    macro_formula(MacroKind::Start, t)
}

pub(crate) fn end(t: LinearTerm) -> Formula {
    macro_formula(MacroKind::End, t)
}

/// `max{K+6, m+4, n+4}`.
pub fn compute_d(p: &Program, m: u64, n: u64) -> u64 {
    (p.last_line() as u64 + 6).max(m + 4).max(n + 4)
}

/// First 16 hex digits of the SHA-256 of the canonical program text.
pub fn machine_hash(p: &Program) -> String {
    let digest = Sha256::digest(p.to_source().as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

pub fn encode(p: &Program, m: u64, n: u64, variant: EncodingVariant) -> Result<EncodingResult, EncodeError> {
    validate_program(p).map_err(EncodeError::Invalid)?;
    match variant {
        EncodingVariant::NondetRecurrence => {
            if !p.has_branches() {
                return Err(EncodeError::BranchesRequired(variant));
            }
            if m != 0 || n != 0 {
                return Err(EncodeError::NonzeroInput { variant, m, n });
            }
        }
        _ if p.has_branches() => return Err(EncodeError::BranchesNotAllowed(variant)),
        _ => {}
    }
    let d = compute_d(p, m, n);
    let growing = EncodingParams::Growing { d };
    let (sentences, params) = match variant {
        EncodingVariant::Standard => (standard(p, m, n, d, false), growing),
        EncodingVariant::TwoVar => (two_var(p, m, n, d), growing),
        EncodingVariant::FnHornNat => (with_function(standard(p, m, n, d, false), Flavor::Nat), growing),
        EncodingVariant::FnHornReal => (with_function(standard(p, m, n, d, false), Flavor::Real), growing),
        EncodingVariant::NondetRecurrence => (standard(p, m, n, d, true), growing),
        EncodingVariant::FiniteExists => (finite_exists(p, m, n, d), growing),
        EncodingVariant::FixedWidth => (fixed_width(p, m, n, d), EncodingParams::FixedWidth { k: d }),
    };
    Ok(EncodingResult {
        variant,
        sentences: sentences.into_iter().map(|(name, formula)| NamedSentence { name, formula }).collect(),
        params,
        machine_hash: machine_hash(p),
    })
}

type Sentences = Vec<(String, Formula)>;

fn x() -> LinearTerm {
    var("x")
}

fn y() -> LinearTerm {
    var("y")
}

/// The eight conjuncts of the layout sentence. `guard_z` adds `x < z` to the
/// chunk-propagation conjunct; `two_var` swaps in the two-variable form of
/// the break-placement conjunct.
fn layout(d: u64, guard_z: bool, two_var: bool) -> Sentences {
    let dd = num(d);
    let mut propagate = vec![chunk(x())];
    if guard_z {
        propagate.insert(0, Formula::lt(x(), var("z")));
    }
    let eighth = if two_var {
        let y1 = y() + 1;
        Formula::forall(
            &["x", "y"],
            Formula::implies(
                Formula::and(vec![
                    chunk(x()),
                    start(y1.clone()),
                    Formula::lt(x() + 5, y1.clone()),
                    Formula::lt(y1, x().scale(4)),
                ]),
                brk(y()),
            ),
        )
    } else {
        Formula::forall(
            &["x", "y", "u"],
            Formula::implies(
                Formula::and(vec![
                    chunk(x()),
                    start(y()),
                    Formula::lt(x() + 5, y()),
                    Formula::lt(y(), x().scale(4)),
                    Formula::eq(var("u") + 1, y()),
                ]),
                brk(var("u")),
            ),
        )
    };
    let pair = |antecedent: Vec<Formula>, consequent: Formula| {
        Formula::forall(&["x", "y"], Formula::implies(Formula::and(antecedent), consequent))
    };
    vec![
        ("phi1.1".into(), chunk(dd.clone())),
        (
            "phi1.2".into(),
            Formula::forall(&["x"], Formula::implies(Formula::lt(x(), dd), Formula::not(Formula::pred(x())))),
        ),
        (
            "phi1.3".into(),
            Formula::forall(
                &["x"],
                Formula::implies(
                    Formula::and(propagate),
                    Formula::and(vec![brk(x().scale(2)), brk(x().scale(3)), chunk(x().scale(4))]),
                ),
            ),
        ),
        (
            "phi1.4".into(),
            pair(
                vec![chunk(x()), chunk(y()), Formula::le(x(), y()), Formula::lt(y(), x().scale(4))],
                Formula::eq(x(), y()),
            ),
        ),
        (
            "phi1.5".into(),
            pair(vec![chunk(x()), brk(y()), Formula::le(x(), y())], Formula::le(x().scale(2), y())),
        ),
        (
            "phi1.6".into(),
            pair(vec![chunk(x()), brk(y()), Formula::lt(x().scale(2), y())], Formula::le(x().scale(3), y())),
        ),
        (
            "phi1.7".into(),
            pair(vec![chunk(x()), brk(y()), Formula::lt(x().scale(3), y())], Formula::le(x().scale(4), y())),
        ),
        ("phi1.8".into(), eighth),
    ]
}

/// `χ₀(d) ∧ End(2d+3+m) ∧ End(3d+3+n)`.
fn initial(d: u64, m: u64, n: u64) -> Formula {
    Formula::and(vec![chi(0, num(d)), end(num(2 * d + 3 + m)), end(num(3 * d + 3 + n))])
}

/// `∀xy. Chunk(x) ∧ End(y) ∧ x+5 ≤ y ∧ y ≤ 2x → y ≤ x+5+K`.
fn line_bound(last: usize) -> Formula {
    Formula::forall(
        &["x", "y"],
        Formula::implies(
            Formula::and(vec![
                chunk(x()),
                end(y()),
                Formula::le(x() + 5, y()),
                Formula::le(y(), x().scale(2)),
            ]),
            Formula::le(y(), x() + 5 + last as u64),
        ),
    )
}

fn instructions(
    p: &Program,
    skip_last: bool,
    nondet: bool,
    build: impl Fn(usize, &crate::machine::Instruction, usize, Successor) -> Vec<(&'static str, Formula)>,
) -> Sentences {
    let last = p.last_line();
    let mut out = Vec::new();
    for (j, instr) in p.lines().iter().enumerate() {
        if skip_last && j == last {
            continue;
        }
        for (suffix, f) in build(j, instr, last, Successor::of(j, instr, nondet)) {
            out.push((format!("instr.{j}{suffix}"), f));
        }
    }
    out
}

fn standard(p: &Program, m: u64, n: u64, d: u64, nondet: bool) -> Sentences {
    let last = p.last_line();
    let mut out = layout(d, false, false);
    if nondet {
        out.push((
            "phi2".into(),
            Formula::and(vec![end(num(2 * d + 3)), end(num(3 * d + 3)), chi(0, num(d))]),
        ));
    } else {
        out.push(("phi2".into(), initial(d, m, n)));
    }
    out.push(("phi3".into(), line_bound(last)));
    out.extend(instructions(p, false, nondet, schemes::standard));
    if nondet {
        out.push((
            "phi5".into(),
            Formula::forall(
                &["x"],
                Formula::exists(&["y"], Formula::and(vec![Formula::le(x(), y()), chunk(y()), chi(0, y())])),
            ),
        ));
    } else {
        out.push((
            "phi4".into(),
            Formula::forall(&["x"], Formula::implies(chunk(x()), Formula::not(chi(last, x())))),
        ));
    }
    out
}

fn two_var(p: &Program, m: u64, n: u64, d: u64) -> Sentences {
    let last = p.last_line();
    let mut out = layout(d, false, true);
    out.push(("phi2".into(), initial(d, m, n)));
    out.push(("phi3".into(), line_bound(last)));
    out.extend(instructions(p, false, false, schemes::two_var));
    out.push((
        "phi4".into(),
        Formula::forall(&["x"], Formula::implies(chunk(x()), Formula::not(chi(last, x())))),
    ));
    out
}

fn with_function(sentences: Sentences, flavor: Flavor) -> Sentences {
    let mut out: Sentences =
        sentences.into_iter().map(|(name, f)| (name, predicate_to_function(&f, flavor).0)).collect();
    out.push(("range".into(), range_axiom(flavor)));
    out
}

fn finite_exists(p: &Program, m: u64, n: u64, d: u64) -> Sentences {
    let last = p.last_line();
    let mut parts: Vec<Formula> = layout(d, true, false).into_iter().map(|(_, f)| f).collect();
    parts.push(initial(d, m, n));
    parts.push(line_bound(last));
    parts.extend(instructions(p, true, false, schemes::standard).into_iter().map(|(_, f)| f));
    parts.push(chunk(var("z")));
    parts.push(chi(last, var("z")));
    vec![("phi".into(), Formula::exists(&["z"], Formula::and(parts)))]
}

fn fixed_width(p: &Program, m: u64, n: u64, k: u64) -> Sentences {
    let last = p.last_line();
    let d = || var("d");
    let e = || var("e");
    let three_d = || d().scale(3);
    let single = |antecedent: Vec<Formula>, consequent: Formula| {
        Formula::forall(&["x"], Formula::implies(Formula::and(antecedent), consequent))
    };
    let mut out: Sentences = vec![
        ("phi1.1".into(), Formula::and(vec![Formula::le(num(k), d()), Formula::le(num(0), e())])),
        ("phi1.2".into(), chunk(num(0))),
        ("phi1.3".into(), brk(d())),
        ("phi1.4".into(), brk(d().scale(2))),
        (NEGATIVE_EMPTY.into(), single(vec![Formula::lt(x(), num(0))], Formula::not(Formula::pred(x())))),
        (
            "phi1.6".into(),
            single(
                vec![chunk(x()), Formula::lt(x(), three_d()), Formula::not(Formula::eq(x(), num(0)))],
                Formula::bottom(),
            ),
        ),
        (
            "phi1.7".into(),
            single(
                vec![
                    brk(x()),
                    Formula::lt(x(), three_d()),
                    Formula::not(Formula::eq(x(), d())),
                    Formula::not(Formula::eq(x(), d().scale(2))),
                ],
                Formula::bottom(),
            ),
        ),
        ("phi1.8".into(), single(vec![chunk(x()), Formula::lt(x(), e())], chunk(x() + three_d()))),
        ("phi1.9".into(), single(vec![chunk(x() + three_d()), Formula::le(num(0), x())], chunk(x()))),
        ("phi1.10".into(), single(vec![brk(x()), Formula::lt(x(), e())], brk(x() + three_d()))),
        ("phi1.11".into(), single(vec![brk(x() + three_d()), Formula::le(num(0), x())], brk(x()))),
        ("phi2".into(), Formula::and(vec![chi(0, num(0)), end(d() + (3 + m)), end(d().scale(2) + (3 + n))])),
        (
            "phi3".into(),
            Formula::forall(
                &["x", "y"],
                Formula::implies(
                    Formula::and(vec![
                        chunk(x()),
                        end(y()),
                        Formula::lt(x() + (5 + last as u64), y()),
                        Formula::le(y(), x() + d()),
                    ]),
                    Formula::bottom(),
                ),
            ),
        ),
    ];
    out.extend(instructions(p, true, false, |j, instr, last, _| schemes::fixed_width(j, instr, last)));
    out.push(("phi4".into(), Formula::and(vec![chunk(e()), chi(last, e())])));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{is_horn, max_vars_per_clause, to_cnf};
    use crate::machine::parse_program;

    fn m_inc() -> Program {
        parse_program("0: inc c1\n1: halt\n").unwrap()
    }

    #[test]
    fn d_examples() {
        assert_eq!(compute_d(&parse_program("0: halt").unwrap(), 0, 0), 6);
        assert_eq!(compute_d(&m_inc(), 0, 0), 7);
        let k2 = parse_program("0: inc c1\n1: inc c2\n2: halt").unwrap();
        assert_eq!(compute_d(&k2, 9, 3), 13);
    }

    #[test]
    fn macro_expansions() {
        assert_eq!(macro_formula(MacroKind::End, var("t")).expand_macros().to_string(), "P(t) & ~P(t + 1)");
        assert_eq!(
            macro_formula(MacroKind::Chunk, num(7)).expand_macros().to_string(),
            "~P(7) & ~P(8) & P(9) & ~P(10) & P(11) & P(12)"
        );
        assert_eq!(chi(2, var("x")).expand_macros().to_string(), "P(x + 7) & ~P(x + 8)");
    }

    #[test]
    fn standard_names() {
        let r = encode(&m_inc(), 0, 0, EncodingVariant::Standard).unwrap();
        assert_eq!(
            r.names(),
            [
                "phi1.1", "phi1.2", "phi1.3", "phi1.4", "phi1.5", "phi1.6", "phi1.7", "phi1.8", "phi2",
                "phi3", "instr.0", "instr.1", "phi4"
            ]
        );
        assert_eq!(r.params, EncodingParams::Growing { d: 7 });
    }

    #[test]
    fn phi2_positions() {
        let r = encode(&m_inc(), 2, 5, EncodingVariant::Standard).unwrap();
        // d = max(7, 6, 9) = 9
        assert_eq!(r.get("phi2").unwrap().to_string(), "chi_0(9) & end(23) & end(35)");
    }

    #[test]
    fn two_var_splits() {
        let r = encode(&m_inc(), 0, 0, EncodingVariant::TwoVar).unwrap();
        assert!(r.get("instr.0.y").is_some());
        assert!(r.get("instr.0.z").is_some());
        assert!(r.get("instr.0").is_none());
        for s in &r.sentences {
            assert!(max_vars_per_clause(&to_cnf(&s.formula).unwrap()) <= 2, "{}", s.name);
        }
    }

    #[test]
    fn two_var_all_ops_stay_binary() {
        let p = parse_program("0: inc c2\n1: tdec c1 3\n2: tdec c2 0\n3: halt").unwrap();
        let r = encode(&p, 1, 1, EncodingVariant::TwoVar).unwrap();
        for s in &r.sentences {
            assert!(max_vars_per_clause(&to_cnf(&s.formula).unwrap()) <= 2, "{}", s.name);
        }
    }

    #[test]
    fn fixed_width_shape() {
        let r = encode(&m_inc(), 0, 0, EncodingVariant::FixedWidth).unwrap();
        assert_eq!(r.get("phi1.1").unwrap().to_string(), "7 <= d & 0 <= e");
        assert_eq!(r.get("phi4").unwrap().to_string(), "chunk(e) & chi_1(e)");
        assert!(r.names().iter().all(|n| !n.starts_with("instr.1")));
        assert_eq!(r.params, EncodingParams::FixedWidth { k: 7 });
    }

    #[test]
    fn finite_exists_is_single_sentence() {
        let r = encode(&m_inc(), 0, 0, EncodingVariant::FiniteExists).unwrap();
        assert_eq!(r.names(), ["phi"]);
        assert!(matches!(r.sentences[0].formula, Formula::Exists(..)));
    }

    #[test]
    fn nondet_recurrence() {
        let p = parse_program("0: inc c1 -> 0 | 1\n1: halt").unwrap();
        let r = encode(&p, 0, 0, EncodingVariant::NondetRecurrence).unwrap();
        let last = r.sentences.last().unwrap();
        assert_eq!(last.name, "phi5");
        assert_eq!(last.formula.to_string(), "forall x. exists y. x <= y & chunk(y) & chi_0(y)");
        assert!(r.get("phi4").is_none());
        assert_eq!(
            encode(&p, 1, 0, EncodingVariant::NondetRecurrence),
            Err(EncodeError::NonzeroInput { variant: EncodingVariant::NondetRecurrence, m: 1, n: 0 })
        );
        assert_eq!(
            encode(&p, 0, 0, EncodingVariant::Standard),
            Err(EncodeError::BranchesNotAllowed(EncodingVariant::Standard))
        );
        assert_eq!(
            encode(&m_inc(), 0, 0, EncodingVariant::NondetRecurrence),
            Err(EncodeError::BranchesRequired(EncodingVariant::NondetRecurrence))
        );
    }

    #[test]
    fn fn_horn_nat_is_horn() {
        let p = parse_program("0: inc c1\n1: tdec c1 3\n2: inc c2\n3: tdec c2 5\n4: halt\n5: halt").unwrap();
        let r = encode(&p, 2, 1, EncodingVariant::FnHornNat).unwrap();
        assert_eq!(r.sentences.last().unwrap().name, "range");
        for s in &r.sentences {
            let cnf = to_cnf(&s.formula).unwrap();
            assert!(is_horn(&cnf), "{} is not Horn", s.name);
            assert!(!s.formula.uses_predicate());
        }
    }

    #[test]
    fn nondet_is_not_horn() {
        let p = parse_program("0: inc c1 -> 0 | 1\n1: halt").unwrap();
        let r = encode(&p, 0, 0, EncodingVariant::NondetRecurrence).unwrap();
        let f = predicate_to_function(r.get("instr.0").unwrap(), Flavor::Nat).0;
        assert!(!is_horn(&to_cnf(&f).unwrap()));
    }

    #[test]
    fn hash_is_stable() {
        let h = machine_hash(&m_inc());
        assert_eq!(h.len(), 16);
        assert_eq!(h, machine_hash(&parse_program("1: halt\n0: inc c1").unwrap()));
    }
}
