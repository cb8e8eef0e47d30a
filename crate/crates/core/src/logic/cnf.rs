use std::collections::BTreeSet;
use std::fmt;

use super::{Atom, Formula, Interpretation, LinearTerm, LogicError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

impl Literal {
    pub fn negated(&self) -> Literal {
        Literal { positive: !self.positive, atom: self.atom.clone() }
    }

    pub fn to_formula(&self) -> Formula {
        let atom = Formula::Atom(self.atom.clone());
        if self.positive {
            atom
        } else {
            Formula::not(atom)
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "~{}", self.atom)
        }
    }
}

/// A disjunction of literals whose variables are implicitly universal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub literals: Vec<Literal>,
    /// Quantified variables occurring in the clause; uninterpreted constants
    /// are not counted.
    pub variables: BTreeSet<String>,
}

impl Clause {
    pub fn positive_count(&self) -> usize {
        self.literals.iter().filter(|l| l.positive).count()
    }

    pub fn negative_count(&self) -> usize {
        self.literals.len() - self.positive_count()
    }

    /// `∀vars. l₁ ∨ … ∨ lₙ`
    pub fn to_formula(&self) -> Formula {
        let body = Formula::Or(self.literals.iter().map(Literal::to_formula).collect());
        if self.variables.is_empty() {
            body
        } else {
            Formula::Forall(self.variables.iter().cloned().collect(), Box::new(body))
        }
    }

    pub fn eval(
        &self,
        env: &dyn Fn(&str) -> Option<u64>,
        interp: &dyn Interpretation,
    ) -> Result<bool, LogicError> {
        for l in &self.literals {
            if l.atom.eval(env, interp)? == l.positive {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.literals.is_empty() {
            return f.write_str("[]");
        }
        let parts: Vec<String> = self.literals.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" | "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClauseSet {
    pub clauses: Vec<Clause>,
}

impl ClauseSet {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn extend(&mut self, other: ClauseSet) {
        self.clauses.extend(other.clauses);
    }
}

impl fmt::Display for ClauseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Negation normal form over literals.
enum Nnf {
    Lit(Literal),
    And(Vec<Nnf>),
    Or(Vec<Nnf>),
}

fn nnf(f: &Formula, positive: bool, vars: &mut BTreeSet<String>) -> Result<Nnf, LogicError> {
    Ok(match f {
        Formula::Atom(a) => Nnf::Lit(Literal { positive, atom: a.clone() }),
        Formula::Macro(m) => nnf(&m.expand(), positive, vars)?,
        Formula::Not(inner) => nnf(inner, !positive, vars)?,
        Formula::And(parts) | Formula::Or(parts) => {
            let conj = matches!(f, Formula::And(_)) == positive;
            let parts = parts.iter().map(|p| nnf(p, positive, vars)).collect::<Result<_, _>>()?;
            if conj {
                Nnf::And(parts)
            } else {
                Nnf::Or(parts)
            }
        }
        Formula::Implies(a, c) => {
            let a = nnf(a, !positive, vars)?;
            let c = nnf(c, positive, vars)?;
            if positive {
                Nnf::Or(vec![a, c])
            } else {
                Nnf::And(vec![a, c])
            }
        }
        Formula::Forall(vs, body) if positive => {
            vars.extend(vs.iter().cloned());
            nnf(body, positive, vars)?
        }
        Formula::Forall(..) | Formula::Exists(..) => return Err(LogicError::Existential),
    })
}

fn distribute(n: &Nnf) -> Vec<Vec<Literal>> {
    match n {
        Nnf::Lit(l) => vec![vec![l.clone()]],
        Nnf::And(parts) => parts.iter().flat_map(distribute).collect(),
        Nnf::Or(parts) => parts.iter().fold(vec![Vec::new()], |acc, p| {
            let rhs = distribute(p);
            acc.iter()
                .flat_map(|left| {
                    rhs.iter().map(move |right| {
                        let mut c = left.clone();
                        c.extend(right.iter().cloned());
                        c
                    })
                })
                .collect()
        }),
    }
}

/// Clause normal form by distribution; no fresh symbols are introduced.
///
/// Universal quantifiers in positive position are dropped (their variables
/// become the clause variables); any existential is rejected. `⊥` literals are
/// removed, and clauses containing `¬⊥` or a complementary pair are dropped.
pub fn to_cnf(sentence: &Formula) -> Result<ClauseSet, LogicError> {
    let mut vars = BTreeSet::new();
    let normal = nnf(sentence, true, &mut vars)?;
    let mut clauses = Vec::new();
    for raw in distribute(&normal) {
        let mut literals: Vec<Literal> = Vec::new();
        let mut tautology = false;
        for l in raw {
            if l.atom == Atom::Bottom {
                if !l.positive {
                    tautology = true;
                }
                continue;
            }
            if literals.contains(&l) {
                continue;
            }
            if literals.contains(&l.negated()) {
                tautology = true;
            }
            literals.push(l);
        }
        if tautology {
            continue;
        }
        let variables = literals
            .iter()
            .flat_map(|l| l.atom.terms())
            .flat_map(LinearTerm::symbols)
            .filter(|s| vars.contains(*s))
            .map(str::to_string)
            .collect();
        clauses.push(Clause { literals, variables });
    }
    Ok(ClauseSet { clauses })
}

/// True iff every clause has at most one positive literal.
pub fn is_horn(cs: &ClauseSet) -> bool {
    cs.clauses.iter().all(|c| c.positive_count() <= 1)
}

/// Largest number of distinct quantified variables in any clause.
pub fn max_vars_per_clause(cs: &ClauseSet) -> usize {
    cs.clauses.iter().map(|c| c.variables.len()).max().unwrap_or(0)
}

/// Domain of the function symbol replacing `P`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// `P(t) ↦ f(t) = 1`, `¬P(t) ↦ f(t) = 0`, axiom `∀x. f(x) ≤ 1`.
    Nat,
    /// `P(t) ↦ f(t) > 0`, `¬P(t) ↦ f(t) = 0`, axiom `∀x. 0 ≤ f(x) ∧ f(x) ≤ 1`.
    Real,
}

/// Replaces the predicate by a unary function, literal by literal as the
/// literals are written (macros are expanded first). Returns the rewritten
/// formula and the range axiom for `f`.
pub fn predicate_to_function(sentence: &Formula, flavor: Flavor) -> (Formula, Formula) {
    let positive = |t: &LinearTerm| match flavor {
        Flavor::Nat => Atom::FnEq(t.clone(), 1),
        Flavor::Real => Atom::FnGt0(t.clone()),
    };
    let rewritten = sentence.expand_macros().map(&|node| match node {
        Formula::Not(inner) => match inner.as_ref() {
            Formula::Atom(Atom::Pred(t)) => Some(Formula::Atom(Atom::FnEq(t.clone(), 0))),
            _ => None,
        },
        Formula::Atom(Atom::Pred(t)) => Some(Formula::Atom(positive(t))),
        _ => None,
    });
    (rewritten, range_axiom(flavor))
}

pub fn range_axiom(flavor: Flavor) -> Formula {
    let x = LinearTerm::var("x");
    let body = match flavor {
        Flavor::Nat => Formula::Atom(Atom::FnLe(x, 1)),
        Flavor::Real => {
            Formula::and(vec![Formula::Atom(Atom::FnGe(x.clone(), 0)), Formula::Atom(Atom::FnLe(x, 1))])
        }
    };
    Formula::forall(&["x"], body)
}
