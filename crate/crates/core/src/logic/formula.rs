use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{LinearTerm, LogicError};

/// Atomic formulas. `≤` and `<` are primitive relations, never expanded into
/// their existential definitions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    Eq(LinearTerm, LinearTerm),
    Le(LinearTerm, LinearTerm),
    Lt(LinearTerm, LinearTerm),
    /// `P(t)`
    Pred(LinearTerm),
    /// `f(t) = v`
    FnEq(LinearTerm, u64),
    /// `f(t) > 0`
    FnGt0(LinearTerm),
    /// `f(t) ≤ v`
    FnLe(LinearTerm, u64),
    /// `f(t) ≥ v`
    FnGe(LinearTerm, u64),
    Bottom,
}

impl Atom {
    pub fn terms(&self) -> Vec<&LinearTerm> {
        match self {
            Atom::Eq(s, t) | Atom::Le(s, t) | Atom::Lt(s, t) => vec![s, t],
            Atom::Pred(t) | Atom::FnEq(t, _) | Atom::FnGt0(t) | Atom::FnLe(t, _) | Atom::FnGe(t, _) => {
                vec![t]
            }
            Atom::Bottom => vec![],
        }
    }

    pub fn map_terms(&self, f: &impl Fn(&LinearTerm) -> LinearTerm) -> Atom {
        match self {
            Atom::Eq(s, t) => Atom::Eq(f(s), f(t)),
            Atom::Le(s, t) => Atom::Le(f(s), f(t)),
            Atom::Lt(s, t) => Atom::Lt(f(s), f(t)),
            Atom::Pred(t) => Atom::Pred(f(t)),
            Atom::FnEq(t, v) => Atom::FnEq(f(t), *v),
            Atom::FnGt0(t) => Atom::FnGt0(f(t)),
            Atom::FnLe(t, v) => Atom::FnLe(f(t), *v),
            Atom::FnGe(t, v) => Atom::FnGe(f(t), *v),
            Atom::Bottom => Atom::Bottom,
        }
    }

    pub fn is_predicate(&self) -> bool {
        matches!(self, Atom::Pred(_))
    }

    pub fn is_function(&self) -> bool {
        matches!(self, Atom::FnEq(..) | Atom::FnGt0(_) | Atom::FnLe(..) | Atom::FnGe(..))
    }

    pub fn eval(
        &self,
        env: &dyn Fn(&str) -> Option<u64>,
        interp: &dyn Interpretation,
    ) -> Result<bool, LogicError> {
        Ok(match self {
            Atom::Eq(s, t) => s.eval(env)? == t.eval(env)?,
            Atom::Le(s, t) => s.eval(env)? <= t.eval(env)?,
            Atom::Lt(s, t) => s.eval(env)? < t.eval(env)?,
            Atom::Pred(t) => interp.predicate(t.eval(env)?)?,
            Atom::FnEq(t, v) => interp.function(t.eval(env)?)? == *v,
            Atom::FnGt0(t) => interp.function(t.eval(env)?)? > 0,
            Atom::FnLe(t, v) => interp.function(t.eval(env)?)? <= *v,
            Atom::FnGe(t, v) => interp.function(t.eval(env)?)? >= *v,
            Atom::Bottom => false,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Eq(s, t) => write!(f, "{s} = {t}"),
            Atom::Le(s, t) => write!(f, "{s} <= {t}"),
            Atom::Lt(s, t) => write!(f, "{s} < {t}"),
            Atom::Pred(t) => write!(f, "P({t})"),
            Atom::FnEq(t, v) => write!(f, "f({t}) = {v}"),
            Atom::FnGt0(t) => write!(f, "f({t}) > 0"),
            Atom::FnLe(t, v) => write!(f, "f({t}) <= {v}"),
            Atom::FnGe(t, v) => write!(f, "f({t}) >= {v}"),
            Atom::Bottom => f.write_str("false"),
        }
    }
}

/// Ground interpretation of the uninterpreted symbol: `P` as a set of
/// naturals, `f` as a function into ℕ.
pub trait Interpretation: Sync {
    fn predicate(&self, position: u64) -> Result<bool, LogicError>;
    fn function(&self, position: u64) -> Result<u64, LogicError>;
}

/// The bit-pattern abbreviations used by the encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MacroKind {
    /// `001011` starting at `t`.
    Chunk,
    /// `0011` starting at `t`.
    Break,
    /// `01` at `t`.
    Start,
    /// `10` at `t`.
    End,
    /// Program line `j` in the chunk starting at `t`: `End(t + 5 + j)`.
    Chi(usize),
}

impl MacroKind {
    /// Bit pattern and offset of the first bit relative to the argument.
    pub fn pattern(self) -> (u64, &'static [bool]) {
        const CHUNK: &[bool] = &[false, false, true, false, true, true];
        const BREAK: &[bool] = &[false, false, true, true];
        const START: &[bool] = &[false, true];
        const END: &[bool] = &[true, false];
        match self {
            MacroKind::Chunk => (0, CHUNK),
            MacroKind::Break => (0, BREAK),
            MacroKind::Start => (0, START),
            MacroKind::End => (0, END),
            MacroKind::Chi(j) => (5 + j as u64, END),
        }
    }

    pub fn name(self) -> String {
        match self {
            MacroKind::Chunk => "chunk".into(),
            MacroKind::Break => "break".into(),
            MacroKind::Start => "start".into(),
            MacroKind::End => "end".into(),
            MacroKind::Chi(j) => format!("chi_{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacroApp {
    pub kind: MacroKind,
    pub arg: LinearTerm,
}

impl MacroApp {
    /// The literal conjunction the abbreviation stands for.
    pub fn expand(&self) -> Formula {
        let (offset, bits) = self.kind.pattern();
        Formula::And(
            bits.iter()
                .enumerate()
                .map(|(i, &bit)| {
                    let p = Formula::Atom(Atom::Pred(&self.arg + (offset + i as u64)));
                    if bit {
                        p
                    } else {
                        Formula::not(p)
                    }
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Atom(Atom),
    Macro(MacroApp),
    Not(Box<Formula>),
    /// Empty conjunction is `true`.
    And(Vec<Formula>),
    /// Empty disjunction is `false`.
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Forall(Vec<String>, Box<Formula>),
    Exists(Vec<String>, Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Self {
        Formula::Atom(a)
    }

    pub fn pred(t: LinearTerm) -> Self {
        Formula::Atom(Atom::Pred(t))
    }

    pub fn eq(s: LinearTerm, t: LinearTerm) -> Self {
        Formula::Atom(Atom::Eq(s, t))
    }

    pub fn le(s: LinearTerm, t: LinearTerm) -> Self {
        Formula::Atom(Atom::Le(s, t))
    }

    pub fn lt(s: LinearTerm, t: LinearTerm) -> Self {
        Formula::Atom(Atom::Lt(s, t))
    }

    pub fn bottom() -> Self {
        Formula::Atom(Atom::Bottom)
    }

    pub fn macro_app(kind: MacroKind, arg: LinearTerm) -> Self {
        Formula::Macro(MacroApp { kind, arg })
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(parts: Vec<Formula>) -> Self {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Self {
        Formula::Or(parts)
    }

    pub fn implies(antecedent: Formula, consequent: Formula) -> Self {
        Formula::Implies(Box::new(antecedent), Box::new(consequent))
    }

    pub fn forall(vars: &[&str], body: Formula) -> Self {
        Formula::Forall(vars.iter().map(|v| v.to_string()).collect(), Box::new(body))
    }

    pub fn exists(vars: &[&str], body: Formula) -> Self {
        Formula::Exists(vars.iter().map(|v| v.to_string()).collect(), Box::new(body))
    }

    /// Replaces every macro by its literal conjunction.
    pub fn expand_macros(&self) -> Formula {
        self.map(&|f| match f {
            Formula::Macro(m) => Some(m.expand()),
            _ => None,
        })
    }

    /// Bottom-up rewrite: `rule` may replace a node; otherwise children are
    /// rewritten recursively.
    pub fn map(&self, rule: &impl Fn(&Formula) -> Option<Formula>) -> Formula {
        if let Some(replacement) = rule(self) {
            return replacement;
        }
        match self {
            Formula::Atom(_) | Formula::Macro(_) => self.clone(),
            Formula::Not(inner) => Formula::Not(Box::new(inner.map(rule))),
            Formula::And(parts) => Formula::And(parts.iter().map(|p| p.map(rule)).collect()),
            Formula::Or(parts) => Formula::Or(parts.iter().map(|p| p.map(rule)).collect()),
            Formula::Implies(a, c) => Formula::Implies(Box::new(a.map(rule)), Box::new(c.map(rule))),
            Formula::Forall(vs, body) => Formula::Forall(vs.clone(), Box::new(body.map(rule))),
            Formula::Exists(vs, body) => Formula::Exists(vs.clone(), Box::new(body.map(rule))),
        }
    }

    /// Applies `f` to every term (atoms and macro arguments).
    pub fn map_terms(&self, f: &impl Fn(&LinearTerm) -> LinearTerm) -> Formula {
        self.map(&|node| match node {
            Formula::Atom(a) => Some(Formula::Atom(a.map_terms(f))),
            Formula::Macro(m) => Some(Formula::Macro(MacroApp { kind: m.kind, arg: f(&m.arg) })),
            _ => None,
        })
    }

    /// Substitutes a free symbol. Bound occurrences are left alone.
    pub fn substitute(&self, name: &str, value: &LinearTerm) -> Formula {
        match self {
            Formula::Forall(vs, _) | Formula::Exists(vs, _) if vs.iter().any(|v| v == name) => self.clone(),
            Formula::Atom(a) => Formula::Atom(a.map_terms(&|t| t.substitute(name, value))),
            Formula::Macro(m) => {
                Formula::Macro(MacroApp { kind: m.kind, arg: m.arg.substitute(name, value) })
            }
            Formula::Not(inner) => Formula::Not(Box::new(inner.substitute(name, value))),
            Formula::And(parts) => Formula::And(parts.iter().map(|p| p.substitute(name, value)).collect()),
            Formula::Or(parts) => Formula::Or(parts.iter().map(|p| p.substitute(name, value)).collect()),
            Formula::Implies(a, c) => {
                Formula::Implies(Box::new(a.substitute(name, value)), Box::new(c.substitute(name, value)))
            }
            Formula::Forall(vs, body) => Formula::Forall(vs.clone(), Box::new(body.substitute(name, value))),
            Formula::Exists(vs, body) => Formula::Exists(vs.clone(), Box::new(body.substitute(name, value))),
        }
    }

    /// Substitutes numerals for several free symbols (e.g. uninterpreted
    /// constants).
    pub fn instantiate(&self, values: &BTreeMap<String, u64>) -> Formula {
        values.iter().fold(self.clone(), |f, (name, v)| f.substitute(name, &LinearTerm::num(*v)))
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add_term = |t: &LinearTerm, bound: &Vec<String>| {
            for s in t.symbols() {
                if !bound.iter().any(|b| b == s) {
                    out.insert(s.to_string());
                }
            }
        };
        match self {
            Formula::Atom(a) => a.terms().into_iter().for_each(|t| add_term(t, bound)),
            Formula::Macro(m) => add_term(&m.arg, bound),
            Formula::Not(inner) => inner.collect_free(bound, out),
            Formula::And(parts) | Formula::Or(parts) => parts.iter().for_each(|p| p.collect_free(bound, out)),
            Formula::Implies(a, c) => {
                a.collect_free(bound, out);
                c.collect_free(bound, out);
            }
            Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
                let depth = bound.len();
                bound.extend(vs.iter().cloned());
                body.collect_free(bound, out);
                bound.truncate(depth);
            }
        }
    }

    /// All atoms after macro expansion.
    pub fn atoms(&self) -> Vec<Atom> {
        let mut out = Vec::new();
        self.expand_macros().collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Formula::Atom(a) => out.push(a.clone()),
            Formula::Macro(m) => m.expand().collect_atoms(out),
            Formula::Not(inner) | Formula::Forall(_, inner) | Formula::Exists(_, inner) => {
                inner.collect_atoms(out)
            }
            Formula::And(parts) | Formula::Or(parts) => parts.iter().for_each(|p| p.collect_atoms(out)),
            Formula::Implies(a, c) => {
                a.collect_atoms(out);
                c.collect_atoms(out);
            }
        }
    }

    pub fn uses_predicate(&self) -> bool {
        self.atoms().iter().any(Atom::is_predicate)
    }

    pub fn uses_function(&self) -> bool {
        self.atoms().iter().any(Atom::is_function)
    }

    fn any_node(&self, pred: &impl Fn(&Formula) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Formula::Atom(_) | Formula::Macro(_) => false,
            Formula::Not(inner) | Formula::Forall(_, inner) | Formula::Exists(_, inner) => {
                inner.any_node(pred)
            }
            Formula::And(parts) | Formula::Or(parts) => parts.iter().any(|p| p.any_node(pred)),
            Formula::Implies(a, c) => a.any_node(pred) || c.any_node(pred),
        }
    }

    /// Whether an existential quantifier occurs, counting a universal under
    /// an odd number of negations (or in an antecedent) as existential.
    pub fn has_existential(&self) -> bool {
        self.has_existential_at(true)
    }

    fn has_existential_at(&self, positive: bool) -> bool {
        match self {
            Formula::Atom(_) | Formula::Macro(_) => false,
            Formula::Not(inner) => inner.has_existential_at(!positive),
            Formula::And(parts) | Formula::Or(parts) => parts.iter().any(|p| p.has_existential_at(positive)),
            Formula::Implies(a, c) => a.has_existential_at(!positive) || c.has_existential_at(positive),
            Formula::Forall(_, body) => !positive || body.has_existential_at(positive),
            Formula::Exists(_, body) => positive || body.has_existential_at(positive),
        }
    }

    pub fn has_quantifier(&self) -> bool {
        self.any_node(&|f| matches!(f, Formula::Forall(..) | Formula::Exists(..)))
    }

    /// Truth value of a quantifier-free formula.
    pub fn eval_qf(
        &self,
        env: &dyn Fn(&str) -> Option<u64>,
        interp: &dyn Interpretation,
    ) -> Result<bool, LogicError> {
        match self {
            Formula::Atom(a) => a.eval(env, interp),
            Formula::Macro(m) => m.expand().eval_qf(env, interp),
            Formula::Not(inner) => Ok(!inner.eval_qf(env, interp)?),
            Formula::And(parts) => {
                for p in parts {
                    if !p.eval_qf(env, interp)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(parts) => {
                for p in parts {
                    if p.eval_qf(env, interp)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Formula::Implies(a, c) => Ok(!a.eval_qf(env, interp)? || c.eval_qf(env, interp)?),
            Formula::Forall(..) | Formula::Exists(..) => Err(LogicError::Quantified),
        }
    }

    /// Splits a leading universal prefix off the formula.
    pub fn strip_forall(&self) -> (Vec<String>, &Formula) {
        let mut vars = Vec::new();
        let mut current = self;
        while let Formula::Forall(vs, body) = current {
            vars.extend(vs.iter().cloned());
            current = body;
        }
        (vars, current)
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, parts: &[Formula], sep: &str, empty: &str) -> fmt::Result {
    if parts.is_empty() {
        return f.write_str(empty);
    }
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        p.fmt_operand(f)?;
    }
    Ok(())
}

impl Formula {
    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(_) | Formula::Macro(_) | Formula::Not(_) => write!(f, "{self}"),
            Formula::And(p) | Formula::Or(p) if p.is_empty() => write!(f, "{self}"),
            Formula::And(p) | Formula::Or(p) if p.len() == 1 => p[0].fmt_operand(f),
            _ => write!(f, "({self})"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::Macro(m) => write!(f, "{}({})", m.kind.name(), m.arg),
            Formula::Not(inner) => {
                f.write_str("~")?;
                match inner.as_ref() {
                    Formula::Atom(Atom::Eq(..) | Atom::Le(..) | Atom::Lt(..)) => write!(f, "({inner})"),
                    _ => inner.fmt_operand(f),
                }
            }
            Formula::And(parts) => write_list(f, parts, " & ", "true"),
            Formula::Or(parts) => write_list(f, parts, " | ", "false"),
            Formula::Implies(a, c) => {
                a.fmt_operand(f)?;
                f.write_str(" -> ")?;
                c.fmt_operand(f)
            }
            Formula::Forall(vs, body) => write!(f, "forall {}. {body}", vs.join(" ")),
            Formula::Exists(vs, body) => write!(f, "exists {}. {body}", vs.join(" ")),
        }
    }
}
