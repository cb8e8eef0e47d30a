//! Bounded quantifier instantiation of encoding sentences against a bit
//! model.
//!
//! Sentences are compiled into an indexed form where every bound variable
//! owns a slot. A quantifier block enumerates its slots lexicographically;
//! each conjunct of the block's premise is evaluated as soon as the last slot
//! it mentions is assigned, so failing premises prune whole subtrees.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::encoder::{EncodingResult, EncodingVariant};
use crate::logic::{Atom, Formula, Interpretation, LinearTerm, LogicError, MacroKind};
use crate::model::BitModel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("predicate access at {position} exceeds the access limit {limit}")]
    AccessLimit { position: u64, limit: u64 },
    #[error("free symbol `{0}` has no value")]
    Unbound(String),
    #[error("{name}: {source}")]
    InSentence { name: String, source: Box<CheckError> },
}

/// Bounds for instantiation. Universal variables range over `0..=outer_bound`,
/// existential ones over `0..=inner_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CheckerConfig {
    pub outer_bound: u64,
    pub inner_bound: u64,
    pub access_limit: u64,
    /// Split the outermost block across the rayon pool.
    pub parallel: bool,
}

impl CheckerConfig {
    pub fn new(bound: u64) -> Self {
        Self {
            outer_bound: bound,
            inner_bound: bound,
            access_limit: required_length(bound),
            parallel: cfg!(feature = "parallel"),
        }
    }

    pub fn with_inner_bound(mut self, inner: u64) -> Self {
        self.inner_bound = inner;
        self.access_limit = self.access_limit.max(required_length(inner));
        self
    }

    pub fn serial(mut self) -> Self {
        self.parallel = false;
        self
    }
}

/// `16·B + 8`: the largest position any scheme can touch with variables
/// bounded by `B`, plus room for macro offsets.
pub fn required_length(bound: u64) -> u64 {
    16 * bound + 8
}

pub type Assignment = BTreeMap<String, u64>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Satisfied,
    Violated {
        witness: Assignment,
        failing_literal: String,
    },
    /// Every instance checked had a witness within the existential bound.
    BoundedSatisfied {
        witnesses: Vec<Assignment>,
    },
    /// The existential search ran out of candidates for `outer`.
    NoWitness {
        outer: Assignment,
    },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Satisfied => "satisfied",
            Verdict::Violated { .. } => "violated",
            Verdict::BoundedSatisfied { .. } => "bounded-satisfied",
            Verdict::NoWitness { .. } => "no-witness",
        }
    }

    pub fn is_ok(&self) -> bool {
        matches!(self, Verdict::Satisfied | Verdict::BoundedSatisfied { .. })
    }
}

#[derive(Debug, Clone)]
struct CTerm {
    constant: u64,
    coeffs: Vec<(usize, u64)>,
}

impl CTerm {
    fn eval(&self, env: &[u64]) -> Result<u64, CheckError> {
        self.coeffs
            .iter()
            .try_fold(self.constant, |acc, &(slot, c)| {
                c.checked_mul(env[slot]).and_then(|p| p.checked_add(acc))
            })
            .ok_or(CheckError::Logic(LogicError::Overflow))
    }
}

#[derive(Debug, Clone, Copy)]
enum Cmp {
    Eq,
    Le,
    Lt,
}

#[derive(Debug, Clone, Copy)]
enum FnCmp {
    Eq(u64),
    Gt0,
    Le(u64),
    Ge(u64),
}

#[derive(Debug, Clone)]
enum Node {
    False,
    Cmp(Cmp, CTerm, CTerm),
    Pred(CTerm),
    Fn(FnCmp, CTerm),
    Macro(MacroKind, CTerm),
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
    Implies(Box<Node>, Box<Node>),
    Quant(Box<Block>),
}

#[derive(Debug, Clone)]
struct Block {
    universal: bool,
    first: usize,
    names: Vec<String>,
    /// Premise conjuncts that mention none of this block's slots.
    pre: Vec<Node>,
    /// `levels[k]`: premise conjuncts whose last slot of this block is `k`.
    levels: Vec<Vec<Node>>,
    /// For a universal block the consequent; a violation is an assignment
    /// satisfying the premise where `goal` is false.
    goal: Option<Node>,
}

struct Compiler {
    scope: Vec<(String, usize)>,
    next_slot: usize,
}

impl Compiler {
    fn term(&self, t: &LinearTerm) -> Result<CTerm, CheckError> {
        let coeffs = t
            .coeffs()
            .iter()
            .map(|(name, &c)| {
                self.scope
                    .iter()
                    .rev()
                    .find(|(n, _)| n == name)
                    .map(|&(_, slot)| (slot, c))
                    .ok_or_else(|| CheckError::Unbound(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        Ok(CTerm { constant: t.constant(), coeffs })
    }

    fn node(&mut self, f: &Formula) -> Result<Node, CheckError> {
        Ok(match f {
            Formula::Atom(a) => match a {
                Atom::Eq(s, t) => Node::Cmp(Cmp::Eq, self.term(s)?, self.term(t)?),
                Atom::Le(s, t) => Node::Cmp(Cmp::Le, self.term(s)?, self.term(t)?),
                Atom::Lt(s, t) => Node::Cmp(Cmp::Lt, self.term(s)?, self.term(t)?),
                Atom::Pred(t) => Node::Pred(self.term(t)?),
                Atom::FnEq(t, v) => Node::Fn(FnCmp::Eq(*v), self.term(t)?),
                Atom::FnGt0(t) => Node::Fn(FnCmp::Gt0, self.term(t)?),
                Atom::FnLe(t, v) => Node::Fn(FnCmp::Le(*v), self.term(t)?),
                Atom::FnGe(t, v) => Node::Fn(FnCmp::Ge(*v), self.term(t)?),
                Atom::Bottom => Node::False,
            },
            Formula::Macro(m) => Node::Macro(m.kind, self.term(&m.arg)?),
            Formula::Not(inner) => Node::Not(Box::new(self.node(inner)?)),
            Formula::And(ps) => Node::And(ps.iter().map(|p| self.node(p)).collect::<Result<_, _>>()?),
            Formula::Or(ps) => Node::Or(ps.iter().map(|p| self.node(p)).collect::<Result<_, _>>()?),
            Formula::Implies(a, c) => Node::Implies(Box::new(self.node(a)?), Box::new(self.node(c)?)),
            Formula::Forall(..) | Formula::Exists(..) => Node::Quant(Box::new(self.block(f)?)),
        })
    }

    fn block(&mut self, f: &Formula) -> Result<Block, CheckError> {
        let universal = matches!(f, Formula::Forall(..));
        let mut names = Vec::new();
        let mut body = f;
        while let (Formula::Forall(vs, b), true) | (Formula::Exists(vs, b), false) = (body, universal) {
            names.extend(vs.iter().cloned());
            body = b;
        }
        let first = self.next_slot;
        self.next_slot += names.len();
        let depth = self.scope.len();
        for (k, n) in names.iter().enumerate() {
            self.scope.push((n.clone(), first + k));
        }
        let (premise, goal) = match (body, universal) {
            (Formula::Implies(a, c), true) => (conjuncts(a), Some(c.as_ref())),
            (other, true) => (vec![], Some(other)),
            (other, false) => (conjuncts(other), None),
        };
        let mut pre = Vec::new();
        let mut levels: Vec<Vec<(bool, Node)>> = vec![Vec::new(); names.len()];
        for p in premise {
            let node = self.node(p)?;
            let quantified = p.has_quantifier();
            match last_slot(&node, first, names.len()) {
                None => pre.push((quantified, node)),
                Some(k) => levels[k].push((quantified, node)),
            }
        }
        let goal = goal.map(|g| self.node(g)).transpose()?;
        self.scope.truncate(depth);
        // Cheap conjuncts before those that open another search.
        let order = |mut v: Vec<(bool, Node)>| {
            v.sort_by_key(|(q, _)| *q);
            v.into_iter().map(|(_, n)| n).collect::<Vec<_>>()
        };
        Ok(Block {
            universal,
            first,
            names,
            pre: order(pre),
            levels: levels.into_iter().map(order).collect(),
            goal,
        })
    }
}

fn conjuncts(f: &Formula) -> Vec<&Formula> {
    match f {
        Formula::And(ps) => ps.iter().flat_map(conjuncts).collect(),
        other => vec![other],
    }
}

fn collect_slots(node: &Node, out: &mut Vec<usize>) {
    let term = |t: &CTerm, out: &mut Vec<usize>| out.extend(t.coeffs.iter().map(|&(s, _)| s));
    match node {
        Node::False => {}
        Node::Cmp(_, s, t) => {
            term(s, out);
            term(t, out);
        }
        Node::Pred(t) | Node::Fn(_, t) | Node::Macro(_, t) => term(t, out),
        Node::Not(n) => collect_slots(n, out),
        Node::And(ns) | Node::Or(ns) => ns.iter().for_each(|n| collect_slots(n, out)),
        Node::Implies(a, c) => {
            collect_slots(a, out);
            collect_slots(c, out);
        }
        Node::Quant(b) => b
            .pre
            .iter()
            .chain(b.levels.iter().flatten())
            .chain(b.goal.iter())
            .for_each(|n| collect_slots(n, out)),
    }
}

fn last_slot(node: &Node, first: usize, n: usize) -> Option<usize> {
    let mut slots = Vec::new();
    collect_slots(node, &mut slots);
    slots.into_iter().filter(|&s| s >= first && s < first + n).map(|s| s - first).max()
}

struct Compiled {
    root: Node,
    slots: usize,
}

fn compile(f: &Formula) -> Result<Compiled, CheckError> {
    let mut c = Compiler { scope: Vec::new(), next_slot: 0 };
    let root = c.node(f)?;
    Ok(Compiled { root, slots: c.next_slot })
}

struct Ctx<'a> {
    model: &'a dyn Interpretation,
    cfg: CheckerConfig,
}

impl Ctx<'_> {
    fn position(&self, t: &CTerm, env: &[u64]) -> Result<u64, CheckError> {
        let p = t.eval(env)?;
        if p >= self.cfg.access_limit {
            return Err(CheckError::AccessLimit { position: p, limit: self.cfg.access_limit });
        }
        Ok(p)
    }

    fn eval(&self, node: &Node, env: &mut [u64]) -> Result<bool, CheckError> {
        Ok(match node {
            Node::False => false,
            Node::Cmp(op, s, t) => {
                let (a, b) = (s.eval(env)?, t.eval(env)?);
                match op {
                    Cmp::Eq => a == b,
                    Cmp::Le => a <= b,
                    Cmp::Lt => a < b,
                }
            }
            Node::Pred(t) => self.model.predicate(self.position(t, env)?)?,
            Node::Fn(op, t) => {
                let v = self.model.function(self.position(t, env)?)?;
                match *op {
                    FnCmp::Eq(w) => v == w,
                    FnCmp::Gt0 => v > 0,
                    FnCmp::Le(w) => v <= w,
                    FnCmp::Ge(w) => v >= w,
                }
            }
            Node::Macro(kind, t) => {
                let (offset, pattern) = kind.pattern();
                let base = t.eval(env)?.checked_add(offset).ok_or(LogicError::Overflow)?;
                for (k, &want) in pattern.iter().enumerate() {
                    let p = base + k as u64;
                    if p >= self.cfg.access_limit {
                        return Err(CheckError::AccessLimit { position: p, limit: self.cfg.access_limit });
                    }
                    if self.model.predicate(p)? != want {
                        return Ok(false);
                    }
                }
                true
            }
            Node::Not(n) => !self.eval(n, env)?,
            Node::And(ns) => {
                for n in ns {
                    if !self.eval(n, env)? {
                        return Ok(false);
                    }
                }
                true
            }
            Node::Or(ns) => {
                for n in ns {
                    if self.eval(n, env)? {
                        return Ok(true);
                    }
                }
                false
            }
            Node::Implies(a, c) => !self.eval(a, env)? || self.eval(c, env)?,
            Node::Quant(b) => {
                let found = self.find_serial(b, env, false)?;
                if b.universal {
                    !found
                } else {
                    found
                }
            }
        })
    }

    fn all(&self, nodes: &[Node], env: &mut [u64]) -> Result<bool, CheckError> {
        for n in nodes {
            if !self.eval(n, env)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn bound(&self, b: &Block) -> u64 {
        if b.universal {
            self.cfg.outer_bound
        } else {
            self.cfg.inner_bound
        }
    }

    /// At a full assignment: a universal block matches on a violation, an
    /// existential one on any assignment that got this far.
    fn leaf(&self, b: &Block, env: &mut [u64], premise_only: bool) -> Result<bool, CheckError> {
        match &b.goal {
            Some(g) if b.universal && !premise_only => Ok(!self.eval(g, env)?),
            _ => Ok(true),
        }
    }

    fn descend(&self, b: &Block, k: usize, env: &mut [u64], premise_only: bool) -> Result<bool, CheckError> {
        if k == b.names.len() {
            return self.leaf(b, env, premise_only);
        }
        for v in 0..=self.bound(b) {
            env[b.first + k] = v;
            if self.all(&b.levels[k], env)? && self.descend(b, k + 1, env, premise_only)? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Lexicographically least matching assignment, left in `env`.
    fn find_serial(&self, b: &Block, env: &mut [u64], premise_only: bool) -> Result<bool, CheckError> {
        if !self.all(&b.pre, env)? {
            return Ok(false);
        }
        self.descend(b, 0, env, premise_only)
    }

    /// Same as [`Self::find_serial`], splitting the first slot across threads
    /// when enabled. The first match in slot order wins either way.
    fn find(&self, b: &Block, env: &[u64]) -> Result<Option<Vec<u64>>, CheckError> {
        let mut local = env.to_vec();
        if !self.all(&b.pre, &mut local)? {
            return Ok(None);
        }
        if b.names.is_empty() || !self.cfg.parallel {
            return Ok(self.descend(b, 0, &mut local, false)?.then_some(local));
        }
        let try_value = |v: u64| -> Option<Result<Vec<u64>, CheckError>> {
            let mut e = local.clone();
            e[b.first] = v;
            let hit = self.all(&b.levels[0], &mut e).and_then(|ok| {
                if ok {
                    self.descend(b, 1, &mut e, false)
                } else {
                    Ok(false)
                }
            });
            match hit {
                Ok(true) => Some(Ok(e)),
                Ok(false) => None,
                Err(err) => Some(Err(err)),
            }
        };
        first_in_order(0..=self.bound(b), try_value).transpose()
    }

    /// Every premise match of a universal block, in lexicographic order.
    fn matches(&self, b: &Block, env: &[u64]) -> Result<Vec<Vec<u64>>, CheckError> {
        let mut local = env.to_vec();
        if !self.all(&b.pre, &mut local)? {
            return Ok(vec![]);
        }
        let per_value = |v: Option<u64>| -> Result<Vec<Vec<u64>>, CheckError> {
            let mut out = Vec::new();
            let mut e = local.clone();
            let start = match v {
                None => 0,
                Some(v) => {
                    e[b.first] = v;
                    if !self.all(&b.levels[0], &mut e)? {
                        return Ok(out);
                    }
                    1
                }
            };
            self.collect(b, start, &mut e, &mut out)?;
            Ok(out)
        };
        if b.names.is_empty() {
            return per_value(None);
        }
        let chunks = map_in_order(0..=self.bound(b), |v| per_value(Some(v)), self.cfg.parallel);
        let mut all = Vec::new();
        for c in chunks {
            all.extend(c?);
        }
        Ok(all)
    }

    fn collect(
        &self,
        b: &Block,
        k: usize,
        env: &mut [u64],
        out: &mut Vec<Vec<u64>>,
    ) -> Result<(), CheckError> {
        if k == b.names.len() {
            out.push(env.to_vec());
            return Ok(());
        }
        for v in 0..=self.bound(b) {
            env[b.first + k] = v;
            if self.all(&b.levels[k], env)? {
                self.collect(b, k + 1, env, out)?;
            }
        }
        Ok(())
    }
}

#[cfg(feature = "parallel")]
fn first_in_order<T: Send>(
    range: std::ops::RangeInclusive<u64>,
    f: impl Fn(u64) -> Option<T> + Sync + Send,
) -> Option<T> {
    use rayon::prelude::*;
    range.into_par_iter().find_map_first(f)
}

#[cfg(not(feature = "parallel"))]
fn first_in_order<T>(range: std::ops::RangeInclusive<u64>, f: impl Fn(u64) -> Option<T>) -> Option<T> {
    range.into_iter().find_map(f)
}

#[cfg(feature = "parallel")]
fn map_in_order<T: Send>(
    range: std::ops::RangeInclusive<u64>,
    f: impl Fn(u64) -> T + Sync + Send,
    parallel: bool,
) -> Vec<T> {
    use rayon::prelude::*;
    if parallel {
        range.into_par_iter().map(f).collect()
    } else {
        range.map(f).collect()
    }
}

#[cfg(not(feature = "parallel"))]
fn map_in_order<T>(range: std::ops::RangeInclusive<u64>, f: impl Fn(u64) -> T, _parallel: bool) -> Vec<T> {
    range.map(f).collect()
}

fn assignment(b: &Block, env: &[u64]) -> Assignment {
    b.names.iter().enumerate().map(|(k, n)| (n.clone(), env[b.first + k])).collect()
}

/// Truth value of a ground, quantifier-free sentence.
pub fn eval_ground(s: &Formula, m: &BitModel) -> Result<bool, CheckError> {
    Ok(s.eval_qf(&|_| None, m)?)
}

/// The first conjunct of the consequent that is false under `witness`.
fn failing_literal(s: &Formula, witness: &Assignment, m: &dyn Interpretation) -> String {
    let (_, body) = s.strip_forall();
    let consequent = match body {
        Formula::Implies(_, c) => c.as_ref(),
        other => other,
    };
    let ground = consequent.instantiate(witness);
    let parts: Vec<&Formula> = conjuncts(&ground);
    parts
        .iter()
        .find(|p| matches!(p.eval_qf(&|_| None, m), Ok(false)))
        .map_or_else(|| ground.to_string(), |p| p.to_string())
}

/// Checks one closed sentence with every bound variable instantiated up to the
/// configured bounds.
pub fn check_bounded(s: &Formula, m: &BitModel, cfg: &CheckerConfig) -> Result<Verdict, CheckError> {
    check_with(s, m, cfg)
}

fn check_with(s: &Formula, m: &dyn Interpretation, cfg: &CheckerConfig) -> Result<Verdict, CheckError> {
    let compiled = compile(s)?;
    let ctx = Ctx { model: m, cfg: *cfg };
    let env = vec![0u64; compiled.slots];
    let block = match &compiled.root {
        Node::Quant(b) => b.as_ref().clone(),
        other => Block {
            universal: true,
            first: 0,
            names: vec![],
            pre: vec![],
            levels: vec![],
            goal: Some(other.clone()),
        },
    };
    if !block.universal {
        return Ok(match ctx.find(&block, &env)? {
            Some(e) => Verdict::BoundedSatisfied { witnesses: vec![assignment(&block, &e)] },
            None => Verdict::NoWitness { outer: Assignment::new() },
        });
    }
    if let Some(Node::Quant(inner)) = &block.goal {
        if !inner.universal {
            let mut witnesses = Vec::new();
            for outer in ctx.matches(&block, &env)? {
                let mut e = outer.clone();
                let mut full = assignment(&block, &outer);
                if ctx.find_serial(inner, &mut e, false)? {
                    full.extend(assignment(inner, &e));
                    witnesses.push(full);
                } else {
                    return Ok(Verdict::NoWitness { outer: full });
                }
            }
            return Ok(Verdict::BoundedSatisfied { witnesses });
        }
    }
    Ok(match ctx.find(&block, &env)? {
        Some(e) => {
            let witness = assignment(&block, &e);
            let failing_literal = failing_literal(s, &witness, m);
            Verdict::Violated { witness, failing_literal }
        }
        None if s.has_existential() => Verdict::BoundedSatisfied { witnesses: vec![] },
        None => Verdict::Satisfied,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SentenceVerdict {
    pub name: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub sentences: Vec<SentenceVerdict>,
    pub summary: String,
    pub bound: u64,
    pub inner_bound: u64,
    pub model_length: u64,
}

impl CheckReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.sentences.iter().find(|s| s.name == name).map(|s| &s.verdict)
    }

    pub fn all_ok(&self) -> bool {
        self.sentences.iter().all(|s| s.verdict.is_ok())
    }

    pub fn failures(&self) -> Vec<&str> {
        self.sentences.iter().filter(|s| !s.verdict.is_ok()).map(|s| s.name.as_str()).collect()
    }
}

/// Values for the uninterpreted constants of a fixed-width encoding, read
/// from the model's layout.
pub fn model_constants(enc: &EncodingResult, m: &BitModel) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    if enc.variant == EncodingVariant::FixedWidth {
        out.insert("d".to_string(), m.d());
        if let Some(e) = m.e() {
            out.insert("e".to_string(), e);
        }
    }
    out
}

/// Checks every sentence of an encoding; fixed-width constants come from the
/// model.
pub fn check_report(
    enc: &EncodingResult,
    m: &BitModel,
    cfg: &CheckerConfig,
) -> Result<CheckReport, CheckError> {
    check_report_with(enc, m, cfg, &model_constants(enc, m))
}

/// As [`check_report`] with explicit values for free constants.
pub fn check_report_with(
    enc: &EncodingResult,
    m: &BitModel,
    cfg: &CheckerConfig,
    constants: &BTreeMap<String, u64>,
) -> Result<CheckReport, CheckError> {
    let mut sentences = Vec::with_capacity(enc.sentences.len());
    for s in &enc.sentences {
        let mut f = s.formula.clone();
        for (name, value) in constants {
            f = f.substitute(name, &LinearTerm::num(*value));
        }
        let verdict = check_bounded(&f, m, cfg)
            .map_err(|e| CheckError::InSentence { name: s.name.clone(), source: Box::new(e) })?;
        sentences.push(SentenceVerdict { name: s.name.clone(), verdict });
    }
    let summary = match sentences.iter().find(|s| !s.verdict.is_ok()) {
        None => "all-satisfied".to_string(),
        Some(s) => format!("first failure: {} ({})", s.name, s.verdict.name()),
    };
    Ok(CheckReport {
        sentences,
        summary,
        bound: cfg.outer_bound,
        inner_bound: cfg.inner_bound,
        model_length: m.len(),
    })
}
