//! SMT-LIB 2.6 export and a reader for the subset the exporter emits.

use std::fmt::Write as _;

use super::{Atom, Formula, LinearTerm, LogicError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Int,
    Real,
}

impl Sort {
    fn name(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Real => "Real",
        }
    }

    fn logic(self) -> &'static str {
        match self {
            Sort::Int => "UFLIA",
            Sort::Real => "UFLRA",
        }
    }
}

/// Script-level data that is not part of the sentences themselves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmtHeader {
    pub variant: String,
    pub machine_hash: String,
    pub sort: Sort,
    /// Uninterpreted constants to declare (`d`, `e` for the fixed-width
    /// encoding).
    pub constants: Vec<String>,
    /// Guard every quantified variable with `x >= 0` so that `Int` behaves
    /// like ℕ.
    pub nat_guards: bool,
    /// Sentences emitted without guards even when `nat_guards` is set.
    pub unguarded: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    pub sort: Sort,
    pub nat_guards: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { sort: Sort::Int, nat_guards: false }
    }
}

fn numeral(n: u64, sort: Sort) -> String {
    match sort {
        Sort::Int => n.to_string(),
        Sort::Real => format!("{n}.0"),
    }
}

pub fn render_term(t: &LinearTerm, sort: Sort) -> String {
    let mut parts: Vec<String> = t
        .coeffs()
        .iter()
        .map(|(v, &c)| if c == 1 { v.clone() } else { format!("(* {} {v})", numeral(c, sort)) })
        .collect();
    if t.constant() > 0 || parts.is_empty() {
        parts.push(numeral(t.constant(), sort));
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn render_atom(a: &Atom, sort: Sort) -> String {
    let t = |x: &LinearTerm| render_term(x, sort);
    let n = |v: u64| numeral(v, sort);
    match a {
        Atom::Eq(s, u) => format!("(= {} {})", t(s), t(u)),
        Atom::Le(s, u) => format!("(<= {} {})", t(s), t(u)),
        Atom::Lt(s, u) => format!("(< {} {})", t(s), t(u)),
        Atom::Pred(s) => format!("(P {})", t(s)),
        Atom::FnEq(s, v) => format!("(= (f {}) {})", t(s), n(*v)),
        Atom::FnGt0(s) => format!("(> (f {}) {})", t(s), n(0)),
        Atom::FnLe(s, v) => format!("(<= (f {}) {})", t(s), n(*v)),
        Atom::FnGe(s, v) => format!("(>= (f {}) {})", t(s), n(*v)),
        Atom::Bottom => "false".into(),
    }
}

fn nary(op: &str, parts: &[Formula], opts: &RenderOptions, unit: &str) -> String {
    match parts.len() {
        0 => unit.into(),
        1 => render_formula(&parts[0], opts),
        _ => {
            let inner: Vec<String> = parts.iter().map(|p| render_formula(p, opts)).collect();
            format!("({op} {})", inner.join(" "))
        }
    }
}

/// Renders a formula as an SMT-LIB term. Macros are expanded.
pub fn render_formula(f: &Formula, opts: &RenderOptions) -> String {
    match f {
        Formula::Atom(a) => render_atom(a, opts.sort),
        Formula::Macro(m) => render_formula(&m.expand(), opts),
        Formula::Not(inner) => format!("(not {})", render_formula(inner, opts)),
        Formula::And(parts) => nary("and", parts, opts, "true"),
        Formula::Or(parts) => nary("or", parts, opts, "false"),
        Formula::Implies(a, c) => {
            format!("(=> {} {})", render_formula(a, opts), render_formula(c, opts))
        }
        Formula::Forall(vs, body) | Formula::Exists(vs, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let binders: Vec<String> = vs.iter().map(|v| format!("({v} {})", opts.sort.name())).collect();
            let body = render_formula(body, opts);
            let body = if opts.nat_guards {
                let guards: Vec<String> =
                    vs.iter().map(|v| format!("(>= {v} {})", numeral(0, opts.sort))).collect();
                let guard =
                    if guards.len() == 1 { guards[0].clone() } else { format!("(and {})", guards.join(" ")) };
                if universal {
                    format!("(=> {guard} {body})")
                } else {
                    format!("(and {guard} {body})")
                }
            } else {
                body
            };
            let q = if universal { "forall" } else { "exists" };
            format!("({q} ({}) {body})", binders.join(" "))
        }
    }
}

/// A complete script: header comment, logic, declarations, one `assert` per
/// sentence in the given order, `(check-sat)`.
pub fn to_smtlib(sentences: &[(String, Formula)], header: &SmtHeader) -> Result<String, LogicError> {
    let uses_p = sentences.iter().any(|(_, f)| f.uses_predicate());
    let uses_f = sentences.iter().any(|(_, f)| f.uses_function());
    if uses_p && uses_f {
        return Err(LogicError::MixedSymbols);
    }
    let sort = header.sort.name();
    let mut out = String::new();
    writeln!(out, "; variant: {}", header.variant).unwrap();
    writeln!(out, "; machine: {}", header.machine_hash).unwrap();
    writeln!(out, "(set-logic {})", header.sort.logic()).unwrap();
    if uses_f {
        writeln!(out, "(declare-fun f ({sort}) {sort})").unwrap();
    } else {
        writeln!(out, "(declare-fun P ({sort}) Bool)").unwrap();
    }
    for c in &header.constants {
        writeln!(out, "(declare-const {c} {sort})").unwrap();
    }
    for (name, f) in sentences {
        let guarded = header.nat_guards && !header.unguarded.contains(name);
        let opts = RenderOptions { sort: header.sort, nat_guards: guarded };
        writeln!(out, "; {name}").unwrap();
        writeln!(out, "(assert {})", render_formula(f, &opts)).unwrap();
    }
    out.push_str("(check-sat)\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Symbol(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '(' | ')' => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
            }
            c => current.push(c),
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

fn parse_sexp(tokens: &[String], pos: &mut usize) -> Result<Sexp, LogicError> {
    let tok = tokens.get(*pos).ok_or_else(|| LogicError::Parse("unexpected end of input".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_sexp(tokens, pos)?),
                    None => return Err(LogicError::Parse("unbalanced parentheses".into())),
                }
            }
        }
        ")" => Err(LogicError::Parse("unexpected `)`".into())),
        s => Ok(Sexp::Symbol(s.to_string())),
    }
}

fn parse_numeral(s: &str) -> Option<u64> {
    s.strip_suffix(".0").unwrap_or(s).parse().ok()
}

fn bad(what: &str, e: &Sexp) -> LogicError {
    LogicError::Parse(format!("malformed {what}: {e:?}"))
}

fn term_of(e: &Sexp) -> Result<LinearTerm, LogicError> {
    match e {
        Sexp::Symbol(s) => Ok(match parse_numeral(s) {
            Some(n) => LinearTerm::num(n),
            None => LinearTerm::var(s.clone()),
        }),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Symbol(op), rest @ ..] if op == "+" => {
                rest.iter().try_fold(LinearTerm::num(0), |acc, t| Ok(acc + term_of(t)?))
            }
            [Sexp::Symbol(op), Sexp::Symbol(k), t] if op == "*" => {
                let k = parse_numeral(k).ok_or_else(|| bad("coefficient", e))?;
                Ok(term_of(t)?.scale(k))
            }
            _ => Err(bad("term", e)),
        },
    }
}

fn fn_app(e: &Sexp) -> Option<&Sexp> {
    match e {
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Symbol(f), arg] if f == "f" => Some(arg),
            _ => None,
        },
        _ => None,
    }
}

fn value_of(e: &Sexp) -> Result<u64, LogicError> {
    match e {
        Sexp::Symbol(s) => parse_numeral(s).ok_or_else(|| bad("numeral", e)),
        _ => Err(bad("numeral", e)),
    }
}

fn binders(e: &Sexp) -> Result<Vec<String>, LogicError> {
    match e {
        Sexp::List(items) => items
            .iter()
            .map(|b| match b {
                Sexp::List(pair) => match pair.as_slice() {
                    [Sexp::Symbol(v), Sexp::Symbol(_)] => Ok(v.clone()),
                    _ => Err(bad("binder", b)),
                },
                _ => Err(bad("binder", b)),
            })
            .collect(),
        _ => Err(bad("binder list", e)),
    }
}

fn formula_of(e: &Sexp) -> Result<Formula, LogicError> {
    let items = match e {
        Sexp::Symbol(s) if s == "false" => return Ok(Formula::bottom()),
        Sexp::Symbol(s) if s == "true" => return Ok(Formula::And(vec![])),
        Sexp::List(items) => items,
        _ => return Err(bad("formula", e)),
    };
    let (op, args) = match items.split_first() {
        Some((Sexp::Symbol(op), args)) => (op.as_str(), args),
        _ => return Err(bad("formula", e)),
    };
    let many = |args: &[Sexp]| args.iter().map(formula_of).collect::<Result<Vec<_>, _>>();
    Ok(match (op, args) {
        ("not", [a]) => Formula::not(formula_of(a)?),
        ("and", _) => Formula::And(many(args)?),
        ("or", _) => Formula::Or(many(args)?),
        ("=>", [a, c]) => Formula::implies(formula_of(a)?, formula_of(c)?),
        ("forall", [bs, body]) => Formula::Forall(binders(bs)?, Box::new(formula_of(body)?)),
        ("exists", [bs, body]) => Formula::Exists(binders(bs)?, Box::new(formula_of(body)?)),
        ("P", [t]) => Formula::pred(term_of(t)?),
        (op, [lhs, rhs]) if fn_app(lhs).is_some() => {
            let arg = term_of(fn_app(lhs).unwrap())?;
            let v = value_of(rhs)?;
            Formula::Atom(match op {
                "=" => Atom::FnEq(arg, v),
                ">" if v == 0 => Atom::FnGt0(arg),
                "<=" => Atom::FnLe(arg, v),
                ">=" => Atom::FnGe(arg, v),
                _ => return Err(bad("function atom", e)),
            })
        }
        ("=", [s, t]) => Formula::eq(term_of(s)?, term_of(t)?),
        ("<=", [s, t]) => Formula::le(term_of(s)?, term_of(t)?),
        ("<", [s, t]) => Formula::lt(term_of(s)?, term_of(t)?),
        (">=", [s, t]) => Formula::le(term_of(t)?, term_of(s)?),
        (">", [s, t]) => Formula::lt(term_of(t)?, term_of(s)?),
        _ => return Err(bad("formula", e)),
    })
}

fn parse_one(text: &str) -> Result<Sexp, LogicError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let e = parse_sexp(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(LogicError::Parse("trailing input".into()));
    }
    Ok(e)
}

pub fn parse_term(text: &str) -> Result<LinearTerm, LogicError> {
    term_of(&parse_one(text)?)
}

/// Reads back a formula rendered by [`render_formula`]. Macros come back
/// expanded; guards come back as ordinary comparisons.
pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    formula_of(&parse_one(text)?)
}

/// The asserted formulas of a script, in order.
pub fn parse_script_asserts(script: &str) -> Result<Vec<Formula>, LogicError> {
    let body: String = script
        .lines()
        .map(|l| match l.find(';') {
            Some(p) => &l[..p],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n");
    let tokens = tokenize(&body);
    let mut pos = 0;
    let mut out = Vec::new();
    while pos < tokens.len() {
        if let Sexp::List(items) = parse_sexp(&tokens, &mut pos)? {
            if let [Sexp::Symbol(cmd), f] = items.as_slice() {
                if cmd == "assert" {
                    out.push(formula_of(f)?);
                }
            }
        }
    }
    Ok(out)
}
