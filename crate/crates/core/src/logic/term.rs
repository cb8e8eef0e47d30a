use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use super::LogicError;

/// A linear term `c₁·v₁ + … + cₙ·vₙ + k` over ℕ with positive coefficients.
///
/// Symbols are bound variables or uninterpreted constants; the term itself
/// does not distinguish the two.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LinearTerm {
    coeffs: BTreeMap<String, u64>,
    constant: u64,
}

impl LinearTerm {
    pub fn num(value: u64) -> Self {
        Self { coeffs: BTreeMap::new(), constant: value }
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(name.into(), 1);
        Self { coeffs, constant: 0 }
    }

    pub fn coeffs(&self) -> &BTreeMap<String, u64> {
        &self.coeffs
    }

    pub fn coeff(&self, name: &str) -> u64 {
        self.coeffs.get(name).copied().unwrap_or(0)
    }

    pub fn constant(&self) -> u64 {
        self.constant
    }

    pub fn is_ground(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.coeffs.keys().map(String::as_str)
    }

    pub fn scale(&self, factor: u64) -> Self {
        if factor == 0 {
            return Self::num(0);
        }
        Self {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * factor)).collect(),
            constant: self.constant * factor,
        }
    }

    /// Replaces `name` by `replacement` and re-normalizes.
    pub fn substitute(&self, name: &str, replacement: &LinearTerm) -> Self {
        match self.coeffs.get(name) {
            None => self.clone(),
            Some(&c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(name);
                rest + replacement.scale(c)
            }
        }
    }

    /// `Σ coeff·env(v) + constant`.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<u64>) -> Result<u64, LogicError> {
        self.coeffs.iter().try_fold(self.constant, |acc, (v, c)| {
            let value = env(v).ok_or_else(|| LogicError::Unbound(v.clone()))?;
            c.checked_mul(value).and_then(|p| p.checked_add(acc)).ok_or(LogicError::Overflow)
        })
    }
}

/// Evaluates `t` under a finite variable assignment.
pub fn eval_term(t: &LinearTerm, env: &BTreeMap<String, u64>) -> Result<u64, LogicError> {
    t.eval(&|v| env.get(v).copied())
}

impl Add for LinearTerm {
    type Output = LinearTerm;

    fn add(mut self, rhs: LinearTerm) -> LinearTerm {
        for (v, c) in rhs.coeffs {
            *self.coeffs.entry(v).or_insert(0) += c;
        }
        self.constant += rhs.constant;
        self
    }
}

impl Add<u64> for LinearTerm {
    type Output = LinearTerm;

    fn add(mut self, rhs: u64) -> LinearTerm {
        self.constant += rhs;
        self
    }
}

impl Add<u64> for &LinearTerm {
    type Output = LinearTerm;

    fn add(self, rhs: u64) -> LinearTerm {
        self.clone() + rhs
    }
}

impl Add<&LinearTerm> for &LinearTerm {
    type Output = LinearTerm;

    fn add(self, rhs: &LinearTerm) -> LinearTerm {
        self.clone() + rhs.clone()
    }
}

impl Mul<LinearTerm> for u64 {
    type Output = LinearTerm;

    fn mul(self, rhs: LinearTerm) -> LinearTerm {
        rhs.scale(self)
    }
}

impl Mul<&LinearTerm> for u64 {
    type Output = LinearTerm;

    fn mul(self, rhs: &LinearTerm) -> LinearTerm {
        rhs.scale(self)
    }
}

impl From<u64> for LinearTerm {
    fn from(value: u64) -> Self {
        LinearTerm::num(value)
    }
}

impl fmt::Display for LinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, c) in &self.coeffs {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if *c == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{c}{v}")?;
            }
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else {
            Ok(())
        }
    }
}

/// An unnormalized sum of variables, numerals and scalar multiples, as it
/// would be written by hand (`x + x + x + 1 + 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawTerm {
    Var(String),
    Num(u64),
    Sum(Vec<RawTerm>),
    Scale(u64, Box<RawTerm>),
}

pub fn normalize_term(raw: &RawTerm) -> LinearTerm {
    match raw {
        RawTerm::Var(v) => LinearTerm::var(v.clone()),
        RawTerm::Num(n) => LinearTerm::num(*n),
        RawTerm::Sum(parts) => parts.iter().map(normalize_term).fold(LinearTerm::num(0), |acc, t| acc + t),
        RawTerm::Scale(k, inner) => normalize_term(inner).scale(*k),
    }
}
