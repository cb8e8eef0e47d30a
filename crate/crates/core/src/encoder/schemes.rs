//! Per-line instruction schemes for the growing layout (three- and
//! two-variable forms) and the fixed-width layout.

use crate::logic::{Formula, LinearTerm};
use crate::machine::{Counter, Instruction, Op};

use super::{chi, chunk, end, var};

/// Where control goes after a line that falls through.
#[derive(Debug, Clone, Copy)]
pub(super) enum Successor {
    Line(usize),
    Choice(usize, usize),
}

impl Successor {
    pub(super) fn of(line: usize, instr: &Instruction, nondet: bool) -> Successor {
        match instr.branch {
            Some((a, b)) if nondet => Successor::Choice(a, b),
            _ => Successor::Line(line + 1),
        }
    }

    fn at(self, t: LinearTerm) -> Formula {
        match self {
            Successor::Line(j) => chi(j, t),
            Successor::Choice(a, b) => Formula::or(vec![chi(a, t.clone()), chi(b, t)]),
        }
    }
}

fn x() -> LinearTerm {
    var("x")
}

fn y() -> LinearTerm {
    var("y")
}

fn z() -> LinearTerm {
    var("z")
}

fn u() -> LinearTerm {
    var("u")
}

fn k(c: u64, t: LinearTerm) -> LinearTerm {
    t.scale(c)
}

fn scheme(vars: &[&str], antecedent: Vec<Formula>, consequent: Vec<Formula>) -> Formula {
    Formula::forall(vars, Formula::implies(Formula::and(antecedent), Formula::and(consequent)))
}

/// `φChunk(x) ∧ 2x ≤ y ∧ y ≤ 3x ∧ φEnd(y) ∧ 3x ≤ z ∧ z ≤ 4x ∧ φEnd(z) ∧ χ_j(x)`
fn common_premise(j: usize) -> Vec<Formula> {
    vec![
        chunk(x()),
        Formula::le(k(2, x()), y()),
        Formula::le(y(), k(3, x())),
        end(y()),
        Formula::le(k(3, x()), z()),
        Formula::le(z(), k(4, x())),
        end(z()),
        chi(j, x()),
    ]
}

/// Sentences for line `j` in the three-variable growing encoding. Returns
/// `(suffix, sentence)` pairs; the suffix is appended to `instr.<j>`.
pub(super) fn standard(
    j: usize,
    instr: &Instruction,
    last: usize,
    next: Successor,
) -> Vec<(&'static str, Formula)> {
    let next4 = next.at(k(4, x()));
    let keep_y = end(k(6, x()) + y());
    let keep_z = end(k(9, x()) + z());
    match instr.op {
        Op::Inc(Counter::C1) => vec![(
            "",
            scheme(&["x", "y", "z"], common_premise(j), vec![end(k(6, x()) + y() + 1), keep_z, next4]),
        )],
        Op::Inc(Counter::C2) => vec![(
            "",
            scheme(&["x", "y", "z"], common_premise(j), vec![keep_y, end(k(9, x()) + z() + 1), next4]),
        )],
        Op::TestDec(Counter::C1, target) => {
            let mut zero = common_premise(j);
            zero.push(Formula::eq(y(), k(2, x()) + 3));
            let mut pos = common_premise(j);
            pos.push(Formula::lt(k(2, x()) + 3, y()));
            pos.push(Formula::eq(u() + 1, k(6, x()) + y()));
            vec![
                (
                    ".zero",
                    scheme(&["x", "y", "z"], zero, vec![keep_y, keep_z.clone(), chi(target, k(4, x()))]),
                ),
                (".pos", scheme(&["x", "y", "z", "u"], pos, vec![end(u()), keep_z, next4])),
            ]
        }
        Op::TestDec(Counter::C2, target) => {
            let mut zero = common_premise(j);
            zero.push(Formula::eq(z(), k(3, x()) + 3));
            let mut pos = common_premise(j);
            pos.push(Formula::lt(k(3, x()) + 3, z()));
            pos.push(Formula::eq(u() + 1, k(9, x()) + z()));
            vec![
                (
                    ".zero",
                    scheme(&["x", "y", "z"], zero, vec![keep_y.clone(), keep_z, chi(target, k(4, x()))]),
                ),
                (".pos", scheme(&["x", "y", "z", "u"], pos, vec![keep_y, end(u()), next4])),
            ]
        }
        Op::Halt => vec![(
            "",
            scheme(&["x", "y", "z"], common_premise(j), vec![keep_y, keep_z, chi(last, k(4, x()))]),
        )],
    }
}

/// `φChunk(x) ∧ 2x ≤ t ∧ t ≤ 3x ∧ φEnd(t) ∧ χ_j(x)` for the first counter.
fn y_premise(j: usize, t: LinearTerm) -> Vec<Formula> {
    vec![
        chunk(x()),
        Formula::le(k(2, x()), t.clone()),
        Formula::le(t.clone(), k(3, x())),
        end(t),
        chi(j, x()),
    ]
}

fn z_premise(j: usize, t: LinearTerm) -> Vec<Formula> {
    vec![
        chunk(x()),
        Formula::le(k(3, x()), t.clone()),
        Formula::le(t.clone(), k(4, x())),
        end(t),
        chi(j, x()),
    ]
}

/// Two-variable schemes: the `y`-part and `z`-part are separate sentences.
pub(super) fn two_var(
    j: usize,
    instr: &Instruction,
    last: usize,
    next: Successor,
) -> Vec<(&'static str, Formula)> {
    let next4 = next.at(k(4, x()));
    let y_part = |consequent| scheme(&["x", "y"], y_premise(j, y()), consequent);
    let z_part = |consequent| scheme(&["x", "z"], z_premise(j, z()), consequent);
    match instr.op {
        Op::Inc(Counter::C1) => vec![
            (".y", y_part(vec![end(k(6, x()) + y() + 1), next4])),
            (".z", z_part(vec![end(k(9, x()) + z())])),
        ],
        Op::Inc(Counter::C2) => vec![
            (".y", y_part(vec![end(k(6, x()) + y()), next4])),
            (".z", z_part(vec![end(k(9, x()) + z() + 1)])),
        ],
        Op::TestDec(Counter::C1, target) => {
            let mut zero = z_premise(j, z());
            zero.push(end(k(2, x()) + 3));
            let mut pos_y = y_premise(j, y() + 1);
            pos_y.push(Formula::lt(k(2, x()) + 3, y() + 1));
            let mut pos_z = z_premise(j, z());
            pos_z.push(Formula::not(end(k(2, x()) + 3)));
            vec![
                (
                    ".zero",
                    scheme(
                        &["x", "z"],
                        zero,
                        vec![end(k(8, x()) + 3), end(k(9, x()) + z()), chi(target, k(4, x()))],
                    ),
                ),
                (".pos.y", scheme(&["x", "y"], pos_y, vec![end(k(6, x()) + y()), next4])),
                (".pos.z", scheme(&["x", "z"], pos_z, vec![end(k(9, x()) + z())])),
            ]
        }
        Op::TestDec(Counter::C2, target) => {
            let mut zero = y_premise(j, y());
            zero.push(end(k(3, x()) + 3));
            let mut pos_y = y_premise(j, y());
            pos_y.push(Formula::not(end(k(3, x()) + 3)));
            let mut pos_z = z_premise(j, z() + 1);
            pos_z.push(Formula::lt(k(3, x()) + 3, z() + 1));
            vec![
                (
                    ".zero",
                    scheme(
                        &["x", "y"],
                        zero,
                        vec![end(k(6, x()) + y()), end(k(12, x()) + 3), chi(target, k(4, x()))],
                    ),
                ),
                (".pos.y", scheme(&["x", "y"], pos_y, vec![end(k(6, x()) + y()), next4])),
                (".pos.z", scheme(&["x", "z"], pos_z, vec![end(k(9, x()) + z())])),
            ]
        }
        Op::Halt => vec![
            (".y", y_part(vec![end(k(6, x()) + y()), chi(last, k(4, x()))])),
            (".z", z_part(vec![end(k(9, x()) + z())])),
        ],
    }
}

/// Fixed-width schemes: chunk stride `3d` with `d` an uninterpreted constant.
/// Subchunk one spans `[x+d, x+2d]`, subchunk two `[x+2d, x+3d]`.
pub(super) fn fixed_width(j: usize, instr: &Instruction, last: usize) -> Vec<(&'static str, Formula)> {
    let d = || var("d");
    let stride = || k(3, d());
    let next_chunk = || x() + stride();
    let y_premise = |t: LinearTerm| {
        vec![
            chunk(x()),
            Formula::le(x() + d(), t.clone()),
            Formula::le(t.clone(), x() + k(2, d())),
            end(t),
            chi(j, x()),
        ]
    };
    let z_premise = |t: LinearTerm| {
        vec![
            chunk(x()),
            Formula::le(x() + k(2, d()), t.clone()),
            Formula::le(t.clone(), x() + stride()),
            end(t),
            chi(j, x()),
        ]
    };
    let c1_zero = || end(x() + d() + 3);
    let c2_zero = || end(x() + k(2, d()) + 3);
    let next = || chi(j + 1, next_chunk());
    match instr.op {
        Op::Inc(Counter::C1) => vec![
            (".y", scheme(&["x", "y"], y_premise(y()), vec![end(y() + stride() + 1), next()])),
            (".z", scheme(&["x", "z"], z_premise(z()), vec![end(z() + stride())])),
        ],
        Op::Inc(Counter::C2) => vec![
            (".y", scheme(&["x", "y"], y_premise(y()), vec![end(y() + stride()), next()])),
            (".z", scheme(&["x", "z"], z_premise(z()), vec![end(z() + stride() + 1)])),
        ],
        Op::TestDec(Counter::C1, target) => {
            let mut zero = z_premise(z());
            zero.push(c1_zero());
            let mut pos_y = y_premise(y() + 1);
            pos_y.push(Formula::lt(x() + d() + 3, y() + 1));
            let mut pos_z = z_premise(z());
            pos_z.push(Formula::not(c1_zero()));
            vec![
                (
                    ".zero",
                    scheme(
                        &["x", "z"],
                        zero,
                        vec![end(x() + k(4, d()) + 3), end(z() + stride()), chi(target, next_chunk())],
                    ),
                ),
                (".pos.y", scheme(&["x", "y"], pos_y, vec![end(y() + stride()), next()])),
                (".pos.z", scheme(&["x", "z"], pos_z, vec![end(z() + stride())])),
            ]
        }
        Op::TestDec(Counter::C2, target) => {
            let mut zero = y_premise(y());
            zero.push(c2_zero());
            let mut pos_y = y_premise(y());
            pos_y.push(Formula::not(c2_zero()));
            let mut pos_z = z_premise(z() + 1);
            pos_z.push(Formula::lt(x() + k(2, d()) + 3, z() + 1));
            vec![
                (
                    ".zero",
                    scheme(
                        &["x", "y"],
                        zero,
                        vec![end(y() + stride()), end(x() + k(5, d()) + 3), chi(target, next_chunk())],
                    ),
                ),
                (".pos.y", scheme(&["x", "y"], pos_y, vec![end(y() + stride()), next()])),
                (".pos.z", scheme(&["x", "z"], pos_z, vec![end(z() + stride())])),
            ]
        }
        Op::Halt => vec![
            (".y", scheme(&["x", "y"], y_premise(y()), vec![end(y() + stride()), chi(last, next_chunk())])),
            (".z", scheme(&["x", "z"], z_premise(z()), vec![end(z() + stride())])),
        ],
    }
}
