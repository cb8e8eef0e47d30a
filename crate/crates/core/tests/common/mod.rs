#![allow(dead_code)]

use std::path::PathBuf;

use tcm_reduce::machine::{parse_program, Program};

pub fn machines_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../machines")
}

pub fn machine_path(name: &str) -> PathBuf {
    machines_dir().join(format!("{name}.2cm"))
}

pub fn load(name: &str) -> Program {
    let text = std::fs::read_to_string(machine_path(name)).expect("corpus machine");
    parse_program(&text).expect("corpus machine parses")
}

/// Deterministic corpus with the input each machine is run on.
pub const CORPUS: &[(&str, u64, u64)] = &[
    ("m_halt0", 0, 0),
    ("m_inc", 0, 0),
    ("m_loop", 0, 0),
    ("m_zero_jump", 0, 0),
    ("m_drain", 2, 0),
    ("m_c2", 0, 0),
];

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}
