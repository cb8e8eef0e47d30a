//! Two-counter (Minsky) machines: programs, configurations and runs.
//!
//! A program is a list of lines `0..=K`. The last line always holds `halt`.
//! Lines carrying `inc` or `tdec` may additionally be annotated with a pair
//! of successor lines; such a machine is nondeterministic and picks one of the
//! two whenever the line falls through (a taken zero-jump ignores the
//! annotation).

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MachineError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("duplicate label {0}")]
    DuplicateLabel(usize),
    #[error("missing label {0}")]
    MissingLabel(usize),
    #[error("empty program")]
    Empty,
    #[error("line {line} branches but no choice was supplied")]
    MissingChoice { line: usize },
    #[error("choice sequence exhausted at step {step} (line {line} branches)")]
    ChoicesExhausted { step: usize, line: usize },
    #[error("configuration refers to line {line} but the program ends at {last}")]
    LineOutOfRange { line: usize, last: usize },
    #[error("invalid program: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("run is still running after {have} configurations, {want} requested")]
    RunTooShort { have: usize, want: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Counter {
    C1,
    C2,
}

impl Counter {
    pub fn index(self) -> u8 {
        match self {
            Counter::C1 => 1,
            Counter::C2 => 2,
        }
    }
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.index())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Inc(Counter),
    /// Jump to the target if the counter is zero, otherwise decrement and
    /// fall through.
    TestDec(Counter, usize),
    Halt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub op: Op,
    /// Successor pair for the nondeterministic fall-through edge.
    pub branch: Option<(usize, usize)>,
}

impl Instruction {
    pub fn new(op: Op) -> Self {
        Self { op, branch: None }
    }

    pub fn inc(counter: Counter) -> Self {
        Self::new(Op::Inc(counter))
    }

    pub fn tdec(counter: Counter, target: usize) -> Self {
        Self::new(Op::TestDec(counter, target))
    }

    pub fn halt() -> Self {
        Self::new(Op::Halt)
    }

    pub fn with_branch(mut self, first: usize, second: usize) -> Self {
        self.branch = Some((first, second));
        self
    }

    pub fn is_halt(&self) -> bool {
        matches!(self.op, Op::Halt)
    }
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.op {
            Op::Inc(c) => write!(f, "inc {c}")?,
            Op::TestDec(c, target) => write!(f, "tdec {c} {target}")?,
            Op::Halt => write!(f, "halt")?,
        }
        if let Some((a, b)) = self.branch {
            write!(f, " -> {a} | {b}")?;
        }
        Ok(())
    }
}

/// Something wrong with a program that [`validate_program`] reports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LastLineNotHalt,
    TargetOutOfRange { line: usize, target: usize, last: usize },
    BranchOutOfRange { line: usize, target: usize, last: usize },
    BranchOnHalt { line: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LastLineNotHalt => write!(f, "last line not halt"),
            Violation::TargetOutOfRange { line, target, last } => {
                write!(f, "line {line}: target {target} > K={last}")
            }
            Violation::BranchOutOfRange { line, target, last } => {
                write!(f, "line {line}: branch target {target} > K={last}")
            }
            Violation::BranchOnHalt { line } => write!(f, "line {line}: halt cannot branch"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    lines: Vec<Instruction>,
}

impl Program {
    pub fn new(lines: Vec<Instruction>) -> Result<Self, MachineError> {
        if lines.is_empty() {
            return Err(MachineError::Empty);
        }
        Ok(Self { lines })
    }

    pub fn lines(&self) -> &[Instruction] {
        &self.lines
    }

    /// Index of the last line, `K`.
    pub fn last_line(&self) -> usize {
        self.lines.len() - 1
    }

    pub fn instruction(&self, line: usize) -> Option<&Instruction> {
        self.lines.get(line)
    }

    pub fn has_branches(&self) -> bool {
        self.lines.iter().any(|i| i.branch.is_some())
    }

    /// Canonical source text; parsing it yields the same program.
    pub fn to_source(&self) -> String {
        self.lines.iter().enumerate().map(|(label, instr)| format!("{label}: {instr}\n")).collect()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_source())
    }
}

/// Parses the line-oriented program syntax:
///
/// ```text
/// # comment
/// 0: inc c1
/// 1: tdec c2 0 -> 0 | 2
/// 2: halt
/// ```
pub fn parse_program(text: &str) -> Result<Program, MachineError> {
    let mut entries: Vec<(usize, Instruction)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let code = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if code.trim().is_empty() {
            continue;
        }
        entries.push(parse_line(code, lineno)?);
    }
    if entries.is_empty() {
        return Err(MachineError::Empty);
    }
    entries.sort_by_key(|(label, _)| *label);
    for pair in entries.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(MachineError::DuplicateLabel(pair[0].0));
        }
    }
    for (expected, (label, _)) in entries.iter().enumerate() {
        if *label != expected {
            return Err(MachineError::MissingLabel(expected));
        }
    }
    Program::new(entries.into_iter().map(|(_, i)| i).collect())
}

struct Tokens<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> MachineError {
        MachineError::Syntax {
            line: self.line,
            column: self.src[..self.pos].chars().count() + 1,
            message: message.into(),
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.src.len()
    }

    fn word(&mut self) -> Result<&'a str, MachineError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let len = rest.find(|c: char| !c.is_ascii_alphanumeric() && c != '_').unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a word"));
        }
        self.pos += len;
        Ok(&rest[..len])
    }

    fn number(&mut self) -> Result<usize, MachineError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let len = rest.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest.len());
        if len == 0 {
            return Err(self.error("expected a number"));
        }
        self.pos += len;
        rest[..len].parse().map_err(|_| {
            self.pos = start;
            self.error("number too large")
        })
    }

    fn expect(&mut self, token: &str) -> Result<(), MachineError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.error(format!("expected `{token}`")))
        }
    }

    fn peek(&mut self, token: &str) -> bool {
        self.skip_ws();
        self.src[self.pos..].starts_with(token)
    }

    fn counter(&mut self) -> Result<Counter, MachineError> {
        let start = self.pos;
        match self.word()? {
            "c1" | "C1" => Ok(Counter::C1),
            "c2" | "C2" => Ok(Counter::C2),
            other => {
                self.pos = start;
                self.skip_ws();
                Err(self.error(format!("unknown counter `{other}`")))
            }
        }
    }
}

fn parse_line(code: &str, line: usize) -> Result<(usize, Instruction), MachineError> {
    let mut toks = Tokens { src: code, pos: 0, line };
    let label = toks.number()?;
    toks.expect(":")?;
    let start = toks.pos;
    let op = match toks.word()? {
        "inc" => Op::Inc(toks.counter()?),
        "tdec" => {
            let counter = toks.counter()?;
            Op::TestDec(counter, toks.number()?)
        }
        "halt" => Op::Halt,
        other => {
            toks.pos = start;
            toks.skip_ws();
            return Err(toks.error(format!("unknown instruction `{other}`")));
        }
    };
    let mut instr = Instruction::new(op);
    if toks.peek("->") {
        if instr.is_halt() {
            return Err(toks.error("halt cannot branch"));
        }
        toks.expect("->")?;
        let first = toks.number()?;
        toks.expect("|")?;
        let second = toks.number()?;
        instr.branch = Some((first, second));
    }
    if !toks.at_end() {
        return Err(toks.error("trailing input"));
    }
    Ok((label, instr))
}

/// Checks the structural conventions: the last line is `halt` and every jump
/// or branch target lies in `0..=K`.
pub fn validate_program(program: &Program) -> Result<(), Vec<Violation>> {
    let last = program.last_line();
    let mut violations = Vec::new();
    if !program.lines[last].is_halt() {
        violations.push(Violation::LastLineNotHalt);
    }
    for (line, instr) in program.lines.iter().enumerate() {
        if let Op::TestDec(_, target) = instr.op {
            if target > last {
                violations.push(Violation::TargetOutOfRange { line, target, last });
            }
        }
        if let Some((a, b)) = instr.branch {
            if instr.is_halt() {
                violations.push(Violation::BranchOnHalt { line });
            }
            for target in [a, b] {
                if target > last {
                    violations.push(Violation::BranchOutOfRange { line, target, last });
                }
            }
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    pub line: usize,
    pub c1: u64,
    pub c2: u64,
}

impl Configuration {
    pub fn new(line: usize, c1: u64, c2: u64) -> Self {
        Self { line, c1, c2 }
    }

    pub fn counter(&self, counter: Counter) -> u64 {
        match counter {
            Counter::C1 => self.c1,
            Counter::C2 => self.c2,
        }
    }

    fn counter_mut(&mut self, counter: Counter) -> &mut u64 {
        match counter {
            Counter::C1 => &mut self.c1,
            Counter::C2 => &mut self.c2,
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.line, self.c1, self.c2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Next(Configuration),
    Halted,
}

/// Whether stepping from `config` consumes a nondeterministic choice.
pub fn needs_choice(program: &Program, config: &Configuration) -> bool {
    match program.instruction(config.line) {
        Some(instr) => {
            let falls_through = match instr.op {
                Op::Inc(_) => true,
                Op::TestDec(c, _) => config.counter(c) > 0,
                Op::Halt => false,
            };
            falls_through && instr.branch.is_some()
        }
        None => false,
    }
}

/// Executes the instruction at `config.line`. `choice` selects the first
/// (`false`) or second (`true`) branch successor and is only consulted when
/// the line branches and falls through.
pub fn step(program: &Program, config: &Configuration, choice: Option<bool>) -> Result<Step, MachineError> {
    let instr = program
        .instruction(config.line)
        .ok_or(MachineError::LineOutOfRange { line: config.line, last: program.last_line() })?;
    let mut next = *config;
    let fall_through = |next: &mut Configuration| -> Result<(), MachineError> {
        next.line = match instr.branch {
            None => config.line + 1,
            Some((first, second)) => match choice {
                Some(false) => first,
                Some(true) => second,
                None => return Err(MachineError::MissingChoice { line: config.line }),
            },
        };
        Ok(())
    };
    match instr.op {
        Op::Halt => return Ok(Step::Halted),
        Op::Inc(c) => {
            *next.counter_mut(c) += 1;
            fall_through(&mut next)?;
        }
        Op::TestDec(c, target) => {
            if config.counter(c) == 0 {
                next.line = target;
            } else {
                *next.counter_mut(c) -= 1;
                fall_through(&mut next)?;
            }
        }
    }
    Ok(Step::Next(next))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Running,
    /// The configuration with this index sits on a `halt` line.
    HaltedAtStep(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub input: (u64, u64),
    pub configs: Vec<Configuration>,
    pub status: RunStatus,
}

impl Run {
    pub fn halted(&self) -> bool {
        matches!(self.status, RunStatus::HaltedAtStep(_))
    }

    pub fn last(&self) -> &Configuration {
        self.configs.last().expect("a run has at least its initial configuration")
    }
}

/// Simulates `program` from `<0, m, n>` for at most `max_steps` steps.
///
/// Nondeterministic lines draw from `choices` in order; a deterministic
/// program never touches it.
pub fn run(
    program: &Program,
    m: u64,
    n: u64,
    max_steps: usize,
    choices: Option<&[bool]>,
) -> Result<Run, MachineError> {
    validate_program(program).map_err(MachineError::Invalid)?;
    let mut current = Configuration::new(0, m, n);
    let mut configs = vec![current];
    let mut remaining = choices.unwrap_or(&[]).iter().copied();
    let at_halt = |c: &Configuration| program.lines[c.line].is_halt();
    if at_halt(&current) {
        return Ok(Run { input: (m, n), configs, status: RunStatus::HaltedAtStep(0) });
    }
    for step_index in 1..=max_steps {
        let choice = if needs_choice(program, &current) {
            Some(
                remaining
                    .next()
                    .ok_or(MachineError::ChoicesExhausted { step: step_index - 1, line: current.line })?,
            )
        } else {
            None
        };
        match step(program, &current, choice)? {
            Step::Next(next) => {
                current = next;
                configs.push(current);
                if at_halt(&current) {
                    return Ok(Run { input: (m, n), configs, status: RunStatus::HaltedAtStep(step_index) });
                }
            }
            Step::Halted => unreachable!("halt lines end the loop when entered"),
        }
    }
    Ok(Run { input: (m, n), configs, status: RunStatus::Running })
}

/// Pads a halted run with copies of `<K, c1, c2>` (the last configuration's
/// counters) up to exactly `n_chunks` configurations. A running run is cut to
/// `n_chunks` and must be at least that long.
pub fn extend_halting(
    program: &Program,
    run: &Run,
    n_chunks: usize,
) -> Result<Vec<Configuration>, MachineError> {
    let mut configs: Vec<Configuration> = run.configs.iter().take(n_chunks).copied().collect();
    if configs.len() < n_chunks {
        if !run.halted() {
            return Err(MachineError::RunTooShort { have: run.configs.len(), want: n_chunks });
        }
        let last = run.last();
        let pad = Configuration::new(program.last_line(), last.c1, last.c2);
        configs.resize(n_chunks, pad);
    }
    Ok(configs)
}

/// Index of the first configuration on line `K` once the run is padded by
/// [`extend_halting`], or `None` if the run never halts within its prefix.
pub fn first_last_line_index(program: &Program, run: &Run) -> Option<usize> {
    let last = program.last_line();
    match run.status {
        RunStatus::Running => run.configs.iter().position(|c| c.line == last),
        RunStatus::HaltedAtStep(s) => Some(run.configs.iter().position(|c| c.line == last).unwrap_or(s + 1)),
    }
}
