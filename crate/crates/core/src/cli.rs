//! The `tcm` command line: `simulate`, `encode`, `model` and `check`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::checker::{check_report_with, model_constants, CheckError, CheckerConfig};
use crate::encoder::{compute_d, encode, EncodeError, EncodingVariant};
use crate::logic::{to_cnf, LogicError};
use crate::machine::{extend_halting, first_last_line_index, parse_program, run, MachineError, Program, Run};
use crate::model::{build_canonical, build_fixed_width, chunk_start, BitModel, ModelError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Machine(#[from] MachineError),
    #[error("{0}")]
    Encode(#[from] EncodeError),
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Check(#[from] CheckError),
    #[error("{0}")]
    Logic(#[from] LogicError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Parser)]
#[command(name = "tcm", version, about = "Two-counter machines to Presburger arithmetic with one predicate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the run of a machine, one configuration per line.
    Simulate {
        #[command(flatten)]
        machine: MachineArgs,
        #[arg(long, default_value_t = 100)]
        max_steps: usize,
    },
    /// Emit the sentence set of an encoding variant.
    Encode {
        #[command(flatten)]
        machine: MachineArgs,
        #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
        variant: VariantArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Dump the bit model of a run.
    Model {
        #[command(flatten)]
        machine: MachineArgs,
        #[arg(long, value_enum, default_value_t = LayoutArg::Growing)]
        layout: LayoutArg,
        #[arg(long, default_value_t = 3)]
        chunks: usize,
        /// Subchunk width for the fixed layout (defaults to d).
        #[arg(long)]
        d_val: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check every sentence of an encoding against the model of a run.
    Check(CheckArgs),
}

#[derive(Debug, Args)]
struct MachineArgs {
    #[arg(long)]
    program: PathBuf,
    /// Initial counter values `m,n`.
    #[arg(long, value_parser = parse_input, default_value = "0,0")]
    input: (u64, u64),
    /// Branch choices for nondeterministic lines as a 0/1 string; missing
    /// choices default to 0.
    #[arg(long)]
    choices: Option<String>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    machine: MachineArgs,
    #[arg(long, value_enum, default_value_t = VariantArg::Standard)]
    variant: VariantArg,
    /// Horizon: number of configurations laid out in the model.
    #[arg(long, default_value_t = 3)]
    chunks: usize,
    /// Bound for universal variables.
    #[arg(long)]
    bound: Option<u64>,
    /// Bound for existential variables.
    #[arg(long)]
    exists_bound: Option<u64>,
    /// Subchunk width for the fixed-width variant.
    #[arg(long)]
    d_val: Option<u64>,
    /// Value for `e` in the fixed-width variant (defaults to the last chunk).
    #[arg(long)]
    e: Option<u64>,
    /// Worker threads; 1 checks serially.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Standard,
    TwoVar,
    FnHornNat,
    FnHornReal,
    NondetRecurrence,
    FiniteExists,
    FixedWidth,
}

impl From<VariantArg> for EncodingVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Standard => EncodingVariant::Standard,
            VariantArg::TwoVar => EncodingVariant::TwoVar,
            VariantArg::FnHornNat => EncodingVariant::FnHornNat,
            VariantArg::FnHornReal => EncodingVariant::FnHornReal,
            VariantArg::NondetRecurrence => EncodingVariant::NondetRecurrence,
            VariantArg::FiniteExists => EncodingVariant::FiniteExists,
            VariantArg::FixedWidth => EncodingVariant::FixedWidth,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Smt2,
    Cnf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LayoutArg {
    Growing,
    Fixed,
}

fn parse_input(s: &str) -> Result<(u64, u64), String> {
    let (m, n) = s.split_once(',').ok_or("expected m,n")?;
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("{t:?}: {e}"));
    Ok((num(m)?, num(n)?))
}

fn parse_choices(s: &str) -> Result<Vec<bool>, CliError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CliError::Other(format!("choices must be 0/1, got {c:?}"))),
        })
        .collect()
}

impl MachineArgs {
    fn program(&self) -> Result<Program, CliError> {
        let text = fs::read_to_string(&self.program)
            .map_err(|source| CliError::Io { path: self.program.clone(), source })?;
        Ok(parse_program(&text)?)
    }

    fn run(&self, p: &Program, max_steps: usize) -> Result<Run, CliError> {
        let mut choices = match &self.choices {
            Some(s) => parse_choices(s)?,
            None => vec![],
        };
        if p.has_branches() && choices.len() < max_steps {
            choices.resize(max_steps, false);
        }
        let (m, n) = self.input;
        Ok(run(p, m, n, max_steps, p.has_branches().then_some(choices.as_slice()))?)
    }
}

fn emit(out: &mut dyn Write, path: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io { path: p.clone(), source }),
        None => {
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}

/// Configurations up to and including the first one on line `K`, or the
/// first `horizon` ones if line `K` is not reached.
fn up_to_halt(p: &Program, r: &Run, horizon: usize) -> Result<Vec<crate::machine::Configuration>, CliError> {
    let n = match first_last_line_index(p, r) {
        Some(i) => i + 1,
        None => horizon,
    };
    Ok(extend_halting(p, r, n)?)
}

fn simulate(out: &mut dyn Write, machine: &MachineArgs, max_steps: usize) -> Result<(), CliError> {
    let p = machine.program()?;
    let r = machine.run(&p, max_steps)?;
    let mut text = String::new();
    for (i, c) in r.configs.iter().enumerate() {
        text.push_str(&format!("{i}: {c}"));
        if i + 1 == r.configs.len() {
            text.push_str(if r.halted() { " halted" } else { " running" });
        }
        text.push('\n');
    }
    emit(out, &None, &text)
}

fn encode_cmd(
    out: &mut dyn Write,
    machine: &MachineArgs,
    variant: EncodingVariant,
    format: Format,
    output: &Option<PathBuf>,
) -> Result<(), CliError> {
    let p = machine.program()?;
    let (m, n) = machine.input;
    let enc = encode(&p, m, n, variant)?;
    let text = match format {
        Format::Text => enc.to_string(),
        Format::Smt2 => enc.to_smtlib()?,
        Format::Cnf => {
            let mut s = String::new();
            for sentence in &enc.sentences {
                let cnf = to_cnf(&sentence.formula)?;
                s.push_str(&format!("; {}\n{cnf}", sentence.name));
                if !s.ends_with('\n') {
                    s.push('\n');
                }
            }
            s
        }
    };
    emit(out, output, &text)
}

fn model_cmd(
    out: &mut dyn Write,
    machine: &MachineArgs,
    layout: LayoutArg,
    chunks: usize,
    d_val: Option<u64>,
    output: &Option<PathBuf>,
) -> Result<(), CliError> {
    let p = machine.program()?;
    let (m, n) = machine.input;
    let d = d_val.unwrap_or_else(|| compute_d(&p, m, n));
    let r = machine.run(&p, chunks.saturating_sub(1))?;
    let model = match layout {
        LayoutArg::Growing => build_canonical(&extend_halting(&p, &r, chunks)?, d)?,
        LayoutArg::Fixed => build_fixed_width(&up_to_halt(&p, &r, chunks)?, d)?,
    };
    emit(out, output, &model.dump())
}

/// The model a variant is checked against, and the default universal bound.
fn model_for(
    p: &Program,
    r: &Run,
    variant: EncodingVariant,
    chunks: usize,
    d: u64,
) -> Result<(BitModel, u64), CliError> {
    Ok(match variant {
        EncodingVariant::FixedWidth => {
            let configs = up_to_halt(p, r, chunks)?;
            let bound = 3 * d * configs.len() as u64;
            (build_fixed_width(&configs, d)?, bound)
        }
        EncodingVariant::FiniteExists => {
            let configs = up_to_halt(p, r, chunks)?;
            let bound = chunk_start(configs.len().saturating_sub(1) as u64, d)?;
            (build_canonical(&configs, d)?.with_finite_support()?, bound)
        }
        _ => {
            let configs = extend_halting(p, r, chunks)?;
            (build_canonical(&configs, d)?, chunk_start(chunks.saturating_sub(1) as u64, d)?)
        }
    })
}

fn check_cmd(out: &mut dyn Write, args: &CheckArgs) -> Result<(), CliError> {
    if args.chunks == 0 {
        return Err(CliError::Other("--chunks must be at least 1".into()));
    }
    let p = args.machine.program()?;
    let (m, n) = args.machine.input;
    let variant: EncodingVariant = args.variant.into();
    let enc = encode(&p, m, n, variant)?;
    let d = match variant {
        EncodingVariant::FixedWidth => args.d_val.unwrap_or_else(|| compute_d(&p, m, n)),
        _ => compute_d(&p, m, n),
    };
    let r = args.machine.run(&p, args.chunks - 1)?;
    let (model, default_bound) = model_for(&p, &r, variant, args.chunks, d)?;
    let bound = args.bound.unwrap_or(default_bound);
    let mut cfg = CheckerConfig::new(bound).with_inner_bound(args.exists_bound.unwrap_or(bound));
    if args.jobs == Some(1) {
        cfg = cfg.serial();
    }
    let mut constants: BTreeMap<String, u64> = model_constants(&enc, &model);
    if let (Some(e), EncodingVariant::FixedWidth) = (args.e, variant) {
        constants.insert("e".into(), e);
    }
    let report = with_jobs(args.jobs, || check_report_with(&enc, &model, &cfg, &constants))??;
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))?;
    emit(out, &args.output, &(json + "\n"))
}

#[cfg(feature = "parallel")]
fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        Some(n) if n > 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Other(e.to_string()))?;
            Ok(pool.install(f))
        }
        _ => Ok(f()),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<T>(_jobs: Option<usize>, f: impl FnOnce() -> T) -> Result<T, CliError> {
    Ok(f())
}

/// Runs the command line against the given writers and returns the exit
/// code: 0 on success, 1 on domain errors, 2 on usage errors.
pub fn run_cli_with<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate { machine, max_steps } => simulate(out, machine, *max_steps),
        Command::Encode { machine, variant, format, output } => {
            encode_cmd(out, machine, (*variant).into(), *format, output)
        }
        Command::Model { machine, layout, chunks, d_val, output } => {
            model_cmd(out, machine, *layout, *chunks, *d_val, output)
        }
        Command::Check(args) => check_cmd(out, args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

pub fn run_cli<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    run_cli_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
