//! `fha` — the command-line front end for the whole pipeline.
//!
//! Five subcommands: `check` (parse + type-check), `run` (the definitional
//! evaluator), `extract` (compile to an untyped λ-term), `eval-lambda`
//! (normalize a λ-term and decode first-order results), and `selftest`
//! (the seeded certification corpus). `extract` and `eval-lambda` compose
//! over a pipe, which is the second back end:
//!
//! ```text
//! fha extract program.fha | fha eval-lambda -
//! ```
//!
//! Exit codes are a contract, covered by integration tests: 0 success,
//! 1 for anything wrong with the program itself (parse or type errors, and
//! a `stuck` outcome, which on a checked program means an operation
//! escaped unhandled), 2 for I/O problems, 3 when a budget runs out
//! (evaluation fuel or β-reduction budget). Distinguishing 3 from 1
//! matters: a timeout is evidence of divergence, not of a malformed
//! program, and callers scripting the two back ends against each other
//! need to treat those differently.
//!
//! `-` stands for stdin (inputs) or stdout (outputs). The prelude is
//! compiled in; `FHA_PRELUDE` swaps in a different prelude file and
//! `--no-prelude` drops it entirely, leaving a bare file that must declare
//! everything it uses.

use std::env;
use std::fs;
use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fha_core::check::check_program;
use fha_core::corpus;
use fha_core::eval::{run_program, Outcome};
use fha_core::extract::extract_program;
use fha_core::lam::{decode_value, normalize, parse_lam, print_lam, LamError};
use fha_core::parser::{parse_program, parse_program_with};
use fha_core::stdlib::{prelude_effects, with_prelude};
use fha_core::syntax::{Item, Program};

#[derive(Parser)]
#[command(
    name = "fha",
    version,
    about = "Check, run, and compile effect-handler programs",
    max_term_width = 100
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and type-check a program; print `ok` on success.
    Check {
        /// Source file, or `-` for stdin.
        input: String,
        /// Do not implicitly include the prelude.
        #[arg(long)]
        no_prelude: bool,
    },
    /// Evaluate a program and print its outcome.
    Run {
        /// Source file, or `-` for stdin.
        input: String,
        /// Evaluation step budget.
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
        /// Do not implicitly include the prelude.
        #[arg(long)]
        no_prelude: bool,
    },
    /// Compile a program to an untyped λ-term.
    Extract {
        /// Source file, or `-` for stdin.
        input: String,
        /// Where to write the λ-term (default stdout).
        #[arg(short, long)]
        output: Option<String>,
        /// Do not implicitly include the prelude.
        #[arg(long)]
        no_prelude: bool,
    },
    /// Normalize a λ-term; print the decoded value if it is first-order
    /// data, the normal form otherwise.
    #[command(name = "eval-lambda")]
    EvalLambda {
        /// λ-term file, or `-` for stdin.
        input: String,
        /// β-reduction budget.
        #[arg(long, default_value_t = 1_000_000)]
        lam_budget: u64,
        /// Where to write the result (default stdout).
        #[arg(short, long)]
        output: Option<String>,
    },
    /// Run the certification corpus and print one verdict per criterion.
    Selftest {
        /// Seed for the corpus generators.
        #[arg(long, default_value_t = corpus::DEFAULT_SEED)]
        seed: u64,
    },
}

/// A failure with its exit status. Everything the user did wrong with the
/// *program* is 1, trouble reaching files is 2, exhausted budgets are 3.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn lang(message: impl Into<String>) -> Failure {
        Failure {
            code: 1,
            message: message.into(),
        }
    }
    fn io(message: impl Into<String>) -> Failure {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
    fn budget(message: impl Into<String>) -> Failure {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Cmd::Check { input, no_prelude } => {
            load_checked(&input, no_prelude)?;
            println!("ok");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run {
            input,
            fuel,
            no_prelude,
        } => {
            let prog = load_checked(&input, no_prelude)?;
            let outcome = run_program(&prog, fuel).map_err(Failure::lang)?;
            println!("{}", outcome.render());
            Ok(match outcome {
                Outcome::Done(_) => ExitCode::SUCCESS,
                Outcome::Timeout(_) => ExitCode::from(3),
                Outcome::Stuck(_) => ExitCode::from(1),
            })
        }
        Cmd::Extract {
            input,
            output,
            no_prelude,
        } => {
            let prog = load_checked(&input, no_prelude)?;
            let t = extract_program(&prog).map_err(Failure::lang)?;
            write_output(output.as_deref(), &print_lam(&t))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::EvalLambda {
            input,
            lam_budget,
            output,
        } => {
            let (name, src) = read_input(&input)?;
            let t = parse_lam(&src).map_err(|e| Failure::lang(format!("{name}: {e}")))?;
            match normalize(&t, lam_budget) {
                Ok(nf) => {
                    let rendered = decode_value(&nf).unwrap_or_else(|| print_lam(&nf));
                    write_output(output.as_deref(), &rendered)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(e @ LamError::BudgetExceeded { .. }) => Err(Failure::budget(e.to_string())),
                Err(e) => Err(Failure::lang(e.to_string())),
            }
        }
        Cmd::Selftest { seed } => {
            let reports = corpus::run_all(seed);
            let mut all_pass = true;
            for r in &reports {
                println!("{r}");
                all_pass &= r.pass;
            }
            Ok(if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
    }
}

/// Read a source file, or stdin for `-`. Returns a display name for error
/// reports along with the contents.
fn read_input(path: &str) -> Result<(String, String), Failure> {
    if path == "-" {
        let mut src = String::new();
        io::stdin()
            .read_to_string(&mut src)
            .map_err(|e| Failure::io(format!("<stdin>: {e}")))?;
        Ok(("<stdin>".into(), src))
    } else {
        let src = fs::read_to_string(path).map_err(|e| Failure::io(format!("{path}: {e}")))?;
        Ok((path.into(), src))
    }
}

fn write_output(path: Option<&str>, text: &str) -> Result<(), Failure> {
    match path {
        None | Some("-") => {
            let mut out = io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| Failure::io(format!("<stdout>: {e}")))
        }
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| Failure::io(format!("{p}: {e}"))),
    }
}

/// Parse and type-check `input`, assembling the prelude according to
/// `--no-prelude` and `FHA_PRELUDE`.
fn load_checked(input: &str, no_prelude: bool) -> Result<Program, Failure> {
    let (name, src) = read_input(input)?;
    let mut prog = if no_prelude {
        parse_program(&src).map_err(|e| Failure::lang(e.render(&name)))?
    } else if let Some(path) = env::var_os("FHA_PRELUDE") {
        let path = path.to_string_lossy().into_owned();
        let pre_src = fs::read_to_string(&path).map_err(|e| Failure::io(format!("{path}: {e}")))?;
        let pre = parse_program(&pre_src).map_err(|e| Failure::lang(e.render(&path)))?;
        let effects: Vec<_> = pre
            .items
            .iter()
            .filter_map(|i| match i {
                Item::EffectDef { decl, .. } => Some(decl.clone()),
                _ => None,
            })
            .collect();
        let user =
            parse_program_with(&src, &effects).map_err(|e| Failure::lang(e.render(&name)))?;
        let mut full = pre;
        full.items.extend(user.items);
        full
    } else {
        let user = parse_program_with(&src, &prelude_effects())
            .map_err(|e| Failure::lang(e.render(&name)))?;
        with_prelude(user)
    };
    check_program(&mut prog).map_err(|e| Failure::lang(e.render(&name)))?;
    Ok(prog)
}
