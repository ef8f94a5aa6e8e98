//! Command-line frontend. [`run`] is the whole program minus process I/O, so
//! tests can drive it in memory.

use std::collections::BTreeSet;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::certify::{build_certificate, certificate_to_json, verify_certificate, verify_json};
use crate::cone::{ample_check, nef_check};
use crate::datum::ShimuraDatum;
use crate::document::InputDocument;
use crate::error::CoreError;
use crate::hasse::{hasse_inverse_closed_form, hasse_matrix, lambda_coefficients};
use crate::matrix::Matrix;
use crate::oracle::enumerate_strata;
use crate::rational;
use crate::strata::describe;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "ample-cone",
    version,
    about = "Ample/nef cone checks and nefness certificates for automorphic line bundles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct InputArg {
    /// Input document (JSON); standard input when omitted.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the ample (default) or nef inequalities.
    Check {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, conflicts_with = "nef")]
        ample: bool,
        #[arg(long)]
        nef: bool,
    },
    /// Print the Hasse matrix of a block and its inverse.
    Matrix {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_name = "NAME")]
        block: String,
    },
    /// Print the partial Hasse coefficients of the weights on a block.
    Lambda {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_name = "NAME")]
        block: String,
    },
    /// List strata per block with their classification.
    Strata {
        #[command(flatten)]
        input: InputArg,
        #[arg(long, value_name = "K")]
        max_size: Option<usize>,
    },
    /// Describe a stratum: cycles, even extension, Δ and the induced datum.
    Induce {
        #[command(flatten)]
        input: InputArg,
        /// Comma-separated embeddings, e.g. "p1.2,p1.7".
        #[arg(long)]
        stratum: String,
    },
    /// Build and self-verify a nefness certificate.
    Certify {
        #[command(flatten)]
        input: InputArg,
        /// Write the certificate here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Re-check a stored certificate.
    Verify {
        #[arg(long, value_name = "FILE")]
        cert: PathBuf,
    },
}

/// A command outcome: exit status plus a message for standard error.
struct Failure {
    code: i32,
    message: String,
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::Verification(_) => EXIT_FAIL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: format!("i/o error: {e}"),
        }
    }
}

type Outcome = Result<i32, Failure>;

fn read_input(arg: &InputArg, stdin: &mut dyn Read) -> Result<InputDocument, Failure> {
    let text = match &arg.input {
        Some(path) => fs::read_to_string(path).map_err(|e| Failure {
            code: EXIT_INPUT,
            message: format!("cannot read {}: {e}", path.display()),
        })?,
        None => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            s
        }
    };
    Ok(InputDocument::parse(&text)?)
}

fn write_matrix(out: &mut dyn Write, m: &Matrix) -> std::io::Result<()> {
    for row in m.to_rows() {
        let cells: Vec<String> = row.iter().map(rational::format).collect();
        writeln!(out, "  [{}]", cells.join(", "))?;
    }
    Ok(())
}

fn cmd_check(doc: &InputDocument, nef: bool, out: &mut dyn Write) -> Outcome {
    let datum = doc.datum()?;
    let t = doc.weights(&datum)?;
    let report = if nef {
        nef_check(&datum, &t)?
    } else {
        ample_check(&datum, &t)?
    };
    writeln!(out, "{} check", if nef { "nef" } else { "ample" })?;
    for c in &report.constraints {
        writeln!(
            out,
            "  {}  {}",
            c.render(&datum),
            if c.holds { "ok" } else { "VIOLATED" }
        )?;
    }
    writeln!(
        out,
        "verdict: {}",
        if report.holds { "pass" } else { "fail" }
    )?;
    Ok(if report.holds { EXIT_PASS } else { EXIT_FAIL })
}

fn cmd_matrix(doc: &InputDocument, block: &str, out: &mut dyn Write) -> Outcome {
    let datum = doc.datum()?;
    let b = datum.block_index(block)?;
    let h = hasse_matrix(&datum, b)?;
    let inv = hasse_inverse_closed_form(&datum, b)?;
    let labels: Vec<String> = h.labels.iter().map(|t| datum.token(*t)).collect();
    writeln!(out, "labels: {}", labels.join(" "))?;
    writeln!(out, "H =")?;
    write_matrix(out, &h.matrix)?;
    writeln!(out, "H^-1 =")?;
    write_matrix(out, &inv.matrix)?;
    Ok(EXIT_PASS)
}

fn cmd_lambda(doc: &InputDocument, block: &str, out: &mut dyn Write) -> Outcome {
    let datum = doc.datum()?;
    let t = doc.weights(&datum)?;
    let b = datum.block_index(block)?;
    let lambda = lambda_coefficients(&datum, b, &t.block_values(&datum, b))?;
    for (tau, l) in &lambda.coefficients {
        writeln!(
            out,
            "lambda[{}] = {}",
            datum.token(*tau),
            rational::format(l)
        )?;
    }
    Ok(EXIT_PASS)
}

fn digits(row: &[u8]) -> String {
    row.iter().map(|d| char::from(b'0' + d)).collect()
}

fn cmd_strata(doc: &InputDocument, max_size: Option<usize>, out: &mut dyn Write) -> Outcome {
    let datum = doc.datum()?;
    let entries = enumerate_strata(&datum, max_size.unwrap_or(usize::MAX));
    for (b, blk) in datum.blocks().iter().enumerate() {
        let n = datum.signature_one_cycle(b).len();
        writeln!(out, "block {} (signature-1 slots: {n})", blk.label)?;
        if n == 0 {
            writeln!(out, "  {{}}  only")?;
            continue;
        }
        for e in entries.iter().filter(|e| e.block == b) {
            let induced = match &e.induced {
                Some(s) => format!("induced {} rank {}", digits(&s.signature), s.bundle_rank),
                None => "improper".to_string(),
            };
            writeln!(
                out,
                "  {}  {}  {induced}",
                datum.format_set(&e.stratum),
                e.class
            )?;
        }
    }
    Ok(EXIT_PASS)
}

fn cmd_induce(doc: &InputDocument, stratum: &str, out: &mut dyn Write) -> Outcome {
    let datum = doc.datum()?;
    let t: BTreeSet<_> = datum.parse_tokens(stratum)?.into_iter().collect();
    let d = describe(&datum, &t)?;
    writeln!(out, "T = {}", datum.format_set(&d.stratum))?;
    for (i, c) in d.cycles.iter().enumerate() {
        writeln!(out, "C{} = {}", i + 1, datum.format_set(c))?;
    }
    writeln!(out, "T' = {}", datum.format_set(&d.t_prime))?;
    writeln!(out, "T'_0 = {}", datum.format_set(&d.t_prime_zero))?;
    writeln!(out, "T'_2 = {}", datum.format_set(&d.t_prime_two))?;
    writeln!(out, "I_T = {}", datum.format_set(&d.i_t))?;
    writeln!(out, "Delta(T) = {}", datum.format_set(&d.delta))?;
    for sig in [0u8, 1, 2] {
        let set = d
            .induced
            .with_signature(crate::datum::Signature::from_digit(sig)?);
        writeln!(out, "Sigma'_{sig} = {}", datum.format_set(&set))?;
    }
    writeln!(out, "bundle rank = {}", d.bundle_rank())?;
    Ok(EXIT_PASS)
}

fn cmd_certify(doc: &InputDocument, dest: Option<&PathBuf>, out: &mut dyn Write) -> Outcome {
    let datum: ShimuraDatum = doc.datum()?;
    let t = doc.weights(&datum)?;
    let cert = match build_certificate(&datum, &t) {
        Ok(c) => c,
        Err(e @ CoreError::Precondition(_)) => {
            return Err(Failure {
                code: EXIT_FAIL,
                message: e.to_string(),
            })
        }
        Err(e) => return Err(e.into()),
    };
    let verdict = verify_certificate(&cert);
    if !verdict.passed {
        return Err(Failure {
            code: EXIT_FAIL,
            message: format!(
                "self-verification failed: {}",
                verdict.failure.unwrap_or_default()
            ),
        });
    }
    let json = certificate_to_json(&cert);
    match dest {
        Some(path) => {
            fs::write(path, json + "\n").map_err(|e| Failure {
                code: EXIT_INPUT,
                message: format!("cannot write {}: {e}", path.display()),
            })?;
            writeln!(
                out,
                "certificate: {} nodes, {} strata, depth {}, {} checks passed",
                cert.nodes.len(),
                cert.stratum_count(),
                cert.depth(),
                verdict.checks
            )?;
        }
        None => writeln!(out, "{json}")?,
    }
    Ok(EXIT_PASS)
}

fn cmd_verify(path: &PathBuf, out: &mut dyn Write) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let verdict = verify_json(&text)?;
    if verdict.passed {
        writeln!(out, "verified: {} checks passed", verdict.checks)?;
        Ok(EXIT_PASS)
    } else {
        writeln!(out, "rejected: {}", verdict.failure.unwrap_or_default())?;
        Ok(EXIT_FAIL)
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// status.
pub fn run<I, S>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_PASS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Check { input, nef, .. } => {
            read_input(input, stdin).and_then(|d| cmd_check(&d, *nef, stdout))
        }
        Command::Matrix { input, block } => {
            read_input(input, stdin).and_then(|d| cmd_matrix(&d, block, stdout))
        }
        Command::Lambda { input, block } => {
            read_input(input, stdin).and_then(|d| cmd_lambda(&d, block, stdout))
        }
        Command::Strata { input, max_size } => {
            read_input(input, stdin).and_then(|d| cmd_strata(&d, *max_size, stdout))
        }
        Command::Induce { input, stratum } => {
            read_input(input, stdin).and_then(|d| cmd_induce(&d, stratum, stdout))
        }
        Command::Certify { input, out } => {
            read_input(input, stdin).and_then(|d| cmd_certify(&d, out.as_ref(), stdout))
        }
        Command::Verify { cert } => cmd_verify(cert, stdout),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
