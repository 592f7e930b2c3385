//! Batch command-line interface for the partreg toolkit.
//!
//! Every command computes one result, emits it as a self-contained JSON
//! certificate (schema `v1`) on stdout or `--out`, and exits with:
//!
//! * `0` — a definitive result (either polarity),
//! * `2` — inconclusive at the configured window/level sizes,
//! * `1` — usage or input errors, and rejected `--verify` certificates.
//!
//! Each command also accepts `--verify <file>`, which re-checks a previously
//! emitted certificate of the matching kind instead of computing a new one.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use partreg::artifacts::{
    parse_colouring_spec, parse_set_spec, run_stabilization, verify_envelope, Artifact,
    BadColouringArtifact, ColumnsArtifact, Envelope, IprnzArtifact, MonoSolutionArtifact,
    ObstructionArtifact, SolveArtifact, StabMode,
};
use partreg::columns::{columns_property, columns_property_with_cap};
use partreg::dsl::parse_system;
use partreg::rational::Rational;
use partreg::search::{find_mono_solution, search_bad_colouring};
use partreg::selftest::{run_all, DEFAULT_SEED};
use partreg::solver::{
    solve_system_a, solve_system_b, solve_system_c, SolveOutcome, SolverConfig,
};
use partreg::stabilize::StabilizeConfig;
use partreg::systems::{CoefficientSequence, LinearSystem};
use partreg::witnesses::{verify_iprnz, verify_mod3_obstruction, IprnzAssignment};
use partreg::Error;

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "partreg",
    version,
    about = "Partition-regularity toolkit: columns-property checks, colouring searches, \
             sumset stabilization, constructive solvers, and counterexample verifiers.",
    propagate_version = true
)]
struct Cli {
    /// Seed for randomized work (used by `selftest`).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Worker threads; 0 means one per available core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Write the JSON output to this file instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct VerifyArg {
    /// Re-verify a previously emitted certificate of this command's kind.
    #[arg(long, value_name = "FILE")]
    verify: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the Rado columns property of a homogeneous linear system.
    ///
    /// Reads the system as text (`a1 x1 + a2 x2 = b1 z1 ...`, one equation
    /// per line, `#` comments) from a file, or from stdin when the path is
    /// `-`. Emits a certificate: either an ordered column partition whose
    /// first part sums to zero and whose later parts lie in the span of the
    /// preceding columns (with explicit spanning coefficients), or a verified
    /// absence claim.
    CheckColumns {
        /// System file, or `-` for stdin.
        #[arg(long, value_name = "FILE|-")]
        system: Option<String>,
        /// Refuse matrices with more than this many columns.
        #[arg(long, value_name = "N")]
        max_cols: Option<usize>,
        #[command(flatten)]
        verify: VerifyArg,
    },

    /// Exhaustively search for a bad r-colouring of [1, N].
    ///
    /// A colouring is bad when the system has no monochromatic solution with
    /// all values in [1, N]. The search is exhaustive over colourings with
    /// the first element's colour fixed, so an absence claim is a theorem
    /// about every r-colouring of [1, N].
    SearchBad {
        /// System file, or `-` for stdin.
        #[arg(long, value_name = "FILE|-")]
        system: Option<String>,
        /// Number of colours.
        #[arg(short, default_value_t = 2)]
        r: u8,
        /// Window bound N.
        #[arg(short = 'N', default_value_t = 12)]
        n: i64,
        #[command(flatten)]
        verify: VerifyArg,
    },

    /// Find the least monochromatic solution of a system within a bound.
    FindSolution {
        /// System file, or `-` for stdin.
        #[arg(long, value_name = "FILE|-")]
        system: Option<String>,
        /// Colouring spec: `mod:q`, `mod:q:a1=c1,...`, `sign`, or `file:PATH`.
        #[arg(long, value_name = "SPEC")]
        colouring: Option<String>,
        /// Search bound: solutions take values in [1, N].
        #[arg(long, value_name = "N", default_value_t = 10_000)]
        bound: i64,
        /// Require pairwise distinct values.
        #[arg(long)]
        distinct: bool,
        #[command(flatten)]
        verify: VerifyArg,
    },

    /// Stabilize iterated sumsets of a set, reporting the limiting modulus.
    ///
    /// Default mode iterates `S, 2S, 3S, ...` for the symmetric closure of
    /// the set until the chain reaches a fixpoint `m*Z`. `--asymmetric`
    /// stabilizes the difference family `A - kA` instead (the fixpoint is a
    /// union of cosets of `m*Z`). `--dyadic` runs the per-level analysis on
    /// the scaled copies `2^-j * set` for levels `0..=J`.
    SumsetStabilize {
        /// Set spec: `mod:q,a`, `file:PATH` (one integer per line), or
        /// `expr:LIST` (comma-separated integers and `a..b` ranges).
        #[arg(long, value_name = "SPEC")]
        set: Option<String>,
        /// Window bound W; the analysis runs on [1, W] (or [-W, W]).
        #[arg(long, value_name = "W", default_value_t = 100_000)]
        window: i64,
        /// Stabilize the difference family A - kA.
        #[arg(long, conflicts_with = "dyadic")]
        asymmetric: bool,
        /// Run the per-level dyadic analysis.
        #[arg(long)]
        dyadic: bool,
        /// Deepest dyadic level J (with --dyadic).
        #[arg(long, value_name = "J", default_value_t = 12)]
        levels: u32,
        #[command(flatten)]
        verify: VerifyArg,
    },

    /// Construct a verified monochromatic solution of a truncated family.
    ///
    /// Family `a` solves `x(n,1) + ... + x(n,n) + c(n) y = z(n,1) + ... +
    /// z(n,n)` for `n <= N` with `c(n) = 2^n` by default; family `b` uses
    /// `c(n) = 2^-n` over the dyadic rationals; family `c` solves `x(n,1) +
    /// ... + x(n,n) + 2^n y = z(n)` and may recurse into `q*N` when a colour
    /// class misses the multiples of some modulus. Exit code 2 reports an
    /// honest starvation (window, density, or level budget) rather than a
    /// refutation.
    Solve {
        /// Which family to solve.
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// Colouring spec: `mod:q[:map]`, `sign`, `file:PATH`,
        /// `numermod:q[:map]` (dyadic), or `levelparity` (dyadic).
        #[arg(long, value_name = "SPEC")]
        colouring: Option<String>,
        /// Truncation depth: equations n = 1..=N.
        #[arg(short, value_name = "N")]
        n: Option<u32>,
        /// Coefficient sequence: `pow2`, `invpow2`, or a CSV of rationals.
        #[arg(long, value_name = "SEQ")]
        seq: Option<String>,
        /// Integer window bound for class analysis and witnesses.
        #[arg(long, value_name = "W")]
        window: Option<i64>,
        /// Dyadic levels available below the integers (family b).
        #[arg(long, value_name = "J", default_value_t = 24)]
        levels: u32,
        /// Also write the full derivation trace to this file.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        #[command(flatten)]
        verify: VerifyArg,
    },

    /// Verify the two counterexample witnesses.
    #[command(subcommand)]
    VerifyCounterexample(Counterexample),

    /// Run the acceptance battery: twelve criteria covering certificates,
    /// exhaustive cross-checks, stabilization laws, the three constructive
    /// solvers, both counterexample verifiers, and artifact round-trips.
    Selftest {
        /// Run reduced instances (same checks, smaller windows).
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Subcommand)]
enum Counterexample {
    /// Check that equation n of the `2^n y` family with a single right-hand
    /// variable has no solution in 3*Z + 1: modularly (2^n y + sum x stays
    /// nonzero mod 3) and by exhaustive window search.
    Mod3 {
        /// Check equations 1..=N.
        #[arg(long, value_name = "N", default_value_t = 4)]
        n: u32,
        /// Exhaustive search window [1, W].
        #[arg(long, value_name = "W", default_value_t = 10_000)]
        window: i64,
        #[command(flatten)]
        verify: VerifyArg,
    },
    /// Check that nonzero values inside (-delta, delta) cannot keep every
    /// expression `2^n y + x(n,1) + ... + x(n,n)` inside the interval: some
    /// expression escapes, or the values split by sign.
    Iprnz {
        /// Interval half-width.
        #[arg(long, value_name = "P/Q", default_value = "1/2")]
        delta: String,
        /// JSON assignment file ({"y": ..., "xs": {...}}).
        #[arg(long, value_name = "FILE", conflicts_with_all = ["y", "x"])]
        assign: Option<PathBuf>,
        /// Uniform y value.
        #[arg(long, value_name = "P/Q", requires = "x")]
        y: Option<String>,
        /// Uniform x value.
        #[arg(long, value_name = "P/Q", requires = "y")]
        x: Option<String>,
        #[command(flatten)]
        verify: VerifyArg,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    A,
    B,
    C,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors.
            if e.exit_code() == 0 {
                let _ = e.print();
                return ExitCode::from(EXIT_OK);
            }
            let _ = e.print();
            return ExitCode::from(EXIT_INPUT);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::CapExceeded(_)) => EXIT_INCONCLUSIVE,
                _ => EXIT_INPUT,
            };
            ExitCode::from(code)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    let out = cli.out.as_deref();
    match cli.command {
        Command::CheckColumns { system, max_cols, verify } => {
            if let Some(path) = verify.verify {
                return verify_file(&path, "columns", out);
            }
            let sys = read_system(system.as_deref())?;
            let certificate = match max_cols {
                Some(cap) => columns_property_with_cap(sys.matrix(), cap)?,
                None => columns_property(sys.matrix())?,
            };
            let art = ColumnsArtifact {
                system: sys.render(),
                has_property: certificate.is_some(),
                certificate,
            };
            emit(Envelope::new(Artifact::Columns(art)), out)?;
            Ok(EXIT_OK)
        }

        Command::SearchBad { system, r, n, verify } => {
            if let Some(path) = verify.verify {
                return verify_file(&path, "bad_colouring", out);
            }
            let sys = read_system(system.as_deref())?;
            let colouring = search_bad_colouring(&sys, r, n)?;
            let art = BadColouringArtifact {
                system: sys.render(),
                r,
                n,
                found: colouring.is_some(),
                colouring,
            };
            emit(Envelope::new(Artifact::BadColouring(art)), out)?;
            Ok(EXIT_OK)
        }

        Command::FindSolution { system, colouring, bound, distinct, verify } => {
            if let Some(path) = verify.verify {
                return verify_file(&path, "mono_solution", out);
            }
            let sys = read_system(system.as_deref())?;
            let colouring = colouring.ok_or_else(|| anyhow!("--colouring SPEC is required"))?;
            let col = parse_colouring_spec(&colouring, 0, 1, bound)?;
            let solution = find_mono_solution(&sys, &col, bound, distinct)?;
            let art = MonoSolutionArtifact {
                system: sys.render(),
                colouring: col,
                bound,
                distinct,
                found: solution.is_some(),
                solution,
            };
            emit(Envelope::new(Artifact::MonoSolution(art)), out)?;
            Ok(EXIT_OK)
        }

        Command::SumsetStabilize { set, window, asymmetric, dyadic, levels, verify } => {
            if let Some(path) = verify.verify {
                return verify_file(&path, "stabilization", out);
            }
            let set = set.ok_or_else(|| anyhow!("--set SPEC is required"))?;
            let source = parse_set_spec(&set)?;
            let (mode, levels) = if dyadic {
                (StabMode::Dyadic, Some(levels))
            } else if asymmetric {
                (StabMode::Asymmetric, None)
            } else {
                (StabMode::Symmetric, None)
            };
            let art =
                run_stabilization(mode, window, levels, &source, &StabilizeConfig::default())?;
            let conclusive = art.conclusive;
            emit(Envelope::new(Artifact::Stabilization(art)), out)?;
            Ok(if conclusive { EXIT_OK } else { EXIT_INCONCLUSIVE })
        }

        Command::Solve { family, colouring, n, seq, window, levels, trace, verify } => {
            if let Some(path) = verify.verify {
                return verify_file(&path, "solve", out);
            }
            let family = family.ok_or_else(|| anyhow!("--family {{a|b|c}} is required"))?;
            let colouring = colouring.ok_or_else(|| anyhow!("--colouring SPEC is required"))?;
            let n = n.ok_or_else(|| anyhow!("-n N is required"))?;
            solve_command(family, &colouring, n, seq.as_deref(), window, levels, trace, out)
        }

        Command::VerifyCounterexample(Counterexample::Mod3 { n, window, verify }) => {
            if let Some(path) = verify.verify {
                return verify_file(&path, "obstruction", out);
            }
            let report = verify_mod3_obstruction(n, window)?;
            emit(Envelope::new(Artifact::Obstruction(ObstructionArtifact { report })), out)?;
            Ok(EXIT_OK)
        }

        Command::VerifyCounterexample(Counterexample::Iprnz { delta, assign, y, x, verify }) => {
            if let Some(path) = verify.verify {
                return verify_file(&path, "iprnz", out);
            }
            let delta = parse_rational(&delta)?;
            let assignment = match (assign, y, x) {
                (Some(path), None, None) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<IprnzAssignment>(&text)
                        .with_context(|| format!("parsing assignment {}", path.display()))?
                }
                (None, Some(y), Some(x)) => {
                    IprnzAssignment::uniform(parse_rational(&y)?, parse_rational(&x)?)
                }
                _ => bail!("provide either --assign FILE or both --y and --x"),
            };
            let report = verify_iprnz(&delta, &assignment)?;
            emit(
                Envelope::new(Artifact::Iprnz(IprnzArtifact { delta, assignment, report })),
                out,
            )?;
            Ok(EXIT_OK)
        }

        Command::Selftest { quick } => {
            let results = run_all(cli.seed, quick, cli.threads);
            let mut all_passed = true;
            for r in &results {
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                all_passed &= r.passed;
                eprintln!(
                    "criterion {:>2} {} ({:>7.2}s/{:>3.0}s) {} -- {}",
                    r.id, verdict, r.seconds, r.budget_seconds, r.name, r.detail
                );
            }
            let text = serde_json::to_string_pretty(&results)? + "\n";
            write_output(&text, out)?;
            Ok(if all_passed { EXIT_OK } else { EXIT_INPUT })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_command(
    family: Family,
    colouring: &str,
    n: u32,
    seq: Option<&str>,
    window: Option<i64>,
    levels: u32,
    trace_path: Option<PathBuf>,
    out: Option<&Path>,
) -> anyhow::Result<u8> {
    let mut cfg = SolverConfig { max_levels: levels, ..SolverConfig::default() };
    if let Some(w) = window {
        cfg.window_hi = w;
        cfg.stab_window = cfg.stab_window.min(w);
        cfg.dyadic_window = cfg.dyadic_window.min(w);
        cfg.witness_cap = w.saturating_mul(4);
    }

    // Dyadic colouring rules live at scale --levels; integer rules at 0.
    let dyadic_rule = colouring.starts_with("numermod:") || colouring == "levelparity";
    let col = if dyadic_rule {
        let scale = levels;
        if scale > 40 {
            bail!("--levels {scale} is too deep for an i64-scaled window");
        }
        let hi = cfg
            .witness_cap
            .checked_shl(scale)
            .filter(|h| *h > 0)
            .ok_or_else(|| anyhow!("window * 2^{scale} overflows; lower --levels or --window"))?;
        parse_colouring_spec(colouring, scale, 1, hi)?
    } else {
        parse_colouring_spec(colouring, 0, 1, cfg.window_hi)?
    };

    let seq = match (family, seq) {
        (Family::A | Family::C, None) | (Family::A | Family::C, Some("pow2")) => {
            CoefficientSequence::PowersOfTwo
        }
        (Family::A | Family::C, Some("invpow2")) => CoefficientSequence::InversePowersOfTwo,
        (Family::A | Family::C, Some(csv)) => {
            let values = csv
                .split(',')
                .map(|t| parse_rational(t.trim()))
                .collect::<anyhow::Result<Vec<Rational>>>()?;
            CoefficientSequence::custom(values)?
        }
        (Family::B, None) | (Family::B, Some("invpow2")) => {
            CoefficientSequence::InversePowersOfTwo
        }
        (Family::B, Some(other)) => {
            bail!("family b fixes the coefficient sequence to invpow2, got {other:?}")
        }
    };

    let outcome = match family {
        Family::A => solve_system_a(&col, n, &seq, &cfg)?,
        Family::B => solve_system_b(&col, n, &cfg)?,
        Family::C => solve_system_c(&col, n, &seq, &cfg)?,
    };
    let (art, code) = match outcome {
        SolveOutcome::Solved { report, trace } => {
            if let Some(path) = &trace_path {
                let text = serde_json::to_string_pretty(&trace)? + "\n";
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            let art = SolveArtifact {
                colouring: col,
                conclusive: true,
                report: Some(report),
                trace: Some(trace),
                step: None,
                detail: None,
            };
            (art, EXIT_OK)
        }
        SolveOutcome::Inconclusive { step, detail } => {
            let art = SolveArtifact {
                colouring: col,
                conclusive: false,
                report: None,
                trace: None,
                step: Some(step),
                detail: Some(detail),
            };
            (art, EXIT_INCONCLUSIVE)
        }
    };
    emit(Envelope::new(Artifact::Solve(art)), out)?;
    Ok(code)
}

/// Re-verifies a stored certificate, requiring the expected artifact kind.
fn verify_file(path: &Path, expected_kind: &str, out: Option<&Path>) -> anyhow::Result<u8> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let env = Envelope::from_json(&text)?;
    let kind = kind_name(&env.artifact);
    if kind != expected_kind {
        bail!("{} holds a {kind} certificate; this command verifies {expected_kind}",
            path.display());
    }
    let summary = verify_envelope(&env).with_context(|| format!("{} rejected", path.display()))?;
    let report = serde_json::json!({
        "schema": "v1",
        "verified": true,
        "kind": kind,
        "summary": summary,
    });
    write_output(&(serde_json::to_string_pretty(&report)? + "\n"), out)?;
    Ok(EXIT_OK)
}

fn kind_name(artifact: &Artifact) -> &'static str {
    match artifact {
        Artifact::Columns(_) => "columns",
        Artifact::BadColouring(_) => "bad_colouring",
        Artifact::MonoSolution(_) => "mono_solution",
        Artifact::Stabilization(_) => "stabilization",
        Artifact::Solve(_) => "solve",
        Artifact::Obstruction(_) => "obstruction",
        Artifact::Iprnz(_) => "iprnz",
    }
}

/// Reads a linear system from a file, or stdin when the path is `-`.
fn read_system(path: Option<&str>) -> anyhow::Result<LinearSystem> {
    let path = path.ok_or_else(|| anyhow!("--system FILE is required (use - for stdin)"))?;
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading the system from stdin")?;
        buf
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {path}"))?
    };
    Ok(parse_system(&text)?)
}

/// Parses `p`, `-p`, or `p/q` into an exact rational.
fn parse_rational(text: &str) -> anyhow::Result<Rational> {
    let text = text.trim();
    let parse_int = |t: &str| -> anyhow::Result<i64> {
        t.trim().parse::<i64>().map_err(|_| anyhow!("invalid integer {t:?}"))
    };
    match text.split_once('/') {
        Some((p, q)) => Ok(Rational::new(parse_int(p)?, parse_int(q)?)?),
        None => Ok(Rational::from(parse_int(text)?)),
    }
}

fn emit(env: Envelope, out: Option<&Path>) -> anyhow::Result<()> {
    write_output(&env.to_json(), out)
}

fn write_output(text: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
