//! `sudler` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::birkhoff::{cot_profile, cot_sum, identity_suite};
use crate::bounds::{perturbed_product, power_law_scan_with, SignedPhase};
use crate::error::Error;
use crate::fibcore::{fib, zeckendorf};
use crate::goldenangle::{GoldenCtx, MAX_LEVEL};
use crate::parallel::with_workers;
use crate::sudler::{c_infinity_trunc, decompose, prefix_logs, q_n, sudler_p, ProductResult};
use crate::verify::{run_suite, suite_passes, Level};
use crate::DEFAULT_PRECISION_BITS;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "sudler",
    version,
    about = "High-precision computations with P_k(w) = prod_{r<=k} |2 sin pi r w|, w = (sqrt5 - 1)/2"
)]
pub struct Cli {
    /// Fixed-point precision in bits (at least 64).
    #[arg(long, global = true, env = "SUDLER_PRECISION_BITS", default_value_t = DEFAULT_PRECISION_BITS,
          value_parser = clap::value_parser!(u32).range(64..))]
    pub precision: u32,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact Fibonacci number F_N.
    Fib { n: u32 },
    /// Zeckendorf digits of N.
    Zeck { n: u128 },
    /// P_K(w).
    P { k: u64 },
    /// Q_N = P_{F_N}.
    Q { n: u32 },
    /// Q_N next to A_N B_N C_N.
    Decompose { n: u32 },
    /// Truncated limit of C_n with T factors.
    Climit { t: u64 },
    /// Normalised cotangent sum and its enclosure.
    Cotsum { n: u32 },
    /// CSV `k,partial` of signed cotangent partial sums.
    Cotprofile { n: u32 },
    /// CSV `k,P,logP` for k up to F_N.
    Profile {
        n: u32,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        stride: u64,
    },
    /// CSV `k,logP_over_logk` for 2 <= k <= KMAX.
    Scan { kmax: u64 },
    /// Perturbed product at level N with phase ALPHA.
    #[command(allow_negative_numbers = true)]
    Perturbed { n: u32, alpha: String },
    /// Closed-form trigonometric identities for n <= NMAX.
    Identities {
        nmax: u64,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// Invariant suite.
    Verify {
        #[arg(long, value_enum, default_value_t = VerifyLevel::Quick)]
        level: VerifyLevel,
    },
}

/// Settings shared by every subcommand.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub precision_bits: u32,
    pub workers: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl From<&Cli> for RunConfig {
    fn from(c: &Cli) -> Self {
        RunConfig {
            precision_bits: c.precision,
            workers: c
                .workers
                .map(|w| w as usize)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
            seed: c.seed,
            output: c.output.clone(),
        }
    }
}

/// 17 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn product_line(out: &mut String, name: &str, p: &ProductResult) {
    let _ = writeln!(out, "{name} = {}", sci(p.value));
    let _ = writeln!(out, "ln {name} = {}", sci(p.log_f64()));
    let _ = writeln!(out, "err(ln {name}) = {:.3e}", p.err);
}

struct Outcome {
    text: String,
    code: i32,
}

fn ok(text: String) -> Result<Outcome, Error> {
    Ok(Outcome {
        text,
        code: EXIT_OK,
    })
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::PrecisionExhausted { .. } => EXIT_PRECISION,
        _ => EXIT_USAGE,
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let msg = e.render().to_string();
            let _ = if code == EXIT_OK {
                stdout.write_all(msg.as_bytes())
            } else {
                stderr.write_all(msg.as_bytes())
            };
            return code;
        }
    };
    let cfg = RunConfig::from(&cli);
    let result = with_workers(cfg.workers, || execute(&cli.command, &cfg));
    match result {
        Ok(o) => {
            let written = match &cfg.output {
                Some(path) => std::fs::write(path, o.text.as_bytes()),
                None => stdout.write_all(o.text.as_bytes()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: cannot write output: {e}");
                return EXIT_USAGE;
            }
            o.code
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn context(cfg: &RunConfig) -> Result<GoldenCtx, Error> {
    GoldenCtx::new(cfg.precision_bits, MAX_LEVEL + 2)
}

fn execute(cmd: &Command, cfg: &RunConfig) -> Result<Outcome, Error> {
    let mut out = String::new();
    match cmd {
        Command::Fib { n } => {
            let _ = writeln!(out, "F_{n} = {}", fib(*n));
            ok(out)
        }
        Command::Zeck { n } => {
            let z = zeckendorf(*n);
            let idx = z.indices();
            let terms: Vec<String> = idx.iter().map(|s| format!("F_{s}")).collect();
            let sum = if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            };
            let digits: String = (1..=z.m)
                .rev()
                .map(|s| if z.digit(s) { '1' } else { '0' })
                .collect();
            let _ = writeln!(out, "{n} = {sum}");
            let _ = writeln!(out, "digits (F_{}..F_1) = {digits}", z.m);
            let _ = writeln!(out, "length = {}", z.length);
            ok(out)
        }
        Command::P { k } => {
            let ctx = context(cfg)?;
            product_line(&mut out, &format!("P_{k}"), &sudler_p(&ctx, *k)?);
            ok(out)
        }
        Command::Q { n } => {
            let ctx = context(cfg)?;
            let q = q_n(&ctx, *n)?;
            let _ = writeln!(out, "F_{n} = {}", ctx.fib(*n));
            product_line(&mut out, &format!("Q_{n}"), &q);
            if *n >= 2 {
                let prev = q_n(&ctx, n - 1)?;
                let _ = writeln!(out, "Q_{n} - Q_{} = {}", n - 1, sci(q.value - prev.value));
            }
            ok(out)
        }
        Command::Decompose { n } => {
            let ctx = context(cfg)?;
            let d = decompose(&ctx, *n)?;
            product_line(&mut out, "A", &d.a);
            product_line(&mut out, "B", &d.b);
            product_line(&mut out, "C", &d.c);
            product_line(&mut out, "Q", &d.q);
            let _ = writeln!(out, "Q - ABC = {}", sci(d.residual));
            let _ = writeln!(out, "(Q - ABC)/Q = {}", sci(d.rel_residual));
            let _ = writeln!(out, "err = {:.3e}", d.err);
            ok(out)
        }
        Command::Climit { t } => {
            let ctx = context(cfg)?;
            let c = c_infinity_trunc(&ctx, *t)?;
            let _ = writeln!(out, "T = {}", c.terms);
            let _ = writeln!(out, "product = {}", sci(c.value));
            let _ = writeln!(out, "squared = {}", sci(c.squared));
            let _ = writeln!(out, "first 1/u^2 = {}", sci(c.first_inverse_square));
            let _ = writeln!(out, "closer to 0.928 = {}", c.closer_form());
            let _ = writeln!(out, "factors in (0,1) = {}", c.factors_in_unit_interval);
            let _ = writeln!(out, "err(ln) = {:.3e}", c.err);
            ok(out)
        }
        Command::Cotsum { n } => {
            let ctx = context(cfg)?;
            let c = cot_sum(&ctx, *n)?;
            let _ = writeln!(out, "sum = {}", sci(c.sum.to_f64()));
            let _ = writeln!(out, "w^n sum = {}", sci(c.normalized));
            let _ = writeln!(out, "enclosure = ({}, {})", sci(c.lower), sci(c.upper));
            let _ = writeln!(out, "inside = {}", c.within_enclosure());
            let _ = writeln!(out, "err = {:.3e}", c.err);
            ok(out)
        }
        Command::Cotprofile { n } => {
            let ctx = context(cfg)?;
            out.push_str("k,partial\n");
            for (k, v) in cot_profile(&ctx, *n)? {
                let _ = writeln!(out, "{k},{}", v.to_f64());
            }
            ok(out)
        }
        Command::Profile { n, stride } => {
            let ctx = context(cfg)?;
            ctx.check_level(*n)?;
            out.push_str("k,P,logP\n");
            prefix_logs(&ctx, 1, ctx.fib(*n), *stride, |k, l| {
                let _ = writeln!(out, "{k},{},{}", l.exp().to_f64(), l.to_f64());
            })?;
            ok(out)
        }
        Command::Scan { kmax } => {
            let ctx = context(cfg)?;
            out.push_str("k,logP_over_logk\n");
            power_law_scan_with(&ctx, *kmax, |k, v| {
                let _ = writeln!(out, "{k},{v}");
            })?;
            ok(out)
        }
        Command::Perturbed { n, alpha } => {
            let ctx = context(cfg)?;
            let a = SignedPhase::parse(alpha, ctx.bits())?;
            let p = perturbed_product(&ctx, *n, &a)?;
            product_line(&mut out, "perturbed", &p.direct);
            product_line(&mut out, &format!("Q_{n}"), &p.base);
            let _ = writeln!(out, "ratio = {}", sci(p.ratio));
            let _ = writeln!(out, "|direct - factored| (log) = {:.3e}", p.agreement);
            ok(out)
        }
        Command::Identities { nmax, samples } => {
            let r = identity_suite(*nmax, *samples, cfg.seed)?;
            for c in &r.checks {
                let _ = writeln!(
                    out,
                    "{:<40} cases {:>6}  max rel dev {:.3e}",
                    c.name, c.cases, c.max_rel_dev
                );
            }
            let _ = writeln!(out, "worst = {:.3e}", r.worst());
            ok(out)
        }
        Command::Verify { level } => {
            let lvl = match level {
                VerifyLevel::Quick => Level::Quick,
                VerifyLevel::Full => Level::Full,
            };
            let rows = run_suite(lvl, cfg.seed, cfg.precision_bits)?;
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{:<12} {:<20} {:<13} {} | {}",
                    r.module,
                    r.name,
                    r.status.label(),
                    r.anchor,
                    r.detail
                );
            }
            let code = if suite_passes(&rows) {
                EXIT_OK
            } else {
                EXIT_VERIFY
            };
            Ok(Outcome { text: out, code })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut o = Vec::new();
        let mut e = Vec::new();
        let mut argv = vec!["sudler"];
        argv.extend_from_slice(args);
        let code = run(argv, &mut o, &mut e);
        (
            code,
            String::from_utf8(o).unwrap(),
            String::from_utf8(e).unwrap(),
        )
    }

    #[test]
    fn q1_is_two_sine() {
        let (code, out, _) = run_str(&["q", "1"]);
        assert_eq!(code, 0);
        assert!(out.contains("Q_1 = 1.86406484762645"), "{out}");
    }

    #[test]
    fn argument_errors_exit_2() {
        assert_eq!(run_str(&["q"]).0, 2);
        assert_eq!(run_str(&["--precision", "32", "q", "3"]).0, 2);
        assert_eq!(run_str(&["q", "200"]).0, 2);
        assert_eq!(run_str(&["perturbed", "8", "0.3"]).0, 2);
        assert_eq!(run_str(&["bogus"]).0, 2);
    }

    #[test]
    fn precision_exhaustion_exits_3() {
        let (code, _, err) = run_str(&["--precision", "64", "p", "100000"]);
        assert_eq!(code, 3, "{err}");
    }

    #[test]
    fn negative_alpha_accepted() {
        let (code, out, err) = run_str(&["perturbed", "6", "-0.001"]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains("ratio"));
    }

    #[test]
    fn csv_headers() {
        assert!(run_str(&["profile", "5"]).1.starts_with("k,P,logP\n1,"));
        assert!(run_str(&["cotprofile", "5"]).1.starts_with("k,partial\n1,"));
        assert!(run_str(&["scan", "10"])
            .1
            .starts_with("k,logP_over_logk\n2,"));
    }

    #[test]
    fn decompose_15_residual() {
        let (code, out, _) = run_str(&["decompose", "15"]);
        assert_eq!(code, 0);
        let line = out.lines().find(|l| l.starts_with("(Q - ABC)/Q")).unwrap();
        let v: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
        assert!(v.abs() < 1e-10);
    }

    #[test]
    fn fib_and_zeck() {
        assert_eq!(
            run_str(&["fib", "100"]).1,
            "F_100 = 354224848179261915075\n"
        );
        assert!(run_str(&["zeck", "100"])
            .1
            .starts_with("100 = F_11 + F_6 + F_4\n"));
    }
}
