//! Command-line front end. Every command prints one JSON document.
//!
//! Exit codes: 0 success, 2 usage, 3 precision, 4 unsupported class number,
//! 5 verification failure.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use rug::{Complex, Integer, Rational};
use serde::Serialize;
use serde_json::{json, Value};

use crate::class_poly::{
    hilbert_class_poly, main3_generator, main3_minpoly, ring_class_poly, GeneratorSpec,
};
use crate::error::{Error, Result};
use crate::hauptmodul::{self, HauptmodulSpec};
use crate::modular::{eval_eta, eval_fricke, eval_j, FrickeIndex, Route, Tau};
use crate::numerics::{
    decimal_digits, recognize_integer_complex, recognize_rational, to_decimal, PrecisionContext,
    Stable,
};
use crate::quad_fields::theta_point;
use crate::reciprocity::{galois_orbit_fricke, galois_orbit_function, GaloisOrbit};
use crate::verify::{run_suite, Suite, VerifyOptions};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_CLASS_NUMBER: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "cm-moduli",
    version,
    about = "Singular values of modular functions at CM points, class polynomials and ray class generators",
    after_help = "Polynomials are printed as {\"disc\", \"level\", \"coeffs\", \"monic\", \"bits\"} with \
                  coefficients as decimal strings in ascending degree (constant term first).\n\
                  CM_MODULI_MAX_BITS caps precision escalation (default 8192)."
)]
pub struct Cli {
    /// Working precision in bits.
    #[arg(long, global = true, default_value_t = crate::numerics::DEFAULT_WORKING_BITS)]
    pub bits: u32,
    /// Write the JSON output to this file instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Function {
    J,
    Eta,
    Fricke,
    T,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Series,
    Weierstrass,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Transform,
    Relations,
    Dual,
    Invariance,
    Kernel,
    Main2,
    Ringlemma,
    Franz,
    All,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate j, eta, a Fricke function or a principal modulus.
    Eval {
        function: Function,
        /// Point as "re,im" (decimals or fractions).
        #[arg(long, allow_hyphen_values = true, conflicts_with = "disc")]
        tau: Option<String>,
        /// Fundamental discriminant selecting theta_K = (d + sqrt(d))/2.
        #[arg(long, allow_hyphen_values = true)]
        disc: Option<i64>,
        /// Level N of t_N or s_N.
        #[arg(long)]
        level: Option<u64>,
        /// Fricke index "r1,r2".
        #[arg(long)]
        index: Option<String>,
        /// Fricke function number 1, 2 or 3.
        #[arg(long, default_value_t = 1)]
        k: u8,
        #[arg(long, value_enum)]
        route: Option<RouteArg>,
    },
    /// Hilbert class polynomial of a fundamental discriminant.
    Hilbert {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
    },
    /// Ring class polynomial of the order of conductor N.
    Ringpoly {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        level: i64,
    },
    /// Ray class generator j(theta_K) + p N^2 f^(k)(theta_K) and its minimal polynomial.
    Raygen {
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        /// Modulus N; uses the index (0, 1/N).
        #[arg(long, conflicts_with = "index")]
        modulus: Option<i64>,
        #[arg(long)]
        index: Option<String>,
        /// Prime above |d_K|; defaults to the smallest one.
        #[arg(long)]
        p: Option<u64>,
    },
    /// Galois conjugates of a singular value over K.
    Orbit {
        /// "fricke" or a principal modulus label such as t2 or s5.
        function: String,
        #[arg(long, allow_hyphen_values = true)]
        disc: i64,
        #[arg(long)]
        index: Option<String>,
        #[arg(long, default_value_t = 1)]
        k: u8,
    },
    /// Supported principal moduli and genus-zero levels.
    ListHauptmoduln,
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long, allow_hyphen_values = true)]
        disc: Option<i64>,
        #[arg(long)]
        level: Option<i64>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidInput(_)
        | Error::InvalidPrecision(_)
        | Error::BadDiscriminant(_)
        | Error::NotFundamental(_)
        | Error::UnsupportedLevel { .. } => EXIT_USAGE,
        Error::ClassNumberNotOne { .. } => EXIT_CLASS_NUMBER,
        Error::VerificationFailed(_) | Error::HypothesisFailed(_) => EXIT_VERIFICATION,
        _ => EXIT_PRECISION,
    }
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match execute(&cli) {
        Ok((value, code)) => match emit(&value, cli.output.as_ref()) {
            Ok(()) => code,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn emit(value: &Value, path: Option<&PathBuf>) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values serialize");
    match path {
        Some(p) => std::fs::write(p, text + "\n"),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}")
        }
    }
}

fn context(bits: u32) -> Result<PrecisionContext> {
    PrecisionContext::from_env()?.with_working_bits(bits)
}

/// Exact parse of a decimal or fraction such as `-0.125` or `3/8`.
pub fn parse_exact(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::InvalidInput(format!("cannot parse number {s:?}"));
    if let Ok(r) = Rational::from_str(s) {
        return Ok(r);
    }
    let (neg, body) = s.strip_prefix('-').map_or((false, s), |b| (true, b));
    let (int, frac) = body.split_once('.').ok_or_else(bad)?;
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        || (int.is_empty() && frac.is_empty())
    {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    let num = Integer::from_str(&digits).map_err(|_| bad())?;
    let den = Integer::from(Integer::u_pow_u(10, frac.len() as u32));
    let r = Rational::from((num, den));
    Ok(if neg { -r } else { r })
}

pub fn parse_tau(s: &str) -> Result<Tau> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::InvalidInput(format!("tau {s:?} must be \"re,im\"")))?;
    Tau::from_rationals(&parse_exact(a)?, &parse_exact(b)?)
}

fn point(tau: &Option<String>, disc: Option<i64>) -> Result<Tau> {
    match (tau, disc) {
        (Some(t), _) => parse_tau(t),
        (None, Some(d)) => Ok(theta_point(d)?.tau),
        (None, None) => Err(Error::InvalidInput("give --tau or --disc".into())),
    }
}

fn decimal(x: &rug::Float, bits: u32) -> String {
    to_decimal(x, decimal_digits(bits))
}

/// Real and imaginary parts; a part below the certified error of `z` is "0".
fn parts(z: &Complex, agreed_bits: u32) -> (String, String) {
    let floor = crate::numerics::magnitude_log2(z) - f64::from(agreed_bits);
    let show = |x: &rug::Float| {
        if x.is_zero() || crate::numerics::real_log2(x) < floor {
            "0".to_string()
        } else {
            decimal(x, agreed_bits)
        }
    };
    (show(z.real()), show(z.imag()))
}

/// Integer if possible, else a small-denominator rational.
fn recognize(z: &Complex, ctx: &PrecisionContext) -> Option<String> {
    if let Ok(n) = recognize_integer_complex(z, ctx) {
        return Some(n.to_string());
    }
    if crate::numerics::magnitude_log2(&Complex::with_val(z.prec().0, z.imag()))
        > -f64::from(ctx.guard_bits)
    {
        return None;
    }
    recognize_rational(z.real(), 10_000, ctx)
        .ok()
        .map(|r| r.to_string())
}

fn value_json(st: &Stable<Complex>, ctx: &PrecisionContext) -> Value {
    let (re, im) = parts(&st.value, st.agreed_bits);
    json!({
        "value_re": re,
        "value_im": im,
        "bits": st.bits,
        "recognized": recognize(&st.value, ctx),
    })
}

fn parse_index(s: &Option<String>) -> Result<Option<FrickeIndex>> {
    s.as_deref().map(FrickeIndex::parse).transpose()
}

fn execute(cli: &Cli) -> Result<(Value, i32)> {
    let ctx = context(cli.bits)?;
    match &cli.command {
        Command::Eval {
            function,
            tau,
            disc,
            level,
            index,
            k,
            route,
        } => {
            let p = point(tau, *disc)?;
            let st = match function {
                Function::J => eval_j(&p, &ctx)?,
                Function::Eta => eval_eta(&p, &ctx)?,
                Function::T | Function::S => {
                    let n =
                        level.ok_or_else(|| Error::InvalidInput("--level is required".into()))?;
                    if *function == Function::T {
                        hauptmodul::eval_t(n, &p, &ctx)?
                    } else {
                        hauptmodul::eval_s(n, &p, &ctx)?
                    }
                }
                Function::Fricke => {
                    let x = parse_index(index)?
                        .ok_or_else(|| Error::InvalidInput("--index is required".into()))?;
                    let chosen = match route {
                        Some(RouteArg::Series) => Route::Series,
                        Some(RouteArg::Weierstrass) => Route::Weierstrass,
                        None => match disc {
                            Some(d) => crate::class_poly::route_at_theta(*d, &ctx)?,
                            None => Route::Series,
                        },
                    };
                    match eval_fricke(&x, *k, &p, &ctx, chosen) {
                        Err(Error::SingularRelation) if route.is_none() => {
                            eval_fricke(&x, *k, &p, &ctx, Route::Weierstrass)?
                        }
                        other => other?,
                    }
                }
            };
            Ok((value_json(&st, &ctx), 0))
        }
        Command::Hilbert { disc } => {
            let poly = hilbert_class_poly(*disc, &ctx)?;
            Ok((
                serde_json::to_value(poly.to_json(*disc, None)).expect("serializable"),
                0,
            ))
        }
        Command::Ringpoly { disc, level } => {
            let poly = ring_class_poly(*disc, *level, &ctx)?;
            Ok((
                serde_json::to_value(poly.to_json(*disc, Some(*level))).expect("serializable"),
                0,
            ))
        }
        Command::Raygen {
            disc,
            modulus,
            index,
            p,
        } => {
            let spec = match (parse_index(index)?, modulus) {
                (Some(x), _) => GeneratorSpec::new(*disc, x, *p)?,
                (None, Some(n)) => GeneratorSpec::for_modulus(*disc, *n, *p)?,
                (None, None) => {
                    return Err(Error::InvalidInput("give --modulus or --index".into()))
                }
            };
            let poly = main3_minpoly(&spec, &ctx)?;
            let g = main3_generator(&spec, &ctx)?;
            let recognized = recognize(&g.value, &ctx);
            let (re, im) = parts(&g.value, g.agreed_bits);
            Ok((
                json!({
                    "disc": disc,
                    "index": spec.index.to_string(),
                    "level": spec.level(),
                    "p": spec.p,
                    "k": spec.k,
                    "generator": recognized.clone().unwrap_or_else(|| re.clone()),
                    "generator_re": re,
                    "generator_im": im,
                    "recognized": recognized,
                    "bits": g.bits,
                    "integral": poly.is_integral(),
                    "polynomial": poly.to_json(*disc, Some(spec.level())),
                }),
                0,
            ))
        }
        Command::Orbit {
            function,
            disc,
            index,
            k,
        } => {
            let orbit = if function == "fricke" {
                let x = parse_index(index)?
                    .ok_or_else(|| Error::InvalidInput("--index is required".into()))?;
                galois_orbit_fricke(&x, *k, *disc, &ctx)?
            } else {
                let g: HauptmodulSpec = function.parse()?;
                galois_orbit_function(&g, *disc, &ctx)?
            };
            Ok((orbit_json(&orbit, *disc, &ctx), 0))
        }
        Command::ListHauptmoduln => Ok((
            json!({
                "registry": hauptmodul::registry().iter().map(|h| json!({
                    "label": h.to_string(),
                    "group": h.group.name(),
                    "level": h.level,
                    "exponent": h.exponent,
                    "fricke_constant": h.fricke_constant,
                })).collect::<Vec<_>>(),
                "genus_zero": {
                    "Gamma0": hauptmodul::GAMMA0_GENUS_ZERO,
                    "Gamma0Dagger": hauptmodul::GAMMA0_DAGGER_GENUS_ZERO,
                    "Gamma1": hauptmodul::GAMMA1_GENUS_ZERO,
                },
            }),
            0,
        )),
        Command::Verify {
            suite,
            samples,
            seed,
            disc,
            level,
        } => {
            let opts = VerifyOptions {
                samples: *samples,
                seed: *seed,
                disc: *disc,
                level: *level,
            };
            let suites: Vec<Suite> = match suite {
                SuiteArg::All => Suite::ALL.to_vec(),
                other => vec![format!("{other:?}").to_lowercase().parse()?],
            };
            let reports: Vec<_> = suites.iter().map(|s| run_suite(*s, &opts, &ctx)).collect();
            let passed = reports.iter().all(|r| r.passed);
            let code = if passed { 0 } else { EXIT_VERIFICATION };
            Ok((json!({ "passed": passed, "suites": reports }), code))
        }
    }
}

#[derive(Serialize)]
struct ConjugateJson {
    t: i64,
    s: i64,
    value_re: String,
    value_im: String,
    recognized: Option<String>,
}

fn orbit_json(o: &GaloisOrbit, disc: i64, ctx: &PrecisionContext) -> Value {
    let bits = o.bits / 2;
    json!({
        "description": o.description,
        "disc": disc,
        "cosets": o.coset_count,
        "distinct": o.len(),
        "dedup_log2": o.dedup_log2,
        "bits": o.bits,
        "conjugates": o.conjugates.iter().map(|(a, v)| {
            let (value_re, value_im) = parts(v, bits);
            ConjugateJson { t: a.t, s: a.s, value_re, value_im, recognized: recognize(v, ctx) }
        }).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_decimals() {
        assert_eq!(parse_exact("0.125").unwrap(), Rational::from((1, 8)));
        assert_eq!(parse_exact("-1.5").unwrap(), Rational::from((-3, 2)));
        assert_eq!(parse_exact("3/8").unwrap(), Rational::from((3, 8)));
        assert_eq!(parse_exact("2").unwrap(), Rational::from(2));
        assert!(parse_exact("1.2.3").is_err());
        assert!(parse_exact("x").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["cm-moduli", "hilbert"]), EXIT_USAGE);
        assert_eq!(run(["cm-moduli", "hilbert", "--disc", "-12"]), EXIT_USAGE);
        assert_eq!(
            run(["cm-moduli", "raygen", "--disc", "-15", "--modulus", "2"]),
            EXIT_CLASS_NUMBER
        );
        assert_eq!(
            run([
                "cm-moduli",
                "eval",
                "eta",
                "--tau",
                "0,0.00001",
                "--bits",
                "64"
            ]),
            EXIT_PRECISION
        );
    }
}
