//! Precision management and exact-value recognition.
//!
//! Every evaluator in this crate is a pure function of a binary precision.
//! [`stable_value`] and [`stable_values`] run such a function at two
//! precisions and only accept the result when both runs agree, doubling the
//! precision until they do or until [`PrecisionContext::max_bits`] is hit.
//! Recognition of integers and rationals is then done against a threshold of
//! `2^-guard_bits`, which is always tighter than the agreement budget.

use std::cmp::Ordering;

use rug::float::Round;
use rug::ops::NegAssign;
use rug::{Complex, Float, Integer, Rational};
use serde::Serialize;

use crate::error::{Error, Result};

pub type BigReal = Float;
pub type BigComplex = Complex;

pub const DEFAULT_WORKING_BITS: u32 = 128;
pub const DEFAULT_GUARD_BITS: u32 = 48;
pub const DEFAULT_MAX_BITS: u32 = 8192;

/// Environment variable capping precision escalation.
pub const MAX_BITS_ENV: &str = "CM_MODULI_MAX_BITS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PrecisionContext {
    pub working_bits: u32,
    pub guard_bits: u32,
    pub max_bits: u32,
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext {
            working_bits: DEFAULT_WORKING_BITS,
            guard_bits: DEFAULT_GUARD_BITS,
            max_bits: DEFAULT_MAX_BITS,
        }
    }
}

impl PrecisionContext {
    pub fn new(working_bits: u32, guard_bits: u32, max_bits: u32) -> Result<Self> {
        if working_bits < 64 {
            return Err(Error::InvalidPrecision(format!(
                "working_bits = {working_bits} < 64"
            )));
        }
        if guard_bits < 32 {
            return Err(Error::InvalidPrecision(format!(
                "guard_bits = {guard_bits} < 32"
            )));
        }
        if guard_bits >= working_bits {
            return Err(Error::InvalidPrecision(format!(
                "guard_bits = {guard_bits} must be below working_bits = {working_bits}"
            )));
        }
        if max_bits < working_bits {
            return Err(Error::InvalidPrecision(format!(
                "max_bits = {max_bits} < working_bits = {working_bits}"
            )));
        }
        Ok(PrecisionContext {
            working_bits,
            guard_bits,
            max_bits,
        })
    }

    /// Default context with `max_bits` taken from `CM_MODULI_MAX_BITS` when set.
    pub fn from_env() -> Result<Self> {
        let mut ctx = PrecisionContext::default();
        if let Ok(raw) = std::env::var(MAX_BITS_ENV) {
            let max: u32 = raw.trim().parse().map_err(|_| {
                Error::InvalidPrecision(format!("{MAX_BITS_ENV}={raw:?} is not an integer"))
            })?;
            ctx = PrecisionContext::new(ctx.working_bits, ctx.guard_bits, max)?;
        }
        Ok(ctx)
    }

    pub fn with_working_bits(self, working_bits: u32) -> Result<Self> {
        PrecisionContext::new(
            working_bits,
            self.guard_bits,
            self.max_bits.max(working_bits),
        )
    }

    /// Relative agreement (in bits) demanded between two evaluations.
    pub fn agreement_bits(&self) -> u32 {
        self.working_bits - self.guard_bits
    }

    /// `2^(-working_bits + guard_bits)` as an `f64`, the residual threshold
    /// used by the verification suites.
    pub fn residual_threshold(&self) -> f64 {
        2f64.powi(-(self.agreement_bits() as i32))
    }
}

/// A value accepted by the doubling-agreement policy.
#[derive(Clone, Debug)]
pub struct Stable<T> {
    pub value: T,
    /// Precision of the returned (higher-precision) evaluation.
    pub bits: u32,
    /// Relative agreement certified between the two runs.
    pub agreed_bits: u32,
}

impl Stable<Vec<Complex>> {
    /// Upper bound on `log2` of the absolute error of entry `i`.
    pub fn abs_error_log2(&self, i: usize) -> f64 {
        magnitude_log2(&self.value[i]).max(0.0) - f64::from(self.agreed_bits)
    }
}

impl Stable<Complex> {
    pub fn abs_error_log2(&self) -> f64 {
        magnitude_log2(&self.value).max(0.0) - f64::from(self.agreed_bits)
    }
}

/// Approximate `log2 |z|`; `-inf` for zero.
pub fn magnitude_log2(z: &Complex) -> f64 {
    let (re, im) = (z.real(), z.imag());
    let e = match (re.get_exp(), im.get_exp()) {
        (None, None) => return f64::NEG_INFINITY,
        (Some(a), None) | (None, Some(a)) => a,
        (Some(a), Some(b)) => a.max(b),
    };
    // exact enough for budgeting: scale down then use f64
    let shift = e - 2;
    let mut scaled = abs(z);
    scaled >>= shift;
    scaled.to_f64().log2() + f64::from(shift)
}

pub fn real_log2(x: &Float) -> f64 {
    match x.get_exp() {
        None => f64::NEG_INFINITY,
        Some(e) => {
            let mut y = Float::with_val(64, x.abs_ref());
            y >>= e;
            y.to_f64().log2() + f64::from(e)
        }
    }
}

pub fn abs(z: &Complex) -> Float {
    Float::with_val(z.prec().0.max(z.prec().1), z.abs_ref())
}

/// `|a - b| <= 2^-rel_bits * max(|b|, 1)`.
pub fn agree(a: &Complex, b: &Complex, rel_bits: u32) -> bool {
    let prec = b.prec().0.max(a.prec().0);
    let diff = Complex::with_val(prec, a - b);
    let mut d = abs(&diff);
    let scale = abs(b).max(&Float::with_val(prec, 1));
    d <<= rel_bits;
    d <= scale
}

/// Relative residual `|a - b| / max(|a|, |b|, 1)` as a float.
pub fn relative_residual(a: &Complex, b: &Complex) -> f64 {
    let prec = b.prec().0.max(a.prec().0);
    let diff = Complex::with_val(prec, a - b);
    let d = abs(&diff);
    let one = Float::with_val(prec, 1);
    let scale = abs(a).max(&abs(b)).max(&one);
    let r = Float::with_val(prec, &d / &scale);
    r.to_f64()
}

/// Run `eval` at doubling precisions until two consecutive runs agree.
pub fn stable_value<F>(eval: F, ctx: &PrecisionContext) -> Result<Stable<Complex>>
where
    F: Fn(u32) -> Result<Complex>,
{
    let st = stable_values(|bits| eval(bits).map(|z| vec![z]), ctx)?;
    Ok(Stable {
        value: st.value.into_iter().next().expect("one value"),
        bits: st.bits,
        agreed_bits: st.agreed_bits,
    })
}

/// Vector form of [`stable_value`]: every entry must agree.
pub fn stable_values<F>(eval: F, ctx: &PrecisionContext) -> Result<Stable<Vec<Complex>>>
where
    F: Fn(u32) -> Result<Vec<Complex>>,
{
    let mut bits = ctx.working_bits;
    if bits.saturating_mul(2) > ctx.max_bits {
        return Err(Error::PrecisionExhausted {
            max_bits: ctx.max_bits,
        });
    }
    let mut low = eval(bits)?;
    loop {
        let hi_bits = bits * 2;
        if hi_bits > ctx.max_bits {
            return Err(Error::PrecisionExhausted {
                max_bits: ctx.max_bits,
            });
        }
        let high = eval(hi_bits)?;
        let rel = bits.saturating_sub(ctx.guard_bits);
        let ok = low.len() == high.len() && low.iter().zip(&high).all(|(a, b)| agree(a, b, rel));
        if ok {
            return Ok(Stable {
                value: high,
                bits: hi_bits,
                agreed_bits: rel,
            });
        }
        bits = hi_bits;
        low = high;
    }
}

/// Round `x` and accept iff `|x - round(x)| < 2^-guard_bits`.
pub fn recognize_integer(x: &Float, ctx: &PrecisionContext) -> Result<Integer> {
    if !x.is_finite() {
        return Err(Error::NotRecognized {
            residual_log2: f64::INFINITY,
            guard_bits: ctx.guard_bits,
        });
    }
    let n = x
        .to_integer_round(Round::Nearest)
        .map(|(n, _)| n)
        .expect("finite");
    let residual = Float::with_val(x.prec(), x - &n);
    check_residual(&residual, ctx)?;
    Ok(n)
}

/// Integer recognition for a complex value; the imaginary part must vanish
/// below the same threshold.
pub fn recognize_integer_complex(z: &Complex, ctx: &PrecisionContext) -> Result<Integer> {
    check_residual(z.imag(), ctx)?;
    recognize_integer(z.real(), ctx)
}

fn check_residual(residual: &Float, ctx: &PrecisionContext) -> Result<()> {
    let mut r = Float::with_val(residual.prec().max(64), residual.abs_ref());
    r <<= ctx.guard_bits;
    if r < 1 {
        Ok(())
    } else {
        Err(Error::NotRecognized {
            residual_log2: real_log2(residual),
            guard_bits: ctx.guard_bits,
        })
    }
}

/// First continued-fraction convergent `p/q` of `x` with `q <= max_den` and
/// `|x - p/q| < 2^-guard_bits`.
pub fn recognize_rational(x: &Float, max_den: u64, ctx: &PrecisionContext) -> Result<Rational> {
    let not_recognized = |res: f64| Error::NotRecognized {
        residual_log2: res,
        guard_bits: ctx.guard_bits,
    };
    if max_den == 0 {
        return Err(Error::InvalidInput("max_den must be positive".into()));
    }
    let exact = x
        .to_rational()
        .ok_or_else(|| not_recognized(f64::INFINITY))?;
    let max_den = Integer::from(max_den);

    // convergent recurrences seeded with h_{-1}/k_{-1} = 1/0 and h_{-2}/k_{-2} = 0/1
    let (mut h1, mut h2) = (Integer::from(1), Integer::from(0));
    let (mut k1, mut k2) = (Integer::from(0), Integer::from(1));
    let mut rest = exact.clone();
    let mut best_residual = f64::INFINITY;
    loop {
        let a = rest.clone().floor().into_numer_denom().0;
        let h = Integer::from(&a * &h1) + &h2;
        let k = Integer::from(&a * &k1) + &k2;
        if k > max_den {
            break;
        }
        h2 = std::mem::replace(&mut h1, h);
        k2 = std::mem::replace(&mut k1, k);
        let candidate = Rational::from((h1.clone(), k1.clone()));
        let residual = Float::with_val(x.prec().max(64), Rational::from(&exact - &candidate));
        best_residual = best_residual.min(real_log2(&residual));
        if check_residual(&residual, ctx).is_ok() {
            return Ok(candidate);
        }
        let frac = rest - Rational::from(a);
        if frac == 0 {
            break;
        }
        rest = frac.recip();
    }
    Err(not_recognized(best_residual))
}

/// Outcome of [`certify_integers`].
#[derive(Clone, Debug)]
pub struct Certified {
    pub integers: Vec<Integer>,
    pub values: Vec<Complex>,
    pub bits: u32,
}

/// Evaluate with [`stable_values`] and recognize every entry as a rational
/// integer, escalating precision until the error budget is decisively below
/// the recognition threshold. Precision-monotone: a failure is only reported
/// once the values are known to better than `2^-(guard_bits+1)`.
pub fn certify_integers<F>(eval: F, ctx: &PrecisionContext) -> Result<Certified>
where
    F: Fn(u32) -> Result<Vec<Complex>>,
{
    let mut c = *ctx;
    loop {
        let st = stable_values(&eval, &c)?;
        let decisive =
            (0..st.value.len()).all(|i| st.abs_error_log2(i) < -(f64::from(c.guard_bits) + 1.0));
        let recognized: Result<Vec<Integer>> = st
            .value
            .iter()
            .map(|z| recognize_integer_complex(z, &c))
            .collect();
        match recognized {
            Ok(integers) if decisive => {
                return Ok(Certified {
                    integers,
                    values: st.value,
                    bits: st.bits,
                })
            }
            Err(e) if decisive => return Err(e),
            _ => {}
        }
        if st.bits.saturating_mul(2) > c.max_bits {
            return Err(Error::PrecisionExhausted {
                max_bits: c.max_bits,
            });
        }
        c.working_bits = st.bits;
    }
}

/// Scalar form of [`certify_integers`].
pub fn certify_integer<F>(eval: F, ctx: &PrecisionContext) -> Result<(Integer, Stable<Complex>)>
where
    F: Fn(u32) -> Result<Complex>,
{
    let cert = certify_integers(|bits| eval(bits).map(|z| vec![z]), ctx)?;
    let n = cert.integers.into_iter().next().expect("one value");
    let v = cert.values.into_iter().next().expect("one value");
    Ok((
        n,
        Stable {
            value: v,
            bits: cert.bits,
            agreed_bits: cert.bits / 2 - ctx.guard_bits,
        },
    ))
}

/// Recognize every entry as a rational with denominator at most `max_den`.
///
/// A candidate is accepted only if it matches to within the certified error
/// of the stable evaluation, and precision is raised until that error is far
/// below `max_den⁻²·2^-guard_bits`, so spurious convergents are ruled out.
pub fn certify_rationals<F>(
    eval: F,
    max_den: u64,
    ctx: &PrecisionContext,
) -> Result<(Vec<Rational>, u32)>
where
    F: Fn(u32) -> Result<Vec<Complex>>,
{
    let den_bits = 64 - max_den.leading_zeros();
    let mut c = *ctx;
    loop {
        let st = stable_values(&eval, &c)?;
        let worst = (0..st.value.len())
            .map(|i| st.abs_error_log2(i))
            .fold(f64::NEG_INFINITY, f64::max);
        let need = f64::from(2 * den_bits + c.guard_bits);
        if -worst >= need {
            let strict = PrecisionContext {
                working_bits: st.bits,
                guard_bits: (-worst).floor() as u32 - 4,
                max_bits: c.max_bits,
            };
            let out = st
                .value
                .iter()
                .map(|z| {
                    check_residual(z.imag(), &strict)?;
                    recognize_rational(z.real(), max_den, &strict)
                })
                .collect::<Result<Vec<_>>>()?;
            return Ok((out, st.bits));
        }
        if st.bits.saturating_mul(2) > c.max_bits {
            return Err(Error::PrecisionExhausted {
                max_bits: c.max_bits,
            });
        }
        c.working_bits = st.bits;
    }
}

/// Decimal rendering with `digits` significant digits.
pub fn to_decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    x.to_string_radix(10, Some(digits))
}

/// Digits that are meaningful at a given binary precision.
pub fn decimal_digits(bits: u32) -> usize {
    ((f64::from(bits) * std::f64::consts::LOG10_2).floor() as usize).max(1)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, rug::float::Constant::Pi)
}

/// `exp(2*pi*i * phase)` for an exact rational phase (reduced mod 1 first).
pub fn unit_root(phase: &Rational, prec: u32) -> Complex {
    let mut frac = phase.clone();
    frac = frac.clone() - frac.floor();
    let mut angle = pi(prec + 8) * 2u32;
    angle *= &frac;
    let (s, c) = angle.sin_cos(Float::new(prec + 8));
    Complex::with_val(prec, (c, s))
}

pub fn cmp_abs(a: &Complex, b: &Complex) -> Ordering {
    abs(a).partial_cmp(&abs(b)).unwrap_or(Ordering::Equal)
}

/// `zᵉ` at the precision of `z`.
pub fn powu(z: &Complex, e: u32) -> Complex {
    use rug::ops::Pow;
    Complex::with_val(z.prec(), z).pow(e)
}

pub fn neg(mut z: Complex) -> Complex {
    z.neg_assign();
    z
}
