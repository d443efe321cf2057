//! Certified polynomials from conjugate sets: Hilbert and ring class
//! polynomials, the ray class generators `j(θ_K) + pN²f^(k)_{(r1,r2)}(θ_K)`
//! with their minimal polynomials, and the checks tying principal moduli to
//! ring class fields.

use std::fmt;

use rayon::prelude::*;
use rug::{Complex, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hauptmodul::{Group, HauptmodulSpec};
use crate::modular::{fricke_at, qseries, FrickeIndex, Route};
use crate::numerics::{
    certify_integers, certify_rationals, magnitude_log2, recognize_integer_complex, stable_value,
    PrecisionContext, Stable,
};
use crate::quad_fields::{
    class_number, form_to_cm_point, reduced_forms, theta_point, unit_count, Discriminant,
};
use crate::reciprocity::{
    act_fricke_index, conjugate_point, galois_orbit_fricke, galois_orbit_function,
    galois_orbit_j_level,
};

/// Largest denominator accepted when a conjugate product is only rational.
pub const MAX_DENOMINATOR: u64 = 1 << 20;

/// A polynomial with exact coefficients in ascending degree. Coefficients are
/// integers for every class polynomial; ray class generators built from
/// `f^(2)` or `f^(3)` can have rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    pub coeffs: Vec<Rational>,
    pub monic: bool,
    /// Precision at which the coefficients were certified.
    pub bits: u32,
}

impl IntPolynomial {
    pub fn from_integers(coeffs: Vec<Integer>, bits: u32) -> Self {
        let monic = coeffs.last().is_some_and(|c| *c == 1);
        IntPolynomial {
            coeffs: coeffs.into_iter().map(Rational::from).collect(),
            monic,
            bits,
        }
    }

    pub fn from_rationals(coeffs: Vec<Rational>, bits: u32) -> Self {
        let monic = coeffs.last().is_some_and(|c| *c == 1);
        IntPolynomial {
            coeffs,
            monic,
            bits,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| *c.denom() == 1)
    }

    pub fn integer_coeffs(&self) -> Option<Vec<Integer>> {
        self.is_integral()
            .then(|| self.coeffs.iter().map(|c| c.numer().clone()).collect())
    }

    /// Coefficients as decimal strings, `p/q` for non-integers.
    pub fn coeff_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }

    pub fn eval(&self, z: &Complex) -> Complex {
        let prec = z.prec().0;
        let mut acc = Complex::new(prec);
        for c in self.coeffs.iter().rev() {
            acc *= z;
            acc += c;
        }
        acc
    }

    pub fn to_json(&self, disc: i64, level: Option<i64>) -> PolynomialJson {
        PolynomialJson {
            disc,
            level,
            coeffs: self.coeff_strings(),
            monic: self.monic,
            bits: self.bits,
        }
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if *c == 0 {
                continue;
            }
            let neg = *c < 0;
            let mag = Rational::from(c.abs_ref());
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { '-' } else { '+' })?;
            }
            first = false;
            let show_mag = i == 0 || mag != 1;
            match (i, show_mag) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "{mag}X")?,
                (1, false) => write!(f, "X")?,
                (_, true) => write!(f, "{mag}X^{i}")?,
                (_, false) => write!(f, "X^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Serialized form: `coeffs` ascending, constant term first, as decimal strings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolynomialJson {
    pub disc: i64,
    pub level: Option<i64>,
    pub coeffs: Vec<String>,
    pub monic: bool,
    pub bits: u32,
}

impl PolynomialJson {
    pub fn to_polynomial(&self) -> Result<IntPolynomial> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|s| {
                s.parse::<Rational>()
                    .map_err(|_| Error::InvalidInput(format!("bad coefficient {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IntPolynomial {
            coeffs,
            monic: self.monic,
            bits: self.bits,
        })
    }
}

/// Ascending coefficients of `∏(X - v)`.
pub fn expand_roots(values: &[Complex], bits: u32) -> Vec<Complex> {
    let mut poly = vec![Complex::with_val(bits, 1)];
    for v in values {
        let mut next = vec![Complex::new(bits); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= Complex::with_val(bits, c * v);
        }
        poly = next;
    }
    poly
}

/// `∏(X - v)` over roots produced at each precision, certified to have
/// integer coefficients.
pub fn integer_poly_from_roots<F>(roots: F, ctx: &PrecisionContext) -> Result<IntPolynomial>
where
    F: Fn(u32) -> Result<Vec<Complex>>,
{
    let cert = certify_integers(|bits| roots(bits).map(|r| expand_roots(&r, bits)), ctx)
        .map_err(recognition_failed)?;
    Ok(IntPolynomial::from_integers(cert.integers, cert.bits))
}

/// As [`integer_poly_from_roots`], falling back to rational coefficients with
/// denominators up to [`MAX_DENOMINATOR`].
pub fn rational_poly_from_roots<F>(roots: F, ctx: &PrecisionContext) -> Result<IntPolynomial>
where
    F: Fn(u32) -> Result<Vec<Complex>>,
{
    match certify_integers(|bits| roots(bits).map(|r| expand_roots(&r, bits)), ctx) {
        Ok(cert) => Ok(IntPolynomial::from_integers(cert.integers, cert.bits)),
        Err(Error::NotRecognized { .. }) => {
            let (coeffs, bits) = certify_rationals(
                |bits| roots(bits).map(|r| expand_roots(&r, bits)),
                MAX_DENOMINATOR,
                ctx,
            )
            .map_err(recognition_failed)?;
            Ok(IntPolynomial::from_rationals(coeffs, bits))
        }
        Err(e) => Err(e),
    }
}

fn recognition_failed(e: Error) -> Error {
    match e {
        Error::NotRecognized {
            residual_log2,
            guard_bits,
        } => Error::RecognitionFailed(format!(
            "coefficient residual 2^{residual_log2:.1} is not below 2^-{guard_bits}"
        )),
        other => other,
    }
}

/// `∏(X - j(τ_f))` over reduced primitive forms `f` of discriminant `d`.
pub fn class_poly_for_disc(d: i64, ctx: &PrecisionContext) -> Result<IntPolynomial> {
    let points = reduced_forms(d)?
        .iter()
        .map(form_to_cm_point)
        .collect::<Result<Vec<_>>>()?;
    integer_poly_from_roots(
        |bits| points.par_iter().map(|p| qseries::j(p, bits)).collect(),
        ctx,
    )
}

pub fn hilbert_class_poly(d_k: i64, ctx: &PrecisionContext) -> Result<IntPolynomial> {
    Discriminant::fundamental(d_k)?;
    class_poly_for_disc(d_k, ctx)
}

/// Ring class polynomial of the order of conductor `N`: forms of
/// discriminant `N²d_K`.
pub fn ring_class_poly(d_k: i64, n: i64, ctx: &PrecisionContext) -> Result<IntPolynomial> {
    Discriminant::fundamental(d_k)?;
    if n < 1 {
        return Err(Error::InvalidInput(format!(
            "conductor {n} must be positive"
        )));
    }
    let d = n
        .checked_mul(n)
        .and_then(|m| m.checked_mul(d_k))
        .ok_or_else(|| Error::InvalidInput("discriminant overflows".into()))?;
    class_poly_for_disc(d, ctx)
}

pub fn is_prime(p: u64) -> bool {
    p >= 2
        && (2..)
            .take_while(|d| d * d <= p)
            .all(|d| !p.is_multiple_of(d))
}

/// Smallest prime above `|d_K|`.
pub fn default_prime(d_k: i64) -> u64 {
    (d_k.unsigned_abs() + 1..)
        .find(|&p| is_prime(p))
        .expect("primes are unbounded")
}

/// Parameters of `j(θ_K) + pN²f^(k)_{(r1,r2)}(θ_K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GeneratorSpec {
    pub d_k: i64,
    pub index: FrickeIndex,
    pub p: u64,
    /// `|O_K^×|/2`.
    pub k: u8,
}

impl GeneratorSpec {
    pub fn new(d_k: i64, index: FrickeIndex, p: Option<u64>) -> Result<Self> {
        Discriminant::fundamental(d_k)?;
        let p = p.unwrap_or_else(|| default_prime(d_k));
        if !is_prime(p) || p <= d_k.unsigned_abs() {
            return Err(Error::InvalidInput(format!(
                "p = {p} must be a prime greater than |d_K| = {}",
                d_k.unsigned_abs()
            )));
        }
        Ok(GeneratorSpec {
            d_k,
            index,
            p,
            k: (unit_count(d_k) / 2) as u8,
        })
    }

    /// Modulus `N·O_K` with the default index `(0, 1/N)`.
    pub fn for_modulus(d_k: i64, n: i64, p: Option<u64>) -> Result<Self> {
        GeneratorSpec::new(d_k, FrickeIndex::default_for_modulus(n)?, p)
    }

    pub fn level(&self) -> i64 {
        self.index.level()
    }

    /// `pN²`.
    pub fn multiplier(&self) -> u64 {
        let n = self.level() as u64;
        self.p * n * n
    }
}

/// The Fricke route for `f^(k)` at `θ_K`: the lattice sums whenever `j(θ_K)`
/// is `0` or `1728` to within `2^-guard_bits`, where the series relations
/// degenerate.
pub fn route_at_theta(d_k: i64, ctx: &PrecisionContext) -> Result<Route> {
    let theta = theta_point(d_k)?.tau;
    let bits = ctx.working_bits + ctx.guard_bits;
    let j = qseries::j(&theta, bits)?;
    let j1728 = Complex::with_val(bits, &j - 1728u32);
    let floor = -f64::from(ctx.guard_bits);
    Ok(
        if magnitude_log2(&j) < floor || magnitude_log2(&j1728) < floor {
            Route::Weierstrass
        } else {
            Route::Series
        },
    )
}

fn generator_at(
    spec: &GeneratorSpec,
    index: &FrickeIndex,
    route: Route,
    bits: u32,
) -> Result<Complex> {
    let theta = theta_point(spec.d_k)?.tau;
    let j = qseries::j(&theta, bits + 16)?;
    let f = fricke_at(index, spec.k, &theta, route, bits + 16)?;
    let v = f * spec.multiplier() + j;
    Ok(Complex::with_val(bits, v))
}

pub fn main3_generator(spec: &GeneratorSpec, ctx: &PrecisionContext) -> Result<Stable<Complex>> {
    let route = route_at_theta(spec.d_k, ctx)?;
    stable_value(|bits| generator_at(spec, &spec.index, route, bits), ctx)
}

/// Minimal polynomial over `Q` of the generator, from its distinct
/// conjugates over `K` (`h_K = 1`).
pub fn main3_minpoly(spec: &GeneratorSpec, ctx: &PrecisionContext) -> Result<IntPolynomial> {
    let orbit = galois_orbit_fricke(&spec.index, spec.k, spec.d_k, ctx)?;
    let route = route_at_theta(spec.d_k, ctx)?;
    let indices = orbit
        .conjugates
        .iter()
        .map(|(a, _)| act_fricke_index(a, &spec.index))
        .collect::<Result<Vec<_>>>()?;
    rational_poly_from_roots(
        |bits| {
            indices
                .par_iter()
                .map(|x| generator_at(spec, x, route, bits))
                .collect()
        },
        ctx,
    )
}

/// Monic `∏(X - v)` over a full conjugate set given at fixed precision, with
/// every coefficient recognized as an integer.
pub fn integrality_certificate(
    values: &[Complex],
    ctx: &PrecisionContext,
) -> Result<IntPolynomial> {
    let bits = values
        .iter()
        .map(|v| v.prec().0)
        .min()
        .unwrap_or(ctx.working_bits);
    let coeffs = expand_roots(values, bits)
        .iter()
        .map(|c| recognize_integer_complex(c, ctx))
        .collect::<Result<Vec<_>>>()
        .map_err(recognition_failed)?;
    Ok(IntPolynomial::from_integers(coeffs, bits))
}

#[derive(Clone, Debug, Serialize)]
pub struct Main2Report {
    pub function: String,
    pub d_k: i64,
    pub level: u64,
    pub expected_degree: usize,
    pub conjugate_count: usize,
    pub coset_count: usize,
    #[serde(serialize_with = "serialize_poly")]
    pub polynomial: IntPolynomial,
    pub value_imag_log2: f64,
    pub real: bool,
}

fn serialize_poly<S: serde::Serializer>(
    p: &IntPolynomial,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    p.coeff_strings().serialize(s)
}

/// `K(g(θ_K))` is the ring class field of conductor `N`: the conjugate count
/// of `g(θ_K)` is `h(N²d_K)`, the conjugate product has integer
/// coefficients, and `g(θ_K)` is real.
pub fn verify_main2(g: &HauptmodulSpec, d_k: i64, ctx: &PrecisionContext) -> Result<Main2Report> {
    let n = g.level as i64;
    let h_order = class_number(n * n * d_k)?;
    let h_k = class_number(d_k)?;
    if g.group == Group::Gamma0Dagger && h_order <= h_k {
        return Err(Error::HypothesisFailed(format!(
            "{g} needs h({}) > h({d_k}), got {h_order} and {h_k}",
            n * n * d_k
        )));
    }
    let orbit = galois_orbit_function(g, d_k, ctx)?;
    let theta = theta_point(d_k)?.tau;
    let points = orbit
        .conjugates
        .iter()
        .map(|(a, _)| conjugate_point(a, &theta))
        .collect::<Result<Vec<_>>>()?;
    let polynomial = integer_poly_from_roots(
        |bits| points.par_iter().map(|p| g.value_at(p, bits)).collect(),
        ctx,
    )?;
    let value = g.eval(&theta, ctx)?.value;
    let value_imag_log2 = magnitude_log2(&Complex::with_val(value.prec().0, value.imag()));
    let real = value_imag_log2 < -f64::from(ctx.agreement_bits());
    let report = Main2Report {
        function: g.to_string(),
        d_k,
        level: g.level,
        expected_degree: h_order,
        conjugate_count: orbit.len(),
        coset_count: orbit.coset_count,
        polynomial,
        value_imag_log2,
        real,
    };
    if report.conjugate_count != h_order || report.polynomial.degree() != h_order || !real {
        return Err(Error::VerificationFailed(format!(
            "{g} at d_K = {d_k}: {} conjugates, degree {}, h = {h_order}, Im 2^{value_imag_log2:.1}",
            report.conjugate_count,
            report.polynomial.degree()
        )));
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct RingLemmaReport {
    pub d_k: i64,
    pub level: i64,
    pub conjugates_of_b: usize,
    pub distinct_pairs: usize,
    pub class_number_order: usize,
    /// `log2` of the smallest `|b^σ - b|` over nontrivial `σ`.
    pub min_separation_log2: f64,
    /// `log2` of the smallest `|a - b^σ|` over all `σ`.
    pub min_a_minus_b_log2: f64,
}

/// With `a = j(θ_K)` and `b = j(Nθ_K)`, the only conjugation fixing both
/// `ab` and `a + b` is the identity, so `K(ab, a + b)` is the ring class field.
pub fn verify_ringclasslemma(d_k: i64, n: i64, ctx: &PrecisionContext) -> Result<RingLemmaReport> {
    let h_order = class_number(n * n * d_k)?;
    let h_k = class_number(d_k)?;
    if h_order <= h_k {
        return Err(Error::HypothesisFailed(format!(
            "needs h({}) > h({d_k}), got {h_order} and {h_k}",
            n * n * d_k
        )));
    }
    let orbit = galois_orbit_j_level(n, d_k, ctx)?;
    let bits = orbit.bits;
    let theta = theta_point(d_k)?.tau;
    let a = qseries::j(&theta, bits)?;
    let b = qseries::j(&theta.scaled(n as u64), bits)?;
    let pair = |x: &Complex| {
        (
            Complex::with_val(bits, &a * x),
            Complex::with_val(bits, &a + x),
        )
    };
    let (ab, apb) = pair(&b);
    let dedup = ctx.working_bits / 2;
    let mut pairs: Vec<(Complex, Complex)> = Vec::new();
    let mut min_sep = f64::INFINITY;
    let mut min_ab = f64::INFINITY;
    for bs in orbit.values() {
        let p = pair(&bs);
        if !pairs.iter().any(|(x, y)| {
            crate::numerics::agree(x, &p.0, dedup) && crate::numerics::agree(y, &p.1, dedup)
        }) {
            pairs.push(p.clone());
        }
        let sep = magnitude_log2(&Complex::with_val(bits, &bs - &b));
        let fixes_pair =
            crate::numerics::agree(&p.0, &ab, dedup) && crate::numerics::agree(&p.1, &apb, dedup);
        if !fixes_pair {
            min_sep = min_sep.min(sep);
        }
        min_ab = min_ab.min(magnitude_log2(&Complex::with_val(bits, &a - &bs)));
    }
    let report = RingLemmaReport {
        d_k,
        level: n,
        conjugates_of_b: orbit.len(),
        distinct_pairs: pairs.len(),
        class_number_order: h_order,
        min_separation_log2: min_sep,
        min_a_minus_b_log2: min_ab,
    };
    let floor = -f64::from(dedup);
    if report.conjugates_of_b != h_order || report.distinct_pairs != h_order || min_ab < floor {
        return Err(Error::VerificationFailed(format!(
            "d_K = {d_k}, N = {n}: {} conjugates, {} distinct pairs, h = {h_order}, min |a - b^σ| = 2^{min_ab:.1}",
            report.conjugates_of_b, report.distinct_pairs
        )));
    }
    Ok(report)
}
