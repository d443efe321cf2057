//! Modular functions at arbitrary precision: `η`, `j`, `g2`, `g3`, `℘` and
//! the Fricke functions `f^(k)_{(r1,r2)}`, each by a q-series route and an
//! independent lattice-sum route.

pub mod expansion;
pub mod lattice;
pub mod qseries;
mod tau;

use std::fmt;
use std::str::FromStr;

use rug::{Complex, Integer, Rational};
use serde::Serialize;

pub use tau::Tau;

use crate::error::{Error, Result};
use crate::numerics::{
    magnitude_log2, powu, relative_residual, stable_value, stable_values, PrecisionContext, Stable,
};
use crate::sl2::{ModMatrix, Sl2};

/// Below this `Im τ` level-N series are escalated in proportion to `1/Im τ`.
pub const IM_FLOOR: f64 = 0.05;

/// `(r1, r2) ∈ Q² - Z²` modulo `Z²` and `±1`, stored as numerators over the
/// least common denominator. The canonical representative has
/// `0 <= r1, r2 < 1` and is the lexicographically smaller of `(r1, r2)` and
/// `(⟨-r1⟩, ⟨-r2⟩)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FrickeIndex {
    n1: i64,
    n2: i64,
    den: i64,
}

impl FrickeIndex {
    pub fn from_numerators(n1: i64, n2: i64, den: i64) -> Result<Self> {
        if den < 1 {
            return Err(Error::InvalidInput(format!(
                "denominator {den} must be positive"
            )));
        }
        let (a, b) = (n1.rem_euclid(den), n2.rem_euclid(den));
        if a == 0 && b == 0 {
            return Err(Error::InvalidInput(format!(
                "index ({n1}/{den}, {n2}/{den}) lies in Z²"
            )));
        }
        let neg = ((-a).rem_euclid(den), (-b).rem_euclid(den));
        let (a, b) = (a, b).min(neg);
        let g = crate::quad_fields::gcd(crate::quad_fields::gcd(a, b), den);
        Ok(FrickeIndex {
            n1: a / g,
            n2: b / g,
            den: den / g,
        })
    }

    pub fn new(r1: &Rational, r2: &Rational) -> Result<Self> {
        let den = Integer::from(r1.denom().lcm_ref(r2.denom()));
        let den_i = den
            .to_i64()
            .ok_or_else(|| Error::InvalidInput("denominator too large".into()))?;
        let scale = |r: &Rational| {
            (r.numer() * Integer::from(&den / r.denom()))
                .to_i64()
                .ok_or_else(|| Error::InvalidInput("numerator too large".into()))
        };
        FrickeIndex::from_numerators(scale(r1)?, scale(r2)?, den_i)
    }

    /// Parse `"r1,r2"` where each part is an integer or `num/den`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidInput(format!(
                "cannot parse index {s:?}; expected \"r1,r2\" like \"0,1/2\""
            ))
        };
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let r1 = Rational::from_str(a.trim()).map_err(|_| bad())?;
        let r2 = Rational::from_str(b.trim()).map_err(|_| bad())?;
        FrickeIndex::new(&r1, &r2)
    }

    /// `(0, 1/N)`, the index attached to `z = 1/N`.
    pub fn default_for_modulus(n: i64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "modulus {n} must be at least 2"
            )));
        }
        FrickeIndex::from_numerators(0, 1, n)
    }

    pub fn r1(&self) -> Rational {
        Rational::from((self.n1, self.den))
    }

    pub fn r2(&self) -> Rational {
        Rational::from((self.n2, self.den))
    }

    /// Least common denominator `N` of `r1` and `r2`.
    pub fn level(&self) -> i64 {
        self.den
    }

    pub fn numerators(&self) -> (i64, i64) {
        (self.n1, self.n2)
    }

    /// Row-vector action `(r1, r2)·m` for a matrix modulo a multiple of the
    /// denominator.
    pub fn act(&self, m: &ModMatrix) -> Result<Self> {
        if m.n % self.den != 0 {
            return Err(Error::InvalidInput(format!(
                "index denominator {} does not divide the level {}",
                self.den, m.n
            )));
        }
        let s = m.n / self.den;
        let (a, b) = (self.n1 * s, self.n2 * s);
        FrickeIndex::from_numerators(a * m.a + b * m.c, a * m.b + b * m.d, m.n)
    }

    pub fn act_sl2(&self, g: &Sl2) -> Self {
        FrickeIndex::from_numerators(
            self.n1 * g.a + self.n2 * g.c,
            self.n1 * g.b + self.n2 * g.d,
            self.den,
        )
        .expect("SL2(Z) preserves Q² - Z²")
    }
}

impl fmt::Display for FrickeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.r1(), self.r2())
    }
}

impl Serialize for FrickeIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl FromStr for FrickeIndex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FrickeIndex::parse(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// q-expansions; `k = 2, 3` through the relations with `f^(1)` and `j`.
    Series,
    /// Lattice sums for `g2`, `g3`, `℘`.
    Weierstrass,
}

impl FromStr for Route {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "series" => Ok(Route::Series),
            "weierstrass" | "lattice" => Ok(Route::Weierstrass),
            _ => Err(Error::InvalidInput(format!("unknown route {s:?}"))),
        }
    }
}

pub fn check_k(k: u8) -> Result<()> {
    if (1..=3).contains(&k) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "Fricke index k = {k} must be 1, 2 or 3"
        )))
    }
}

/// Extra bits for level-N series below [`IM_FLOOR`]; fails once the
/// escalated precision would exceed the cap.
pub(crate) fn escalated_context(tau: &Tau, ctx: &PrecisionContext) -> Result<PrecisionContext> {
    let y = tau.imag_f64();
    if y >= IM_FLOOR {
        return Ok(*ctx);
    }
    let extra = (1.0 / y).ceil() as u32;
    let wanted = ctx.working_bits + extra;
    if wanted.saturating_mul(2) > ctx.max_bits || y < qseries::HARD_IM_FLOOR {
        return Err(Error::PrecisionExhausted {
            max_bits: ctx.max_bits,
        });
    }
    ctx.with_working_bits(wanted)
}

/// `f^(k)` at a fixed precision by the requested route.
pub fn fricke_at(x: &FrickeIndex, k: u8, tau: &Tau, route: Route, bits: u32) -> Result<Complex> {
    check_k(k)?;
    match route {
        Route::Weierstrass => lattice::fricke(x, k, tau, bits),
        Route::Series => {
            let f = qseries::fricke_k1(x, tau, bits + 16)?;
            if k == 1 {
                return Ok(Complex::with_val(bits, f));
            }
            let j = qseries::j(tau, bits + 16)?;
            fricke_from_relation(&f, &j, k, bits)
        }
    }
}

/// `f^(2) = f²/(2⁸3⁴(j - 1728))`, `f^(3) = -f³/(2⁹3⁶ j (j - 1728))`.
pub fn fricke_from_relation(f: &Complex, j: &Complex, k: u8, bits: u32) -> Result<Complex> {
    let work = bits + 16;
    let j_minus = Complex::with_val(work, j - 1728u32);
    // singular when j or j - 1728 vanishes to well below the working precision
    let floor = -(f64::from(bits) / 2.0);
    if magnitude_log2(&j_minus) < floor || (k == 3 && magnitude_log2(j) < floor) {
        return Err(Error::SingularRelation);
    }
    let v = match k {
        1 => Complex::with_val(work, f),
        2 => {
            let f2 = Complex::with_val(work, f.square_ref());
            f2 / (j_minus * 20736u32)
        }
        3 => {
            let f3 = Complex::with_val(work, powu(f, 3));
            let den = Complex::with_val(work, j * &j_minus) * 373248u32;
            -(f3 / den)
        }
        _ => return Err(Error::InvalidInput(format!("k = {k}"))),
    };
    Ok(Complex::with_val(bits, v))
}

/// Series route unless the relation is singular, then the lattice route.
pub fn fricke_auto_at(x: &FrickeIndex, k: u8, tau: &Tau, bits: u32) -> Result<Complex> {
    match fricke_at(x, k, tau, Route::Series, bits) {
        Err(Error::SingularRelation) => fricke_at(x, k, tau, Route::Weierstrass, bits),
        other => other,
    }
}

/// `f^(k)_x(τ)` evaluated at the reduced point: with `γτ` in the fundamental
/// domain, `f_x(τ) = f_{xγ⁻¹}(γτ)`.
pub fn fricke_reduced_at(x: &FrickeIndex, k: u8, tau: &Tau, bits: u32) -> Result<Complex> {
    let (reduced, g) = tau.reduce_to_fundamental_domain();
    fricke_auto_at(&x.act_sl2(&g.inverse()), k, &reduced, bits)
}

pub fn eval_eta(tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<Complex>> {
    let c = escalated_context(tau, ctx)?;
    stable_value(|bits| qseries::eta(tau, bits), &c)
}

pub fn eval_j(tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<Complex>> {
    stable_value(|bits| qseries::j(tau, bits), ctx)
}

/// `j` by lattice sums, the oracle for [`eval_j`].
pub fn eval_j_lattice(tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<Complex>> {
    stable_value(|bits| lattice::j(tau, bits), ctx)
}

pub fn eval_g2_g3_lattice(tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<(Complex, Complex)>> {
    let c = escalated_context(tau, ctx)?;
    let st = stable_values(
        |bits| lattice::g2_g3(tau, bits).map(|(a, b)| vec![a, b]),
        &c,
    )?;
    let mut it = st.value.into_iter();
    let (g2, g3) = (it.next().expect("g2"), it.next().expect("g3"));
    Ok(Stable {
        value: (g2, g3),
        bits: st.bits,
        agreed_bits: st.agreed_bits,
    })
}

pub fn eval_wp_lattice(
    x: &FrickeIndex,
    tau: &Tau,
    ctx: &PrecisionContext,
) -> Result<Stable<Complex>> {
    let c = escalated_context(tau, ctx)?;
    stable_value(|bits| lattice::wp(x, tau, bits), &c)
}

pub fn eval_fricke(
    x: &FrickeIndex,
    k: u8,
    tau: &Tau,
    ctx: &PrecisionContext,
    route: Route,
) -> Result<Stable<Complex>> {
    check_k(k)?;
    let c = escalated_context(tau, ctx)?;
    stable_value(|bits| fricke_at(x, k, tau, route, bits), &c)
}

/// Relative residual of `f_{(r1,r2)}(γτ) = f_{(r1,r2)γ}(τ)`, both sides by the
/// series route at `working_bits + guard_bits`.
pub fn fricke_transform_check(
    x: &FrickeIndex,
    gamma: &Sl2,
    tau: &Tau,
    ctx: &PrecisionContext,
) -> Result<f64> {
    let moved = tau.apply(gamma);
    let c = escalated_context(&moved, ctx)?;
    let bits = c.working_bits + c.guard_bits;
    let lhs = fricke_at(x, 1, &moved, Route::Series, bits)?;
    let rhs = fricke_at(&x.act_sl2(gamma), 1, tau, Route::Series, bits)?;
    Ok(relative_residual(&lhs, &rhs))
}

/// `j(γτ) = j(τ)` residual, used by the invariance suite.
pub fn j_invariance_residual(gamma: &Sl2, tau: &Tau, ctx: &PrecisionContext) -> Result<f64> {
    let bits = ctx.working_bits + ctx.guard_bits;
    let a = qseries::j(&tau.apply(gamma), bits)?;
    let b = qseries::j(tau, bits)?;
    Ok(relative_residual(&a, &b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{agree, recognize_rational};

    fn idx(s: &str) -> FrickeIndex {
        FrickeIndex::parse(s).unwrap()
    }

    #[test]
    fn canonical_index() {
        assert_eq!(idx("0,1/2").numerators(), (0, 1));
        assert_eq!(idx("0,1/2").level(), 2);
        // ±(2/5, 3/5): (3/5, 2/5) is the negative, lexicographically larger
        assert_eq!(idx("3/5,2/5"), idx("2/5,3/5"));
        assert_eq!(idx("-1/3,0"), idx("1/3,0"));
        assert_eq!(idx("4/3,-2/3"), idx("1/3,1/3"));
        assert_eq!(idx("2/4,0").level(), 2);
        assert!(FrickeIndex::parse("1,2").is_err());
        assert!(FrickeIndex::parse("1/2").is_err());
    }

    #[test]
    fn row_action() {
        let x = idx("0,1/5");
        let m = ModMatrix::new(5, 2, 0, 0, 2);
        assert_eq!(x.act(&m).unwrap(), idx("0,2/5"));
        assert_eq!(x.act(&ModMatrix::identity(5)).unwrap(), x);
        assert_eq!(x.act(&ModMatrix::new(5, -1, 0, 0, -1)).unwrap(), x);
        let t = Sl2::translation(1);
        assert_eq!(idx("1/3,1/3").act_sl2(&t), idx("1/3,2/3"));
    }

    #[test]
    fn fricke_k1_vanishes_at_i_for_half_index() {
        let v = fricke_at(&idx("1/2,0"), 1, &Tau::i(), Route::Weierstrass, 128).unwrap();
        assert!(magnitude_log2(&v) < -90.0);
        let v = fricke_at(&idx("1/2,0"), 1, &Tau::i(), Route::Series, 128).unwrap();
        assert!(magnitude_log2(&v) < -90.0);
    }

    #[test]
    fn fricke_k2_quarter_at_i() {
        let ctx = PrecisionContext::default();
        let st = eval_fricke(&idx("0,1/2"), 2, &Tau::i(), &ctx, Route::Weierstrass).unwrap();
        let r = recognize_rational(st.value.real(), 100, &ctx).unwrap();
        assert_eq!(r, Rational::from((1, 4)));
    }

    #[test]
    fn series_relation_is_singular_at_i() {
        assert_eq!(
            fricke_at(&idx("0,1/2"), 2, &Tau::i(), Route::Series, 128),
            Err(Error::SingularRelation)
        );
        let v = fricke_auto_at(&idx("0,1/2"), 2, &Tau::i(), 128).unwrap();
        assert!(agree(&v, &Complex::with_val(128, 0.25), 100));
    }

    #[test]
    fn routes_agree_at_2i() {
        let t = Tau::i().scaled(2);
        let x = idx("0,1/2");
        let a = fricke_at(&x, 1, &t, Route::Series, 160).unwrap();
        let b = fricke_at(&x, 1, &t, Route::Weierstrass, 160).unwrap();
        assert!(agree(&a, &b, 130));
    }

    #[test]
    fn transform_examples() {
        let ctx = PrecisionContext::default();
        let t2 = Tau::i().scaled(2);
        let th = ctx.residual_threshold();
        let r = fricke_transform_check(&idx("1/2,0"), &Sl2::IDENTITY, &t2, &ctx).unwrap();
        assert!(r < th);
        let r = fricke_transform_check(&idx("1/2,0"), &Sl2::S, &t2, &ctx).unwrap();
        assert!(r < th, "residual {r}");
        let x = idx("1/3,1/5");
        let r = fricke_transform_check(&x, &Sl2::translation(1), &t2, &ctx).unwrap();
        assert!(r < th, "residual {r}");
    }

    #[test]
    fn reduced_evaluation_matches_direct() {
        let t = Tau::from_f64(0.31, 0.12).unwrap();
        let x = idx("1/7,3/7");
        let a = fricke_reduced_at(&x, 1, &t, 128).unwrap();
        let b = fricke_at(&x, 1, &t, Route::Weierstrass, 128).unwrap();
        assert!(agree(&a, &b, 100));
    }

    #[test]
    fn k_out_of_range() {
        assert!(fricke_at(&idx("0,1/2"), 4, &Tau::i(), Route::Series, 128).is_err());
    }
}
