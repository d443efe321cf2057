//! Principal moduli with rational Fourier coefficients: the eta quotients
//! `t_N = (η(τ)/η(Nτ))^{24/(N-1)}` for `Γ0(N)` and their Fricke-symmetrized
//! forms `s_N = t_N + N^{12/(N-1)}/t_N` for `Γ0(N)†`.

use std::fmt;
use std::str::FromStr;

use rug::{Complex, Integer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::modular::expansion::{euler_product, QSeries};
use crate::modular::qseries::{check_floor, internal_bits, pentagonal_product};
use crate::modular::{escalated_context, qseries, Tau};
use crate::numerics::{
    magnitude_log2, powu, stable_value, stable_values, PrecisionContext, Stable,
};

/// Levels where `X0(N)` has genus zero.
pub const GAMMA0_GENUS_ZERO: &[u64] = &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 13, 16, 18, 25];

/// Levels where `Γ0(N)†` has genus zero.
pub const GAMMA0_DAGGER_GENUS_ZERO: &[u64] = &[
    1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 23, 24, 25, 26, 27,
    29, 31, 32, 35, 36, 39, 41, 47, 49, 50, 59, 71,
];

/// Levels where `X1(N)` has genus zero.
pub const GAMMA1_GENUS_ZERO: &[u64] = &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12];

const GAMMA0_LEVELS: &[u64] = &[2, 3, 4, 5, 7, 9, 13, 25];
const GAMMA0_DAGGER_LEVELS: &[u64] = &[2, 3, 5, 7, 13];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Group {
    Gamma0,
    Gamma0Dagger,
}

impl Group {
    pub fn name(&self) -> &'static str {
        match self {
            Group::Gamma0 => "Gamma0",
            Group::Gamma0Dagger => "Gamma0Dagger",
        }
    }
}

/// A supported principal modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct HauptmodulSpec {
    pub group: Group,
    pub level: u64,
    /// `24/(N-1)`, the eta-quotient exponent.
    pub exponent: u32,
    /// `N^{12/(N-1)}` for `Γ0(N)†`, the constant in `t + c/t`.
    pub fricke_constant: Option<u64>,
}

impl HauptmodulSpec {
    pub fn new(group: Group, level: u64) -> Result<Self> {
        let levels = match group {
            Group::Gamma0 => GAMMA0_LEVELS,
            Group::Gamma0Dagger => GAMMA0_DAGGER_LEVELS,
        };
        if !levels.contains(&level) {
            return Err(Error::UnsupportedLevel {
                group: group.name(),
                level,
            });
        }
        let exponent = (24 / (level - 1)) as u32;
        let fricke_constant = match group {
            Group::Gamma0 => None,
            Group::Gamma0Dagger => Some(level.pow(exponent / 2)),
        };
        Ok(HauptmodulSpec {
            group,
            level,
            exponent,
            fricke_constant,
        })
    }

    pub fn t(level: u64) -> Result<Self> {
        HauptmodulSpec::new(Group::Gamma0, level)
    }

    pub fn s(level: u64) -> Result<Self> {
        HauptmodulSpec::new(Group::Gamma0Dagger, level)
    }

    /// `g(τ)` at a fixed precision.
    pub fn value_at(&self, tau: &Tau, bits: u32) -> Result<Complex> {
        match self.group {
            Group::Gamma0 => t_at(self.level, tau, bits),
            Group::Gamma0Dagger => s_at(self.level, tau, bits),
        }
    }

    pub fn eval(&self, tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<Complex>> {
        let c = escalated_context(tau, ctx)?;
        stable_value(|bits| self.value_at(tau, bits), &c)
    }

    /// Integer q-expansion from `q⁻¹` through `q^{terms - 2}`.
    pub fn q_expansion(&self, terms: usize) -> QSeries {
        let t = t_series(self.level, terms);
        match self.fricke_constant {
            None => t,
            Some(c) => {
                // c/t = c·q·(1 + ...)⁻¹ only contributes from q¹ on
                let mut inv = t.inverse().expect("leading coefficient 1");
                for x in inv.coeffs.iter_mut() {
                    *x *= c;
                }
                let mut out = t.clone();
                for (i, x) in out.coeffs.iter_mut().enumerate() {
                    if let Some(v) = inv.coeff(t.valuation + i as i64) {
                        *x += v;
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for HauptmodulSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.group {
            Group::Gamma0 => write!(f, "t{}", self.level),
            Group::Gamma0Dagger => write!(f, "s{}", self.level),
        }
    }
}

impl FromStr for HauptmodulSpec {
    type Err = Error;

    /// `"t5"` or `"s13"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidInput(format!(
                "unknown principal modulus {s:?}; expected t<N> or s<N>"
            ))
        };
        let (group, rest) = match s.get(..1) {
            Some("t") => (Group::Gamma0, &s[1..]),
            Some("s") => (Group::Gamma0Dagger, &s[1..]),
            _ => return Err(bad()),
        };
        let level = rest.parse().map_err(|_| bad())?;
        HauptmodulSpec::new(group, level)
    }
}

/// The supported table, `Γ0` levels first.
pub fn registry() -> Vec<HauptmodulSpec> {
    GAMMA0_LEVELS
        .iter()
        .map(|&n| HauptmodulSpec::t(n))
        .chain(GAMMA0_DAGGER_LEVELS.iter().map(|&n| HauptmodulSpec::s(n)))
        .collect::<Result<_>>()
        .expect("registry levels are supported")
}

/// `t_N(τ) = q⁻¹ (∏(1-qⁿ) / ∏(1-q^{Nn}))^{24/(N-1)}` at a fixed precision.
pub fn t_at(n: u64, tau: &Tau, bits: u32) -> Result<Complex> {
    let spec = HauptmodulSpec::t(n)?;
    let y = tau.imag_f64();
    check_floor(y, bits)?;
    let work = internal_bits(bits, y);
    let q = tau.q(work);
    let p1 = pentagonal_product(&q, y, work);
    let qn = tau.scaled(n).q(work);
    let pn = pentagonal_product(&qn, y * n as f64, work);
    let ratio = Complex::with_val(work, &p1 / &pn);
    let v = powu(&ratio, spec.exponent) / q;
    Ok(Complex::with_val(bits, v))
}

/// `s_N = t_N + N^{12/(N-1)}/t_N` at a fixed precision.
pub fn s_at(n: u64, tau: &Tau, bits: u32) -> Result<Complex> {
    let spec = HauptmodulSpec::s(n)?;
    let t = t_at(n, tau, bits + 16)?;
    if magnitude_log2(&t) < -f64::from(bits) {
        return Err(Error::DivisionByZero("t_N vanishes"));
    }
    let c = spec.fricke_constant.expect("Γ0(N)† constant");
    let inv = Complex::with_val(bits + 16, t.recip_ref()) * c;
    Ok(Complex::with_val(bits, t + inv))
}

pub fn eval_t(n: u64, tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<Complex>> {
    HauptmodulSpec::t(n)?.eval(tau, ctx)
}

pub fn eval_s(n: u64, tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<Complex>> {
    HauptmodulSpec::s(n)?.eval(tau, ctx)
}

/// `(j(τ)·j(Nτ), j(τ) + j(Nτ))`.
pub fn jn_pair(n: u64, tau: &Tau, ctx: &PrecisionContext) -> Result<Stable<(Complex, Complex)>> {
    if n == 0 {
        return Err(Error::InvalidInput("level must be positive".into()));
    }
    let scaled = tau.scaled(n);
    let st = stable_values(
        |bits| {
            let a = qseries::j(tau, bits)?;
            let b = qseries::j(&scaled, bits)?;
            Ok(vec![Complex::with_val(bits, &a * &b), a + b])
        },
        ctx,
    )?;
    let mut it = st.value.into_iter();
    let (p, s) = (it.next().expect("product"), it.next().expect("sum"));
    Ok(Stable {
        value: (p, s),
        bits: st.bits,
        agreed_bits: st.agreed_bits,
    })
}

/// Integer q-expansion of `t_N` from `q⁻¹`, `terms` coefficients.
pub fn t_series(n: u64, terms: usize) -> QSeries {
    let e = (24 / (n - 1)) as u32;
    let len = terms.max(1);
    let p = euler_product(len);
    let pn = p.substitute_power(n as usize, len);
    let mut t = p
        .mul(&pn.inverse().expect("unit leading coefficient"))
        .pow(e);
    t.valuation -= 1;
    t
}

/// Integer leading coefficient check used by the registry tests.
pub fn has_integer_leading_pole(s: &QSeries) -> bool {
    s.valuation == -1 && s.coeffs.first() == Some(&Integer::from(1))
}
