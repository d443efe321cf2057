//! Imaginary quadratic fields, their CM points and reduced binary quadratic
//! forms.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modular::Tau;

/// A negative discriminant `d ≡ 0, 1 (mod 4)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Discriminant {
    d: i64,
    fundamental: bool,
}

impl Discriminant {
    pub fn new(d: i64) -> Result<Self> {
        if d >= 0 || !matches!(d.rem_euclid(4), 0 | 1) {
            return Err(Error::BadDiscriminant(d));
        }
        Ok(Discriminant {
            d,
            fundamental: is_fundamental(d),
        })
    }

    /// Accept only fundamental discriminants.
    pub fn fundamental(d: i64) -> Result<Self> {
        let disc = Discriminant::new(d)?;
        if !disc.fundamental {
            return Err(Error::NotFundamental(d));
        }
        Ok(disc)
    }

    pub fn value(&self) -> i64 {
        self.d
    }

    pub fn is_fundamental(&self) -> bool {
        self.fundamental
    }
}

impl fmt::Display for Discriminant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.d)
    }
}

fn is_squarefree(n: u64) -> bool {
    let mut n = n;
    let mut p = 2u64;
    while p * p <= n {
        if n.is_multiple_of(p) {
            n /= p;
            if n.is_multiple_of(p) {
                return false;
            }
        }
        p += 1;
    }
    true
}

fn is_fundamental(d: i64) -> bool {
    let a = d.unsigned_abs();
    match d.rem_euclid(4) {
        1 => is_squarefree(a),
        0 => {
            let m = d / 4;
            matches!(m.rem_euclid(4), 2 | 3) && is_squarefree(m.unsigned_abs())
        }
        _ => false,
    }
}

/// The generator `θ_K = (d_K + √d_K)/2` of the ring of integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaPoint {
    pub d_k: i64,
    pub tau: Tau,
}

pub fn theta_point(d_k: i64) -> Result<ThetaPoint> {
    Discriminant::fundamental(d_k)?;
    Ok(ThetaPoint {
        d_k,
        tau: Tau::quadratic(1, -d_k, d_k)?,
    })
}

/// `(B_K, C_K)` with `X² + B_K X + C_K` the minimal polynomial of `θ_K`.
pub fn min_poly_coeffs(d_k: i64) -> Result<(i64, i64)> {
    Discriminant::fundamental(d_k)?;
    Ok((-d_k, (d_k * d_k - d_k) / 4))
}

/// Number of roots of unity in `O_K`.
pub fn unit_count(d_k: i64) -> u32 {
    match d_k {
        -4 => 4,
        -3 => 6,
        _ => 2,
    }
}

/// Integral binary quadratic form `a x² + b xy + c y²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QuadForm { a, b, c }
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    /// `|b| <= a <= c`, with `b >= 0` when `|b| = a` or `a = c`.
    pub fn is_reduced(&self) -> bool {
        let QuadForm { a, b, c } = *self;
        a > 0 && b.abs() <= a && a <= c && (b >= 0 || (b.abs() != a && a != c))
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd(self.a, self.b), self.c) == 1
    }

    /// The root `(-b + √D)/(2a)` in the upper half-plane.
    pub fn cm_point(&self) -> Result<Tau> {
        Tau::quadratic(self.a, self.b, self.discriminant())
    }
}

impl fmt::Display for QuadForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.a, self.b, self.c)
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// All reduced primitive forms of discriminant `d`, ordered by `a`, then
/// `|b|`, with `b > 0` before `-b`.
pub fn reduced_forms(d: i64) -> Result<Vec<QuadForm>> {
    Discriminant::new(d)?;
    let abs_d = d.unsigned_abs();
    let mut forms = Vec::new();
    let mut a: i64 = 1;
    while 3 * (a as u64) * (a as u64) <= abs_d {
        for b_abs in (0..=a).filter(|b| (b - d).rem_euclid(2) == 0) {
            let signs: &[i64] = if b_abs == 0 { &[0] } else { &[b_abs, -b_abs] };
            for &b in signs {
                let num = b * b - d;
                if num % (4 * a) != 0 {
                    continue;
                }
                let f = QuadForm::new(a, b, num / (4 * a));
                if f.is_reduced() && f.is_primitive() {
                    forms.push(f);
                }
            }
        }
        a += 1;
    }
    Ok(forms)
}

pub fn class_number(d: i64) -> Result<usize> {
    Ok(reduced_forms(d)?.len())
}

pub fn form_to_cm_point(f: &QuadForm) -> Result<Tau> {
    f.cm_point()
}
