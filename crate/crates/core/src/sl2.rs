//! Integer and residue 2×2 matrices, and lifting `SL2(Z/N) -> SL2(Z)`.

use std::fmt;
use std::ops::Mul;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad_fields::gcd;

/// Integer matrix `(a b; c d)` with determinant 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Sl2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl Sl2 {
    pub const IDENTITY: Sl2 = Sl2 {
        a: 1,
        b: 0,
        c: 0,
        d: 1,
    };
    pub const S: Sl2 = Sl2 {
        a: 0,
        b: -1,
        c: 1,
        d: 0,
    };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        if a * d - b * c != 1 {
            return Err(Error::InvalidInput(format!(
                "({a}, {b}; {c}, {d}) has determinant {} != 1",
                a * d - b * c
            )));
        }
        Ok(Sl2 { a, b, c, d })
    }

    pub fn translation(k: i64) -> Sl2 {
        Sl2 {
            a: 1,
            b: k,
            c: 0,
            d: 1,
        }
    }

    pub fn inverse(&self) -> Sl2 {
        Sl2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn reduce(&self, n: i64) -> ModMatrix {
        ModMatrix::new(n, self.a, self.b, self.c, self.d)
    }

    /// Complete a coprime bottom row `(c, d)` to a matrix in `SL2(Z)`.
    pub fn complete_bottom_row(c: i64, d: i64) -> Option<Sl2> {
        let (g, x, y) = ext_gcd(d, c);
        // x d + y c = g
        if g != 1 {
            return None;
        }
        Some(Sl2 { a: x, b: -y, c, d })
    }
}

impl Mul for Sl2 {
    type Output = Sl2;
    fn mul(self, o: Sl2) -> Sl2 {
        Sl2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }
}

impl fmt::Display for Sl2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}; {}, {})", self.a, self.b, self.c, self.d)
    }
}

/// A 2×2 matrix with entries in `Z/NZ`, stored as residues in `[0, N)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModMatrix {
    pub n: i64,
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl ModMatrix {
    pub fn new(n: i64, a: i64, b: i64, c: i64, d: i64) -> Self {
        assert!(n >= 1, "modulus must be positive");
        ModMatrix {
            n,
            a: a.rem_euclid(n),
            b: b.rem_euclid(n),
            c: c.rem_euclid(n),
            d: d.rem_euclid(n),
        }
    }

    pub fn identity(n: i64) -> Self {
        ModMatrix::new(n, 1, 0, 0, 1)
    }

    pub fn det(&self) -> i64 {
        (self.a * self.d - self.b * self.c).rem_euclid(self.n)
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn scale_rows(&self, top: i64, bottom: i64) -> ModMatrix {
        ModMatrix::new(
            self.n,
            top * self.a,
            top * self.b,
            bottom * self.c,
            bottom * self.d,
        )
    }
}

impl Mul for ModMatrix {
    type Output = ModMatrix;
    fn mul(self, o: ModMatrix) -> ModMatrix {
        assert_eq!(self.n, o.n, "moduli differ");
        ModMatrix::new(
            self.n,
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// `(g, x, y)` with `a x + b y = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1i64, 0i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

pub fn mod_inverse(a: i64, n: i64) -> Option<i64> {
    if n == 1 {
        return Some(0);
    }
    let (g, x, _) = ext_gcd(a.rem_euclid(n), n);
    (g == 1).then(|| x.rem_euclid(n))
}

/// Representative of `x mod n` in `(-n/2, n/2]`.
pub fn symmetric_residue(x: i64, n: i64) -> i64 {
    let r = x.rem_euclid(n);
    if 2 * r > n {
        r - n
    } else {
        r
    }
}

/// Lift a matrix of determinant 1 mod N to `SL2(Z)`.
///
/// The bottom row is lifted first (symmetric residues, shifted by multiples
/// of N until coprime), then the top row is corrected along the bottom row.
/// Entries are bounded by roughly `N²` in absolute value.
pub fn lift_sl2(m: &ModMatrix) -> Result<Sl2> {
    let n = m.n;
    if m.det() != 1 % n {
        return Err(Error::NotUnimodular(m.entries(), n));
    }
    if n == 1 {
        return Ok(Sl2::IDENTITY);
    }
    let c0 = symmetric_residue(m.c, n);
    let d0 = symmetric_residue(m.d, n);
    let (c, d) = coprime_lift(c0, d0, n).ok_or(Error::NotUnimodular(m.entries(), n))?;
    let base = Sl2::complete_bottom_row(c, d).expect("coprime bottom row");
    let a = symmetric_residue(m.a, n);
    let b = symmetric_residue(m.b, n);
    // (a - a0, b - b0) is a multiple of (c, d) modulo n
    let t = symmetric_residue((b - base.b) * base.a - (a - base.a) * base.b, n);
    let lifted = Sl2 {
        a: base.a + t * c,
        b: base.b + t * d,
        c,
        d,
    };
    debug_assert_eq!(lifted.reduce(n), *m);
    Ok(lifted)
}

fn coprime_lift(c0: i64, d0: i64, n: i64) -> Option<(i64, i64)> {
    // small shifts first; the search terminates quickly because gcd(c, d, n) = 1
    for radius in 0..=(4 * n + 8) {
        for i in -radius..=radius {
            for k in [radius - i.abs(), -(radius - i.abs())] {
                let (c, d) = (c0 + i * n, d0 + k * n);
                if gcd(c, d) == 1 {
                    return Some((c, d));
                }
            }
        }
    }
    None
}
