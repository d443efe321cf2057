use std::fmt;

use rug::{Complex, Float, Integer, Rational};

use crate::error::{Error, Result};
use crate::numerics::{pi, unit_root};
use crate::sl2::Sl2;

/// A point of the upper half-plane held exactly as `(u + v·i√m)/w`.
///
/// CM points use `m = |D|`; points given by rational coordinates use `m = 1`.
/// Möbius transformations by integer matrices preserve this shape, so every
/// point reached by the reciprocity machinery stays exact, and `q = e^{2πiτ}`
/// is computed from an exact rational phase.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Tau {
    u: Integer,
    v: Integer,
    w: Integer,
    m: Integer,
}

impl Tau {
    fn from_parts(u: Integer, v: Integer, w: Integer, m: Integer) -> Tau {
        debug_assert!(v > 0 && w > 0 && m > 0);
        let g = Integer::from(u.gcd_ref(&v)).gcd(&w);
        if g == 1 {
            Tau { u, v, w, m }
        } else {
            Tau {
                u: u / &g,
                v: v / &g,
                w: w / &g,
                m,
            }
        }
    }

    /// The root `(-b + √disc)/(2a)` of `a X² + b X + c` lying in the upper
    /// half-plane.
    pub fn quadratic(a: i64, b: i64, disc: i64) -> Result<Tau> {
        if a <= 0 || disc >= 0 {
            return Err(Error::InvalidInput(format!(
                "quadratic point needs a > 0 and D < 0, got a = {a}, D = {disc}"
            )));
        }
        Ok(Tau::from_parts(
            Integer::from(-b),
            Integer::from(1),
            Integer::from(2 * a),
            Integer::from(disc.unsigned_abs()),
        ))
    }

    pub fn from_rationals(re: &Rational, im: &Rational) -> Result<Tau> {
        if *im <= 0 {
            return Err(Error::InvalidInput("Im(τ) must be positive".into()));
        }
        let w = Integer::from(re.denom().lcm_ref(im.denom()));
        let u = re.numer() * Integer::from(&w / re.denom());
        let v = im.numer() * Integer::from(&w / im.denom());
        Ok(Tau::from_parts(u, v, w, Integer::from(1)))
    }

    pub fn from_f64(re: f64, im: f64) -> Result<Tau> {
        let re =
            Rational::from_f64(re).ok_or_else(|| Error::InvalidInput("Re(τ) not finite".into()))?;
        let im =
            Rational::from_f64(im).ok_or_else(|| Error::InvalidInput("Im(τ) not finite".into()))?;
        Tau::from_rationals(&re, &im)
    }

    /// `i`, the lemniscatic point.
    pub fn i() -> Tau {
        Tau::from_parts(0.into(), 1.into(), 1.into(), 1.into())
    }

    pub fn value(&self, prec: u32) -> Complex {
        let re = Float::with_val(prec, Rational::from((&self.u, &self.w)));
        Complex::with_val(prec, (re, self.imag(prec)))
    }

    pub fn imag(&self, prec: u32) -> Float {
        let mut im = Float::with_val(prec, &self.m).sqrt();
        im *= &self.v;
        im /= &self.w;
        im
    }

    pub fn imag_f64(&self) -> f64 {
        self.imag(64).to_f64()
    }

    pub fn real_rational(&self) -> Rational {
        Rational::from((self.u.clone(), self.w.clone()))
    }

    /// `γτ = (aτ + b)/(cτ + d)`, exactly.
    pub fn apply(&self, g: &Sl2) -> Tau {
        let (a, b, c, d) = (
            Integer::from(g.a),
            Integer::from(g.b),
            Integer::from(g.c),
            Integer::from(g.d),
        );
        let v2m = Integer::from(self.v.square_ref()) * &self.m;
        let num_re = Integer::from(&a * &self.u) + Integer::from(&b * &self.w);
        let den_re = Integer::from(&c * &self.u) + Integer::from(&d * &self.w);
        let u = Integer::from(&num_re * &den_re) + Integer::from(&a * &c) * &v2m;
        let v = Integer::from(&self.v * &self.w);
        let w = Integer::from(den_re.square_ref()) + Integer::from(c.square_ref()) * &v2m;
        Tau::from_parts(u, v, w, self.m.clone())
    }

    /// `n·τ` for a positive integer `n`.
    pub fn scaled(&self, n: u64) -> Tau {
        Tau::from_parts(
            Integer::from(&self.u * n),
            Integer::from(&self.v * n),
            self.w.clone(),
            self.m.clone(),
        )
    }

    /// `-1/(Nτ)`, exactly.
    pub fn fricke_involution(&self, n: u64) -> Tau {
        let norm =
            Integer::from(self.u.square_ref()) + Integer::from(self.v.square_ref()) * &self.m;
        Tau::from_parts(
            -Integer::from(&self.u * &self.w),
            Integer::from(&self.v * &self.w),
            norm * n,
            self.m.clone(),
        )
    }

    /// `|τ|² < 1`, decided exactly.
    fn inside_unit_circle(&self) -> bool {
        let norm =
            Integer::from(self.u.square_ref()) + Integer::from(self.v.square_ref()) * &self.m;
        norm < Integer::from(self.w.square_ref())
    }

    /// Map into the standard fundamental domain `|Re τ| <= 1/2, |τ| >= 1`.
    /// Returns the reduced point and the matrix `γ` with `γ·τ` = reduced.
    pub fn reduce_to_fundamental_domain(&self) -> (Tau, Sl2) {
        let mut t = self.clone();
        let mut g = Sl2::IDENTITY;
        loop {
            let shift = t.real_rational().round();
            let k = shift.numer().to_i64().expect("translation fits i64");
            if k != 0 {
                let tr = Sl2::translation(-k);
                t = t.apply(&tr);
                g = tr * g;
            }
            if t.inside_unit_circle() {
                t = t.apply(&Sl2::S);
                g = Sl2::S * g;
            } else {
                return (t, g);
            }
        }
    }

    /// `e^{2πi·r·τ}` for rational `r`, from an exact phase.
    pub fn q_power(&self, r: &Rational, prec: u32) -> Complex {
        self.q_power_shifted(r, &Rational::new(), prec)
    }

    /// `e^{2πi(r·τ + s)}` for rationals `r`, `s`.
    pub fn q_power_shifted(&self, r: &Rational, s: &Rational, prec: u32) -> Complex {
        let work = prec + 16;
        let phase = Rational::from(r * &self.real_rational()) + s;
        let mut modulus = pi(work) * 2u32;
        modulus *= self.imag(work);
        modulus *= r;
        modulus = -modulus;
        modulus = modulus.exp();
        let mut z = unit_root(&phase, work);
        z *= &modulus;
        Complex::with_val(prec, z)
    }

    pub fn q(&self, prec: u32) -> Complex {
        self.q_power(&Rational::from(1), prec)
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m == 1 {
            write!(f, "({} + {}i)/{}", self.u, self.v, self.w)
        } else {
            write!(f, "({} + {}·√-{})/{}", self.u, self.v, self.m, self.w)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::agree;

    fn mobius(g: &Sl2, z: &Complex) -> Complex {
        let prec = z.prec().0;
        let num = Complex::with_val(prec, z * g.a) + g.b;
        let den = Complex::with_val(prec, z * g.c) + g.d;
        Complex::with_val(prec, num / den)
    }

    #[test]
    fn exact_action_matches_float_action() {
        let t = Tau::quadratic(2, 1, -23).unwrap();
        for g in [
            Sl2::S,
            Sl2::translation(3),
            Sl2::new(2, 1, 5, 3).unwrap(),
            Sl2::new(-7, 2, 10, -3).unwrap(),
        ] {
            let exact = t.apply(&g).value(200);
            let float = mobius(&g, &t.value(256));
            assert!(agree(&exact, &float, 180), "{g}");
        }
    }

    #[test]
    fn fundamental_domain_reduction() {
        let t = Tau::from_f64(0.37, 0.01).unwrap();
        let (r, g) = t.reduce_to_fundamental_domain();
        let x = r.real_rational();
        assert!(x.clone().abs() <= Rational::from((1, 2)));
        assert!(!r.inside_unit_circle());
        assert_eq!(t.apply(&g), r);
    }

    #[test]
    fn fricke_involution_is_an_involution() {
        let t = Tau::quadratic(2, 1, -23).unwrap();
        let f = t.fricke_involution(5);
        let z = t.value(128);
        let expect = Complex::with_val(128, z * 5u32).recip() * -1i32;
        assert!(agree(&f.value(128), &expect, 120));
        assert_eq!(f.fricke_involution(5), t);
        assert_eq!(Tau::i().fricke_involution(1), Tau::i());
    }

    #[test]
    fn q_of_i() {
        let q = Tau::i().q(128);
        let expect = (-pi(128) * 2u32).exp();
        assert!(agree(&q, &Complex::with_val(128, expect), 120));
    }

    #[test]
    fn rational_constructor_round_trip() {
        let t = Tau::from_f64(-0.25, 1.5).unwrap();
        let z = t.value(64);
        assert_eq!(z.real().to_f64(), -0.25);
        assert_eq!(z.imag().to_f64(), 1.5);
        assert!(Tau::from_f64(0.0, -1.0).is_err());
    }
}
