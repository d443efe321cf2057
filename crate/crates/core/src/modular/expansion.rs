//! Truncated Laurent series in `q` with integer coefficients.

use std::fmt;

use rug::Integer;

/// `Σ_{n >= valuation} c_n qⁿ`, known modulo `q^{valuation + len}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    pub valuation: i64,
    pub coeffs: Vec<Integer>,
}

impl QSeries {
    pub fn new(valuation: i64, coeffs: Vec<Integer>) -> Self {
        QSeries { valuation, coeffs }
    }

    /// Coefficient of `qⁿ`, zero below the valuation.
    pub fn coeff(&self, n: i64) -> Option<&Integer> {
        let i = n - self.valuation;
        if i < 0 {
            None
        } else {
            self.coeffs.get(i as usize)
        }
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len()
    }

    pub fn mul(&self, o: &QSeries) -> QSeries {
        let len = self.precision().min(o.precision());
        let mut out = vec![Integer::new(); len];
        for (i, a) in self.coeffs.iter().take(len).enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.coeffs.iter().take(len - i).enumerate() {
                out[i + j] += Integer::from(a * b);
            }
        }
        QSeries::new(self.valuation + o.valuation, out)
    }

    /// Inverse of a series whose leading coefficient is `±1`.
    pub fn inverse(&self) -> Option<QSeries> {
        let lead = self.coeffs.first()?;
        if *lead != 1 && *lead != -1 {
            return None;
        }
        let len = self.precision();
        let mut out: Vec<Integer> = Vec::with_capacity(len);
        for n in 0..len {
            let mut s = if n == 0 {
                Integer::from(1)
            } else {
                Integer::new()
            };
            for k in 1..=n {
                s -= Integer::from(&self.coeffs[k] * &out[n - k]);
            }
            out.push(s * lead);
        }
        Some(QSeries::new(-self.valuation, out))
    }

    pub fn pow(&self, e: u32) -> QSeries {
        let mut acc = QSeries::new(0, {
            let mut v = vec![Integer::new(); self.precision()];
            v[0] = Integer::from(1);
            v
        });
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// `f(q^k)`.
    pub fn substitute_power(&self, k: usize, len: usize) -> QSeries {
        let mut out = vec![Integer::new(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i * k < len {
                out[i * k] = c.clone();
            }
        }
        QSeries::new(self.valuation * k as i64, out)
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let n = self.valuation + i as i64;
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match n {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}q")?,
                _ => write!(f, "{c}q^{n}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(q^{})", self.valuation + self.precision() as i64)
    }
}

/// `∏_{n>=1}(1 - qⁿ)` to `len` terms.
pub fn euler_product(len: usize) -> QSeries {
    let mut c = vec![Integer::new(); len];
    c[0] = Integer::from(1);
    for n in 1..len {
        // multiply by (1 - qⁿ) in place, high degrees first
        for i in (n..len).rev() {
            let t = c[i - n].clone();
            c[i] -= t;
        }
    }
    QSeries::new(0, c)
}

/// `E4 = 1 + 240 Σ σ3(n) qⁿ` to `len` terms.
pub fn e4_series(len: usize) -> QSeries {
    let (s3, _) = super::qseries::divisor_sums(len);
    let mut c: Vec<Integer> = (0..len).map(|n| Integer::from(s3[n]) * 240u32).collect();
    c[0] = Integer::from(1);
    QSeries::new(0, c)
}

/// `j = E4³ / (q ∏(1 - qⁿ)²⁴)` from `q⁻¹` to `q^{n_max}`.
pub fn j_series(n_max: usize) -> QSeries {
    let len = n_max + 2;
    let e4 = e4_series(len);
    let p24 = euler_product(len).pow(24);
    let inv = p24.inverse().expect("unit leading coefficient");
    let mut j = e4.pow(3).mul(&inv);
    j.valuation -= 1;
    j
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn j_coefficients() {
        let j = j_series(4);
        let expect = [1i64, 744, 196884, 21493760, 864299970, 20245856256];
        for (n, e) in (-1..).zip(expect) {
            assert_eq!(*j.coeff(n).unwrap(), e, "q^{n}");
        }
    }

    #[test]
    fn euler_product_pentagonal() {
        let p = euler_product(16);
        let expect = [1, -1, -1, 0, 0, 1, 0, 1, 0, 0, 0, 0, -1, 0, 0, -1];
        let got: Vec<i64> = p.coeffs.iter().map(|c| c.to_i64().unwrap()).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn inverse_round_trip() {
        let p = euler_product(20);
        let one = p.mul(&p.inverse().unwrap());
        assert_eq!(one.coeffs[0], 1);
        assert!(one.coeffs[1..].iter().all(|c| *c == 0));
    }
}
