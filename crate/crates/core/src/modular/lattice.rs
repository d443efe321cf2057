//! Lattice-sum route for `g2`, `g3`, `Δ`, `℘` on the lattice `Zτ + Z`, kept in
//! the raw (π-laden) normalization.
//!
//! The double sums are ordered by rows `ω = mτ + n`. Each row is summed over
//! `n` in closed form with the partial-fraction identities
//!
//! ```text
//! Σ_n (w+n)^-2 = π² S,  Σ_n (w+n)^-4 = π⁴(S² - 2S/3),
//! Σ_n (w+n)^-6 = π⁶(S³ - S² + 2S/15),        S = csc²(πw),
//! ```
//!
//! after which the sum over rows converges geometrically, since
//! `|csc²(π(x + iY))| <= 4e^{-2π|Y|}/(1 - e^{-2π|Y|})²`. All three sums are
//! absolutely convergent, so the row order does not change their value.
//! This route shares nothing with the q-series route beyond `τ` itself.

use rug::{Complex, Float, Rational};

use crate::error::Result;
use crate::modular::qseries::{check_floor, log2_abs_q};
use crate::modular::{FrickeIndex, Tau};
use crate::numerics::{pi, powu};

fn work_bits(prec: u32, tau: &Tau) -> u32 {
    let y = tau.imag_f64();
    // Δ = g2³ - 27 g3² cancels about log2|q| bits at the reduced point
    let y_red = tau.reduce_to_fundamental_domain().0.imag_f64();
    prec + 40 + (9.1 * y_red).ceil() as u32 + (0.5 / y).ceil() as u32
}

fn csc2(w: &Complex, pi: &Float, bits: u32) -> Complex {
    let mut s = Complex::with_val(bits, w * pi);
    s = s.sin();
    s.square_mut();
    s.recip()
}

/// Number of rows `m` needed so that `|q|^{m - shift}` is below `2^-bits`.
fn row_count(y: f64, bits: u32, shift: f64) -> u64 {
    let lq = log2_abs_q(y);
    let mut m = 1u64;
    while (m as f64 - shift) * lq >= -f64::from(bits) - 8.0 {
        m += 1;
    }
    m
}

/// Raw Weierstrass invariants `(g2, g3)` of `Zτ + Z`.
pub fn g2_g3(tau: &Tau, prec: u32) -> Result<(Complex, Complex)> {
    let y = tau.imag_f64();
    check_floor(y, prec)?;
    let bits = work_bits(prec, tau);
    let (g2, g3) = g2_g3_at(tau, bits);
    Ok((Complex::with_val(prec, g2), Complex::with_val(prec, g3)))
}

fn g2_g3_at(tau: &Tau, bits: u32) -> (Complex, Complex) {
    let y = tau.imag_f64();
    let pi = pi(bits);
    let t = tau.value(bits);
    let rows = row_count(y, bits, 0.0);
    let mut sum4 = Complex::new(bits);
    let mut sum6 = Complex::new(bits);
    for m in 1..=rows {
        let w = Complex::with_val(bits, &t * m);
        let s = csc2(&w, &pi, bits);
        let s2 = Complex::with_val(bits, s.square_ref());
        let s3 = Complex::with_val(bits, &s2 * &s);
        // S² - 2S/3
        sum4 += &s2;
        sum4 -= Complex::with_val(bits, &s * 2u32) / 3u32;
        // S³ - S² + 2S/15
        sum6 += &s3;
        sum6 -= &s2;
        sum6 += Complex::with_val(bits, &s * 2u32) / 15u32;
    }
    let pi2 = Float::with_val(bits, pi.square_ref());
    let pi4 = Float::with_val(bits, pi2.square_ref());
    let pi6 = Float::with_val(bits, &pi4 * &pi2);
    // G4 = 2ζ(4) + 2π⁴ Σ_{m>=1}(...), 2ζ(4) = π⁴/45; G6 = 2ζ(6) + ..., 2ζ(6) = 2π⁶/945
    let mut g4 = sum4 * 2u32;
    g4 += Float::with_val(bits, 1) / 45u32;
    g4 *= &pi4;
    let mut g6 = sum6 * 2u32;
    g6 += Float::with_val(bits, 2) / 945u32;
    g6 *= &pi6;
    (g4 * 60u32, g6 * 140u32)
}

/// `Δ = g2³ - 27 g3²` from the lattice invariants.
pub fn delta(tau: &Tau, prec: u32) -> Result<Complex> {
    check_floor(tau.imag_f64(), prec)?;
    let bits = work_bits(prec, tau);
    let (g2, g3) = g2_g3_at(tau, bits);
    Ok(Complex::with_val(prec, delta_from(&g2, &g3, bits)))
}

fn delta_from(g2: &Complex, g3: &Complex, bits: u32) -> Complex {
    let a = Complex::with_val(bits, powu(g2, 3));
    let b = Complex::with_val(bits, g3.square_ref()) * 27u32;
    a - b
}

/// `j = 2⁶3³ g2³/Δ` through lattice sums.
pub fn j(tau: &Tau, prec: u32) -> Result<Complex> {
    check_floor(tau.imag_f64(), prec)?;
    let bits = work_bits(prec, tau);
    let (g2, g3) = g2_g3_at(tau, bits);
    let d = delta_from(&g2, &g3, bits);
    let num = Complex::with_val(bits, powu(&g2, 3)) * 1728u32;
    Ok(Complex::with_val(prec, num / d))
}

/// `℘(r1τ + r2; Zτ + Z)`.
pub fn wp(x: &FrickeIndex, tau: &Tau, prec: u32) -> Result<Complex> {
    check_floor(tau.imag_f64(), prec)?;
    let bits = work_bits(prec, tau);
    Ok(Complex::with_val(prec, wp_at(x, tau, bits)))
}

fn wp_at(x: &FrickeIndex, tau: &Tau, bits: u32) -> Complex {
    wp_raw(&x.r1(), &x.r2(), tau, bits)
}

/// `℘(r1τ + r2)` for arbitrary rationals `(r1, r2) ∉ Z²`.
fn wp_raw(r1: &Rational, r2: &Rational, tau: &Tau, bits: u32) -> Complex {
    let y = tau.imag_f64();
    let pi = pi(bits);
    let t = tau.value(bits);
    let z = Complex::with_val(bits, &t * Float::with_val(bits, r1)) + Float::with_val(bits, r2);
    let rows = row_count(y, bits, r1.to_f64().abs());

    // row m = 0: 1/z² + Σ_{n≠0} [(z-n)⁻² - n⁻²] = π² csc²(πz) - π²/3
    let mut sum = csc2(&z, &pi, bits);
    sum -= Float::with_val(bits, 1) / 3u32;
    for m in 1..=rows {
        let mt = Complex::with_val(bits, &t * m);
        let lattice_row = csc2(&mt, &pi, bits);
        for sign in [1i32, -1] {
            let shift = Complex::with_val(bits, &mt * sign);
            let w = Complex::with_val(bits, &z - &shift);
            sum += csc2(&w, &pi, bits);
            sum -= &lattice_row;
        }
    }
    sum * Float::with_val(bits, pi.square_ref())
}

/// Fricke function `f^(k)_{(r1,r2)}(τ)` from its defining combination of
/// `g2`, `g3`, `Δ` and `℘`.
pub fn fricke(x: &FrickeIndex, k: u8, tau: &Tau, prec: u32) -> Result<Complex> {
    fricke_raw(&x.r1(), &x.r2(), k, tau, prec)
}

/// [`fricke`] for an arbitrary, uncanonicalized pair `(r1, r2) ∉ Z²`.
pub fn fricke_raw(r1: &Rational, r2: &Rational, k: u8, tau: &Tau, prec: u32) -> Result<Complex> {
    check_floor(tau.imag_f64(), prec)?;
    crate::modular::check_k(k)?;
    if *r1.denom() == 1 && *r2.denom() == 1 {
        return Err(crate::error::Error::InvalidInput(format!(
            "({r1}, {r2}) lies in Z²"
        )));
    }
    let bits = work_bits(prec, tau);
    let (g2, g3) = g2_g3_at(tau, bits);
    let d = delta_from(&g2, &g3, bits);
    let p = wp_raw(r1, r2, tau, bits);
    let v = match k {
        1 => {
            // -2⁷3⁵ g2 g3 ℘ / Δ
            let mut v = Complex::with_val(bits, &g2 * &g3) * &p;
            v *= 31104u32;
            -v / d
        }
        2 => {
            let g2sq = Complex::with_val(bits, g2.square_ref());
            let psq = Complex::with_val(bits, p.square_ref());
            g2sq * psq / d
        }
        3 => {
            let p3 = Complex::with_val(bits, powu(&p, 3));
            g3 * p3 / d
        }
        _ => unreachable!("k validated above"),
    };
    Ok(Complex::with_val(prec, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{agree, magnitude_log2};
    use rug::ops::Pow;

    /// Plain truncated lattice sum over `0 < max(|m|,|n|) <= bound`.
    fn brute_force(tau: (f64, f64), bound: i64, power: u32) -> Complex {
        let t = Complex::with_val(53, tau);
        let mut s = Complex::new(53);
        for m in -bound..=bound {
            for n in -bound..=bound {
                if m == 0 && n == 0 {
                    continue;
                }
                let w = Complex::with_val(53, &t * m) + n;
                s += Complex::with_val(53, w.pow(power)).recip();
            }
        }
        s
    }

    #[test]
    fn row_sums_match_truncated_lattice_sums() {
        let tau = Tau::from_f64(0.1, 1.3).unwrap();
        let (g2, g3) = g2_g3(&tau, 64).unwrap();
        let b4 = brute_force((0.1, 1.3), 300, 4) * 60u32;
        let b6 = brute_force((0.1, 1.3), 80, 6) * 140u32;
        let r2 = crate::numerics::relative_residual(&g2, &Complex::with_val(64, b4));
        let r3 = crate::numerics::relative_residual(&g3, &Complex::with_val(64, b6));
        assert!(r2 < 1e-4, "g2 residual {r2}");
        assert!(r3 < 1e-6, "g3 residual {r3}");
    }

    #[test]
    fn g3_vanishes_at_i_and_g2_at_rho() {
        let (_, g3) = g2_g3(&Tau::i(), 128).unwrap();
        assert!(magnitude_log2(&g3) < -100.0);
        let rho = Tau::quadratic(1, 3, -3).unwrap();
        let (g2, _) = g2_g3(&rho, 128).unwrap();
        assert!(magnitude_log2(&g2) < -100.0);
    }

    #[test]
    fn wp_half_periods_on_square_lattice() {
        let half = FrickeIndex::parse("1/2,1/2").unwrap();
        let v = wp(&half, &Tau::i(), 128).unwrap();
        assert!(magnitude_log2(&v) < -100.0);
        let e1 = wp(&FrickeIndex::parse("0,1/2").unwrap(), &Tau::i(), 128).unwrap();
        assert!(e1.real().is_sign_positive());
        assert!(magnitude_log2(&Complex::with_val(128, e1.imag())) < -100.0);
    }

    #[test]
    fn wp_is_even_and_periodic() {
        let tau = Tau::from_f64(0.2, 0.9).unwrap();
        let r = |a: i32, b: i32| Rational::from((a, b));
        let a = wp_raw(&r(1, 5), &r(2, 5), &tau, 160);
        for (p, q) in [
            (r(4, 5), r(3, 5)),
            (r(-1, 5), r(-2, 5)),
            (r(6, 5), r(2, 5)),
            (r(1, 5), r(-3, 5)),
        ] {
            let b = wp_raw(&p, &q, &tau, 160);
            assert!(agree(&a, &b, 120), "({p}, {q})");
        }
    }

    #[test]
    fn j_at_2i() {
        let v = j(&Tau::i().scaled(2), 128).unwrap();
        assert!(agree(&v, &Complex::with_val(128, 287496), 100));
    }
}
