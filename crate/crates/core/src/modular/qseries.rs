//! q-expansion route: `j`, `η` and `f^(1)` from the product formula, the
//! normalized Eisenstein series `E4`, `E6` and the pentagonal-number series.
//!
//! Everything here is a π-free, degree-0 combination of `q`-series, so no
//! factor of `(2π)^k` is ever formed.

use rug::{Complex, Integer, Rational};

use crate::error::{Error, Result};
use crate::modular::{FrickeIndex, Tau};
use crate::numerics::powu;

/// Points with `Im τ` below this are rejected by the direct series outright.
pub const HARD_IM_FLOOR: f64 = 1e-4;

/// Working precision for a series evaluation at `Im τ = y`. The extra
/// `0.5/y` bits cover the cancellation in `∏(1 - qⁿ)` near the real axis
/// (`log2 |η(iy)|⁻¹ ≈ 0.38/y`).
pub fn internal_bits(prec: u32, y: f64) -> u32 {
    prec + 32 + (0.5 / y).ceil() as u32
}

pub(crate) fn check_floor(y: f64, bits: u32) -> Result<()> {
    if y < HARD_IM_FLOOR {
        return Err(Error::PrecisionExhausted { max_bits: bits });
    }
    Ok(())
}

/// `log2 |q|` for `q = e^{2πiτ}`.
pub fn log2_abs_q(y: f64) -> f64 {
    -2.0 * std::f64::consts::PI * y * std::f64::consts::LOG2_E
}

/// Smallest `n` with `n^growth · |q|^n < 2^-bits` (and `n >= 1`).
pub fn truncation_index(y: f64, bits: u32, growth: f64) -> usize {
    let lq = log2_abs_q(y);
    let mut n = 1usize;
    loop {
        let nf = n as f64;
        if growth * nf.log2() + nf * lq < -f64::from(bits) {
            return n;
        }
        n += 1;
    }
}

/// `∏_{n>=1} (1 - qⁿ) = Σ_k (-1)^k q^{k(3k-1)/2}`.
pub fn pentagonal_product(q: &Complex, y: f64, bits: u32) -> Complex {
    let lq = log2_abs_q(y);
    let mut sum = Complex::with_val(bits, 1);
    let q3 = Complex::with_val(bits, powu(q, 3));
    let mut qk = q.clone(); // q^k
    let mut q_e1 = q.clone(); // q^{k(3k-1)/2}
    let mut q_step = Complex::with_val(bits, powu(q, 4)); // q^{3k+1}
    let mut k: u64 = 1;
    loop {
        let e1 = (k * (3 * k - 1) / 2) as f64;
        if e1 * lq < -f64::from(bits) - 8.0 {
            break;
        }
        let q_e2 = Complex::with_val(bits, &q_e1 * &qk);
        let pair = Complex::with_val(bits, &q_e1 + &q_e2);
        if k % 2 == 1 {
            sum -= pair;
        } else {
            sum += pair;
        }
        q_e1 *= &q_step;
        q_step *= &q3;
        qk *= q;
        k += 1;
    }
    sum
}

/// `σ3(n)` and `σ5(n)` for `1 <= n <= n_max` by a divisor sieve.
pub fn divisor_sums(n_max: usize) -> (Vec<u128>, Vec<u128>) {
    let mut s3 = vec![0u128; n_max + 1];
    let mut s5 = vec![0u128; n_max + 1];
    for d in 1..=n_max {
        let d3 = (d as u128).pow(3);
        let d5 = (d as u128).pow(5);
        let mut m = d;
        while m <= n_max {
            s3[m] += d3;
            s5[m] += d5;
            m += d;
        }
    }
    (s3, s5)
}

/// `(E4, E6)` at `q`, truncated once `n⁶|q|ⁿ` drops below the budget.
pub fn eisenstein_e4_e6(q: &Complex, y: f64, bits: u32) -> (Complex, Complex) {
    let n_max = truncation_index(y, bits + 12, 6.0);
    let (s3, s5) = divisor_sums(n_max);
    let mut acc3 = Complex::new(bits);
    let mut acc5 = Complex::new(bits);
    for n in (1..=n_max).rev() {
        acc3 += Integer::from(s3[n]);
        acc3 *= q;
        acc5 += Integer::from(s5[n]);
        acc5 *= q;
    }
    let e4 = Complex::with_val(bits, &acc3 * 240u32) + 1u32;
    let e6 = Complex::with_val(bits, 1u32) - Complex::with_val(bits, &acc5 * 504u32);
    (e4, e6)
}

/// `q ∏(1 - qⁿ)^24`, i.e. `Δ/(2π)^12`.
pub fn delta_normalized(tau: &Tau, bits: u32) -> Result<Complex> {
    let y = tau.imag_f64();
    check_floor(y, bits)?;
    let work = internal_bits(bits, y);
    let q = tau.q(work);
    let p = pentagonal_product(&q, y, work);
    let d = Complex::with_val(work, powu(&p, 24)) * q;
    Ok(Complex::with_val(bits, d))
}

/// Dedekind `η(τ) = q^{1/24} ∏(1 - qⁿ)`, evaluated directly at `τ`.
pub fn eta(tau: &Tau, bits: u32) -> Result<Complex> {
    let y = tau.imag_f64();
    check_floor(y, bits)?;
    let work = internal_bits(bits, y);
    let q = tau.q(work);
    let p = pentagonal_product(&q, y, work);
    let q24 = tau.q_power(&Rational::from((1, 24)), work);
    Ok(Complex::with_val(bits, p * q24))
}

/// `j(τ) = E4³ / (q ∏(1 - qⁿ)^24)`. Points with `Im τ < 1/2` are first moved
/// into the fundamental domain.
pub fn j(tau: &Tau, bits: u32) -> Result<Complex> {
    let reduced;
    let tau = if tau.imag_f64() < 0.5 {
        reduced = tau.reduce_to_fundamental_domain().0;
        &reduced
    } else {
        tau
    };
    let y = tau.imag_f64();
    let work = internal_bits(bits, y);
    let q = tau.q(work);
    let p = pentagonal_product(&q, y, work);
    let (e4, _) = eisenstein_e4_e6(&q, y, work);
    let num = Complex::with_val(work, powu(&e4, 3));
    let den = Complex::with_val(work, powu(&p, 24)) * &q;
    Ok(Complex::with_val(bits, num / den))
}

/// `x/(1-x)²`.
fn lambert_term(x: &Complex, bits: u32) -> Complex {
    let one_minus = Complex::with_val(bits, 1u32) - x;
    let sq = Complex::with_val(bits, one_minus.square_ref());
    Complex::with_val(bits, x / &sq)
}

/// `℘ / (-(2π)²/12)` at `z = r1τ + r2`: the bracket
/// `1 + 12u/(1-u)² + 12 Σ_m [A_m/(1-A_m)² + B_m/(1-B_m)² - 2qᵐ/(1-qᵐ)²]`
/// with `u = e^{2πiz}`, `A_m = u qᵐ`, `B_m = qᵐ/u`. The inner sums over `n`
/// are taken in closed form, the outer sum over `m` is truncated.
pub fn wp_bracket(x: &FrickeIndex, tau: &Tau, bits: u32) -> Result<Complex> {
    let y = tau.imag_f64();
    check_floor(y, bits)?;
    let lq = log2_abs_q(y);
    let r1 = x.r1();
    let r1f = r1.to_f64();
    let u = tau.q_power_shifted(&r1, &x.r2(), bits);
    let u_inv = Complex::with_val(bits, u.recip_ref());
    let q = tau.q(bits);

    let mut sum = Complex::new(bits);
    let mut qm = q.clone();
    let mut m = 1u64;
    loop {
        if (m as f64 - r1f) * lq < -f64::from(bits) - 8.0 {
            break;
        }
        let a = Complex::with_val(bits, &u * &qm);
        let b = Complex::with_val(bits, &u_inv * &qm);
        sum += lambert_term(&a, bits);
        sum += lambert_term(&b, bits);
        sum -= lambert_term(&qm, bits) * 2u32;
        qm *= &q;
        m += 1;
    }
    sum += lambert_term(&u, bits);
    sum *= 12u32;
    Ok(sum + 1u32)
}

/// `f^(1)_{(r1,r2)}(τ) = q⁻¹∏(1-qⁿ)⁻²⁴ E4 E6 · bracket`.
pub fn fricke_k1(x: &FrickeIndex, tau: &Tau, bits: u32) -> Result<Complex> {
    let y = tau.imag_f64();
    check_floor(y, bits)?;
    let work = internal_bits(bits, y);
    let q = tau.q(work);
    let p = pentagonal_product(&q, y, work);
    let (e4, e6) = eisenstein_e4_e6(&q, y, work);
    let bracket = wp_bracket(x, tau, work)?;
    let den = Complex::with_val(work, powu(&p, 24)) * &q;
    let num = Complex::with_val(work, &e4 * &e6) * bracket;
    Ok(Complex::with_val(bits, num / den))
}
