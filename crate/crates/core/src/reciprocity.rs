//! Explicit reciprocity at `θ_K`: the group `W_{N,K}`, its kernel, the
//! decomposition `α = diag(1, d)·γ2`, and Galois orbits of singular values
//! of Fricke functions and of principal moduli.

use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use rug::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hauptmodul::HauptmodulSpec;
use crate::modular::{fricke_auto_at, FrickeIndex, Tau};
use crate::numerics::{agree, stable_values, PrecisionContext};
use crate::quad_fields::{class_number, gcd, min_poly_coeffs, theta_point};
use crate::sl2::{lift_sl2, mod_inverse, ModMatrix, Sl2};

/// An element `t + sθ_K` of `(O_K/N)^×`, acting through
/// `(t - B s, -C s; s, t)` where `X² + B X + C` is the minimal polynomial of
/// `θ_K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WMatrix {
    pub n: i64,
    pub d_k: i64,
    pub t: i64,
    pub s: i64,
}

impl WMatrix {
    /// Build from residues, reducing mod `N`. Fails when the norm form is not
    /// a unit.
    pub fn new(n: i64, d_k: i64, t: i64, s: i64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidInput(format!("level {n} must be positive")));
        }
        min_poly_coeffs(d_k)?;
        let w = WMatrix {
            n,
            d_k,
            t: t.rem_euclid(n),
            s: s.rem_euclid(n),
        };
        if gcd(w.norm(), n) != 1 {
            return Err(Error::InvalidInput(format!(
                "({t}, {s}) has norm {} not prime to {n}",
                w.norm()
            )));
        }
        Ok(w)
    }

    fn coeffs(&self) -> (i64, i64) {
        (-self.d_k, (self.d_k * self.d_k - self.d_k) / 4)
    }

    /// `t² - B t s + C s²` reduced mod `N`.
    pub fn norm(&self) -> i64 {
        let (b, c) = self.coeffs();
        let n = i128::from(self.n);
        let (t, s) = (i128::from(self.t), i128::from(self.s));
        let v = (t * t - i128::from(b) * t * s + i128::from(c) * s * s).rem_euclid(n);
        v as i64
    }

    pub fn matrix(&self) -> ModMatrix {
        let (b, c) = self.coeffs();
        let n = self.n;
        let bs = (b.rem_euclid(n) * self.s) % n;
        let cs = (c.rem_euclid(n) * self.s) % n;
        ModMatrix::new(n, self.t - bs, -cs, self.s, self.t)
    }

    /// Read `(t, s)` back from the bottom row of a matrix in the image.
    fn from_matrix(m: &ModMatrix, d_k: i64) -> Result<Self> {
        let w = WMatrix::new(m.n, d_k, m.d, m.c)?;
        if w.matrix() != *m {
            let [a, b, c, d] = m.entries();
            return Err(Error::KernelNotInGroup([a, b, c, d]));
        }
        Ok(w)
    }

    pub fn mul(&self, o: &WMatrix) -> WMatrix {
        WMatrix::from_matrix(&(self.matrix() * o.matrix()), self.d_k)
            .expect("W is closed under products")
    }

    pub fn is_identity(&self) -> bool {
        self.matrix() == ModMatrix::identity(self.n)
    }
}

impl fmt::Display for WMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.matrix().entries();
        write!(
            f,
            "(t,s)=({},{}) [{a} {b}; {c} {d}] mod {}",
            self.t, self.s, self.n
        )
    }
}

/// All of `W_{N,K}`, ordered by `(t, s)`.
pub fn w_group(n: i64, d_k: i64) -> Result<Vec<WMatrix>> {
    min_poly_coeffs(d_k)?;
    if n < 1 {
        return Err(Error::InvalidInput(format!("level {n} must be positive")));
    }
    let mut out = Vec::new();
    for t in 0..n {
        for s in 0..n {
            if let Ok(w) = WMatrix::new(n, d_k, t, s) {
                out.push(w);
            }
        }
    }
    Ok(out)
}

/// Integer matrices generating the kernel of `W_{N,K} -> Gal(K_(N)/H_K)`,
/// before reduction.
fn kernel_matrices(d_k: i64) -> Vec<[i64; 4]> {
    let mut base = vec![[1, 0, 0, 1]];
    match d_k {
        -4 => base.push([-2, -5, 1, 2]),
        -3 => {
            base.push([-2, -3, 1, 1]);
            base.push([1, 3, -1, -2]);
        }
        _ => {}
    }
    base.iter().flat_map(|m| [*m, m.map(|x| -x)]).collect()
}

/// The kernel reduced mod `N`, each member checked for membership in `W`.
pub fn kernel_set(n: i64, d_k: i64) -> Result<Vec<WMatrix>> {
    min_poly_coeffs(d_k)?;
    let mut out = BTreeSet::new();
    for [a, b, c, d] in kernel_matrices(d_k) {
        let m = ModMatrix::new(n, a, b, c, d);
        let w = WMatrix::from_matrix(&m, d_k).map_err(|_| Error::KernelNotInGroup([a, b, c, d]))?;
        out.insert(w);
    }
    Ok(out.into_iter().collect())
}

/// Scalar members `(t, 0)` of `W_{N,K}`.
pub fn ring_subgroup(n: i64, d_k: i64) -> Result<Vec<WMatrix>> {
    Ok(w_group(n, d_k)?.into_iter().filter(|w| w.s == 0).collect())
}

/// Representatives of `W/kernel`, each the lexicographically least `(t, s)`
/// of its coset.
pub fn coset_representatives(n: i64, d_k: i64) -> Result<Vec<WMatrix>> {
    let group = w_group(n, d_k)?;
    let kernel = kernel_set(n, d_k)?;
    let mut seen = BTreeSet::new();
    let mut reps = Vec::new();
    for g in group {
        if seen.contains(&g) {
            continue;
        }
        reps.push(g);
        for k in &kernel {
            seen.insert(g.mul(k));
        }
    }
    Ok(reps)
}

/// `α = diag(1, d)·γ2` with `d = det α` and `γ2 ∈ SL2(Z)`.
pub fn decompose(alpha: &WMatrix) -> Result<(i64, Sl2)> {
    let m = alpha.matrix();
    let n = m.n;
    let d = m.det();
    let d_inv = mod_inverse(d, n).ok_or(Error::NotUnimodular(m.entries(), n))?;
    let g2 = lift_sl2(&m.scale_rows(1, d_inv))?;
    debug_assert_eq!(g2.reduce(n).scale_rows(1, d), m);
    Ok((d, g2))
}

/// `(r1, r2)·α`, canonicalized.
pub fn act_fricke_index(alpha: &WMatrix, x: &FrickeIndex) -> Result<FrickeIndex> {
    x.act(&alpha.matrix())
}

/// Choose `δ ∈ Γ0(N)` maximizing `Im(δγτ)` and return `δγ`. Any function on
/// `Γ0(N)` takes the same value at `γτ` and `δγτ`.
pub fn best_gamma0_representative(gamma: &Sl2, tau: &Tau, n: i64) -> Sl2 {
    let z = tau.value(64);
    let (x, y) = (z.real().to_f64(), z.imag().to_f64());
    let (c0, d0) = (gamma.c, gamma.d);
    let size = |c: i64, d: i64| {
        let re = c as f64 * x + d as f64;
        let im = c as f64 * y;
        re * re + im * im
    };
    let mut best = (size(c0, d0), c0, d0);
    let mut c = 0i64;
    // |cτ + d|² >= c²y², so larger c cannot improve on the current best
    while (c as f64 * y).powi(2) < best.0 {
        let centre = (-(c as f64) * x).round() as i64;
        for d in (centre - n - 1)..=(centre + n + 1) {
            let in_coset = (i128::from(c) * i128::from(d0) - i128::from(d) * i128::from(c0))
                .rem_euclid(i128::from(n))
                == 0;
            if in_coset && gcd(c, d) == 1 {
                let v = size(c, d);
                if v < best.0 - 1e-12 {
                    best = (v, c, d);
                }
            }
        }
        c += 1;
    }
    let (_, c, d) = best;
    if (c, d) == (c0, d0) {
        return *gamma;
    }
    // any completion differs from γ by an element of Γ0(N) on the left
    Sl2::complete_bottom_row(c, d).expect("coprime bottom row")
}

/// A deduplicated set of conjugate singular values.
#[derive(Clone, Debug)]
pub struct GaloisOrbit {
    pub description: String,
    /// First coset representative reaching each distinct value, with the value.
    pub conjugates: Vec<(WMatrix, Complex)>,
    /// Number of cosets of `W/kernel` evaluated.
    pub coset_count: usize,
    /// `log2` of the relative tolerance used for deduplication.
    pub dedup_log2: f64,
    pub bits: u32,
}

impl GaloisOrbit {
    pub fn len(&self) -> usize {
        self.conjugates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjugates.is_empty()
    }

    pub fn values(&self) -> Vec<Complex> {
        self.conjugates.iter().map(|(_, v)| v.clone()).collect()
    }
}

fn require_class_number_one(d_k: i64) -> Result<()> {
    let h = class_number(d_k)?;
    if h != 1 {
        return Err(Error::ClassNumberNotOne {
            disc: d_k,
            class_number: h,
        });
    }
    Ok(())
}

/// Evaluate `eval(α, bits)` over the coset representatives with the doubling
/// policy, then deduplicate at `2^(-working_bits/2)`.
pub fn orbit_over_cosets<F>(
    description: String,
    reps: &[WMatrix],
    eval: F,
    ctx: &PrecisionContext,
) -> Result<GaloisOrbit>
where
    F: Fn(&WMatrix, u32) -> Result<Complex> + Sync,
{
    let st = stable_values(|bits| reps.par_iter().map(|a| eval(a, bits)).collect(), ctx)?;
    let dedup_bits = ctx.working_bits / 2;
    let mut conjugates: Vec<(WMatrix, Complex)> = Vec::new();
    for (rep, v) in reps.iter().zip(st.value) {
        if !conjugates.iter().any(|(_, u)| agree(u, &v, dedup_bits)) {
            conjugates.push((*rep, v));
        }
    }
    Ok(GaloisOrbit {
        description,
        conjugates,
        coset_count: reps.len(),
        dedup_log2: -f64::from(dedup_bits),
        bits: st.bits,
    })
}

/// Conjugates of `f^(k)_x(θ_K)` over `K`: the values `f^(k)_{x·α}(θ_K)` for
/// `α` over `W_{N,K}/kernel`, `N` the denominator of `x`.
pub fn galois_orbit_fricke(
    x: &FrickeIndex,
    k: u8,
    d_k: i64,
    ctx: &PrecisionContext,
) -> Result<GaloisOrbit> {
    require_class_number_one(d_k)?;
    crate::modular::check_k(k)?;
    let theta = theta_point(d_k)?.tau;
    let reps = coset_representatives(x.level(), d_k)?;
    let indices: Vec<FrickeIndex> = reps
        .iter()
        .map(|a| act_fricke_index(a, x))
        .collect::<Result<_>>()?;
    let lookup = |a: &WMatrix| indices[reps.iter().position(|r| r == a).expect("representative")];
    orbit_over_cosets(
        format!("f^({k})_({x}) at theta_K, d_K = {d_k}"),
        &reps,
        |a, bits| fricke_auto_at(&lookup(a), k, &theta, bits),
        ctx,
    )
}

/// Point `γ2·θ_K` for `α`, moved within its `Γ0(N)` coset to maximize the
/// imaginary part.
pub fn conjugate_point(alpha: &WMatrix, theta: &Tau) -> Result<Tau> {
    let (_, g2) = decompose(alpha)?;
    let g = best_gamma0_representative(&g2, theta, alpha.n);
    Ok(theta.apply(&g))
}

/// Conjugates of `g(θ_K)` for a principal modulus `g` with rational
/// coefficients: `g(γ2·θ_K)` over `W_{N,K}/kernel`.
pub fn galois_orbit_function(
    g: &HauptmodulSpec,
    d_k: i64,
    ctx: &PrecisionContext,
) -> Result<GaloisOrbit> {
    require_class_number_one(d_k)?;
    let n = g.level as i64;
    let theta = theta_point(d_k)?.tau;
    let reps = coset_representatives(n, d_k)?;
    let points: Vec<Tau> = reps
        .iter()
        .map(|a| conjugate_point(a, &theta))
        .collect::<Result<_>>()?;
    let ctx = lowest_point_context(&points, ctx)?;
    orbit_over_cosets(
        format!("{g} at theta_K, d_K = {d_k}"),
        &reps,
        |a, bits| {
            let i = reps.iter().position(|r| r == a).expect("representative");
            g.value_at(&points[i], bits)
        },
        &ctx,
    )
}

/// Conjugates of `j(Nθ_K)`: `j(N·γ2·θ_K)` over `W_{N,K}/kernel`.
pub fn galois_orbit_j_level(n: i64, d_k: i64, ctx: &PrecisionContext) -> Result<GaloisOrbit> {
    require_class_number_one(d_k)?;
    let theta = theta_point(d_k)?.tau;
    let reps = coset_representatives(n, d_k)?;
    let points: Vec<Tau> = reps
        .iter()
        .map(|a| conjugate_point(a, &theta).map(|p| p.scaled(n as u64)))
        .collect::<Result<_>>()?;
    orbit_over_cosets(
        format!("j({n} theta_K), d_K = {d_k}"),
        &reps,
        |a, bits| {
            let i = reps.iter().position(|r| r == a).expect("representative");
            crate::modular::qseries::j(&points[i], bits)
        },
        ctx,
    )
}

fn lowest_point_context(points: &[Tau], ctx: &PrecisionContext) -> Result<PrecisionContext> {
    let lowest = points
        .iter()
        .min_by(|a, b| a.imag_f64().total_cmp(&b.imag_f64()))
        .cloned()
        .unwrap_or_else(Tau::i);
    crate::modular::escalated_context(&lowest, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::recognize_integer_complex;
    use crate::quad_fields::{form_to_cm_point, reduced_forms};
    use proptest::prelude::*;

    /// Brute-force count of `(t, s)` with `t² - Bts + Cs²` prime to `N`.
    fn brute_count(n: i64, d_k: i64) -> usize {
        let (b, c) = ((-d_k), (d_k * d_k - d_k) / 4);
        let mut count = 0;
        for t in 0..n {
            for s in 0..n {
                if gcd(t * t - b * t * s + c * s * s, n) == 1 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn group_orders() {
        assert_eq!(w_group(5, -4).unwrap().len(), 16);
        assert_eq!(w_group(2, -4).unwrap().len(), 2);
        assert_eq!(w_group(1, -4).unwrap().len(), 1);
        assert!(w_group(1, -4).unwrap()[0].is_identity());
        assert_eq!(w_group(3, -4).unwrap().len(), 8);
        assert_eq!(w_group(8, -4).unwrap().len(), 32);
        assert_eq!(w_group(7, -3).unwrap().len(), 36);
        assert_eq!(w_group(7, -4).unwrap().len(), 48);
        for (n, d) in [(6, -7), (12, -8), (9, -11), (10, -3)] {
            assert_eq!(w_group(n, d).unwrap().len(), brute_count(n, d));
        }
    }

    #[test]
    fn group_order_is_multiplicative() {
        for d in [-3, -4, -7, -8, -11] {
            for (a, b) in [(2, 3), (3, 5), (4, 7), (5, 8)] {
                let ab = w_group(a * b, d).unwrap().len();
                assert_eq!(
                    ab,
                    w_group(a, d).unwrap().len() * w_group(b, d).unwrap().len()
                );
            }
        }
    }

    #[test]
    fn kernel_sizes() {
        assert_eq!(kernel_set(5, -4).unwrap().len(), 4);
        assert_eq!(kernel_set(7, -3).unwrap().len(), 6);
        assert_eq!(kernel_set(7, -7).unwrap().len(), 2);
        assert_eq!(kernel_set(3, -7).unwrap().len(), 2);
        assert_eq!(kernel_set(2, -4).unwrap().len(), 2);
        assert_eq!(kernel_set(2, -7).unwrap().len(), 1);
        // kernel is a subgroup
        for (n, d) in [(5, -4), (7, -3), (8, -4), (9, -3)] {
            let k = kernel_set(n, d).unwrap();
            for a in &k {
                for b in &k {
                    assert!(k.contains(&a.mul(b)));
                }
            }
        }
    }

    #[test]
    fn coset_counts() {
        assert_eq!(coset_representatives(3, -4).unwrap().len(), 2);
        assert_eq!(coset_representatives(5, -4).unwrap().len(), 4);
        assert_eq!(coset_representatives(7, -3).unwrap().len(), 6);
        assert_eq!(coset_representatives(7, -4).unwrap().len(), 12);
        assert_eq!(coset_representatives(2, -4).unwrap().len(), 1);
    }

    #[test]
    fn decompose_examples() {
        let id = WMatrix::new(5, -4, 1, 0).unwrap();
        assert_eq!(decompose(&id).unwrap(), (1, Sl2::IDENTITY));
        assert!(WMatrix::new(5, -4, 0, 1).is_err());
        let a = WMatrix::new(5, -4, 1, 1).unwrap();
        assert_eq!(a.matrix().entries(), [2, 0, 1, 1]);
        let (d, g2) = decompose(&a).unwrap();
        assert_eq!(d, 2);
        assert_eq!(g2.reduce(5).scale_rows(1, d), a.matrix());
    }

    #[test]
    fn index_action_examples() {
        let x = FrickeIndex::parse("0,1/5").unwrap();
        let id = WMatrix::new(5, -4, 1, 0).unwrap();
        assert_eq!(act_fricke_index(&id, &x).unwrap(), x);
        let minus = WMatrix::new(5, -4, -1, 0).unwrap();
        assert_eq!(act_fricke_index(&minus, &x).unwrap(), x);
        let two = WMatrix::new(5, -4, 2, 0).unwrap();
        assert_eq!(
            act_fricke_index(&two, &x).unwrap(),
            FrickeIndex::parse("0,2/5").unwrap()
        );
        // composite route: γ1 = diag(1, d) then γ2
        for a in w_group(5, -4).unwrap() {
            let (d, g2) = decompose(&a).unwrap();
            let (n1, n2) = x.numerators();
            let after_g1 = FrickeIndex::from_numerators(n1, n2 * d, 5).unwrap();
            assert_eq!(after_g1.act_sl2(&g2), act_fricke_index(&a, &x).unwrap());
        }
    }

    #[test]
    fn ring_subgroup_examples() {
        let r = ring_subgroup(5, -4).unwrap();
        assert_eq!(r.iter().map(|w| w.t).collect::<Vec<_>>(), [1, 2, 3, 4]);
        assert_eq!(ring_subgroup(2, -4).unwrap().len(), 1);
    }

    #[test]
    fn gamma0_representative_keeps_coset_and_raises_point() {
        let theta = theta_point(-11).unwrap().tau;
        for a in coset_representatives(7, -11).unwrap() {
            let (_, g2) = decompose(&a).unwrap();
            let g = best_gamma0_representative(&g2, &theta, 7);
            let delta = g * g2.inverse();
            assert_eq!(delta.c.rem_euclid(7), 0);
            assert!(theta.apply(&g).imag_f64() >= theta.apply(&g2).imag_f64() - 1e-12);
        }
    }

    #[test]
    fn orbit_of_t2_at_i_is_512() {
        let ctx = PrecisionContext::default();
        let g = HauptmodulSpec::t(2).unwrap();
        let o = galois_orbit_function(&g, -4, &ctx).unwrap();
        assert_eq!(o.len(), 1);
        assert_eq!(
            recognize_integer_complex(&o.conjugates[0].1, &ctx).unwrap(),
            512
        );
    }

    #[test]
    fn orbit_of_t3_over_minus_8() {
        let ctx = PrecisionContext::default();
        let g = HauptmodulSpec::t(3).unwrap();
        assert_eq!(galois_orbit_function(&g, -8, &ctx).unwrap().len(), 2);
    }

    #[test]
    fn fricke_orbit_examples() {
        let ctx = PrecisionContext::default();
        let o = galois_orbit_fricke(&FrickeIndex::parse("0,1/2").unwrap(), 2, -4, &ctx).unwrap();
        assert_eq!(o.len(), 1);
        let o = galois_orbit_fricke(&FrickeIndex::parse("0,1/5").unwrap(), 2, -4, &ctx).unwrap();
        assert_eq!(o.coset_count, 4);
        assert_eq!(4 % o.len(), 0);
        assert!(matches!(
            galois_orbit_fricke(&FrickeIndex::parse("0,1/2").unwrap(), 1, -15, &ctx),
            Err(Error::ClassNumberNotOne {
                disc: -15,
                class_number: 2
            })
        ));
    }

    #[test]
    fn j_level_orbit_matches_form_enumeration() {
        let ctx = PrecisionContext::default();
        for (n, d) in [(3i64, -8i64), (2, -7), (3, -7), (5, -4)] {
            let orbit = galois_orbit_j_level(n, d, &ctx).unwrap();
            let forms = reduced_forms(n * n * d).unwrap();
            assert_eq!(orbit.len(), forms.len(), "N = {n}, d = {d}");
            let bits = orbit.bits;
            for f in forms {
                let v = crate::modular::qseries::j(&form_to_cm_point(&f).unwrap(), bits).unwrap();
                assert!(orbit.values().iter().any(|u| agree(u, &v, 64)), "{f}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn decompose_round_trip(n in 2i64..30, di in 0usize..5, seed in any::<u32>()) {
            let d_k = [-3, -4, -7, -8, -11][di];
            let group = w_group(n, d_k).unwrap();
            let a = group[seed as usize % group.len()];
            let (d, g2) = decompose(&a).unwrap();
            prop_assert_eq!(g2.a * g2.d - g2.b * g2.c, 1);
            prop_assert_eq!(g2.reduce(n).scale_rows(1, d), a.matrix());
        }
    }
}
