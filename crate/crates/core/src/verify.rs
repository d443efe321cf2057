//! Numerical verification suites with per-check residuals.

use std::fmt;
use std::str::FromStr;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rug::Complex;
use serde::Serialize;

use crate::class_poly::{integer_poly_from_roots, verify_main2, verify_ringclasslemma};
use crate::error::{Error, Result};
use crate::hauptmodul::HauptmodulSpec;
use crate::modular::{
    fricke_at, fricke_from_relation, fricke_reduced_at, fricke_transform_check,
    j_invariance_residual, qseries, FrickeIndex, Route, Tau,
};
use crate::numerics::{agree, relative_residual, stable_values, PrecisionContext};
use crate::quad_fields::theta_point;
use crate::reciprocity::{
    act_fricke_index, coset_representatives, decompose, galois_orbit_fricke, kernel_set, w_group,
};
use crate::sl2::Sl2;

/// Discriminants with `h_K = 1` used by the main2 grid.
pub const MAIN2_DISCS: &[i64] = &[-4, -7, -8, -11];
/// Levels of the main2 grid.
pub const MAIN2_LEVELS: &[u64] = &[2, 3, 4, 5, 7];
/// `(d_K, N)` pairs of the kernel suite.
pub const KERNEL_CASES: &[(i64, i64)] = &[(-4, 5), (-4, 8), (-3, 7)];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Transform,
    Relations,
    Dual,
    Invariance,
    Kernel,
    Main2,
    Ringlemma,
    Franz,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Transform,
        Suite::Relations,
        Suite::Dual,
        Suite::Invariance,
        Suite::Kernel,
        Suite::Main2,
        Suite::Ringlemma,
        Suite::Franz,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Transform => "transform",
            Suite::Relations => "relations",
            Suite::Dual => "dual",
            Suite::Invariance => "invariance",
            Suite::Kernel => "kernel",
            Suite::Main2 => "main2",
            Suite::Ringlemma => "ringlemma",
            Suite::Franz => "franz",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Relative residual, when the check is a numerical identity.
    pub residual: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn residual(name: String, residual: f64, threshold: f64) -> Self {
        CheckResult {
            name,
            passed: residual < threshold,
            residual: Some(residual),
            detail: format!("threshold {threshold:.3e}"),
        }
    }

    fn flag(name: String, passed: bool, detail: String) -> Self {
        CheckResult {
            name,
            passed,
            residual: None,
            detail,
        }
    }

    fn skipped(name: String, detail: String) -> Self {
        CheckResult {
            name,
            passed: true,
            residual: None,
            detail: format!("skipped: {detail}"),
        }
    }

    fn from_error(name: String, e: Error) -> Self {
        CheckResult::flag(name, false, e.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<CheckResult>) -> Self {
        SuiteReport {
            suite,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub samples: Option<usize>,
    pub seed: u64,
    pub disc: Option<i64>,
    pub level: Option<i64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: None,
            seed: 0x5eed,
            disc: None,
            level: None,
        }
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions, ctx: &PrecisionContext) -> SuiteReport {
    match suite {
        Suite::Transform => transform_suite(opts.samples.unwrap_or(100), opts.seed, ctx),
        Suite::Relations => relations_suite(opts.samples.unwrap_or(50), opts.seed, ctx),
        Suite::Dual => dual_route_suite(opts.samples.unwrap_or(50), opts.seed, ctx),
        Suite::Invariance => invariance_suite(opts.samples.unwrap_or(20), opts.seed, ctx),
        Suite::Kernel => {
            let cases: Vec<(i64, i64)> = match (opts.disc, opts.level) {
                (Some(d), Some(n)) => vec![(d, n)],
                _ => KERNEL_CASES.to_vec(),
            };
            kernel_suite(&cases, ctx)
        }
        Suite::Main2 => {
            let discs = opts.disc.map_or(MAIN2_DISCS.to_vec(), |d| vec![d]);
            let levels = opts.level.map_or(MAIN2_LEVELS.to_vec(), |n| vec![n as u64]);
            main2_suite(&discs, &levels, ctx)
        }
        Suite::Ringlemma => {
            let discs = opts.disc.map_or(MAIN2_DISCS.to_vec(), |d| vec![d]);
            let levels = opts.level.map_or(vec![2, 3, 5], |n| vec![n]);
            ringlemma_suite(&discs, &levels, ctx)
        }
        Suite::Franz => {
            let discs = opts.disc.map_or(vec![-3, -4, -7, -8], |d| vec![d]);
            let levels = opts.level.map_or(vec![2, 3, 4, 5], |n| vec![n]);
            franz_suite(&discs, &levels, ctx)
        }
    }
}

pub fn random_sl2(rng: &mut StdRng, steps: usize) -> Sl2 {
    let mut g = Sl2::IDENTITY;
    for _ in 0..steps {
        g = g * Sl2::translation(rng.gen_range(-2..=2)) * Sl2::S;
    }
    if rng.gen_bool(0.5) {
        g = g * Sl2::translation(rng.gen_range(-3..=3));
    }
    g
}

pub fn random_index(rng: &mut StdRng, max_den: i64) -> FrickeIndex {
    loop {
        let n = rng.gen_range(2..=max_den);
        if let Ok(x) = FrickeIndex::from_numerators(rng.gen_range(0..n), rng.gen_range(0..n), n) {
            return x;
        }
    }
}

pub fn random_tau(rng: &mut StdRng, im_lo: f64, im_hi: f64) -> Tau {
    Tau::from_f64(rng.gen_range(-0.5..0.5), rng.gen_range(im_lo..im_hi))
        .expect("positive imaginary part")
}

/// `f_x(γτ) = f_{xγ}(τ)` for random `γ`, `x` with denominator `<= 12`, and
/// `0.3 <= Im τ <= 3`.
pub fn transform_suite(samples: usize, seed: u64, ctx: &PrecisionContext) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed);
    let th = ctx.residual_threshold();
    let checks = (0..samples)
        .map(|i| {
            let steps = rng.gen_range(0..=2);
            let g = random_sl2(&mut rng, steps);
            let x = random_index(&mut rng, 12);
            let tau = random_tau(&mut rng, 0.3, 3.0);
            let name = format!("#{i} x=({x}) gamma={g}");
            match fricke_transform_check(&x, &g, &tau, ctx) {
                Ok(r) => CheckResult::residual(name, r, th),
                Err(e) => CheckResult::from_error(name, e),
            }
        })
        .collect();
    SuiteReport::new(Suite::Transform, checks)
}

/// `f^(2) = f²/(2⁸3⁴(j - 1728))` and `f^(3) = -f³/(2⁹3⁶ j(j - 1728))`, with
/// the left side by lattice sums and the right from q-series.
pub fn relations_suite(samples: usize, seed: u64, ctx: &PrecisionContext) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x2e1a);
    let th = ctx.residual_threshold();
    let bits = ctx.working_bits + ctx.guard_bits;
    let mut checks = Vec::new();
    for i in 0..samples {
        let x = random_index(&mut rng, 12);
        let tau = random_tau(&mut rng, 0.5, 2.0);
        let name = format!("#{i} x=({x}) tau={tau}");
        let run = || -> Result<(f64, f64)> {
            let f = qseries::fricke_k1(&x, &tau, bits + 16)?;
            let j = qseries::j(&tau, bits + 16)?;
            let r2 = fricke_from_relation(&f, &j, 2, bits)?;
            let r3 = fricke_from_relation(&f, &j, 3, bits)?;
            let w2 = fricke_at(&x, 2, &tau, Route::Weierstrass, bits)?;
            let w3 = fricke_at(&x, 3, &tau, Route::Weierstrass, bits)?;
            Ok((relative_residual(&r2, &w2), relative_residual(&r3, &w3)))
        };
        match run() {
            Ok((a, b)) => checks.push(CheckResult::residual(format!("{name} k=2,3"), a.max(b), th)),
            Err(Error::SingularRelation) => {
                checks.push(CheckResult::skipped(name, "j near 0 or 1728".into()))
            }
            Err(e) => checks.push(CheckResult::from_error(name, e)),
        }
    }
    // the singular point itself must be routed to the lattice sums
    let x = FrickeIndex::parse("0,1/2").expect("literal index");
    let i = theta_point(-4).expect("d = -4").tau;
    let singular = matches!(
        fricke_at(&x, 2, &i, Route::Series, bits),
        Err(Error::SingularRelation)
    );
    checks.push(CheckResult::flag(
        "series route refuses f^(2) at j = 1728".into(),
        singular,
        String::new(),
    ));
    let quarter = crate::modular::eval_fricke(&x, 2, &i, ctx, Route::Weierstrass)
        .and_then(|st| crate::numerics::recognize_rational(st.value.real(), 1000, ctx));
    checks.push(CheckResult::flag(
        "f^(2)_(0,1/2)(theta_-4) = 1/4".into(),
        matches!(&quarter, Ok(r) if *r == rug::Rational::from((1, 4))),
        format!("{quarter:?}"),
    ));
    SuiteReport::new(Suite::Relations, checks)
}

/// Series and lattice routes of `f^(k)` agree at random points.
pub fn dual_route_suite(samples: usize, seed: u64, ctx: &PrecisionContext) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed ^ 0xd0a1);
    let th = ctx.residual_threshold();
    let bits = ctx.working_bits + ctx.guard_bits;
    let checks = (0..samples)
        .map(|i| {
            let x = random_index(&mut rng, 12);
            let k = rng.gen_range(1..=3u8);
            let tau = random_tau(&mut rng, 0.3, 3.0);
            let name = format!("#{i} k={k} x=({x}) tau={tau}");
            let run = || -> Result<f64> {
                let a = fricke_at(&x, k, &tau, Route::Series, bits)?;
                let b = fricke_at(&x, k, &tau, Route::Weierstrass, bits)?;
                Ok(relative_residual(&a, &b))
            };
            match run() {
                Ok(r) => CheckResult::residual(name, r, th),
                Err(Error::SingularRelation) => {
                    CheckResult::skipped(name, "j near 0 or 1728".into())
                }
                Err(e) => CheckResult::from_error(name, e),
            }
        })
        .collect();
    SuiteReport::new(Suite::Dual, checks)
}

/// `j(γτ) = j(τ)` and `f^(k)_{(r1,r2)}` unchanged under `±` and integer shifts.
pub fn invariance_suite(samples: usize, seed: u64, ctx: &PrecisionContext) -> SuiteReport {
    let mut rng = StdRng::seed_from_u64(seed ^ 0x1a7);
    let th = ctx.residual_threshold();
    let bits = ctx.working_bits + ctx.guard_bits;
    let mut checks = Vec::new();
    for i in 0..samples {
        let steps = rng.gen_range(1..=3);
        let g = random_sl2(&mut rng, steps);
        let tau = random_tau(&mut rng, 0.6, 2.0);
        let name = format!("#{i} j gamma={g}");
        match j_invariance_residual(&g, &tau, ctx) {
            Ok(r) => checks.push(CheckResult::residual(name, r, th)),
            Err(e) => checks.push(CheckResult::from_error(name, e)),
        }
    }
    for i in 0..samples {
        let x = random_index(&mut rng, 12);
        let tau = random_tau(&mut rng, 0.5, 2.0);
        let (n1, n2) = x.numerators();
        let n = x.level();
        let name = format!("#{i} f x=({x})");
        let run = || -> Result<f64> {
            let base = fricke_at(&x, 1, &tau, Route::Weierstrass, bits)?;
            let mut worst = 0f64;
            for (a, b) in [(-n1, -n2), (n1 + n, n2), (n1, n2 + n)] {
                // evaluate the raw, uncanonicalized pair through ℘'s lattice sum
                let r1 = rug::Rational::from((a, n));
                let r2 = rug::Rational::from((b, n));
                let v = crate::modular::lattice::fricke_raw(&r1, &r2, 1, &tau, bits)?;
                worst = worst.max(relative_residual(&base, &v));
            }
            Ok(worst)
        };
        match run() {
            Ok(r) => checks.push(CheckResult::residual(name, r, th)),
            Err(e) => checks.push(CheckResult::from_error(name, e)),
        }
    }
    SuiteReport::new(Suite::Invariance, checks)
}

/// Test indices of denominator `N` for the kernel checks.
fn kernel_test_indices(n: i64) -> Vec<FrickeIndex> {
    [(0, 1), (1, 0), (1, 1), (1, 2), (2, 3)]
        .iter()
        .filter_map(|&(a, b)| FrickeIndex::from_numerators(a, b, n).ok())
        .collect()
}

/// Every kernel element fixes `f^(k)_x(θ_K)`, and `|W|/|kernel|` equals the
/// number of distinct conjugates of `f^(k)_{(0,1/N)}(θ_K)`.
pub fn kernel_suite(cases: &[(i64, i64)], ctx: &PrecisionContext) -> SuiteReport {
    let mut checks = Vec::new();
    for &(d_k, n) in cases {
        let k = (crate::quad_fields::unit_count(d_k) / 2) as u8;
        let run = || -> Result<Vec<CheckResult>> {
            let mut out = Vec::new();
            let theta = theta_point(d_k)?.tau;
            let kernel = kernel_set(n, d_k)?;
            let group = w_group(n, d_k)?;
            let bits = ctx.working_bits + ctx.guard_bits;
            let th = ctx.residual_threshold();
            for x in kernel_test_indices(n) {
                let base = crate::modular::fricke_auto_at(&x, k, &theta, bits)?;
                for kappa in &kernel {
                    let moved = act_fricke_index(kappa, &x)?;
                    let v = crate::modular::fricke_auto_at(&moved, k, &theta, bits)?;
                    out.push(CheckResult::residual(
                        format!(
                            "d={d_k} N={n} x=({x}) kernel (t,s)=({},{})",
                            kappa.t, kappa.s
                        ),
                        relative_residual(&base, &v),
                        th,
                    ));
                }
            }
            let x = FrickeIndex::default_for_modulus(n)?;
            let orbit = galois_orbit_fricke(&x, k, d_k, ctx)?;
            let quotient = group.len() / kernel.len();
            out.push(CheckResult::flag(
                format!("d={d_k} N={n} |W|/|kernel| = distinct conjugates"),
                quotient == orbit.len() && quotient == orbit.coset_count,
                format!(
                    "|W| = {}, |kernel| = {}, cosets = {}, distinct = {}",
                    group.len(),
                    kernel.len(),
                    orbit.coset_count,
                    orbit.len()
                ),
            ));
            Ok(out)
        };
        match run() {
            Ok(c) => checks.extend(c),
            Err(e) => checks.push(CheckResult::from_error(format!("d={d_k} N={n}"), e)),
        }
    }
    SuiteReport::new(Suite::Kernel, checks)
}

/// Degree law of `g(θ_K)` for `t_N` and `s_N` over the grid.
pub fn main2_suite(discs: &[i64], levels: &[u64], ctx: &PrecisionContext) -> SuiteReport {
    let mut checks = Vec::new();
    for &d_k in discs {
        for &n in levels {
            for g in [HauptmodulSpec::t(n), HauptmodulSpec::s(n)]
                .into_iter()
                .flatten()
            {
                let name = format!("{g} d={d_k}");
                checks.push(match verify_main2(&g, d_k, ctx) {
                    Ok(r) => CheckResult::flag(
                        name,
                        true,
                        format!(
                            "conjugates {} = h({}) = {}; cosets {}",
                            r.conjugate_count,
                            n as i64 * n as i64 * d_k,
                            r.expected_degree,
                            r.coset_count
                        ),
                    ),
                    Err(Error::HypothesisFailed(m)) => CheckResult::skipped(name, m),
                    Err(e) => CheckResult::from_error(name, e),
                });
            }
        }
    }
    SuiteReport::new(Suite::Main2, checks)
}

pub fn ringlemma_suite(discs: &[i64], levels: &[i64], ctx: &PrecisionContext) -> SuiteReport {
    let mut checks = Vec::new();
    for &d_k in discs {
        for &n in levels {
            let name = format!("d={d_k} N={n}");
            checks.push(match verify_ringclasslemma(d_k, n, ctx) {
                Ok(r) => CheckResult::flag(
                    name,
                    true,
                    format!(
                        "{} conjugates of b, {} distinct pairs, h = {}",
                        r.conjugates_of_b, r.distinct_pairs, r.class_number_order
                    ),
                ),
                Err(Error::HypothesisFailed(m)) => CheckResult::skipped(name, m),
                Err(e) => CheckResult::from_error(name, e),
            });
        }
    }
    SuiteReport::new(Suite::Ringlemma, checks)
}

/// The pair `(j(Nθ_K), f^(k)_{(1/N,0)}(Nθ_K))` has `|W|/|kernel|` distinct
/// conjugates, and for `k = 1` the values `N²f` form an integral conjugate
/// product.
pub fn franz_suite(discs: &[i64], levels: &[i64], ctx: &PrecisionContext) -> SuiteReport {
    let mut checks = Vec::new();
    for &d_k in discs {
        for &n in levels {
            let name = format!("d={d_k} N={n}");
            match franz_case(d_k, n, ctx) {
                Ok(c) => checks.extend(c),
                Err(e) => checks.push(CheckResult::from_error(name, e)),
            }
        }
    }
    SuiteReport::new(Suite::Franz, checks)
}

fn franz_case(d_k: i64, n: i64, ctx: &PrecisionContext) -> Result<Vec<CheckResult>> {
    let k = (crate::quad_fields::unit_count(d_k) / 2) as u8;
    let theta = theta_point(d_k)?.tau;
    let reps = coset_representatives(n, d_k)?;
    let x = FrickeIndex::from_numerators(1, 0, n)?;
    let points: Vec<Tau> = reps
        .iter()
        .map(|a| decompose(a).map(|(_, g2)| theta.apply(&g2).scaled(n as u64)))
        .collect::<Result<_>>()?;
    let st = stable_values(
        |bits| {
            let mut out = Vec::with_capacity(2 * points.len());
            for p in &points {
                out.push(qseries::j(p, bits)?);
                out.push(fricke_reduced_at(&x, k, p, bits)?);
            }
            Ok(out)
        },
        ctx,
    )?;
    let dedup = ctx.working_bits / 2;
    let pairs: Vec<(Complex, Complex)> = st
        .value
        .chunks(2)
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect();
    let mut distinct: Vec<&(Complex, Complex)> = Vec::new();
    for p in &pairs {
        if !distinct
            .iter()
            .any(|q| agree(&q.0, &p.0, dedup) && agree(&q.1, &p.1, dedup))
        {
            distinct.push(p);
        }
    }
    let mut out = vec![CheckResult::flag(
        format!("d={d_k} N={n} pair conjugates = |W|/|kernel|"),
        distinct.len() == reps.len(),
        format!("{} distinct of {} cosets", distinct.len(), reps.len()),
    )];
    if k == 1 {
        let n2 = n * n;
        let cert = integer_poly_from_roots(
            |bits| {
                points
                    .iter()
                    .map(|p| {
                        fricke_reduced_at(&x, k, p, bits).map(|f| Complex::with_val(bits, f * n2))
                    })
                    .collect()
            },
            ctx,
        );
        out.push(CheckResult::flag(
            format!("d={d_k} N={n} N^2 f integral"),
            cert.as_ref().is_ok_and(|p| p.monic && p.is_integral()),
            match &cert {
                Ok(p) => format!("degree {}", p.degree()),
                Err(e) => e.to_string(),
            },
        ));
    }
    Ok(out)
}
