//! Executable property suites. Each suite walks a family of varieties,
//! primes and classes, records every check it performs and collects
//! counterexamples instead of stopping at the first one.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::algebra::{p_pow, residue, CellularVariety, ChowClass, Class, ModPClass, RationalClass};
use crate::char_classes::{
    chern, chern_rational, multiplicative_class, theta_p, todd, todd_tangent,
    todd_tangent_inverse, w_chp, w_chp_component, w_chp_integral, SeriesSpec, VirtualBundle,
};
use crate::error::{Error, Result};
use crate::ktheory::{
    adams_lower, adams_upper, bott_decompose, euler_char, k0_from_chow_lift, k_pullback,
    k_pushforward, phi_top, psi_power_congruence, KClass,
};
use crate::steenrod::{
    atiyah_decompose, chi_defect, degree_formula_witness, segre_number,
    steenrod_cohomological, steenrod_homological, steenrod_homological_from_lift,
    total_cohomological, total_homological,
};
use crate::varieties::{
    build_morphism, external_product_mod_p, odd_quadric, product, projective_space,
    registered_morphisms, Morphism, MorphismKind,
};

pub const SUITES: [&str; 15] = [
    "algebra",
    "whitney",
    "bott",
    "psipower",
    "integrality",
    "rr-naturality",
    "lift-independence",
    "cartan",
    "wu",
    "xp",
    "s0",
    "segre",
    "degree-formula",
    "chi-defect",
    "lucas-oracle",
];

/// Parameters shared by all suites.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub primes: Vec<u64>,
    /// Restricts the suite to these varieties instead of the default family.
    pub varieties: Option<Vec<Arc<CellularVariety>>>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub seed: u64,
    pub trials: usize,
    pub max_dim: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            primes: vec![2, 3, 5],
            varieties: None,
            n: None,
            k: None,
            seed: 0,
            trials: 100,
            max_dim: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub check: String,
    pub detail: Value,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: usize,
    pub failures: Vec<Counterexample>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "passed": self.passed(),
            "checks": self.checks,
            "failures": self.failures.len(),
            "counterexample": self.failures.first().map(|c| json!({"check": c.check, "detail": c.detail})),
        })
    }
}

struct Recorder {
    checks: usize,
    failures: Vec<Counterexample>,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            checks: 0,
            failures: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, check: &str, detail: impl FnOnce() -> Value) {
        self.checks += 1;
        if !ok {
            self.failures.push(Counterexample {
                check: check.to_string(),
                detail: detail(),
            });
        }
    }

    /// Records an engine error raised while evaluating a check.
    fn fail(&mut self, check: &str, context: Value, err: &Error) {
        self.checks += 1;
        self.failures.push(Counterexample {
            check: check.to_string(),
            detail: json!({ "context": context, "error": err.to_string() }),
        });
    }

    fn guard<T>(&mut self, check: &str, context: impl FnOnce() -> Value, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.fail(check, context(), &e);
                None
            }
        }
    }

    fn finish(self, suite: &str) -> SuiteReport {
        SuiteReport {
            suite: suite.to_string(),
            checks: self.checks,
            failures: self.failures,
        }
    }
}

/// Projective spaces, products of two projective spaces and odd quadrics up
/// to `max_dim`.
pub fn builders(max_dim: usize) -> Result<Vec<Arc<CellularVariety>>> {
    let mut out = Vec::new();
    for n in 1..=max_dim.min(8) {
        out.push(projective_space(n)?);
    }
    for a in 1..=3 {
        for b in a..=6 - a {
            if a + b <= max_dim {
                out.push(product(&projective_space(a)?, &projective_space(b)?)?);
            }
        }
    }
    for d in [3, 5, 7] {
        if d <= max_dim {
            out.push(odd_quadric(d)?);
        }
    }
    Ok(out)
}

/// `P^a × P^b` with `a, b ≥ 1`, `a + b ≤ 6`.
pub fn projective_products(max_dim: usize) -> Result<Vec<Arc<CellularVariety>>> {
    let mut out = Vec::new();
    for a in 1..=5 {
        for b in 1..=6 - a {
            if a + b <= max_dim {
                out.push(product(&projective_space(a)?, &projective_space(b)?)?);
            }
        }
    }
    Ok(out)
}

fn varieties(cfg: &SuiteConfig) -> Result<Vec<Arc<CellularVariety>>> {
    match &cfg.varieties {
        Some(v) => Ok(v.clone()),
        None => builders(cfg.max_dim),
    }
}

fn morphisms(cfg: &SuiteConfig) -> Result<Vec<Arc<Morphism>>> {
    let mut out = Vec::new();
    for kind in registered_morphisms() {
        let f = build_morphism(&kind)?;
        if f.source().dim().max(f.target().dim()) > cfg.max_dim {
            continue;
        }
        if let Some(vs) = &cfg.varieties {
            let touches = vs
                .iter()
                .any(|v| v.same_as(f.source()) || v.same_as(f.target()));
            if !touches {
                continue;
            }
        }
        out.push(f);
    }
    Ok(out)
}

/// Primes `p` with `p - 1 ≤ dim X`.
fn primes_for(cfg: &SuiteConfig, v: &CellularVariety) -> Vec<u64> {
    cfg.primes
        .iter()
        .copied()
        .filter(|&p| (p - 1) as usize <= v.dim())
        .collect()
}

fn stream_seed(seed: u64, tag: &str, p: u64) -> u64 {
    // FNV-1a keeps the per-case streams stable across platforms and builds.
    let mut h: u64 = 0xcbf29ce484222325;
    for b in tag.bytes().chain(p.to_le_bytes()).chain(seed.to_le_bytes()) {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn rng_for(seed: u64, tag: &str, p: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, tag, p))
}

/// Random line bundle `O(Σ a_i D_i)` over the divisor cells.
pub fn random_line_bundle(v: &Arc<CellularVariety>, rng: &mut impl Rng) -> VirtualBundle {
    let divisors: Vec<usize> = v.cells_of_dim(v.dim().saturating_sub(1)).collect();
    let mut c1 = ChowClass::zero(v);
    if v.dim() > 0 {
        for b in divisors {
            c1 = &c1 + &ChowClass::basis(v, b).scale(&BigInt::from(rng.gen_range(-3i64..=3)));
        }
    }
    VirtualBundle::line_bundle(&c1).expect("codimension-one class")
}

/// Random virtual bundle built from line bundles and the tangent bundle.
pub fn random_bundle(v: &Arc<CellularVariety>, rng: &mut impl Rng) -> VirtualBundle {
    let mut e = VirtualBundle::zero(v);
    for _ in 0..rng.gen_range(1..=3) {
        let l = random_line_bundle(v, rng);
        e = if rng.gen_bool(0.75) { e.add(&l) } else { e.sub(&l) };
    }
    match rng.gen_range(0..4) {
        0 => e.add(&VirtualBundle::tangent(v)),
        1 => e.sub(&VirtualBundle::tangent(v)),
        _ => e,
    }
}

/// `n choose k mod p` from the base-p digits of `n` and `k`.
pub fn lucas_binomial(n: u64, k: u64, p: u64) -> u64 {
    let (mut n, mut k) = (n, k);
    let mut acc = 1u64;
    while k > 0 {
        let (nd, kd) = (n % p, k % p);
        if kd > nd {
            return 0;
        }
        let mut c = 1u64;
        for i in 0..kd {
            c = c * (nd - i) / (i + 1);
        }
        acc = acc * (c % p) % p;
        n /= p;
        k /= p;
    }
    acc
}

/// Line bundles `O(i·D)`, `|i| ≤ 3`, on every divisor cell `D`.
pub fn line_bundle_powers(v: &Arc<CellularVariety>) -> Vec<(String, VirtualBundle)> {
    let mut out = Vec::new();
    if v.dim() == 0 {
        return out;
    }
    for b in v.cells_of_dim(v.dim() - 1) {
        for i in -3i64..=3 {
            let c1 = ChowClass::basis(v, b).scale(&BigInt::from(i));
            out.push((
                format!("O({i}·{})", v.label(b)),
                VirtualBundle::line_bundle(&c1).expect("divisor"),
            ));
        }
    }
    out
}

fn lattice_generators(v: &Arc<CellularVariety>) -> Vec<(usize, KClass)> {
    (0..v.num_cells())
        .map(|b| (b, KClass::lattice_generator(v, b)))
        .collect()
}

fn ctx(v: &CellularVariety, p: u64, what: impl Into<String>) -> Value {
    json!({ "variety": v.name(), "p": p, "input": what.into() })
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut r = Recorder::new();
    match name {
        "algebra" => suite_algebra(cfg, &mut r)?,
        "whitney" => suite_whitney(cfg, &mut r)?,
        "bott" => suite_bott(cfg, &mut r)?,
        "psipower" => suite_psipower(cfg, &mut r)?,
        "integrality" => suite_integrality(cfg, &mut r)?,
        "rr-naturality" => suite_rr(cfg, &mut r)?,
        "lift-independence" => suite_lift_independence(cfg, &mut r)?,
        "cartan" => suite_cartan(cfg, &mut r)?,
        "wu" => suite_wu(cfg, &mut r)?,
        "xp" => suite_xp(cfg, &mut r)?,
        "s0" => suite_s0(cfg, &mut r)?,
        "segre" => suite_segre(cfg, &mut r)?,
        "degree-formula" => suite_degree_formula(cfg, &mut r)?,
        "chi-defect" => suite_chi_defect(cfg, &mut r)?,
        "lucas-oracle" => suite_lucas(cfg, &mut r)?,
        other => {
            return Err(Error::Parse(format!(
                "unknown suite `{other}`; expected one of {}",
                SUITES.join(", ")
            )))
        }
    }
    Ok(r.finish(name))
}

fn suite_algebra(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        let one = RationalClass::one(&v);
        r.check(
            &todd_tangent(&v) * &todd_tangent_inverse(&v) == one,
            "todd inverse",
            || ctx(&v, 0, "Todd(T)"),
        );
        let t = VirtualBundle::tangent(&v);
        let order = v.dim();
        if let Some(c) = r.guard("chern via series", || ctx(&v, 0, "T"), multiplicative_class(&SeriesSpec::chern(order), &t)) {
            r.check(c == chern_rational(&t), "chern via series", || ctx(&v, 0, "T"));
        }
        let generators: Vec<VirtualBundle> = (0..v.num_cells())
            .map(|b| KClass::lattice_generator(&v, b).to_bundle())
            .collect::<Result<_>>()?;
        for &p in &cfg.primes {
            for (a, ga) in generators.iter().enumerate() {
                for (b, gb) in generators.iter().enumerate().skip(a) {
                    let lhs = adams_upper(&ga.tensor(gb), p)?;
                    let rhs = adams_upper(ga, p)?.tensor(&adams_upper(gb, p)?);
                    r.check(lhs == rhs, "adams multiplicativity", || {
                        ctx(&v, p, format!("{} ⊗ {}", v.label(a), v.label(b)))
                    });
                }
            }
        }
        for b in 0..v.num_cells() {
            let x = ChowClass::basis(&v, b);
            let lift = k0_from_chow_lift(&x);
            r.check(phi_top(&lift).ok() == Some(x.clone()), "phi of canonical lift", || {
                ctx(&v, 0, v.label(b))
            });
            if v.cell_dim(b) == 0 {
                r.check(euler_char(&lift) == x.degree(), "deg of phi", || ctx(&v, 0, v.label(b)));
            }
        }
    }
    Ok(())
}

fn suite_whitney(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        let mut rng = rng_for(cfg.seed, v.name(), 0);
        let trials = (cfg.trials / 5).max(5);
        for t in 0..trials {
            let e = random_bundle(&v, &mut rng);
            let f = random_bundle(&v, &mut rng);
            let sum = e.add(&f);
            let detail = || json!({"variety": v.name(), "trial": t, "e": e.to_json(), "f": f.to_json()});
            r.check(
                chern_rational(&sum) == &chern_rational(&e) * &chern_rational(&f),
                "whitney chern",
                detail,
            );
            r.check(todd(&sum)? == &todd(&e)? * &todd(&f)?, "whitney todd", detail);
            for &p in &cfg.primes {
                let th = theta_p(&sum, p)?;
                r.check(th == &theta_p(&e, p)? * &theta_p(&f, p)?, "whitney theta", detail);
                r.check(
                    &theta_p(&e, p)? * &theta_p(&e.neg(), p)? == RationalClass::one(&v),
                    "theta inverse",
                    detail,
                );
                r.check(w_chp(&sum, p)? == &w_chp(&e, p)? * &w_chp(&f, p)?, "whitney w", detail);
            }
            // w^{CH,2}(e) is the alternating total Chern class.
            let c = chern(&e)?;
            let alternating = Class::from_vec(
                &v,
                c.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(b, x)| if v.cell_codim(b) % 2 == 1 { -x } else { x.clone() })
                    .collect(),
            )?;
            r.check(w_chp_integral(&e, 2)? == alternating, "w at 2 is alternating chern", detail);
        }
    }
    Ok(())
}

/// Checks the Bott decomposition of `e` against its defining properties.
pub fn check_bott(e: &VirtualBundle, p: u64) -> std::result::Result<(), String> {
    let v = e.variety();
    let d = bott_decompose(e, p).map_err(|err| err.to_string())?;
    let theta = theta_p(e, p).map_err(|err| err.to_string())?;
    if d.reconstruct(v) != theta {
        return Err("Σ p^{rank-k} e_k ≠ θ^p(e)".into());
    }
    let step = (p - 1) as usize;
    for part in &d.parts {
        if !KClass::from_bundle(&part.bundle).is_integral() {
            return Err(format!("e_{} is not integral", part.k));
        }
        if let Some(low) = part.bundle.ch().lowest_dimension() {
            if v.dim() - low < part.k * step {
                return Err(format!("e_{} has support below codim {}", part.k, part.k * step));
            }
        }
        let w = w_chp_component(e, p, part.k).map_err(|err| err.to_string())?;
        let ok = part
            .top
            .coeffs()
            .iter()
            .zip(w.coeffs())
            .all(|(a, b)| residue(&(a - b), p) == 0);
        if !ok {
            return Err(format!("top part of e_{} is not w_{} mod {p}", part.k, part.k));
        }
    }
    Ok(())
}

fn suite_bott(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        let t = VirtualBundle::tangent(&v);
        let mut bundles = vec![("T".to_string(), t.clone()), ("-T".to_string(), t.neg())];
        bundles.extend(line_bundle_powers(&v));
        for &p in &cfg.primes {
            for (label, e) in &bundles {
                let res = check_bott(e, p);
                r.check(res.is_ok(), "bott decomposition", || {
                    json!({"variety": v.name(), "p": p, "bundle": label, "error": res.clone().err()})
                });
            }
        }
    }
    Ok(())
}

fn suite_psipower(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        for &p in &cfg.primes {
            for (b, g) in lattice_generators(&v) {
                let bundle = g.to_bundle()?;
                let ok = psi_power_congruence(&bundle, p)?;
                r.check(ok, "psi^p(g) - g^p in p·K", || ctx(&v, p, v.label(b)));
            }
        }
    }
    Ok(())
}

/// `ψ_p` scales the dimension-j component of `τ` by `p^{-j}`.
pub fn adams_lower_by_dimension(x: &KClass, p: u64) -> RationalClass {
    let v = x.variety();
    let coeffs = x
        .tau()
        .coeffs()
        .iter()
        .enumerate()
        .map(|(b, c)| c * p_pow(p, -(v.cell_dim(b) as i64)))
        .collect();
    Class::from_vec(v, coeffs).expect("same length")
}

fn suite_integrality(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        for &p in &cfg.primes {
            for (b, x) in lattice_generators(&v) {
                let d = v.cell_dim(b);
                let psi = adams_lower(&x, p)?;
                let defect = psi.tau() - &x.tau().scale(&p_pow(p, -(d as i64)));
                r.check(
                    defect.top_dimension().is_none_or(|top| top < d),
                    "psi_p(x) = p^-d x mod lower levels",
                    || ctx(&v, p, v.label(b)),
                );
                r.check(
                    psi.tau() == &adams_lower_by_dimension(&x, p),
                    "psi_p via dimension scaling",
                    || ctx(&v, p, v.label(b)),
                );
            }
        }
    }
    for f in morphisms(cfg)? {
        if !f.flags().proper {
            continue;
        }
        for &p in &cfg.primes {
            for (b, x) in lattice_generators(f.source()) {
                let lhs = adams_lower(&k_pushforward(&f, &x)?, p)?;
                let rhs = k_pushforward(&f, &adams_lower(&x, p)?)?;
                r.check(lhs == rhs, "psi_p commutes with pushforward", || {
                    json!({"morphism": f.name(), "p": p, "input": f.source().label(b)})
                });
            }
        }
    }
    Ok(())
}

fn suite_rr(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for f in morphisms(cfg)? {
        let Some(tf) = f.virtual_tangent() else {
            continue;
        };
        for &p in &cfg.primes {
            let twist = theta_p(&tf.neg(), p)?;
            for (b, x) in lattice_generators(f.target()) {
                let lhs = adams_lower(&k_pullback(&f, &x)?, p)?;
                let rhs = &twist * k_pullback(&f, &adams_lower(&x, p)?)?.tau();
                r.check(lhs.tau() == &rhs, "psi_p under lci pullback", || {
                    json!({"morphism": f.name(), "p": p, "input": f.target().label(b)})
                });
            }
        }
    }
    Ok(())
}

/// Random integral class supported on cells of dimension `≤ max_dim`.
fn random_lattice_element(
    v: &Arc<CellularVariety>,
    max_dim: Option<usize>,
    rng: &mut impl Rng,
) -> KClass {
    let coords: Vec<BigInt> = (0..v.num_cells())
        .map(|b| match max_dim {
            Some(m) if v.cell_dim(b) <= m => BigInt::from(rng.gen_range(-4i64..=4)),
            _ => BigInt::zero(),
        })
        .collect();
    KClass::from_coordinates(v, &coords)
}

fn suite_lift_independence(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        for p in primes_for(cfg, &v) {
            let mut rng = rng_for(cfg.seed, v.name(), p);
            for t in 0..cfg.trials {
                let d = rng.gen_range(0..=v.dim());
                let residues: Vec<u64> = (0..v.num_cells())
                    .map(|b| if v.cell_dim(b) == d { rng.gen_range(0..p) } else { 0 })
                    .collect();
                let x = ModPClass::from_residues(&v, p, residues)?;
                let canonical = k0_from_chow_lift(&x.lift());
                let pb = BigInt::from(p);
                let perturbed = canonical
                    .add(&random_lattice_element(&v, Some(d), &mut rng).scale(&pb))
                    .add(&match d.checked_sub(1) {
                        Some(lower) => random_lattice_element(&v, Some(lower), &mut rng),
                        None => KClass::zero(&v),
                    });
                let context = || {
                    json!({"variety": v.name(), "p": p, "trial": t, "input": x.to_json(),
                           "lift": perturbed.to_json()})
                };
                let Some(expected) = r.guard("canonical lift", context, steenrod_homological_from_lift(&canonical, d, p)) else {
                    continue;
                };
                let Some(actual) = r.guard("perturbed lift", context, steenrod_homological_from_lift(&perturbed, d, p)) else {
                    continue;
                };
                r.check(expected == actual, "lift independence", context);
            }
        }
    }
    Ok(())
}

fn suite_cartan(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    let products = match &cfg.varieties {
        Some(v) => v.iter().filter(|x| x.factors().len() == 2).cloned().collect(),
        None => projective_products(cfg.max_dim)?,
    };
    for xy in products {
        let (x, y) = (xy.factors()[0].clone(), xy.factors()[1].clone());
        for p in primes_for(cfg, &xy) {
            for a in 0..x.num_cells() {
                let sa = total_cohomological(&ModPClass::basis(&x, p, a))?;
                for b in 0..y.num_cells() {
                    let sb = total_cohomological(&ModPClass::basis(&y, p, b))?;
                    let ab = external_product_mod_p(&ModPClass::basis(&x, p, a), &ModPClass::basis(&y, p, b))?;
                    let lhs = total_cohomological(&ab)?;
                    let rhs = external_product_mod_p(&sa, &sb)?;
                    r.check(lhs == rhs, "cartan", || {
                        json!({"variety": xy.name(), "p": p, "input": [x.label(a), y.label(b)],
                               "lhs": lhs.to_json(), "rhs": rhs.to_json()})
                    });
                }
            }
        }
    }
    for v in varieties(cfg)? {
        for p in primes_for(cfg, &v) {
            let totals: Vec<ModPClass> = (0..v.num_cells())
                .map(|b| total_cohomological(&ModPClass::basis(&v, p, b)))
                .collect::<Result<_>>()?;
            for a in 0..v.num_cells() {
                for b in a..v.num_cells() {
                    let prod = ModPClass::basis(&v, p, a).try_mul(&ModPClass::basis(&v, p, b))?;
                    let lhs = total_cohomological(&prod)?;
                    let rhs = totals[a].try_mul(&totals[b])?;
                    r.check(lhs == rhs, "total operation is multiplicative", || {
                        ctx(&v, p, format!("{} · {}", v.label(a), v.label(b)))
                    });
                }
            }
        }
    }
    Ok(())
}

fn suite_wu(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for f in morphisms(cfg)? {
        let (x, y) = (f.source().clone(), f.target().clone());
        for p in primes_for(cfg, &x).into_iter().chain(primes_for(cfg, &y)) {
            if (p - 1) as usize > x.dim().min(y.dim()) && x.dim().min(y.dim()) > 0 {
                continue;
            }
            let context = |what: &str, label: &str| json!({"morphism": f.name(), "p": p, "check": what, "input": label});
            if f.flags().lci || f.flags().flat {
                for b in 0..y.num_cells() {
                    let cls = ModPClass::basis(&y, p, b);
                    let lhs = total_cohomological(&f.pullback_mod_p(&cls)?)?;
                    let rhs = f.pullback_mod_p(&total_cohomological(&cls)?)?;
                    r.check(lhs == rhs, "pullback naturality", || context("pullback", y.label(b)));
                }
            }
            if f.flags().proper {
                let w = match f.virtual_tangent() {
                    Some(tf) => Some(w_chp_integral(&tf.neg(), p)?.reduce_mod(p)),
                    None => None,
                };
                for b in 0..x.num_cells() {
                    let cls = ModPClass::basis(&x, p, b);
                    let lhs = total_homological(&f.pushforward_mod_p(&cls)?)?;
                    let rhs = f.pushforward_mod_p(&total_homological(&cls)?)?;
                    r.check(lhs == rhs, "homological pushforward", || context("homological", x.label(b)));
                    if let Some(w) = &w {
                        let lhs = total_cohomological(&f.pushforward_mod_p(&cls)?)?;
                        let rhs = f.pushforward_mod_p(&w.try_mul(&total_cohomological(&cls)?)?)?;
                        r.check(lhs == rhs, "wu pushforward", || context("wu", x.label(b)));
                    }
                }
            }
        }
    }
    Ok(())
}

fn suite_xp(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        for p in primes_for(cfg, &v) {
            for b in 0..v.num_cells() {
                let q = v.cell_codim(b);
                let x = ModPClass::basis(&v, p, b);
                let s = steenrod_cohomological(&x)?;
                let mut xp = x.clone();
                for _ in 1..p {
                    xp = xp.try_mul(&x)?;
                }
                let top = s.get(q).cloned().unwrap_or_else(|| ModPClass::zero(&v, p));
                r.check(top == xp, "S^q(x) = x^p", || {
                    json!({"variety": v.name(), "p": p, "input": v.label(b), "S^q": top.to_json(), "x^p": xp.to_json()})
                });
                for (k, part) in s.iter().enumerate().skip(q + 1) {
                    r.check(part.is_zero(), "S^k(x) = 0 for k > q", || {
                        json!({"variety": v.name(), "p": p, "input": v.label(b), "k": k})
                    });
                }
            }
        }
    }
    Ok(())
}

fn suite_s0(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        for &p in &cfg.primes {
            for b in 0..v.num_cells() {
                let x = ModPClass::basis(&v, p, b);
                let hom = steenrod_homological(&x)?;
                r.check(hom[0] == x, "homological S_0 = id", || ctx(&v, p, v.label(b)));
                let coh = steenrod_cohomological(&x)?;
                r.check(coh[0] == x, "cohomological S^0 = id", || ctx(&v, p, v.label(b)));
                let step = (p - 1) as usize;
                for (k, part) in hom.iter().enumerate() {
                    if k * step > v.cell_dim(b) {
                        r.check(part.is_zero(), "homological vanishing", || ctx(&v, p, v.label(b)));
                    }
                }
            }
        }
    }
    Ok(())
}

fn suite_segre(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    let mut cases: Vec<(Arc<CellularVariety>, u64)> = Vec::new();
    for &p in &cfg.primes {
        let step = (p - 1) as usize;
        let kmax = cfg.k.unwrap_or(match p {
            2 => 4,
            3 => 2,
            _ => 1,
        });
        for k in 1..=kmax {
            if k * step <= cfg.max_dim {
                cases.push((projective_space(k * step)?, p));
            }
        }
        if p == 2 {
            for d in [3, 5, 7] {
                if d <= cfg.max_dim {
                    cases.push((odd_quadric(d)?, 2));
                }
            }
        }
    }
    if let Some(vs) = &cfg.varieties {
        cases = vs
            .iter()
            .flat_map(|v| cfg.primes.iter().map(move |&p| (v.clone(), p)))
            .filter(|(v, p)| v.dim() > 0 && v.dim() % (*p as usize - 1) == 0)
            .collect();
    }
    for (v, p) in cases {
        let minus_t = VirtualBundle::tangent(&v).neg();
        let value = w_chp_integral(&minus_t, p)?.grade_component(0).degree().to_integer();
        r.check(residue(&value, p) == 0, "segre divisibility", || {
            json!({"variety": v.name(), "p": p, "value": value.to_string()})
        });
        let reported = segre_number(&v, p);
        r.check(reported.as_ref().ok() == Some(&value), "segre_number", || {
            json!({"variety": v.name(), "p": p, "value": value.to_string(),
                   "reported": format!("{reported:?}")})
        });
    }
    Ok(())
}

fn suite_degree_formula(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for v in varieties(cfg)? {
        for &p in &cfg.primes {
            for (b, x) in lattice_generators(&v) {
                let Some(w) = r.guard("degree formula", || ctx(&v, p, v.label(b)), degree_formula_witness(&x, p)) else {
                    continue;
                };
                let expected = BigRational::from_integer(w.lambda.clone())
                    * p_pow(p, (v.cell_dim(b) / (p - 1) as usize) as i64)
                    * euler_char(&x);
                r.check(w.degree() == expected && residue(&w.lambda, p) != 0, "degree identity", || {
                    json!({"variety": v.name(), "p": p, "input": v.label(b), "witness": w.to_json()})
                });
            }
        }
    }
    Ok(())
}

fn suite_chi_defect(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    for m in [2usize, 3, 5] {
        let f = build_morphism(&MorphismKind::PnSelfMap { m })?;
        for &p in &cfg.primes {
            let Some(report) = r.guard("chi defect", || json!({"morphism": f.name(), "p": p}), chi_defect(&f, p)) else {
                continue;
            };
            let expected = BigInt::one() - BigInt::from(m);
            let witness_ok = report.witness.degree()
                == BigRational::from_integer(&report.witness.lambda * &expected);
            r.check(report.defect == expected && witness_ok, "chi defect 1 - m", || {
                json!({"morphism": f.name(), "p": p, "report": report.to_json()})
            });
        }
    }
    for n in 1..=3.min(cfg.max_dim) {
        let id = build_morphism(&MorphismKind::LinearEmbedding { m: n, n })?;
        for &p in &cfg.primes {
            if let Some(report) = r.guard("chi defect", || json!({"morphism": id.name(), "p": p}), chi_defect(&id, p)) {
                r.check(
                    report.defect.is_zero() && report.witness.cycle.is_zero(),
                    "identity has no defect",
                    || json!({"morphism": id.name(), "p": p}),
                );
            }
        }
    }
    Ok(())
}

fn suite_lucas(cfg: &SuiteConfig, r: &mut Recorder) -> Result<()> {
    let nmax = cfg.n.unwrap_or(8).min(cfg.max_dim);
    for n in 1..=nmax {
        let v = projective_space(n)?;
        for i in 0..=n {
            // h^i has codimension i and sits at index i.
            let s = total_cohomological(&ModPClass::basis(&v, 2, i))?;
            for j in 0..=n {
                let expected = if j >= i { lucas_binomial(i as u64, (j - i) as u64, 2) } else { 0 };
                r.check(s.coeffs()[j] == expected, "Sq(h^i) = h^i(1+h)^i", || {
                    json!({"variety": v.name(), "i": i, "j": j, "got": s.coeffs()[j], "expected": expected})
                });
            }
        }
    }
    Ok(())
}

/// Runs the decomposition on every lattice generator and checks the
/// reconstruction identity.
pub fn check_atiyah(v: &Arc<CellularVariety>, p: u64) -> std::result::Result<(), String> {
    for (b, x) in lattice_generators(v) {
        let d = atiyah_decompose(&x, p).map_err(|e| format!("{}: {e}", v.label(b)))?;
        let psi = adams_lower(&x, p).map_err(|e| e.to_string())?;
        if &d.reconstruct() != psi.tau() {
            return Err(format!("{}: reconstruction differs", v.label(b)));
        }
        let step = (p - 1) as usize;
        for (k, part) in d.parts.iter().enumerate() {
            if !part.is_integral() {
                return Err(format!("{}: x_{k} not integral", v.label(b)));
            }
            if let Some(level) = part.tau().top_dimension() {
                if level + k * step > d.level {
                    return Err(format!("{}: x_{k} has level {level}", v.label(b)));
                }
            }
        }
        let diff = d.parts[0].sub(&x);
        if diff.tau().top_dimension().is_some_and(|l| l >= d.level) {
            return Err(format!("{}: x_0 ≢ x modulo lower levels", v.label(b)));
        }
    }
    Ok(())
}
