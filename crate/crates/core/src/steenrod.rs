//! Reduced Steenrod operations on mod-p Chow groups, extracted from the
//! p-adic expansion of the homological Adams operation.
//!
//! For `x ∈ K_0(X)` of filtration level `d` the class `ψ_p(x)` admits an
//! expansion `Σ_k p^{-d-k} x_k` with `x_k` of level `≤ d - k(p-1)`. Reading
//! the top graded piece of each `x_k` modulo `p` gives the homological
//! operation `S^X_k`; twisting by `w^{CH,p}(T_X)` gives the cohomological one.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::algebra::{
    ensure_prime, is_p_integral, p_pow, residue, CellularVariety, ChowClass, Class, ModPClass,
    RationalClass,
};
use crate::char_classes::{w_chp, w_chp_integral, VirtualBundle};
use crate::error::{Error, Result};
use crate::ktheory::{adams_lower, euler_char, k0_from_chow_lift, k_pushforward, KClass, TauLattice};
use crate::varieties::Morphism;

/// `ψ_p(x) = Σ_k p^{-d-k} x_k`.
#[derive(Debug, Clone)]
pub struct AtiyahDecomposition {
    pub x: KClass,
    pub p: u64,
    /// Declared filtration level of `x`.
    pub level: usize,
    /// `parts[k] = x_k`, each integral of level `≤ level - k(p-1)`.
    pub parts: Vec<KClass>,
}

impl AtiyahDecomposition {
    /// `Σ_k p^{-d-k} τ(x_k)`
    pub fn reconstruct(&self) -> RationalClass {
        let variety = self.x.variety();
        self.parts
            .iter()
            .enumerate()
            .fold(RationalClass::zero(variety), |acc, (k, part)| {
                &acc + &part
                    .tau()
                    .scale(&p_pow(self.p, -((self.level + k) as i64)))
            })
    }

    /// Coordinates of `x_k` on the cells of dimension exactly `d - k(p-1)`.
    pub fn top_part(&self, k: usize) -> Result<ChowClass> {
        let variety = self.x.variety();
        let step = (self.p - 1) as usize;
        let Some(target) = self.level.checked_sub(k * step) else {
            return Ok(ChowClass::zero(variety));
        };
        let Some(part) = self.parts.get(k) else {
            return Ok(ChowClass::zero(variety));
        };
        let coords = part.integral_coordinates()?;
        Class::from_vec(
            variety,
            coords
                .into_iter()
                .enumerate()
                .map(|(b, c)| if variety.cell_dim(b) == target { c } else { BigInt::zero() })
                .collect(),
        )
    }
}

/// Decomposes `ψ_p(x)` at the actual filtration level of `x` (0 for `x = 0`).
pub fn atiyah_decompose(x: &KClass, p: u64) -> Result<AtiyahDecomposition> {
    let level = x.tau().top_dimension().unwrap_or(0);
    atiyah_decompose_at_level(x, p, level)
}

/// Greedy top-down extraction treating `x` as an element of `F_d`.
pub fn atiyah_decompose_at_level(x: &KClass, p: u64, d: usize) -> Result<AtiyahDecomposition> {
    ensure_prime(p)?;
    if !x.is_integral() {
        return Err(Error::NonIntegralInput(format!("{x:?}")));
    }
    let variety = x.variety();
    if let Some(level) = x.tau().top_dimension() {
        if level > d {
            return Err(Error::LevelViolation(format!(
                "{x:?} has level {level} > declared {d}"
            )));
        }
    }
    let step = (p - 1) as usize;
    let kmax = d / step;
    let target = adams_lower(x, p)?;
    let lattice = TauLattice::new(variety);
    let coords = lattice.coordinates(target.tau());
    let mut layers = vec![vec![BigInt::zero(); variety.num_cells()]; kmax + 1];
    for (b, c) in coords.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let j = variety.cell_dim(b);
        if j > d {
            return Err(Error::ExtractionFailure(format!(
                "ψ_{p}({x:?}) has a component on {} above level {d}",
                variety.label(b)
            )));
        }
        let k = (d - j) / step;
        let m = c * p_pow(p, (d + k) as i64);
        if !m.is_integer() {
            return Err(Error::ExtractionFailure(format!(
                "coefficient {c} of {} in ψ_{p}({x:?}) times p^{} = {m} is not integral",
                variety.label(b),
                d + k
            )));
        }
        layers[k][b] = m.to_integer();
    }
    let parts = layers
        .iter()
        .map(|layer| KClass::from_coordinates(variety, layer))
        .collect();
    let decomposition = AtiyahDecomposition {
        x: x.clone(),
        p,
        level: d,
        parts,
    };
    if &decomposition.reconstruct() != target.tau() {
        return Err(Error::ExtractionFailure(format!(
            "nonzero residual after extracting ψ_{p}({x:?})"
        )));
    }
    Ok(decomposition)
}

fn max_k(variety: &Arc<CellularVariety>, dims: &[usize], p: u64) -> usize {
    let top = dims.iter().copied().max().unwrap_or(variety.dim());
    top / (p - 1) as usize
}

/// `S^X_k` for `k = 0..=[d/(p-1)]` applied to a chosen integral lift of a
/// homogeneous class of dimension `d`.
pub fn steenrod_homological_from_lift(lift: &KClass, d: usize, p: u64) -> Result<Vec<ModPClass>> {
    let decomposition = atiyah_decompose_at_level(lift, p, d)?;
    (0..decomposition.parts.len())
        .map(|k| Ok(decomposition.top_part(k)?.reduce_mod(p)))
        .collect()
}

/// Homological reduced Steenrod operations; `out[k]` lowers dimension by
/// `k(p-1)`. Mixed inputs are treated one graded piece at a time.
pub fn steenrod_homological(x: &ModPClass) -> Result<Vec<ModPClass>> {
    let p = x.p();
    ensure_prime(p)?;
    let variety = x.variety();
    let dims = x.dimensions();
    let mut out = vec![ModPClass::zero(variety, p); max_k(variety, &dims, p) + 1];
    for d in dims {
        let piece = x.grade_component(d);
        let lift = k0_from_chow_lift(&piece.lift());
        for (k, s) in steenrod_homological_from_lift(&lift, d, p)?
            .into_iter()
            .enumerate()
        {
            out[k] = out[k].try_add(&s)?;
        }
    }
    Ok(out)
}

/// `w^{CH,p}(T_X)` as an integral class.
pub fn tangent_w(variety: &Arc<CellularVariety>, p: u64) -> Result<ChowClass> {
    ensure_prime(p)?;
    let tangent = VirtualBundle::tangent(variety);
    let w = variety.cached_class(&format!("w_tangent_{p}"), || {
        w_chp(&tangent, p).expect("w of the tangent bundle")
    });
    w.to_integral()
        .ok_or_else(|| Error::IntegralityViolation(format!("{w:?}")))
}

/// Cohomological reduced Steenrod operations `S_X = w^{CH,p}(T_X) ∘ S^X`;
/// `out[k]` raises codimension by `k(p-1)`.
pub fn steenrod_cohomological(x: &ModPClass) -> Result<Vec<ModPClass>> {
    let p = x.p();
    let homological = steenrod_homological(x)?;
    twist_by_tangent_w(&homological, p)
}

pub(crate) fn twist_by_tangent_w(homological: &[ModPClass], p: u64) -> Result<Vec<ModPClass>> {
    let Some(first) = homological.first() else {
        return Ok(Vec::new());
    };
    let variety = first.variety().clone();
    let step = (p - 1) as usize;
    let w = tangent_w(&variety, p)?;
    let w_parts: Vec<ModPClass> = (0..homological.len())
        .map(|i| w.codim_component(i * step).reduce_mod(p))
        .collect();
    let mut out = Vec::with_capacity(homological.len());
    for k in 0..homological.len() {
        let mut acc = ModPClass::zero(&variety, p);
        for i in 0..=k {
            acc = acc.try_add(&w_parts[i].try_mul(&homological[k - i])?)?;
        }
        out.push(acc);
    }
    Ok(out)
}

/// Sum of all components.
pub fn total(parts: &[ModPClass]) -> Option<ModPClass> {
    let mut iter = parts.iter();
    let first = iter.next()?.clone();
    Some(iter.fold(first, |acc, s| acc.try_add(s).expect("same variety and prime")))
}

/// Total cohomological operation `S_X(x) = Σ_k S_X^k(x)`.
pub fn total_cohomological(x: &ModPClass) -> Result<ModPClass> {
    let parts = steenrod_cohomological(x)?;
    Ok(total(&parts).unwrap_or_else(|| ModPClass::zero(x.variety(), x.p())))
}

/// Total homological operation `S^X(x) = Σ_k S^X_k(x)`.
pub fn total_homological(x: &ModPClass) -> Result<ModPClass> {
    let parts = steenrod_homological(x)?;
    Ok(total(&parts).unwrap_or_else(|| ModPClass::zero(x.variety(), x.p())))
}

/// `deg w^{CH,p}_k(-T_X)` for `dim X = k(p-1) > 0`; always divisible by `p`.
pub fn segre_number(variety: &Arc<CellularVariety>, p: u64) -> Result<BigInt> {
    ensure_prime(p)?;
    let n = variety.dim();
    let step = (p - 1) as usize;
    if n == 0 || !n.is_multiple_of(step) {
        return Err(Error::DimensionMismatch(format!(
            "dim {} of {} is not a positive multiple of {step}",
            n,
            variety.name()
        )));
    }
    let minus_t = VirtualBundle::tangent(variety).neg();
    let w = w_chp_integral(&minus_t, p)?;
    let value = w.grade_component(0).degree().to_integer();
    if residue(&value, p) != 0 {
        return Err(Error::IntegralityViolation(format!(
            "Segre number {value} of {} is not divisible by {p}",
            variety.name()
        )));
    }
    Ok(value)
}

/// Zero-cycle with `deg(cycle) = λ · p^{[d/(p-1)]} · deg(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeWitness {
    /// p-integral rational zero-cycle.
    pub cycle: RationalClass,
    /// Integer prime to `p`.
    pub lambda: BigInt,
    pub level: usize,
    pub exponent: usize,
}

impl DegreeWitness {
    pub fn degree(&self) -> BigRational {
        self.cycle.degree()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "cycle": self.cycle.to_json(),
            "lambda": self.lambda.to_string(),
            "level": self.level,
            "exponent": self.exponent,
            "degree": self.degree().to_string(),
        })
    }
}

fn witness_at_level(x: &KClass, p: u64, level: usize) -> Result<(RationalClass, BigInt)> {
    let variety = x.variety();
    if x.is_zero() {
        return Ok((RationalClass::zero(variety), BigInt::one()));
    }
    if level == 0 {
        return Ok((x.tau().grade_component(0), BigInt::one()));
    }
    let step = (p - 1) as usize;
    let decomposition = atiyah_decompose_at_level(x, p, level)?;
    // p^e · deg x = deg x_0 + Σ_{k≥1} p^{-k} deg x_k, hence
    // (p^e - 1) · deg x = deg(x_0 - x) + Σ_{k≥1} p^{-k} deg x_k.
    let mut terms: Vec<(RationalClass, BigInt)> = Vec::new();
    let (c0, l0) = witness_at_level(&decomposition.parts[0].sub(x), p, level - 1)?;
    let shift = level / step - (level - 1) / step;
    terms.push((c0.scale(&p_pow(p, shift as i64)), l0));
    for (k, part) in decomposition.parts.iter().enumerate().skip(1) {
        terms.push(witness_at_level(part, p, level - k * step)?);
    }
    let lambda_common: BigInt = terms.iter().map(|(_, l)| l.clone()).product();
    let mut cycle = RationalClass::zero(variety);
    for (c, l) in &terms {
        let factor = BigRational::from_integer(&lambda_common / l);
        cycle = &cycle + &c.scale(&factor);
    }
    let unit = BigInt::from(p).pow(level as u32) - BigInt::one();
    let cycle = cycle.scale(&BigRational::new(BigInt::one(), unit));
    Ok((cycle, lambda_common))
}

/// Witness for the degree formula at the filtration level of `x`.
pub fn degree_formula_witness(x: &KClass, p: u64) -> Result<DegreeWitness> {
    let level = x.tau().top_dimension().unwrap_or(0);
    degree_formula_witness_at_level(x, p, level)
}

pub fn degree_formula_witness_at_level(x: &KClass, p: u64, level: usize) -> Result<DegreeWitness> {
    ensure_prime(p)?;
    if !x.is_integral() {
        return Err(Error::NonIntegralInput(format!("{x:?}")));
    }
    let (cycle, lambda) = witness_at_level(x, p, level)?;
    let exponent = level / (p - 1) as usize;
    let witness = DegreeWitness {
        cycle,
        lambda,
        level,
        exponent,
    };
    verify_witness(&witness, x, p)?;
    Ok(witness)
}

fn verify_witness(w: &DegreeWitness, x: &KClass, p: u64) -> Result<()> {
    if w.cycle.top_dimension().unwrap_or(0) != 0 {
        return Err(Error::IntegralityViolation(format!(
            "witness {:?} is not a zero-cycle",
            w.cycle
        )));
    }
    if !w.cycle.coeffs().iter().all(|c| is_p_integral(c, p)) {
        return Err(Error::IntegralityViolation(format!(
            "witness {:?} is not {p}-integral",
            w.cycle
        )));
    }
    if w.lambda.is_zero() || residue(&w.lambda, p) == 0 {
        return Err(Error::IntegralityViolation(format!(
            "λ = {} is not prime to {p}",
            w.lambda
        )));
    }
    let expected = BigRational::from_integer(w.lambda.clone())
        * p_pow(p, w.exponent as i64)
        * euler_char(x);
    if w.degree() != expected {
        return Err(Error::IntegralityViolation(format!(
            "witness degree {} differs from λ·p^{}·deg(x) = {expected}",
            w.degree(),
            w.exponent
        )));
    }
    Ok(())
}

/// Data of the χ-defect computation for `f: X → Y` of equal dimension.
#[derive(Debug, Clone)]
pub struct ChiDefect {
    pub degree: BigInt,
    pub chi_source: BigRational,
    pub chi_target: BigRational,
    /// `χ(O_X) - deg f · χ(O_Y)`
    pub defect: BigInt,
    /// `f_*[O_X] - deg f · [O_Y]`
    pub delta: KClass,
    pub witness: DegreeWitness,
}

impl ChiDefect {
    pub fn to_json(&self) -> Value {
        json!({
            "degree": self.degree.to_string(),
            "chi_source": self.chi_source.to_string(),
            "chi_target": self.chi_target.to_string(),
            "defect": self.defect.to_string(),
            "delta": self.delta.to_json(),
            "witness": self.witness.to_json(),
        })
    }
}

pub fn chi_defect(f: &Morphism, p: u64) -> Result<ChiDefect> {
    ensure_prime(p)?;
    let (x, y) = (f.source(), f.target());
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} has dimension {} but {} has dimension {}",
            x.name(),
            x.dim(),
            y.name(),
            y.dim()
        )));
    }
    let d = x.dim();
    let degree = f.degree();
    let pushed = k_pushforward(f, &KClass::structure_sheaf(x))?;
    let delta = pushed.sub(&KClass::structure_sheaf(y).scale(&degree));
    if let Some(level) = delta.tau().top_dimension() {
        if level + 1 > d {
            return Err(Error::LevelViolation(format!(
                "f_*[O_X] - deg f·[O_Y] has level {level}, expected < {d}"
            )));
        }
    }
    let chi_source = euler_char(&KClass::structure_sheaf(x));
    let chi_target = euler_char(&KClass::structure_sheaf(y));
    let defect = &chi_source - BigRational::from_integer(degree.clone()) * &chi_target;
    if defect != euler_char(&delta) || !defect.is_integer() {
        return Err(Error::IntegralityViolation(format!(
            "χ-defect {defect} differs from deg δ = {}",
            euler_char(&delta)
        )));
    }
    let witness = degree_formula_witness_at_level(&delta, p, d.saturating_sub(1))?;
    Ok(ChiDefect {
        degree,
        chi_source,
        chi_target,
        defect: defect.to_integer(),
        delta,
        witness,
    })
}
