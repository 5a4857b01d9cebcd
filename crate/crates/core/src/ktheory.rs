//! `K_0` of builder varieties in Riemann-Roch coordinates.
//!
//! A [`KClass`] is stored as its image `τ(x) ∈ CH ⊗ Q`. On a smooth variety
//! `τ(y·[O_X]) = Todd(T_X)·ch(y)`, which identifies `K^0` with `K_0`. The
//! integral lattice `K_0(X)` is spanned by the τ-images of the structure
//! sheaves of the cell closures; that basis is unit-triangular with respect
//! to dimension, so membership, coordinates and the topological filtration
//! are all read off by back-substitution.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::algebra::{
    ensure_prime, p_pow, residue, CellularVariety, ChowClass, Class, RationalClass,
};
use crate::char_classes::{
    theta_p, todd_tangent, todd_tangent_inverse, w_chp_component, VirtualBundle,
};
use crate::error::{Error, Result};
use crate::varieties::Morphism;

/// The lattice spanned by the τ-classes of cell closures.
#[derive(Debug, Clone)]
pub struct TauLattice {
    variety: Arc<CellularVariety>,
}

impl TauLattice {
    pub fn new(variety: &Arc<CellularVariety>) -> Self {
        TauLattice {
            variety: variety.clone(),
        }
    }

    pub fn variety(&self) -> &Arc<CellularVariety> {
        &self.variety
    }

    /// Coordinates of `v` in the τ basis (always exists over `Q`).
    pub fn coordinates(&self, v: &RationalClass) -> Vec<BigRational> {
        let n = self.variety.num_cells();
        let mut residual: Vec<BigRational> = v.coeffs().to_vec();
        let mut coords = vec![BigRational::zero(); n];
        let tau = self.variety.tau_matrix();
        for &b in self.variety.cells_by_dim_desc() {
            let c = residual[b].clone();
            if c.is_zero() {
                continue;
            }
            for (i, t) in tau[b].iter().enumerate() {
                if !t.is_zero() {
                    residual[i] -= &c * t;
                }
            }
            coords[b] = c;
        }
        debug_assert!(residual.iter().all(Zero::is_zero));
        coords
    }

    /// `Σ coords[b] · τ[O_{Z_b}]`
    pub fn combination(&self, coords: &[BigRational]) -> RationalClass {
        let n = self.variety.num_cells();
        let mut out = vec![BigRational::zero(); n];
        let tau = self.variety.tau_matrix();
        for (b, c) in coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (i, t) in tau[b].iter().enumerate() {
                if !t.is_zero() {
                    out[i] += c * t;
                }
            }
        }
        Class::from_vec(&self.variety, out).expect("coordinate vector has cell length")
    }

    pub fn contains(&self, v: &RationalClass) -> bool {
        self.coordinates(v).iter().all(BigRational::is_integer)
    }
}

/// Whether `v` lies in the integer span of the τ columns.
pub fn lattice_membership(lattice: &TauLattice, v: &RationalClass) -> bool {
    lattice.contains(v)
}

/// Element of `K_0(X)` (or `K_0(X) ⊗ Q`) in τ-coordinates.
#[derive(Clone, PartialEq, Eq)]
pub struct KClass {
    tau: RationalClass,
    integral: bool,
}

impl std::fmt::Debug for KClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = if self.integral { "K" } else { "K⊗Q" };
        write!(f, "{kind}[τ = {:?}]", self.tau)
    }
}

impl KClass {
    pub fn from_tau(tau: RationalClass) -> Self {
        let integral = TauLattice::new(tau.variety()).contains(&tau);
        KClass { tau, integral }
    }

    pub fn zero(variety: &Arc<CellularVariety>) -> Self {
        KClass {
            tau: RationalClass::zero(variety),
            integral: true,
        }
    }

    /// `[O_{Z_b}]` for the closure of cell `b`.
    pub fn lattice_generator(variety: &Arc<CellularVariety>, b: usize) -> Self {
        KClass {
            tau: variety.tau_column(b),
            integral: true,
        }
    }

    /// `[O_X]`
    pub fn structure_sheaf(variety: &Arc<CellularVariety>) -> Self {
        Self::lattice_generator(variety, variety.fundamental_index())
    }

    /// `e · [O_X]`
    pub fn from_bundle(e: &VirtualBundle) -> Self {
        Self::from_tau(&todd_tangent(e.variety()) * e.ch())
    }

    /// The `y ∈ K^0(X)` with `y · [O_X] = self`.
    pub fn to_bundle(&self) -> Result<VirtualBundle> {
        VirtualBundle::from_ch(&todd_tangent_inverse(self.variety()) * &self.tau)
    }

    /// Integral class with the given coordinates in the τ basis.
    pub fn from_coordinates(variety: &Arc<CellularVariety>, coords: &[BigInt]) -> Self {
        let rational: Vec<BigRational> = coords
            .iter()
            .map(|c| BigRational::from_integer(c.clone()))
            .collect();
        KClass {
            tau: TauLattice::new(variety).combination(&rational),
            integral: true,
        }
    }

    pub fn variety(&self) -> &Arc<CellularVariety> {
        self.tau.variety()
    }

    pub fn tau(&self) -> &RationalClass {
        &self.tau
    }

    pub fn is_integral(&self) -> bool {
        self.integral
    }

    pub fn is_zero(&self) -> bool {
        self.tau.is_zero()
    }

    pub fn lattice_coordinates(&self) -> Vec<BigRational> {
        TauLattice::new(self.variety()).coordinates(&self.tau)
    }

    pub fn integral_coordinates(&self) -> Result<Vec<BigInt>> {
        self.lattice_coordinates()
            .into_iter()
            .map(|c| {
                if c.is_integer() {
                    Ok(c.to_integer())
                } else {
                    Err(Error::NonIntegralInput(format!("{self:?}")))
                }
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        KClass {
            tau: &self.tau + &other.tau,
            integral: self.integral && other.integral,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        KClass {
            tau: &self.tau - &other.tau,
            integral: self.integral && other.integral,
        }
    }

    pub fn scale(&self, n: &BigInt) -> Self {
        KClass {
            tau: self.tau.scale(&BigRational::from_integer(n.clone())),
            integral: self.integral,
        }
    }

    pub fn scale_rational(&self, r: &BigRational) -> Self {
        Self::from_tau(self.tau.scale(r))
    }

    /// Action of `K^0` on `K_0`: `τ(e·x) = ch(e)·τ(x)`.
    pub fn twist(&self, e: &VirtualBundle) -> Self {
        Self::from_tau(e.ch() * &self.tau)
    }

    pub fn to_json(&self) -> Value {
        json!({ "tau": self.tau.to_json(), "integral": self.integral })
    }

    pub fn from_json(variety: &Arc<CellularVariety>, value: &Value) -> Result<Self> {
        let tau = value
            .get("tau")
            .ok_or_else(|| Error::Parse("K-class needs a `tau` object".into()))?;
        let class = Self::from_tau(RationalClass::from_json(variety, tau)?);
        if let Some(flag) = value.get("integral").and_then(Value::as_bool) {
            if flag && !class.integral {
                return Err(Error::NonIntegralInput(format!("{class:?}")));
            }
        }
        Ok(class)
    }
}

/// Canonical lift of a Chow class through `φ`: `[Z_b] ↦ [O_{Z_b}]`.
pub fn k0_from_chow_lift(x: &ChowClass) -> KClass {
    KClass::from_coordinates(x.variety(), x.coeffs())
}

/// Largest homological degree carrying a nonzero τ-component.
pub fn filtration_level(x: &KClass) -> Result<usize> {
    x.tau.top_dimension().ok_or(Error::ZeroClass)
}

/// Image of `x` in `gr_d K_0 ≅ CH_d` for a declared level `d ≥` the actual one.
pub fn phi_at_level(x: &KClass, d: usize) -> Result<ChowClass> {
    if let Some(level) = x.tau.top_dimension() {
        if level > d {
            return Err(Error::LevelViolation(format!(
                "{x:?} has level {level} > {d}"
            )));
        }
    }
    let coords = x.integral_coordinates()?;
    let variety = x.variety();
    let top = coords
        .into_iter()
        .enumerate()
        .map(|(b, c)| if variety.cell_dim(b) == d { c } else { BigInt::zero() })
        .collect();
    Class::from_vec(variety, top)
}

/// Top graded piece of an integral K-class as a Chow class.
pub fn phi_top(x: &KClass) -> Result<ChowClass> {
    if !x.integral {
        return Err(Error::NonIntegralInput(format!("{x:?}")));
    }
    match x.tau.top_dimension() {
        Some(d) => phi_at_level(x, d),
        None => Ok(ChowClass::zero(x.variety())),
    }
}

/// `ψ^p` on `K^0`: scales the codimension-i part of `ch` by `p^i`.
pub fn adams_upper(y: &VirtualBundle, p: u64) -> Result<VirtualBundle> {
    ensure_prime(p)?;
    VirtualBundle::from_ch(scale_by_codim(y.ch(), p))
}

fn scale_by_codim(c: &RationalClass, p: u64) -> RationalClass {
    let variety = c.variety();
    let coeffs = c
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, v)| v * p_pow(p, variety.cell_codim(i) as i64))
        .collect();
    Class::from_vec(variety, coeffs).expect("same length")
}

/// `Todd(T_X) · ch θ^p(-T_X)`, the factor converting `ψ^p` into `ψ_p`.
fn adams_factor(variety: &Arc<CellularVariety>, p: u64) -> Result<RationalClass> {
    let minus_t = VirtualBundle::tangent(variety).neg();
    let theta = theta_p(&minus_t, p)?;
    Ok(variety.cached_class(&format!("adams_factor_{p}"), || {
        &todd_tangent(variety) * &theta
    }))
}

/// Homological Adams operation on a smooth variety:
/// `ψ_p(y·[O_X]) = θ^p(-T_X) · ψ^p(y) · [O_X]`.
pub fn adams_lower(x: &KClass, p: u64) -> Result<KClass> {
    ensure_prime(p)?;
    let variety = x.variety();
    let ch_y = &todd_tangent_inverse(variety) * &x.tau;
    let upper = scale_by_codim(&ch_y, p);
    let tau = &adams_factor(variety, p)? * &upper;
    Ok(KClass::from_tau(tau))
}

/// `χ(X, x)`: degree of the 0-dimensional part of `τ(x)`.
pub fn euler_char(x: &KClass) -> BigRational {
    x.tau.degree()
}

/// Proper pushforward; τ commutes with it.
pub fn k_pushforward(f: &Morphism, x: &KClass) -> Result<KClass> {
    Ok(KClass::from_tau(f.pushforward(&x.tau)?))
}

/// Pullback along an lci morphism of smooth varieties, through `K^0`.
pub fn k_pullback(f: &Morphism, x: &KClass) -> Result<KClass> {
    let y = &todd_tangent_inverse(f.target()) * &x.tau;
    let pulled = f.pullback(&y)?;
    Ok(KClass::from_tau(&todd_tangent(f.source()) * &pulled))
}

/// Whether `y ∈ K^0(X)` lies in the integral lattice.
pub fn k0_lattice_membership(y: &VirtualBundle) -> bool {
    let tau = &todd_tangent(y.variety()) * y.ch();
    TauLattice::new(y.variety()).contains(&tau)
}

/// One summand `e_k` of a Bott decomposition.
#[derive(Debug, Clone)]
pub struct BottPart {
    pub k: usize,
    /// Integral coordinates of `e_k · [O_X]` in the τ basis.
    pub coordinates: Vec<BigInt>,
    pub bundle: VirtualBundle,
    /// Component of `e_k` in codimension exactly `k(p-1)`.
    pub top: ChowClass,
}

/// `θ^p(e) = Σ_k p^{rank(e) - k} e_k` with `e_k` of codimension `≥ k(p-1)`.
#[derive(Debug, Clone)]
pub struct BottDecomposition {
    pub p: u64,
    pub rank: BigInt,
    pub parts: Vec<BottPart>,
}

impl BottDecomposition {
    /// `Σ_k p^{rank - k} ch(e_k)`
    pub fn reconstruct(&self, variety: &Arc<CellularVariety>) -> RationalClass {
        let rank: i64 = self.rank.clone().try_into().expect("rank fits in i64");
        self.parts.iter().fold(RationalClass::zero(variety), |acc, part| {
            &acc + &part.bundle.ch().scale(&p_pow(self.p, rank - part.k as i64))
        })
    }
}

/// Splits the Bott class of `e` into its p-adic layers.
///
/// The extraction runs on the lattice coordinates of `θ^p(e)·[O_X]`: a
/// coordinate on a cell of codimension `q` belongs to `e_k` with
/// `k = ⌊q/(p-1)⌋` and must be divisible by `p^{rank - k}`.
pub fn bott_decompose(e: &VirtualBundle, p: u64) -> Result<BottDecomposition> {
    ensure_prime(p)?;
    let variety = e.variety();
    let step = (p - 1) as usize;
    let rank: i64 = e
        .rank()
        .clone()
        .try_into()
        .map_err(|_| Error::DecompositionFailure("rank out of range".into()))?;
    let theta = theta_p(e, p)?;
    let lattice = TauLattice::new(variety);
    let coords = lattice.coordinates(&(&todd_tangent(variety) * &theta));
    let kmax = variety.dim() / step;
    let mut layers = vec![vec![BigInt::zero(); variety.num_cells()]; kmax + 1];
    for (b, c) in coords.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let k = variety.cell_codim(b) / step;
        let scaled = c * p_pow(p, k as i64 - rank);
        if !scaled.is_integer() {
            return Err(Error::DecompositionFailure(format!(
                "coordinate {c} on {} is not divisible by p^{}",
                variety.label(b),
                rank - k as i64
            )));
        }
        layers[k][b] = scaled.to_integer();
    }
    let mut parts = Vec::with_capacity(kmax + 1);
    for (k, layer) in layers.into_iter().enumerate() {
        let kclass = KClass::from_coordinates(variety, &layer);
        let bundle = kclass.to_bundle()?;
        let codim = k * step;
        if let Some(low) = bundle.ch().lowest_dimension() {
            if variety.dim() - low < codim {
                return Err(Error::DecompositionFailure(format!(
                    "e_{k} has support in codimension {} < {codim}",
                    variety.dim() - low
                )));
            }
        }
        let top = Class::from_vec(
            variety,
            layer
                .iter()
                .enumerate()
                .map(|(b, c)| if variety.cell_codim(b) == codim { c.clone() } else { BigInt::zero() })
                .collect(),
        )?;
        let expected = w_chp_component(e, p, k)?;
        let congruent = top
            .coeffs()
            .iter()
            .zip(expected.coeffs())
            .all(|(a, b)| residue(&(a - b), p) == 0);
        if !congruent {
            return Err(Error::DecompositionFailure(format!(
                "top part {top:?} of e_{k} is not congruent to w_{k} = {expected:?} mod {p}"
            )));
        }
        parts.push(BottPart {
            k,
            coordinates: layer,
            bundle,
            top,
        });
    }
    let decomposition = BottDecomposition {
        p,
        rank: e.rank().clone(),
        parts,
    };
    if decomposition.reconstruct(variety) != theta {
        return Err(Error::DecompositionFailure("layers do not sum to θ^p(e)".into()));
    }
    Ok(decomposition)
}

/// `ψ^p(g) - g^p`, which lies in `p · K^0` by the congruence for Adams
/// operations.
pub fn psi_power_defect(g: &VirtualBundle, p: u64) -> Result<VirtualBundle> {
    let upper = adams_upper(g, p)?;
    let power = g.ch().pow(p as u32);
    VirtualBundle::from_ch(upper.ch() - &power)
}

/// Whether `ψ^p(g) ≡ g^p` modulo `p·K^0`.
pub fn psi_power_congruence(g: &VirtualBundle, p: u64) -> Result<bool> {
    let defect = psi_power_defect(g, p)?;
    let quotient = VirtualBundle::from_ch(defect.ch().scale(&BigRational::new(BigInt::one(), BigInt::from(p))));
    Ok(match quotient {
        Ok(q) => k0_lattice_membership(&q),
        Err(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, rat_frac};
    use crate::varieties::{odd_quadric, projective_space};

    fn rclass(v: &Arc<CellularVariety>, coeffs: &[BigRational]) -> RationalClass {
        RationalClass::from_vec(v, coeffs.to_vec()).unwrap()
    }

    #[test]
    fn canonical_lift_examples() {
        let p2 = projective_space(2).unwrap();
        let line = ChowClass::basis(&p2, 1);
        assert_eq!(k0_from_chow_lift(&line).tau(), &rclass(&p2, &[rat(0), rat(1), rat(1)]));
        assert!(k0_from_chow_lift(&ChowClass::zero(&p2)).is_zero());
        let pt = ChowClass::basis(&p2, 2);
        assert_eq!(k0_from_chow_lift(&pt).tau(), &rclass(&p2, &[rat(0), rat(0), rat(1)]));
    }

    #[test]
    fn phi_top_examples() {
        let p2 = projective_space(2).unwrap();
        let x = KClass::from_tau(rclass(&p2, &[rat(0), rat(1), rat(1)]));
        assert_eq!(phi_top(&x).unwrap(), ChowClass::basis(&p2, 1));
        let pt = KClass::from_tau(rclass(&p2, &[rat(0), rat(0), rat(1)]));
        assert_eq!(phi_top(&pt).unwrap(), ChowClass::basis(&p2, 2));
        let two_pt = KClass::from_tau(rclass(&p2, &[rat(0), rat(0), rat(2)]));
        assert_eq!(phi_top(&two_pt).unwrap(), ChowClass::basis(&p2, 2).scale(&BigInt::from(2)));
        let half = KClass::from_tau(rclass(&p2, &[rat(0), rat_frac(1, 2), rat(0)]));
        assert!(matches!(phi_top(&half), Err(Error::NonIntegralInput(_))));
    }

    #[test]
    fn filtration_level_examples() {
        let p2 = projective_space(2).unwrap();
        assert_eq!(filtration_level(&KClass::lattice_generator(&p2, 1)).unwrap(), 1);
        assert_eq!(filtration_level(&KClass::structure_sheaf(&p2)).unwrap(), 2);
        assert_eq!(filtration_level(&KClass::lattice_generator(&p2, 2)).unwrap(), 0);
        assert_eq!(filtration_level(&KClass::zero(&p2)).unwrap_err(), Error::ZeroClass);
    }

    #[test]
    fn lattice_membership_examples() {
        let q3 = odd_quadric(3).unwrap();
        let lattice = TauLattice::new(&q3);
        let col = q3.tau_column(1);
        assert!(lattice_membership(&lattice, &col));
        assert!(!lattice_membership(&lattice, &col.scale(&rat_frac(1, 2))));
        assert!(lattice_membership(&lattice, &(&col + &q3.tau_column(2))));
    }

    #[test]
    fn adams_upper_examples() {
        let p2 = projective_space(2).unwrap();
        let h = ChowClass::basis(&p2, 1);
        let o_minus1 = VirtualBundle::line_bundle(&-&h).unwrap();
        let o_minus2 = VirtualBundle::line_bundle(&h.scale(&BigInt::from(-2))).unwrap();
        assert_eq!(o_minus1.ch(), &rclass(&p2, &[rat(1), rat(-1), rat_frac(1, 2)]));
        assert_eq!(adams_upper(&o_minus1, 2).unwrap(), o_minus2);
        let triv = VirtualBundle::trivial(&p2, 4);
        assert_eq!(adams_upper(&triv, 5).unwrap(), triv);
        let p1 = projective_space(1).unwrap();
        let t = VirtualBundle::tangent(&p1);
        let o6 = VirtualBundle::line_bundle(&ChowClass::basis(&p1, 1).scale(&BigInt::from(6))).unwrap();
        assert_eq!(adams_upper(&t, 3).unwrap(), o6);
    }

    #[test]
    fn adams_lower_examples() {
        let p1 = projective_space(1).unwrap();
        let o = KClass::structure_sheaf(&p1);
        assert_eq!(adams_lower(&o, 2).unwrap().tau(), &rclass(&p1, &[rat_frac(1, 2), rat(1)]));
        let pt = KClass::lattice_generator(&p1, 1);
        assert_eq!(adams_lower(&pt, 2).unwrap(), pt);
        assert!(adams_lower(&KClass::zero(&p1), 3).unwrap().is_zero());
    }

    #[test]
    fn euler_characteristics() {
        let p1 = projective_space(1).unwrap();
        assert_eq!(euler_char(&KClass::structure_sheaf(&p1)), rat(1));
        for n in 0..=6 {
            let pn = projective_space(n).unwrap();
            assert_eq!(euler_char(&KClass::structure_sheaf(&pn)), rat(1), "P^{n}");
        }
        let q3 = odd_quadric(3).unwrap();
        assert_eq!(euler_char(&KClass::structure_sheaf(&q3)), rat(1));
    }

    #[test]
    fn bundle_round_trip_through_k0() {
        let q5 = odd_quadric(5).unwrap();
        let t = VirtualBundle::tangent(&q5);
        let k = KClass::from_bundle(&t);
        assert!(k.is_integral());
        assert_eq!(k.to_bundle().unwrap(), t);
    }

    #[test]
    fn bott_examples() {
        let p1 = projective_space(1).unwrap();
        let triv = VirtualBundle::trivial(&p1, 3);
        let d = bott_decompose(&triv, 3).unwrap();
        assert_eq!(d.parts[0].bundle, VirtualBundle::trivial(&p1, 1));
        assert!(d.parts[1..].iter().all(|part| part.coordinates.iter().all(Zero::is_zero)));

        let o1 = VirtualBundle::line_bundle(&ChowClass::basis(&p1, 1)).unwrap();
        let d = bott_decompose(&o1, 2).unwrap();
        assert_eq!(d.parts.len(), 2);
        assert_eq!(d.parts[0].top, ChowClass::one(&p1));
        let h = ChowClass::basis(&p1, 1);
        assert_eq!(residue(d.parts[1].top.coeff(1), 2), 1);
        assert_eq!(d.parts[1].top.coeff(1).clone(), -h.coeff(1).clone());
        assert_eq!(d.reconstruct(&p1), theta_p(&o1, 2).unwrap());

        let p2 = projective_space(2).unwrap();
        let minus_t = VirtualBundle::tangent(&p2).neg();
        let d = bott_decompose(&minus_t, 2).unwrap();
        for part in &d.parts {
            if let Some(low) = part.bundle.ch().lowest_dimension() {
                assert!(2 - low >= part.k);
            }
        }
    }

    #[test]
    fn k_json() {
        let p2 = projective_space(2).unwrap();
        let value = serde_json::json!({"tau":{"h^1":"1","h^2":"1"},"integral":true});
        let k = KClass::from_json(&p2, &value).unwrap();
        assert_eq!(k, KClass::lattice_generator(&p2, 1));
        assert_eq!(k.to_json(), value);
        let bad = serde_json::json!({"tau":{"h^1":"1/2"},"integral":true});
        assert!(KClass::from_json(&p2, &bad).is_err());
    }
}
