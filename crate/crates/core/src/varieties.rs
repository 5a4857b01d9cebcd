//! Builders for split cellular varieties and a catalog of morphisms.
//!
//! Builders are memoized in a process-wide append-only registry keyed by the
//! variety name, so repeated requests share one `Arc`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{
    Cell, CellularVariety, ChowClass, Class, Coefficient, ModPClass, Product, RationalClass,
    VarietyData,
};
use crate::char_classes::{exp_class, todd, SeriesSpec, VirtualBundle};
use crate::error::{Error, Result};
use crate::series::Series;

fn registry() -> &'static Mutex<HashMap<String, Arc<CellularVariety>>> {
    static REGISTRY: OnceLock<Mutex<HashMap<String, Arc<CellularVariety>>>> = OnceLock::new();
    REGISTRY.get_or_init(|| Mutex::new(HashMap::new()))
}

fn memoized(
    name: String,
    build: impl FnOnce() -> Result<Arc<CellularVariety>>,
) -> Result<Arc<CellularVariety>> {
    if let Some(v) = registry().lock().expect("registry poisoned").get(&name) {
        return Ok(v.clone());
    }
    let built = build()?;
    let mut map = registry().lock().expect("registry poisoned");
    Ok(map.entry(name).or_insert(built).clone())
}

fn rational(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Coefficients of `(t / (1 - e^{-t}))^k` up to `t^order`.
fn todd_power(k: usize, order: usize) -> Series {
    SeriesSpec::todd(order).series().pow(k as u32)
}

/// Projective space `P^n` with cells `h^0, ..., h^n`.
pub fn projective_space(n: usize) -> Result<Arc<CellularVariety>> {
    memoized(format!("P^{n}"), || {
        let cells: Vec<Cell> = (0..=n).map(|i| Cell::new(format!("h^{i}"), n - i)).collect();
        let mult: Vec<Vec<Product>> = (0..=n)
            .map(|i| {
                (0..=n)
                    .map(|j| {
                        if i + j <= n {
                            vec![(i + j, BigInt::one())]
                        } else {
                            vec![]
                        }
                    })
                    .collect()
            })
            .collect();
        let mut degrees = vec![BigInt::zero(); n + 1];
        degrees[n] = BigInt::one();
        // (n+1) e^h - 1
        let exp = Series::exp_scaled(&BigRational::one(), n);
        let mut tangent_ch: Vec<BigRational> = exp
            .coeffs()
            .iter()
            .map(|c| c * rational(n as i64 + 1))
            .collect();
        tangent_ch[0] -= BigRational::one();
        let tau = (0..=n)
            .map(|j| {
                let s = todd_power(n - j + 1, n);
                let mut col = vec![BigRational::zero(); n + 1];
                for m in 0..=(n - j) {
                    col[j + m] = s.coeff(m);
                }
                col
            })
            .collect();
        CellularVariety::new(VarietyData {
            name: format!("P^{n}"),
            dim: n,
            cells,
            mult,
            degrees,
            tangent_ch,
            tau,
            factors: vec![],
        })
    })
}

/// Index of `h^i` (i ≤ m) or `l_j` in the odd quadric basis.
fn quadric_h(i: usize) -> usize {
    i
}

fn quadric_l(m: usize, j: usize) -> usize {
    m + 1 + (m - j)
}

/// `h^k` in the cell basis of `Q_d`.
fn quadric_h_power(d: usize, k: usize) -> Vec<(usize, BigInt)> {
    let m = (d - 1) / 2;
    if k <= m {
        vec![(quadric_h(k), BigInt::one())]
    } else if k <= d {
        vec![(quadric_l(m, d - k), BigInt::from(2))]
    } else {
        vec![]
    }
}

/// Split odd-dimensional quadric `Q_d ⊂ P^{d+1}`.
///
/// Cells are the linear sections `h^0, ..., h^m` (m = (d-1)/2) and the linear
/// subspaces `l_m, ..., l_0`, with `h^{m+1} = 2 l_m`.
pub fn odd_quadric(d: usize) -> Result<Arc<CellularVariety>> {
    if d.is_multiple_of(2) {
        return Err(Error::EvenDimensionUnsupported(d));
    }
    memoized(format!("Q_{d}"), || build_odd_quadric(d))
}

fn build_odd_quadric(d: usize) -> Result<Arc<CellularVariety>> {
    let m = (d - 1) / 2;
    let n = d + 1;
    let mut cells: Vec<Cell> = (0..=m).map(|i| Cell::new(format!("h^{i}"), d - i)).collect();
    cells.extend((0..=m).rev().map(|j| Cell::new(format!("l_{j}"), j)));
    let kind = |idx: usize| -> (bool, usize) {
        if idx <= m {
            (true, idx)
        } else {
            (false, m - (idx - m - 1))
        }
    };
    let mult: Vec<Vec<Product>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| match (kind(a), kind(b)) {
                    ((true, i), (true, k)) => quadric_h_power(d, i + k),
                    ((true, i), (false, j)) | ((false, j), (true, i)) => {
                        if j >= i {
                            vec![(quadric_l(m, j - i), BigInt::one())]
                        } else {
                            vec![]
                        }
                    }
                    ((false, _), (false, _)) => vec![],
                })
                .collect()
        })
        .collect();
    let mut degrees = vec![BigInt::zero(); n];
    degrees[quadric_l(m, 0)] = BigInt::one();

    // (d+2) e^h - 1 - e^{2h}, through the restriction of the Euler sequence.
    let mut tangent_ch = vec![BigRational::zero(); n];
    let mut factorial = BigInt::one();
    for k in 0..=d {
        if k > 0 {
            factorial *= k;
        }
        let numerator = BigInt::from(d as i64 + 2) - BigInt::from(2).pow(k as u32)
            - if k == 0 { BigInt::one() } else { BigInt::zero() };
        let c = BigRational::new(numerator, factorial.clone());
        for (idx, mult) in quadric_h_power(d, k) {
            tangent_ch[idx] += &c * BigRational::from_integer(mult);
        }
    }

    let name = format!("Q_{d}");
    let identity: Vec<Vec<BigRational>> = (0..n)
        .map(|b| (0..n).map(|i| if i == b { rational(1) } else { rational(0) }).collect())
        .collect();
    let ring = CellularVariety::ring_only(VarietyData {
        name: name.clone(),
        dim: d,
        cells: cells.clone(),
        mult: mult.clone(),
        degrees: degrees.clone(),
        tangent_ch: tangent_ch.clone(),
        tau: identity,
        factors: vec![],
    })?;
    let todd_q = todd(&VirtualBundle::tangent(&ring))?;
    let h = RationalClass::basis(&ring, quadric_h(1));
    // ch of a hyperplane-section structure sheaf: 1 - e^{-h}
    let section = &RationalClass::one(&ring) - &exp_class(&-&h);
    let mut tau = Vec::with_capacity(n);
    let mut current = todd_q.clone();
    for _ in 0..=m {
        tau.push(current.coeffs().to_vec());
        current = &current * &section;
    }
    for j in (0..=m).rev() {
        // push Todd(P^j) along P^j ⊂ Q_d
        let s = todd_power(j + 1, j);
        let mut col = vec![BigRational::zero(); n];
        for a in 0..=j {
            col[quadric_l(m, j - a)] = s.coeff(a);
        }
        tau.push(col);
    }
    CellularVariety::new(VarietyData {
        name,
        dim: d,
        cells,
        mult,
        degrees,
        tangent_ch,
        tau,
        factors: vec![],
    })
}

fn atomic_factors(x: &Arc<CellularVariety>) -> Vec<Arc<CellularVariety>> {
    if x.factors().is_empty() {
        vec![x.clone()]
    } else {
        x.factors().to_vec()
    }
}

/// Product `X × Y` with the Künneth cell structure; cell `(a, b)` has index
/// `a · |Y| + b` and label `a*b`.
pub fn product(x: &Arc<CellularVariety>, y: &Arc<CellularVariety>) -> Result<Arc<CellularVariety>> {
    let name = format!("{}x{}", x.name(), y.name());
    memoized(name.clone(), || {
        let nx = x.num_cells();
        let ny = y.num_cells();
        let idx = |a: usize, b: usize| a * ny + b;
        let mut cells = Vec::with_capacity(nx * ny);
        for a in 0..nx {
            for b in 0..ny {
                cells.push(Cell::new(
                    format!("{}*{}", x.label(a), y.label(b)),
                    x.cell_dim(a) + y.cell_dim(b),
                ));
            }
        }
        let mut mult = vec![vec![Vec::new(); nx * ny]; nx * ny];
        for a in 0..nx {
            for b in 0..ny {
                for c in 0..nx {
                    for e in 0..ny {
                        let mut entry = Vec::new();
                        for (k, ck) in x.product_of_cells(a, c) {
                            for (l, cl) in y.product_of_cells(b, e) {
                                entry.push((idx(*k, *l), ck * cl));
                            }
                        }
                        mult[idx(a, b)][idx(c, e)] = entry;
                    }
                }
            }
        }
        let mut degrees = vec![BigInt::zero(); nx * ny];
        let mut tangent_ch = vec![BigRational::zero(); nx * ny];
        let mut tau = vec![vec![BigRational::zero(); nx * ny]; nx * ny];
        let tx = x.tangent_ch();
        let ty = y.tangent_ch();
        for a in 0..nx {
            for b in 0..ny {
                degrees[idx(a, b)] = &x.degree_vector()[a] * &y.degree_vector()[b];
                if b == y.fundamental_index() {
                    tangent_ch[idx(a, b)] += tx.coeff(a);
                }
                if a == x.fundamental_index() {
                    tangent_ch[idx(a, b)] += ty.coeff(b);
                }
                let col_x = &x.tau_matrix()[a];
                let col_y = &y.tau_matrix()[b];
                let col = &mut tau[idx(a, b)];
                for (i, u) in col_x.iter().enumerate() {
                    if u.is_zero() {
                        continue;
                    }
                    for (j, v) in col_y.iter().enumerate() {
                        col[idx(i, j)] = u * v;
                    }
                }
            }
        }
        let mut factors = atomic_factors(x);
        factors.extend(atomic_factors(y));
        CellularVariety::new(VarietyData {
            name,
            dim: x.dim() + y.dim(),
            cells,
            mult,
            degrees,
            tangent_ch,
            tau,
            factors,
        })
    })
}

/// Product of several varieties, associated to the left.
pub fn product_of(factors: &[Arc<CellularVariety>]) -> Result<Arc<CellularVariety>> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Parse("a product needs at least one factor".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| product(&acc, f))
}

/// `x ⊠ y` on `X × Y`.
pub fn external_product<T: Coefficient>(x: &Class<T>, y: &Class<T>) -> Result<Class<T>> {
    let xy = product(x.variety(), y.variety())?;
    let ny = y.variety().num_cells();
    let mut coeffs = vec![T::zero(); xy.num_cells()];
    for (a, u) in x.coeffs().iter().enumerate() {
        if u.is_zero() {
            continue;
        }
        for (b, v) in y.coeffs().iter().enumerate() {
            coeffs[a * ny + b] = u.clone() * v.clone();
        }
    }
    Class::from_vec(&xy, coeffs)
}

/// `x ⊠ y` for mod-p classes.
pub fn external_product_mod_p(x: &ModPClass, y: &ModPClass) -> Result<ModPClass> {
    let z = external_product(&x.lift(), &y.lift())?;
    Ok(ModPClass::from_chow(&z, x.p()))
}

/// JSON description of a builder variety.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VarietySpec {
    ProjectiveSpace { n: usize },
    Product { factors: Vec<VarietySpec> },
    OddQuadric { dim: usize },
}

impl VarietySpec {
    pub fn build(&self) -> Result<Arc<CellularVariety>> {
        match self {
            VarietySpec::ProjectiveSpace { n } => projective_space(*n),
            VarietySpec::OddQuadric { dim } => odd_quadric(*dim),
            VarietySpec::Product { factors } => {
                let built = factors
                    .iter()
                    .map(VarietySpec::build)
                    .collect::<Result<Vec<_>>>()?;
                product_of(&built)
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            VarietySpec::ProjectiveSpace { n } => *n,
            VarietySpec::OddQuadric { dim } => *dim,
            VarietySpec::Product { factors } => factors.iter().map(VarietySpec::dim).sum(),
        }
    }

    /// Parses either JSON or the shorthand `P^n`, `Q_d`, `P^1xP^2`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.starts_with('{') {
            return serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()));
        }
        let parts: Vec<&str> = text.split('x').map(str::trim).collect();
        let atoms = parts
            .iter()
            .map(|part| {
                let number = |prefix: &str| {
                    part.strip_prefix(prefix)
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| Error::Parse(format!("bad variety `{part}`")))
                };
                if part.starts_with("P^") {
                    Ok(VarietySpec::ProjectiveSpace { n: number("P^")? })
                } else if part.starts_with("Q_") {
                    Ok(VarietySpec::OddQuadric { dim: number("Q_")? })
                } else {
                    Err(Error::Parse(format!("bad variety `{part}`")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(if atoms.len() == 1 {
            atoms.into_iter().next().expect("one atom")
        } else {
            VarietySpec::Product { factors: atoms }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MorphismFlags {
    pub proper: bool,
    pub lci: bool,
    pub flat: bool,
    pub smooth_source: bool,
    pub smooth_target: bool,
}

/// Catalog of morphisms the engine knows how to build.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MorphismKind {
    /// `P^m ↪ P^n`, `m ≤ n` (identity when equal).
    LinearEmbedding { m: usize, n: usize },
    /// Veronese embedding of `P^n` by forms of the given degree.
    Veronese { n: usize, degree: usize },
    /// `Q_d ↪ P^{d+1}`.
    QuadricInProjective { d: usize },
    /// `P^j ↪ Q_d` as a linear subspace.
    LinearInQuadric { j: usize, d: usize },
    /// Projection of `first × second` onto factor `onto` (0 or 1).
    ProductProjection {
        first: VarietySpec,
        second: VarietySpec,
        #[serde(default)]
        onto: usize,
    },
    /// Degree-m self-map of `P^1`.
    PnSelfMap { m: usize },
}

/// Every morphism exercised by the naturality suites.
pub fn registered_morphisms() -> Vec<MorphismKind> {
    let p = |n| VarietySpec::ProjectiveSpace { n };
    let mut kinds = Vec::new();
    for n in 1..=5 {
        for m in 0..n {
            kinds.push(MorphismKind::LinearEmbedding { m, n });
        }
    }
    kinds.push(MorphismKind::LinearEmbedding { m: 3, n: 3 });
    kinds.push(MorphismKind::Veronese { n: 1, degree: 2 });
    kinds.push(MorphismKind::Veronese { n: 1, degree: 3 });
    kinds.push(MorphismKind::Veronese { n: 2, degree: 2 });
    for d in [3, 5] {
        kinds.push(MorphismKind::QuadricInProjective { d });
    }
    kinds.push(MorphismKind::LinearInQuadric { j: 0, d: 3 });
    kinds.push(MorphismKind::LinearInQuadric { j: 1, d: 3 });
    kinds.push(MorphismKind::LinearInQuadric { j: 2, d: 5 });
    for (a, b) in [(1, 1), (1, 2), (2, 2), (1, 3)] {
        for onto in 0..2 {
            kinds.push(MorphismKind::ProductProjection { first: p(a), second: p(b), onto });
        }
    }
    for m in [2, 3, 5] {
        kinds.push(MorphismKind::PnSelfMap { m });
    }
    kinds
}

/// A registered map with its pushforward and pullback matrices.
#[derive(Clone)]
pub struct Morphism {
    name: String,
    source: Arc<CellularVariety>,
    target: Arc<CellularVariety>,
    /// `push[t][s]`: coefficient of target cell `t` in the pushforward of source cell `s`.
    push: Vec<Vec<BigInt>>,
    /// `pull[s][t]`: coefficient of source cell `s` in the pullback of target cell `t`.
    pull: Vec<Vec<BigInt>>,
    flags: MorphismFlags,
    tangent: Option<VirtualBundle>,
}

impl std::fmt::Debug for Morphism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Morphism({}: {} -> {})", self.name, self.source.name(), self.target.name())
    }
}

impl Morphism {
    /// Registers a morphism after checking grading, multiplicativity of the
    /// pullback, the projection formula and the rank of `T_f`.
    pub fn new(
        name: impl Into<String>,
        source: Arc<CellularVariety>,
        target: Arc<CellularVariety>,
        push: Vec<Vec<BigInt>>,
        pull: Vec<Vec<BigInt>>,
        flags: MorphismFlags,
    ) -> Result<Self> {
        let mut f = Morphism {
            name: name.into(),
            source,
            target,
            push,
            pull,
            flags,
            tangent: None,
        };
        f.validate()?;
        if f.flags.lci {
            let tx = VirtualBundle::tangent(&f.source);
            let ty = VirtualBundle::tangent(&f.target);
            let tf = tx.sub(&f.pullback_bundle(&ty));
            let expected = BigInt::from(f.source.dim() as i64 - f.target.dim() as i64);
            if tf.rank() != &expected {
                return Err(f.invalid(format!("rank of T_f is {}, expected {expected}", tf.rank())));
            }
            f.tangent = Some(tf);
        }
        Ok(f)
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidMorphism {
            morphism: self.name.clone(),
            reason: reason.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ns = self.source.num_cells();
        let nt = self.target.num_cells();
        if self.push.len() != nt || self.push.iter().any(|r| r.len() != ns) {
            return Err(self.invalid("push matrix has the wrong shape"));
        }
        if self.pull.len() != ns || self.pull.iter().any(|r| r.len() != nt) {
            return Err(self.invalid("pull matrix has the wrong shape"));
        }
        for t in 0..nt {
            for s in 0..ns {
                if !self.push[t][s].is_zero() && self.target.cell_dim(t) != self.source.cell_dim(s) {
                    return Err(self.invalid("pushforward does not preserve dimension"));
                }
                if !self.pull[s][t].is_zero()
                    && self.source.cell_codim(s) != self.target.cell_codim(t)
                {
                    return Err(self.invalid("pullback does not preserve codimension"));
                }
            }
        }
        let src: Vec<ChowClass> = (0..ns).map(|i| ChowClass::basis(&self.source, i)).collect();
        let tgt: Vec<ChowClass> = (0..nt).map(|i| ChowClass::basis(&self.target, i)).collect();
        let pulled: Vec<ChowClass> = tgt.iter().map(|y| self.apply_pull(y)).collect();
        if pulled[self.target.fundamental_index()] != ChowClass::one(&self.source) {
            return Err(self.invalid("pullback does not preserve the unit"));
        }
        for a in 0..nt {
            for b in 0..nt {
                if self.apply_pull(&(&tgt[a] * &tgt[b])) != &pulled[a] * &pulled[b] {
                    return Err(self.invalid(format!(
                        "pullback is not multiplicative on {}·{}",
                        self.target.label(a),
                        self.target.label(b)
                    )));
                }
            }
        }
        for y in 0..nt {
            for x in 0..ns {
                let lhs = self.apply_push(&(&pulled[y] * &src[x]));
                let rhs = &tgt[y] * &self.apply_push(&src[x]);
                if lhs != rhs {
                    return Err(self.invalid(format!(
                        "projection formula fails on {} and {}",
                        self.target.label(y),
                        self.source.label(x)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &Arc<CellularVariety> {
        &self.source
    }

    pub fn target(&self) -> &Arc<CellularVariety> {
        &self.target
    }

    pub fn flags(&self) -> MorphismFlags {
        self.flags
    }

    pub fn push_matrix(&self) -> &[Vec<BigInt>] {
        &self.push
    }

    pub fn pull_matrix(&self) -> &[Vec<BigInt>] {
        &self.pull
    }

    /// Virtual tangent bundle `T_f = T_X - f^* T_Y`, present for lci maps.
    pub fn virtual_tangent(&self) -> Option<&VirtualBundle> {
        self.tangent.as_ref()
    }

    /// Degree of the map: `f_*[X] = deg(f)·[Y]`, zero if dimensions differ.
    pub fn degree(&self) -> BigInt {
        if self.source.dim() != self.target.dim() {
            return BigInt::zero();
        }
        self.push[self.target.fundamental_index()][self.source.fundamental_index()].clone()
    }

    pub(crate) fn apply_push<T: Coefficient>(&self, x: &Class<T>) -> Class<T> {
        let coeffs = self
            .push
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x.coeffs())
                    .filter(|(m, _)| !m.is_zero())
                    .fold(T::zero(), |acc, (m, c)| acc + T::from_bigint(m.clone()) * c.clone())
            })
            .collect();
        Class::from_vec(&self.target, coeffs).expect("push matrix shape validated")
    }

    pub(crate) fn apply_pull<T: Coefficient>(&self, y: &Class<T>) -> Class<T> {
        let coeffs = self
            .pull
            .iter()
            .map(|row| {
                row.iter()
                    .zip(y.coeffs())
                    .filter(|(m, _)| !m.is_zero())
                    .fold(T::zero(), |acc, (m, c)| acc + T::from_bigint(m.clone()) * c.clone())
            })
            .collect();
        Class::from_vec(&self.source, coeffs).expect("pull matrix shape validated")
    }

    fn check_source<T: Coefficient>(&self, x: &Class<T>) -> Result<()> {
        ChowClass::zero(&self.source).same_variety(x)
    }

    fn check_target<T: Coefficient>(&self, y: &Class<T>) -> Result<()> {
        ChowClass::zero(&self.target).same_variety(y)
    }

    pub fn pushforward<T: Coefficient>(&self, x: &Class<T>) -> Result<Class<T>> {
        if !self.flags.proper {
            return Err(Error::FlagViolation {
                morphism: self.name.clone(),
                flag: "proper",
                operation: "pushforward",
            });
        }
        self.check_source(x)?;
        Ok(self.apply_push(x))
    }

    pub fn pullback<T: Coefficient>(&self, y: &Class<T>) -> Result<Class<T>> {
        if !(self.flags.lci || self.flags.flat) {
            return Err(Error::FlagViolation {
                morphism: self.name.clone(),
                flag: "lci",
                operation: "pullback",
            });
        }
        self.check_target(y)?;
        Ok(self.apply_pull(y))
    }

    pub fn pushforward_mod_p(&self, x: &ModPClass) -> Result<ModPClass> {
        Ok(ModPClass::from_chow(&self.pushforward(&x.lift())?, x.p()))
    }

    pub fn pullback_mod_p(&self, y: &ModPClass) -> Result<ModPClass> {
        Ok(ModPClass::from_chow(&self.pullback(&y.lift())?, y.p()))
    }

    /// Pullback of a virtual bundle; any morphism pulls back vector bundles.
    pub fn pullback_bundle(&self, e: &VirtualBundle) -> VirtualBundle {
        VirtualBundle::from_ch(self.apply_pull(e.ch())).expect("pullback preserves the rank")
    }
}

fn zeros(rows: usize, cols: usize) -> Vec<Vec<BigInt>> {
    vec![vec![BigInt::zero(); cols]; rows]
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Pullback matrix of a map into `P^n` determined by the image of `h`.
fn pull_from_projective(source: &Arc<CellularVariety>, n: usize, h_image: &ChowClass) -> Vec<Vec<BigInt>> {
    let mut pull = zeros(source.num_cells(), n + 1);
    let mut power = ChowClass::one(source);
    for a in 0..=n {
        for (s, c) in power.coeffs().iter().enumerate() {
            pull[s][a] = c.clone();
        }
        power = &power * h_image;
    }
    pull
}

fn embedding_flags(flat: bool) -> MorphismFlags {
    MorphismFlags {
        proper: true,
        lci: true,
        flat,
        smooth_source: true,
        smooth_target: true,
    }
}

/// Builds a morphism from the catalog.
pub fn build_morphism(kind: &MorphismKind) -> Result<Arc<Morphism>> {
    let morphism = match kind {
        MorphismKind::LinearEmbedding { m, n } => {
            let (m, n) = (*m, *n);
            if m > n {
                return Err(Error::IncompatibleDimensions(format!("P^{m} does not embed in P^{n}")));
            }
            let source = projective_space(m)?;
            let target = projective_space(n)?;
            let mut push = zeros(n + 1, m + 1);
            for i in 0..=m {
                push[n - m + i][i] = BigInt::one();
            }
            let h = ChowClass::basis(&source, 1.min(m));
            let h = if m == 0 { ChowClass::zero(&source) } else { h };
            let pull = pull_from_projective(&source, n, &h);
            Morphism::new(format!("P^{m}->P^{n}"), source, target, push, pull, embedding_flags(m == n))?
        }
        MorphismKind::Veronese { n, degree } => {
            let (n, deg) = (*n, *degree);
            if deg == 0 {
                return Err(Error::IncompatibleDimensions("Veronese degree must be positive".into()));
            }
            let big_n = binomial(n + deg, n)
                .to_usize()
                .ok_or_else(|| Error::IncompatibleDimensions("Veronese target too large".into()))?
                - 1;
            let source = projective_space(n)?;
            let target = projective_space(big_n)?;
            let mut push = zeros(big_n + 1, n + 1);
            for i in 0..=n {
                let j = n - i;
                push[big_n - j][i] = BigInt::from(deg).pow(j as u32);
            }
            let h = if n == 0 {
                ChowClass::zero(&source)
            } else {
                ChowClass::basis(&source, 1).scale(&BigInt::from(deg))
            };
            let pull = pull_from_projective(&source, big_n, &h);
            Morphism::new(
                format!("v_{deg}:P^{n}->P^{big_n}"),
                source,
                target,
                push,
                pull,
                embedding_flags(false),
            )?
        }
        MorphismKind::QuadricInProjective { d } => {
            let d = *d;
            let source = odd_quadric(d)?;
            let target = projective_space(d + 1)?;
            let m = (d - 1) / 2;
            let mut push = zeros(d + 2, d + 1);
            for i in 0..=m {
                push[quadric_h(i) + 1][quadric_h(i)] = BigInt::from(2);
            }
            for j in 0..=m {
                push[d + 1 - j][quadric_l(m, j)] = BigInt::one();
            }
            let h = ChowClass::basis(&source, quadric_h(1));
            let pull = pull_from_projective(&source, d + 1, &h);
            Morphism::new(
                format!("Q_{d}->P^{}", d + 1),
                source,
                target,
                push,
                pull,
                embedding_flags(false),
            )?
        }
        MorphismKind::LinearInQuadric { j, d } => {
            let (j, d) = (*j, *d);
            let target = odd_quadric(d)?;
            let m = (d - 1) / 2;
            if j > m {
                return Err(Error::IncompatibleDimensions(format!(
                    "Q_{d} contains no linear P^{j}"
                )));
            }
            let source = projective_space(j)?;
            let mut push = zeros(d + 1, j + 1);
            for a in 0..=j {
                push[quadric_l(m, j - a)][a] = BigInt::one();
            }
            let mut pull = zeros(j + 1, d + 1);
            for i in 0..=m.min(j) {
                pull[i][quadric_h(i)] = BigInt::one();
            }
            Morphism::new(
                format!("P^{j}->Q_{d}"),
                source,
                target,
                push,
                pull,
                embedding_flags(false),
            )?
        }
        MorphismKind::ProductProjection { first, second, onto } => {
            let x = first.build()?;
            let y = second.build()?;
            let xy = product(&x, &y)?;
            let ny = y.num_cells();
            let (target, other_is_second) = match onto {
                0 => (x.clone(), true),
                1 => (y.clone(), false),
                _ => return Err(Error::IncompatibleDimensions(format!("no factor {onto}"))),
            };
            let nt = target.num_cells();
            let mut push = zeros(nt, xy.num_cells());
            let mut pull = zeros(xy.num_cells(), nt);
            for a in 0..x.num_cells() {
                for b in 0..ny {
                    let s = a * ny + b;
                    let (kept, dropped, other) = if other_is_second { (a, b, &y) } else { (b, a, &x) };
                    push[kept][s] = other.degree_vector()[dropped].clone();
                    if dropped == other.fundamental_index() {
                        pull[s][kept] = BigInt::one();
                    }
                }
            }
            Morphism::new(
                format!("pr_{onto}:{}->{}", xy.name(), target.name()),
                xy,
                target,
                push,
                pull,
                MorphismFlags {
                    proper: true,
                    lci: true,
                    flat: true,
                    smooth_source: true,
                    smooth_target: true,
                },
            )?
        }
        MorphismKind::PnSelfMap { m } => {
            let m = *m;
            if m == 0 {
                return Err(Error::IncompatibleDimensions("self-map degree must be positive".into()));
            }
            let p1 = projective_space(1)?;
            let mut push = zeros(2, 2);
            push[0][0] = BigInt::from(m);
            push[1][1] = BigInt::one();
            let h = ChowClass::basis(&p1, 1).scale(&BigInt::from(m));
            let pull = pull_from_projective(&p1, 1, &h);
            Morphism::new(
                format!("deg{m}:P^1->P^1"),
                p1.clone(),
                p1,
                push,
                pull,
                MorphismFlags {
                    proper: true,
                    lci: true,
                    flat: true,
                    smooth_source: true,
                    smooth_target: true,
                },
            )?
        }
    };
    Ok(Arc::new(morphism))
}
