//! Exact graded commutative algebra over a finite cell basis.
//!
//! A [`CellularVariety`] carries the Chow ring of a split cellular variety as a
//! structure-constant table over the classes of its cell closures, together
//! with the degree map, the Chern character of the tangent bundle and the
//! Riemann-Roch images of the structure sheaves of the cell closures.
//! Classes are coefficient vectors over that basis; [`ChowClass`] has integer
//! coefficients, [`RationalClass`] lives in `CH ⊗ Q` and [`ModPClass`] in
//! `CH ⊗ Z/p`.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Coefficient ring of a [`Class`].
pub trait Coefficient:
    Num + Clone + Neg<Output = Self> + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    fn from_bigint(n: BigInt) -> Self;
    fn to_rational(&self) -> BigRational;
    fn parse_exact(s: &str) -> Option<Self>;
}

impl Coefficient for BigInt {
    fn from_bigint(n: BigInt) -> Self {
        n
    }

    fn to_rational(&self) -> BigRational {
        BigRational::from_integer(self.clone())
    }

    fn parse_exact(s: &str) -> Option<Self> {
        BigInt::from_str(s.trim()).ok()
    }
}

impl Coefficient for BigRational {
    fn from_bigint(n: BigInt) -> Self {
        BigRational::from_integer(n)
    }

    fn to_rational(&self) -> BigRational {
        self.clone()
    }

    fn parse_exact(s: &str) -> Option<Self> {
        let r = BigRational::from_str(s.trim()).ok()?;
        Some(r)
    }
}

pub fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn ensure_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// `base^exp` for a possibly negative exponent.
pub fn rational_pow(base: &BigRational, exp: i64) -> BigRational {
    let magnitude = exp.unsigned_abs();
    let mut acc = BigRational::one();
    for _ in 0..magnitude {
        acc *= base;
    }
    if exp < 0 {
        acc.recip()
    } else {
        acc
    }
}

/// `p^exp` as a rational, `exp` possibly negative.
pub fn p_pow(p: u64, exp: i64) -> BigRational {
    rational_pow(&BigRational::from_integer(BigInt::from(p)), exp)
}

/// Residue of an integer in `[0, p)`.
pub fn residue(n: &BigInt, p: u64) -> u64 {
    n.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits in u64")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub label: String,
    pub dim: usize,
}

impl Cell {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Cell {
            label: label.into(),
            dim,
        }
    }
}

/// Sparse product of two basis cells: list of `(cell index, structure constant)`.
pub type Product = Vec<(usize, BigInt)>;

/// Raw data of a cellular variety, validated by [`CellularVariety::new`].
#[derive(Debug, Clone)]
pub struct VarietyData {
    pub name: String,
    pub dim: usize,
    pub cells: Vec<Cell>,
    /// `mult[a][b]` is the product of cells `a` and `b`.
    pub mult: Vec<Vec<Product>>,
    /// Degree of each cell; nonzero only on 0-dimensional cells.
    pub degrees: Vec<BigInt>,
    /// Chern character of the tangent bundle in the cell basis.
    pub tangent_ch: Vec<BigRational>,
    /// `tau[b]` is the Riemann-Roch image of the structure sheaf of cell `b`.
    pub tau: Vec<Vec<BigRational>>,
    pub factors: Vec<Arc<CellularVariety>>,
}

/// Finite presentation of a split cellular variety.
pub struct CellularVariety {
    name: String,
    dim: usize,
    cells: Vec<Cell>,
    mult: Vec<Vec<Product>>,
    fundamental: usize,
    degrees: Vec<BigInt>,
    tangent_ch: Vec<BigRational>,
    tau: Vec<Vec<BigRational>>,
    factors: Vec<Arc<CellularVariety>>,
    labels: HashMap<String, usize>,
    // Cell indices sorted by decreasing dimension.
    by_dim_desc: Vec<usize>,
    // Derived rational classes (Todd class, Adams factors, ...) keyed by name.
    derived: Mutex<HashMap<String, Vec<BigRational>>>,
}

impl fmt::Debug for CellularVariety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CellularVariety")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("cells", &self.cells)
            .finish()
    }
}

impl CellularVariety {
    /// Validates every structural invariant and builds the variety.
    pub fn new(data: VarietyData) -> Result<Arc<Self>> {
        let variety = Self::ring_only(data)?;
        variety.check_tau()?;
        Ok(variety)
    }

    /// Builds the variety checking everything except the tau matrix, which
    /// builders often compute with the ring itself.
    pub(crate) fn ring_only(data: VarietyData) -> Result<Arc<Self>> {
        let VarietyData {
            name,
            dim,
            cells,
            mult,
            degrees,
            tangent_ch,
            tau,
            factors,
        } = data;
        let invalid = |reason: String| Error::InvalidVariety {
            variety: name.clone(),
            reason,
        };
        let n = cells.len();
        if mult.len() != n || mult.iter().any(|row| row.len() != n) {
            return Err(invalid("multiplication table is not square".into()));
        }
        if degrees.len() != n || tangent_ch.len() != n || tau.len() != n {
            return Err(invalid("data vectors do not match the cell count".into()));
        }
        if tau.iter().any(|col| col.len() != n) {
            return Err(invalid("tau matrix is not square".into()));
        }
        let mut labels = HashMap::new();
        for (i, cell) in cells.iter().enumerate() {
            if cell.dim > dim {
                return Err(invalid(format!("cell {} exceeds dimension", cell.label)));
            }
            if labels.insert(cell.label.clone(), i).is_some() {
                return Err(invalid(format!("duplicate label {}", cell.label)));
            }
        }
        let top: Vec<usize> = (0..n).filter(|&i| cells[i].dim == dim).collect();
        if top.len() != 1 {
            return Err(invalid(format!("{} cells of top dimension", top.len())));
        }
        if !cells.iter().any(|c| c.dim == 0) {
            return Err(invalid("no 0-dimensional cell".into()));
        }
        let fundamental = top[0];
        if !labels.contains_key("1") {
            labels.insert("1".to_string(), fundamental);
        }
        let mut by_dim_desc: Vec<usize> = (0..n).collect();
        by_dim_desc.sort_by(|&a, &b| cells[b].dim.cmp(&cells[a].dim).then(a.cmp(&b)));

        let variety = Arc::new(CellularVariety {
            name,
            dim,
            cells,
            mult,
            fundamental,
            degrees,
            tangent_ch,
            tau,
            factors,
            labels,
            by_dim_desc,
            derived: Mutex::new(HashMap::new()),
        });
        variety.check_ring()?;
        Ok(variety)
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidVariety {
            variety: self.name.clone(),
            reason: reason.into(),
        }
    }

    fn check_ring(self: &Arc<Self>) -> Result<()> {
        let n = self.cells.len();
        for a in 0..n {
            for b in 0..n {
                let da = self.cells[a].dim;
                let db = self.cells[b].dim;
                for (k, c) in &self.mult[a][b] {
                    if *k >= n {
                        return Err(self.invalid("product refers to a missing cell"));
                    }
                    if c.is_zero() {
                        continue;
                    }
                    if da + db < self.dim || self.cells[*k].dim != da + db - self.dim {
                        return Err(self.invalid(format!(
                            "product {}·{} violates the grading",
                            self.cells[a].label, self.cells[b].label
                        )));
                    }
                }
            }
        }
        let basis: Vec<ChowClass> = (0..n).map(|i| Class::basis(self, i)).collect();
        for a in 0..n {
            if &basis[self.fundamental] * &basis[a] != basis[a] {
                return Err(self.invalid(format!(
                    "fundamental class is not a unit on {}",
                    self.cells[a].label
                )));
            }
            for b in 0..n {
                let ab = &basis[a] * &basis[b];
                if ab != &basis[b] * &basis[a] {
                    return Err(self.invalid(format!(
                        "product {}·{} is not commutative",
                        self.cells[a].label, self.cells[b].label
                    )));
                }
                for c in 0..n {
                    if &ab * &basis[c] != &basis[a] * &(&basis[b] * &basis[c]) {
                        return Err(self.invalid(format!(
                            "product of {}, {}, {} is not associative",
                            self.cells[a].label, self.cells[b].label, self.cells[c].label
                        )));
                    }
                }
            }
        }
        for (i, d) in self.degrees.iter().enumerate() {
            if !d.is_zero() && self.cells[i].dim != 0 {
                return Err(self.invalid("degree on a positive-dimensional cell"));
            }
        }
        if self.tangent_ch[self.fundamental] != BigRational::from_integer(self.dim.into()) {
            return Err(self.invalid("tangent Chern character has wrong rank"));
        }
        Ok(())
    }

    fn check_tau(&self) -> Result<()> {
        for (b, column) in self.tau.iter().enumerate() {
            for (i, entry) in column.iter().enumerate() {
                let expected_unit = i == b;
                if expected_unit {
                    if !entry.is_one() {
                        return Err(self.invalid(format!(
                            "tau column {} has non-unit diagonal",
                            self.cells[b].label
                        )));
                    }
                } else if !entry.is_zero() && self.cells[i].dim >= self.cells[b].dim {
                    return Err(self.invalid(format!(
                        "tau column {} is not triangular",
                        self.cells[b].label
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn cell_dim(&self, i: usize) -> usize {
        self.cells[i].dim
    }

    pub fn cell_codim(&self, i: usize) -> usize {
        self.dim - self.cells[i].dim
    }

    pub fn label(&self, i: usize) -> &str {
        &self.cells[i].label
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownLabel {
                variety: self.name.clone(),
                label: label.to_string(),
            })
    }

    pub fn fundamental_index(&self) -> usize {
        self.fundamental
    }

    pub fn mult_table(&self) -> &[Vec<Product>] {
        &self.mult
    }

    pub fn product_of_cells(&self, a: usize, b: usize) -> &[(usize, BigInt)] {
        &self.mult[a][b]
    }

    pub fn degree_vector(&self) -> &[BigInt] {
        &self.degrees
    }

    pub fn factors(&self) -> &[Arc<CellularVariety>] {
        &self.factors
    }

    /// Cell indices ordered from the top dimension down.
    pub fn cells_by_dim_desc(&self) -> &[usize] {
        &self.by_dim_desc
    }

    pub fn cells_of_dim(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.cells.len()).filter(move |&i| self.cells[i].dim == j)
    }

    pub fn tau_column(self: &Arc<Self>, b: usize) -> RationalClass {
        Class::from_vec_unchecked(self, self.tau[b].clone())
    }

    pub fn tau_matrix(&self) -> &[Vec<BigRational>] {
        &self.tau
    }

    pub fn tangent_ch(self: &Arc<Self>) -> RationalClass {
        Class::from_vec_unchecked(self, self.tangent_ch.clone())
    }

    /// Memoizes a class derived from the variety data. The computation runs
    /// outside the lock; concurrent first calls may both compute.
    pub(crate) fn cached_class(
        self: &Arc<Self>,
        key: &str,
        compute: impl FnOnce() -> RationalClass,
    ) -> RationalClass {
        if let Some(raw) = self.derived.lock().expect("cache poisoned").get(key) {
            return Class::from_vec_unchecked(self, raw.clone());
        }
        let value = compute();
        self.derived
            .lock()
            .expect("cache poisoned")
            .entry(key.to_string())
            .or_insert_with(|| value.coeffs().to_vec());
        value
    }

    pub fn same_as(&self, other: &CellularVariety) -> bool {
        std::ptr::eq(self, other)
            || (self.name == other.name && self.cells == other.cells)
    }
}

/// Coefficient vector over the cell basis of a variety.
#[derive(Clone)]
pub struct Class<T> {
    variety: Arc<CellularVariety>,
    coeffs: Vec<T>,
}

/// Integral Chow class.
pub type ChowClass = Class<BigInt>;
/// Class in `CH ⊗ Q`.
pub type RationalClass = Class<BigRational>;

impl<T: Coefficient> Class<T> {
    pub fn zero(variety: &Arc<CellularVariety>) -> Self {
        Class {
            variety: variety.clone(),
            coeffs: vec![T::zero(); variety.num_cells()],
        }
    }

    pub fn one(variety: &Arc<CellularVariety>) -> Self {
        Self::basis(variety, variety.fundamental_index())
    }

    pub fn basis(variety: &Arc<CellularVariety>, i: usize) -> Self {
        let mut c = Self::zero(variety);
        c.coeffs[i] = T::one();
        c
    }

    pub fn from_vec(variety: &Arc<CellularVariety>, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != variety.num_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {} cells of {}",
                coeffs.len(),
                variety.num_cells(),
                variety.name()
            )));
        }
        Ok(Self::from_vec_unchecked(variety, coeffs))
    }

    pub(crate) fn from_vec_unchecked(variety: &Arc<CellularVariety>, coeffs: Vec<T>) -> Self {
        debug_assert_eq!(coeffs.len(), variety.num_cells());
        Class {
            variety: variety.clone(),
            coeffs,
        }
    }

    /// Builds a class from `(label, coefficient)` pairs; repeated labels add up.
    pub fn from_labels<'a, I>(variety: &Arc<CellularVariety>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, T)>,
    {
        let mut c = Self::zero(variety);
        for (label, value) in entries {
            let i = variety.index_of(label)?;
            c.coeffs[i] = c.coeffs[i].clone() + value;
        }
        Ok(c)
    }

    pub fn variety(&self) -> &Arc<CellularVariety> {
        &self.variety
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &T {
        &self.coeffs[i]
    }

    pub fn coeff_of(&self, label: &str) -> Result<T> {
        Ok(self.coeffs[self.variety.index_of(label)?].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Nonzero entries as `(label, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (&str, &T)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| (self.variety.label(i), c))
    }

    pub fn same_variety(&self, other: &Class<impl Coefficient>) -> Result<()> {
        if self.variety.same_as(&other.variety) {
            Ok(())
        } else {
            Err(Error::VarietyMismatch {
                left: self.variety.name().to_string(),
                right: other.variety.name().to_string(),
            })
        }
    }

    fn assert_same(&self, other: &Self) {
        if let Err(e) = self.same_variety(other) {
            panic!("{e}");
        }
    }

    /// Restriction to the cells of dimension `j`.
    pub fn grade_component(&self, j: usize) -> Self {
        self.filter_cells(|i| self.variety.cell_dim(i) == j)
    }

    /// Restriction to the cells of codimension `i`.
    pub fn codim_component(&self, i: usize) -> Self {
        self.filter_cells(|c| self.variety.cell_codim(c) == i)
    }

    pub fn filter_cells(&self, keep: impl Fn(usize) -> bool) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| if keep(i) { c.clone() } else { T::zero() })
            .collect();
        Self::from_vec_unchecked(&self.variety, coeffs)
    }

    /// Largest dimension carrying a nonzero coefficient.
    pub fn top_dimension(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| self.variety.cell_dim(i))
            .max()
    }

    pub fn lowest_dimension(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| self.variety.cell_dim(i))
            .min()
    }

    /// Dimensions carrying a nonzero coefficient, in decreasing order.
    pub fn dimensions(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| self.variety.cell_dim(i))
            .collect();
        dims.sort_unstable_by(|a, b| b.cmp(a));
        dims.dedup();
        dims
    }

    pub fn scale(&self, s: &T) -> Self {
        let coeffs = self.coeffs.iter().map(|c| c.clone() * s.clone()).collect();
        Self::from_vec_unchecked(&self.variety, coeffs)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_variety(other)?;
        let n = self.coeffs.len();
        let mut out = vec![T::zero(); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let ab = a.clone() * b.clone();
                for (k, c) in self.variety.product_of_cells(i, j) {
                    out[*k] = out[*k].clone() + ab.clone() * T::from_bigint(c.clone());
                }
            }
        }
        Ok(Self::from_vec_unchecked(&self.variety, out))
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(&self.variety);
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Degree of the 0-dimensional component.
    pub fn degree(&self) -> BigRational {
        self.coeffs
            .iter()
            .zip(self.variety.degree_vector())
            .filter(|(_, d)| !d.is_zero())
            .map(|(c, d)| c.to_rational() * BigRational::from_integer(d.clone()))
            .fold(BigRational::zero(), |acc, x| acc + x)
    }

    pub fn to_rational(&self) -> RationalClass {
        Class::from_vec_unchecked(
            &self.variety,
            self.coeffs.iter().map(Coefficient::to_rational).collect(),
        )
    }

    /// Serializes to a JSON object mapping labels to exact decimal strings.
    /// Zero entries are dropped; keys come out sorted.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (label, c) in self.terms() {
            map.insert(label.to_string(), Value::String(c.to_string()));
        }
        Value::Object(map)
    }

    pub fn from_json(variety: &Arc<CellularVariety>, value: &Value) -> Result<Self> {
        let map = value
            .as_object()
            .ok_or_else(|| Error::Parse("class must be a JSON object".into()))?;
        let mut c = Self::zero(variety);
        for (label, raw) in map {
            let text = match raw {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                other => {
                    return Err(Error::Parse(format!(
                        "coefficient of {label} must be a string, got {other}"
                    )))
                }
            };
            let value = T::parse_exact(&text).ok_or_else(|| {
                Error::Parse(format!("cannot parse coefficient `{text}` of {label}"))
            })?;
            let i = variety.index_of(label)?;
            c.coeffs[i] = c.coeffs[i].clone() + value;
        }
        Ok(c)
    }
}

impl RationalClass {
    pub fn is_integral(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_integer())
    }

    pub fn to_integral(&self) -> Option<ChowClass> {
        if !self.is_integral() {
            return None;
        }
        Some(Class::from_vec_unchecked(
            &self.variety,
            self.coeffs.iter().map(|c| c.to_integer()).collect(),
        ))
    }

    /// Least common multiple of the coefficient denominators.
    pub fn denominator(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }

    /// Multiplicative inverse in the truncated ring; needs a nonzero rank part.
    pub fn inverse(&self) -> Result<Self> {
        let unit = self.coeffs[self.variety.fundamental_index()].clone();
        if unit.is_zero() {
            return Err(Error::NonInvertibleSeries);
        }
        // x = u(1 - n) with n nilpotent; x^{-1} = u^{-1} Σ n^k.
        let u_inv = unit.recip();
        let one = Self::one(&self.variety);
        let nil = &one - &self.scale(&u_inv);
        let mut acc = one.clone();
        let mut power = one;
        for _ in 0..self.variety.dim() {
            power = &power * &nil;
            if power.is_zero() {
                break;
            }
            acc = &acc + &power;
        }
        Ok(acc.scale(&u_inv))
    }
}

impl ChowClass {
    pub fn reduce_mod(&self, p: u64) -> ModPClass {
        ModPClass::from_chow(self, p)
    }
}

impl<T: Coefficient> PartialEq for Class<T> {
    fn eq(&self, other: &Self) -> bool {
        self.variety.same_as(&other.variety) && self.coeffs == other.coeffs
    }
}

impl<T: Coefficient> Eq for Class<T> {}

impl<T: Coefficient> fmt::Debug for Class<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{{", self.variety.name())?;
        for (n, (label, c)) in self.terms().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{label}: {c}")?;
        }
        write!(f, "}}")
    }
}

impl<T: Coefficient> fmt::Display for Class<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl<T: Coefficient> Add for &Class<T> {
    type Output = Class<T>;

    fn add(self, rhs: Self) -> Class<T> {
        self.assert_same(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a.clone() + b.clone())
            .collect();
        Class::from_vec_unchecked(&self.variety, coeffs)
    }
}

impl<T: Coefficient> Sub for &Class<T> {
    type Output = Class<T>;

    fn sub(self, rhs: Self) -> Class<T> {
        self.assert_same(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a.clone() - b.clone())
            .collect();
        Class::from_vec_unchecked(&self.variety, coeffs)
    }
}

impl<T: Coefficient> Neg for &Class<T> {
    type Output = Class<T>;

    fn neg(self) -> Class<T> {
        let coeffs = self.coeffs.iter().map(|a| -a.clone()).collect();
        Class::from_vec_unchecked(&self.variety, coeffs)
    }
}

impl<T: Coefficient> Mul for &Class<T> {
    type Output = Class<T>;

    fn mul(self, rhs: Self) -> Class<T> {
        match self.try_mul(rhs) {
            Ok(c) => c,
            Err(e) => panic!("{e}"),
        }
    }
}

/// Class in `CH ⊗ Z/p`, coefficients kept in `[0, p)`.
#[derive(Clone)]
pub struct ModPClass {
    variety: Arc<CellularVariety>,
    p: u64,
    coeffs: Vec<u64>,
}

impl ModPClass {
    pub fn zero(variety: &Arc<CellularVariety>, p: u64) -> Self {
        ModPClass {
            variety: variety.clone(),
            p,
            coeffs: vec![0; variety.num_cells()],
        }
    }

    pub fn basis(variety: &Arc<CellularVariety>, p: u64, i: usize) -> Self {
        let mut c = Self::zero(variety, p);
        c.coeffs[i] = 1 % p;
        c
    }

    pub fn from_residues(variety: &Arc<CellularVariety>, p: u64, coeffs: Vec<u64>) -> Result<Self> {
        if coeffs.len() != variety.num_cells() {
            return Err(Error::DimensionMismatch(format!(
                "{} residues for {} cells",
                coeffs.len(),
                variety.num_cells()
            )));
        }
        Ok(ModPClass {
            variety: variety.clone(),
            p,
            coeffs: coeffs.into_iter().map(|c| c % p).collect(),
        })
    }

    pub fn from_chow(class: &ChowClass, p: u64) -> Self {
        ModPClass {
            variety: class.variety.clone(),
            p,
            coeffs: class.coeffs.iter().map(|c| residue(c, p)).collect(),
        }
    }

    /// Reduces a rational class whose denominators are prime to `p`.
    pub fn from_rational(class: &RationalClass, p: u64) -> Result<Self> {
        let pb = BigInt::from(p);
        let mut coeffs = Vec::with_capacity(class.coeffs.len());
        for c in &class.coeffs {
            let den = c.denom();
            if (den % &pb).is_zero() {
                return Err(Error::NonIntegralInput(format!(
                    "coefficient {c} is not p-integral for p = {p}"
                )));
            }
            let inv = den
                .modpow(&(&pb - 2u32), &pb)
                .mod_floor(&pb);
            coeffs.push(residue(&(c.numer() * inv), p));
        }
        Ok(ModPClass {
            variety: class.variety.clone(),
            p,
            coeffs,
        })
    }

    /// Lift with coefficients in `[0, p)`.
    pub fn lift(&self) -> ChowClass {
        Class::from_vec_unchecked(
            &self.variety,
            self.coeffs.iter().map(|&c| BigInt::from(c)).collect(),
        )
    }

    pub fn variety(&self) -> &Arc<CellularVariety> {
        &self.variety
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn grade_component(&self, j: usize) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if self.variety.cell_dim(i) == j { c } else { 0 })
            .collect();
        ModPClass {
            variety: self.variety.clone(),
            p: self.p,
            coeffs,
        }
    }

    pub fn codim_component(&self, q: usize) -> Self {
        if q > self.variety.dim() {
            return Self::zero(&self.variety, self.p);
        }
        self.grade_component(self.variety.dim() - q)
    }

    pub fn dimensions(&self) -> Vec<usize> {
        self.lift().dimensions()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.dimensions().len() <= 1
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, u64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (self.variety.label(i), c))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.lift().same_variety(&other.lift())?;
        if self.p != other.p {
            return Err(Error::DimensionMismatch(format!(
                "mixed primes {} and {}",
                self.p, other.p
            )));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a + b) % self.p)
            .collect();
        Ok(ModPClass {
            variety: self.variety.clone(),
            p: self.p,
            coeffs,
        })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        let product = self.lift().try_mul(&other.lift())?;
        Ok(ModPClass::from_chow(&product, self.p))
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (label, c) in self.terms() {
            map.insert(label.to_string(), Value::String(c.to_string()));
        }
        Value::Object(map)
    }

    pub fn from_json(variety: &Arc<CellularVariety>, p: u64, value: &Value) -> Result<Self> {
        let integral = ChowClass::from_json(variety, value)?;
        Ok(Self::from_chow(&integral, p))
    }
}

impl PartialEq for ModPClass {
    fn eq(&self, other: &Self) -> bool {
        self.variety.same_as(&other.variety) && self.p == other.p && self.coeffs == other.coeffs
    }
}

impl Eq for ModPClass {}

impl fmt::Debug for ModPClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[mod {}]{{", self.variety.name(), self.p)?;
        for (n, (label, c)) in self.terms().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{label}: {c}")?;
        }
        write!(f, "}}")
    }
}

/// Inverse of `n` modulo the prime `p`.
pub fn inverse_mod(n: &BigInt, p: u64) -> Option<u64> {
    let pb = BigInt::from(p);
    let r = n.mod_floor(&pb);
    if r.is_zero() {
        return None;
    }
    Some(residue(&r.modpow(&(&pb - 2u32), &pb), p))
}

/// True when the rational has no factor of `p` in its denominator.
pub fn is_p_integral(r: &BigRational, p: u64) -> bool {
    !(r.denom() % BigInt::from(p)).is_zero()
}

/// p-adic valuation of a nonzero integer.
pub fn p_valuation(n: &BigInt, p: u64) -> u32 {
    let pb = BigInt::from(p);
    let mut n = n.abs();
    let mut v = 0;
    while !n.is_zero() && (&n % &pb).is_zero() {
        n /= &pb;
        v += 1;
    }
    v
}
