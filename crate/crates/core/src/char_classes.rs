//! Characteristic classes of virtual bundles given by their Chern character.
//!
//! A multiplicative class is determined by a per-root power series `f(t)`.
//! For a virtual bundle with Chern roots `t_i` the class is `Π f(t_i)`; we
//! evaluate it as `f(0)^rank · exp(Σ_k b_k · k! · ch_k)` where `b_k` are the
//! coefficients of `log(f/f(0))` and `k!·ch_k` is the k-th power sum of the
//! roots. Chern classes are also computed independently through Newton's
//! identities.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::algebra::{
    ensure_prime, rational_pow, CellularVariety, ChowClass, RationalClass,
};
use crate::error::{Error, Result};
use crate::series::Series;

/// Element of `K^0(X)` represented by its Chern character.
#[derive(Clone, PartialEq, Eq)]
pub struct VirtualBundle {
    rank: BigInt,
    ch: RationalClass,
}

impl std::fmt::Debug for VirtualBundle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VirtualBundle(rank {}, ch {:?})", self.rank, self.ch)
    }
}

impl VirtualBundle {
    /// The codimension-0 part of `ch` must be an integer, which becomes the rank.
    pub fn from_ch(ch: RationalClass) -> Result<Self> {
        let rank = ch.coeff(ch.variety().fundamental_index()).clone();
        if !rank.is_integer() {
            return Err(Error::NonIntegralInput(format!("rank {rank} of {ch:?}")));
        }
        Ok(VirtualBundle {
            rank: rank.to_integer(),
            ch,
        })
    }

    pub fn trivial(variety: &Arc<CellularVariety>, rank: i64) -> Self {
        let r = BigRational::from_integer(rank.into());
        VirtualBundle {
            rank: rank.into(),
            ch: RationalClass::one(variety).scale(&r),
        }
    }

    pub fn zero(variety: &Arc<CellularVariety>) -> Self {
        Self::trivial(variety, 0)
    }

    /// Line bundle with first Chern class `c1`.
    pub fn line_bundle(c1: &ChowClass) -> Result<Self> {
        let variety = c1.variety();
        if c1.top_dimension().is_some_and(|d| d != variety.dim() - 1) {
            return Err(Error::DimensionMismatch(format!(
                "first Chern class {c1:?} is not a divisor class"
            )));
        }
        Self::from_ch(exp_class(&c1.to_rational()))
    }

    pub fn tangent(variety: &Arc<CellularVariety>) -> Self {
        Self::from_ch(variety.tangent_ch()).expect("tangent rank is validated at construction")
    }

    pub fn variety(&self) -> &Arc<CellularVariety> {
        self.ch.variety()
    }

    pub fn rank(&self) -> &BigInt {
        &self.rank
    }

    pub fn ch(&self) -> &RationalClass {
        &self.ch
    }

    pub fn add(&self, other: &Self) -> Self {
        VirtualBundle {
            rank: &self.rank + &other.rank,
            ch: &self.ch + &other.ch,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        VirtualBundle {
            rank: &self.rank - &other.rank,
            ch: &self.ch - &other.ch,
        }
    }

    pub fn neg(&self) -> Self {
        VirtualBundle {
            rank: -&self.rank,
            ch: -&self.ch,
        }
    }

    pub fn scale(&self, n: i64) -> Self {
        VirtualBundle {
            rank: &self.rank * n,
            ch: self.ch.scale(&BigRational::from_integer(n.into())),
        }
    }

    /// Tensor product; the Chern character is multiplicative.
    pub fn tensor(&self, other: &Self) -> Self {
        VirtualBundle {
            rank: &self.rank * &other.rank,
            ch: &self.ch * &other.ch,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({ "rank": self.rank.to_string(), "ch": self.ch.to_json() })
    }

    pub fn from_json(variety: &Arc<CellularVariety>, value: &Value) -> Result<Self> {
        let ch_value = value
            .get("ch")
            .ok_or_else(|| Error::Parse("bundle needs a `ch` object".into()))?;
        let bundle = Self::from_ch(RationalClass::from_json(variety, ch_value)?)?;
        if let Some(rank) = value.get("rank") {
            let text = match rank {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let declared: BigInt = text
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad rank `{text}`")))?;
            if declared != bundle.rank {
                return Err(Error::Parse(format!(
                    "declared rank {declared} differs from ch rank {}",
                    bundle.rank
                )));
            }
        }
        Ok(bundle)
    }
}

/// `exp(x)` for a class with vanishing codimension-0 part.
pub fn exp_class(x: &RationalClass) -> RationalClass {
    let variety = x.variety();
    let mut acc = RationalClass::one(variety);
    let mut term = RationalClass::one(variety);
    for k in 1..=variety.dim() {
        term = (&term * x).scale(&BigRational::new(BigInt::one(), BigInt::from(k)));
        if term.is_zero() {
            break;
        }
        acc = &acc + &term;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesMode {
    Multiplicative,
    /// Constant term is `±p^k`, hence invertible in `Z[1/p]`.
    InvertibleAtP(u64),
}

/// Per-root power series of a multiplicative characteristic class.
#[derive(Debug, Clone)]
pub struct SeriesSpec {
    series: Series,
    mode: SeriesMode,
}

impl SeriesSpec {
    pub fn new(series: Series, mode: SeriesMode) -> Result<Self> {
        let c = series.constant_term();
        if c.is_zero() {
            return Err(Error::NonInvertibleSeries);
        }
        if let SeriesMode::InvertibleAtP(p) = mode {
            ensure_prime(p)?;
            let mut n = c.numer().abs();
            let pb = BigInt::from(p);
            while (&n % &pb).is_zero() {
                n /= &pb;
            }
            if !n.is_one() || !c.denom().is_one() {
                return Err(Error::NonInvertibleSeries);
            }
        }
        Ok(SeriesSpec { series, mode })
    }

    pub fn series(&self) -> &Series {
        &self.series
    }

    pub fn mode(&self) -> SeriesMode {
        self.mode
    }

    pub fn identity(order: usize) -> Self {
        SeriesSpec {
            series: Series::one(order),
            mode: SeriesMode::Multiplicative,
        }
    }

    /// `1 + t`
    pub fn chern(order: usize) -> Self {
        SeriesSpec {
            series: Series::from_ints(&[1, 1], order),
            mode: SeriesMode::Multiplicative,
        }
    }

    /// `t / (1 - e^{-t})`
    pub fn todd(order: usize) -> Self {
        let one_minus = &Series::one(order + 1) - &Series::exp_scaled(&(-BigRational::one()), order + 1);
        let series = one_minus
            .shift_down()
            .and_then(|s| s.truncate(order).inverse())
            .expect("(1 - e^{-t})/t has constant term 1");
        SeriesSpec {
            series,
            mode: SeriesMode::Multiplicative,
        }
    }

    /// `1 + e^{-t} + ... + e^{-(p-1)t}`
    pub fn theta(p: u64, order: usize) -> Result<Self> {
        ensure_prime(p)?;
        let mut series = Series::new(vec![], order);
        for i in 0..p {
            let c = BigRational::from_integer(-BigInt::from(i));
            series = &series + &Series::exp_scaled(&c, order);
        }
        Self::new(series, SeriesMode::InvertibleAtP(p))
    }

    /// `1 + (-t)^{p-1}`
    pub fn w_chp(p: u64, order: usize) -> Result<Self> {
        ensure_prime(p)?;
        let mut coeffs = vec![BigRational::zero(); order + 1];
        coeffs[0] = BigRational::one();
        let k = (p - 1) as usize;
        if k <= order {
            let sign = if k.is_multiple_of(2) { 1 } else { -1 };
            coeffs[k] += BigRational::from_integer(sign.into());
        }
        Ok(SeriesSpec {
            series: Series::new(coeffs, order),
            mode: SeriesMode::Multiplicative,
        })
    }
}

/// Codimension-k part of the Chern character scaled to the k-th power sum.
fn power_sums(e: &VirtualBundle) -> Vec<RationalClass> {
    let dim = e.variety().dim();
    let mut factorial = BigRational::one();
    (0..=dim)
        .map(|k| {
            if k > 0 {
                factorial *= BigRational::from_integer(k.into());
            }
            e.ch.codim_component(k).scale(&factorial)
        })
        .collect()
}

/// Evaluates the multiplicative class with per-root series `s` on `e`.
pub fn multiplicative_class(s: &SeriesSpec, e: &VirtualBundle) -> Result<RationalClass> {
    let variety = e.variety();
    let dim = variety.dim();
    let series = s.series.truncate(dim);
    let a0 = series.constant_term().clone();
    if a0.is_zero() {
        return Err(Error::NonInvertibleSeries);
    }
    let normalized = series.scale(&a0.recip());
    let log = normalized.log()?;
    let sums = power_sums(e);
    let mut exponent = RationalClass::zero(variety);
    for (k, p_k) in sums.iter().enumerate().skip(1) {
        let b = log.coeff(k);
        if !b.is_zero() {
            exponent = &exponent + &p_k.scale(&b);
        }
    }
    let rank = e
        .rank
        .to_i64()
        .ok_or_else(|| Error::DimensionMismatch(format!("rank {} out of range", e.rank)))?;
    Ok(exp_class(&exponent).scale(&rational_pow(&a0, rank)))
}

/// Total Chern class through Newton's identities, as a rational class.
pub fn chern_rational(e: &VirtualBundle) -> RationalClass {
    let variety = e.variety();
    let sums = power_sums(e);
    let mut c: Vec<RationalClass> = vec![RationalClass::one(variety)];
    for k in 1..=variety.dim() {
        let mut acc = RationalClass::zero(variety);
        for i in 1..=k {
            let term = &c[k - i] * &sums[i];
            acc = if i % 2 == 1 { &acc + &term } else { &acc - &term };
        }
        c.push(acc.scale(&BigRational::new(BigInt::one(), BigInt::from(k))));
    }
    c.iter()
        .fold(RationalClass::zero(variety), |acc, ck| &acc + ck)
}

/// Total Chern class; fails if the Chern character is not that of an
/// integral K-class.
pub fn chern(e: &VirtualBundle) -> Result<ChowClass> {
    let c = chern_rational(e);
    c.to_integral()
        .ok_or_else(|| Error::IntegralityViolation(format!("c({e:?}) = {c:?}")))
}

/// Chern character of the Bott class `θ^p(e)`.
pub fn theta_p(e: &VirtualBundle, p: u64) -> Result<RationalClass> {
    multiplicative_class(&SeriesSpec::theta(p, e.variety().dim())?, e)
}

/// Total class `w^{CH,p}(e)` with per-root series `1 + (-t)^{p-1}`.
pub fn w_chp(e: &VirtualBundle, p: u64) -> Result<RationalClass> {
    multiplicative_class(&SeriesSpec::w_chp(p, e.variety().dim())?, e)
}

/// Integral version of [`w_chp`].
pub fn w_chp_integral(e: &VirtualBundle, p: u64) -> Result<ChowClass> {
    let w = w_chp(e, p)?;
    w.to_integral()
        .ok_or_else(|| Error::IntegralityViolation(format!("w^(CH,{p})({e:?}) = {w:?}")))
}

/// The k-th component `w^{CH,p}_k(e)`, of codimension `k(p-1)`.
pub fn w_chp_component(e: &VirtualBundle, p: u64, k: usize) -> Result<ChowClass> {
    let w = w_chp_integral(e, p)?;
    Ok(w.codim_component(k * (p as usize - 1)))
}

pub fn todd(e: &VirtualBundle) -> Result<RationalClass> {
    multiplicative_class(&SeriesSpec::todd(e.variety().dim()), e)
}

/// Todd class of the tangent bundle, cached on the variety.
pub fn todd_tangent(variety: &Arc<CellularVariety>) -> RationalClass {
    variety.cached_class("todd", || {
        todd(&VirtualBundle::tangent(variety)).expect("Todd series is invertible")
    })
}

pub fn todd_tangent_inverse(variety: &Arc<CellularVariety>) -> RationalClass {
    variety.cached_class("todd_inverse", || {
        todd_tangent(variety)
            .inverse()
            .expect("Todd class has rank part 1")
    })
}

/// `w^{CH,p}(e)` acting on a Chow class by multiplication.
pub fn apply_w(e: &VirtualBundle, p: u64, x: &ChowClass) -> Result<ChowClass> {
    let w = w_chp_integral(e, p)?;
    w.try_mul(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{rat, rat_frac};
    use crate::varieties::{odd_quadric, product, projective_space};

    fn h(variety: &Arc<CellularVariety>) -> ChowClass {
        ChowClass::from_labels(variety, [("h^1", BigInt::one())]).unwrap()
    }

    fn class(variety: &Arc<CellularVariety>, coeffs: Vec<BigRational>) -> RationalClass {
        RationalClass::from_vec(variety, coeffs).unwrap()
    }

    #[test]
    fn todd_examples() {
        let p1 = projective_space(1).unwrap();
        let t = VirtualBundle::tangent(&p1);
        assert_eq!(todd(&t).unwrap(), class(&p1, vec![rat(1), rat(1)]));
        assert_eq!(todd(&t.neg()).unwrap(), class(&p1, vec![rat(1), rat(-1)]));
        assert_eq!(todd(&VirtualBundle::trivial(&p1, 4)).unwrap(), RationalClass::one(&p1));
        let p2 = projective_space(2).unwrap();
        assert_eq!(
            todd(&VirtualBundle::tangent(&p2)).unwrap(),
            class(&p2, vec![rat(1), rat_frac(3, 2), rat(1)])
        );
    }

    #[test]
    fn identity_series_gives_one() {
        let p2 = projective_space(2).unwrap();
        let e = VirtualBundle::tangent(&p2).scale(5);
        let id = SeriesSpec::identity(2);
        assert_eq!(multiplicative_class(&id, &e).unwrap(), RationalClass::one(&p2));
    }

    #[test]
    fn chern_examples() {
        let p2 = projective_space(2).unwrap();
        let o1 = VirtualBundle::line_bundle(&h(&p2)).unwrap();
        assert_eq!(
            chern(&o1).unwrap(),
            ChowClass::from_vec(&p2, vec![1.into(), 1.into(), 0.into()]).unwrap()
        );
        assert_eq!(
            chern(&VirtualBundle::tangent(&p2)).unwrap(),
            ChowClass::from_vec(&p2, vec![1.into(), 3.into(), 3.into()]).unwrap()
        );
        assert_eq!(chern(&VirtualBundle::zero(&p2)).unwrap(), ChowClass::one(&p2));
        let bogus = VirtualBundle::from_ch(class(&p2, vec![rat(1), rat_frac(1, 3), rat(0)])).unwrap();
        assert!(matches!(chern(&bogus), Err(Error::IntegralityViolation(_))));
    }

    #[test]
    fn chern_agrees_with_multiplicative_route() {
        let q5 = odd_quadric(5).unwrap();
        let spec = SeriesSpec::chern(5);
        for e in [VirtualBundle::tangent(&q5), VirtualBundle::tangent(&q5).neg()] {
            assert_eq!(chern_rational(&e), multiplicative_class(&spec, &e).unwrap());
        }
    }

    #[test]
    fn theta_examples() {
        let p1 = projective_space(1).unwrap();
        assert_eq!(
            theta_p(&VirtualBundle::trivial(&p1, 3), 5).unwrap(),
            RationalClass::one(&p1).scale(&rat(125))
        );
        let o1 = VirtualBundle::line_bundle(&h(&p1)).unwrap();
        assert_eq!(theta_p(&o1, 2).unwrap(), class(&p1, vec![rat(2), rat(-1)]));
        let minus_t = VirtualBundle::tangent(&p1).neg();
        assert_eq!(
            theta_p(&minus_t, 2).unwrap(),
            class(&p1, vec![rat_frac(1, 2), rat_frac(1, 2)])
        );
        assert_eq!(theta_p(&o1, 4).unwrap_err(), Error::NotPrime(4));
    }

    #[test]
    fn w_examples() {
        let p2 = projective_space(2).unwrap();
        let o1 = VirtualBundle::line_bundle(&h(&p2)).unwrap();
        let t = VirtualBundle::tangent(&p2);
        let int = |v: [i64; 3]| ChowClass::from_vec(&p2, v.iter().map(|&x| x.into()).collect()).unwrap();
        assert_eq!(w_chp_integral(&o1, 2).unwrap(), int([1, -1, 0]));
        assert_eq!(w_chp_integral(&t.neg(), 2).unwrap(), int([1, 3, 6]));
        assert_eq!(w_chp_integral(&t, 3).unwrap(), int([1, 0, 3]));
        assert_eq!(w_chp_component(&t.neg(), 3, 1).unwrap(), int([0, 0, -3]));
    }

    #[test]
    fn series_spec_validation() {
        assert_eq!(
            SeriesSpec::new(Series::variable(3), SeriesMode::Multiplicative).unwrap_err(),
            Error::NonInvertibleSeries
        );
        assert!(SeriesSpec::new(Series::from_ints(&[6, 1], 3), SeriesMode::InvertibleAtP(2)).is_err());
        assert!(SeriesSpec::new(Series::from_ints(&[-8, 1], 3), SeriesMode::InvertibleAtP(2)).is_ok());
    }

    #[test]
    fn bundle_json_round_trip() {
        let p2 = projective_space(2).unwrap();
        let t = VirtualBundle::tangent(&p2);
        let json = t.to_json();
        assert_eq!(
            json.to_string(),
            r#"{"ch":{"h^0":"2","h^1":"3","h^2":"3/2"},"rank":"2"}"#
        );
        let parsed = VirtualBundle::from_json(
            &p2,
            &serde_json::json!({"rank":"2","ch":{"1":"2","h^1":"3","h^2":"3/2"}}),
        )
        .unwrap();
        assert_eq!(parsed, t);
        assert!(VirtualBundle::from_json(&p2, &serde_json::json!({"rank":"3","ch":{"1":"2"}})).is_err());
    }

    #[test]
    fn product_tangent_is_sum() {
        let p1 = projective_space(1).unwrap();
        let p1p1 = product(&p1, &p1).unwrap();
        let c = chern(&VirtualBundle::tangent(&p1p1)).unwrap();
        // (1 + 2a)(1 + 2b) = 1 + 2a + 2b + 4ab
        let expected = ChowClass::from_labels(
            &p1p1,
            [
                ("h^0*h^0", BigInt::from(1)),
                ("h^1*h^0", BigInt::from(2)),
                ("h^0*h^1", BigInt::from(2)),
                ("h^1*h^1", BigInt::from(4)),
            ],
        )
        .unwrap();
        assert_eq!(c, expected);
    }
}
