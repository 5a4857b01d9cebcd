//! Truncated formal power series in one variable over `Q`.
//!
//! Used for the per-root series of multiplicative characteristic classes.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// `Σ coeffs[i] t^i + O(t^{len})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Series {
    coeffs: Vec<BigRational>,
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

impl Series {
    /// Series known up to and including `t^order`.
    pub fn new(mut coeffs: Vec<BigRational>, order: usize) -> Self {
        coeffs.resize(order + 1, BigRational::zero());
        Series { coeffs }
    }

    pub fn from_ints(coeffs: &[i64], order: usize) -> Self {
        Self::new(
            coeffs
                .iter()
                .map(|&c| BigRational::from_integer(c.into()))
                .collect(),
            order,
        )
    }

    pub fn constant(c: BigRational, order: usize) -> Self {
        Self::new(vec![c], order)
    }

    pub fn one(order: usize) -> Self {
        Self::constant(BigRational::one(), order)
    }

    /// `t`
    pub fn variable(order: usize) -> Self {
        Self::from_ints(&[0, 1], order)
    }

    /// `e^{c t}`
    pub fn exp_scaled(c: &BigRational, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut power = BigRational::one();
        for k in 0..=order {
            coeffs.push(&power / BigRational::from_integer(factorial(k)));
            power *= c;
        }
        Series { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> BigRational {
        self.coeffs.get(i).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn constant_term(&self) -> &BigRational {
        &self.coeffs[0]
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Series {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Drops the constant term and divides by `t`; needs a zero constant term.
    pub fn shift_down(&self) -> Result<Self> {
        if !self.coeffs[0].is_zero() {
            return Err(Error::NonInvertibleSeries);
        }
        let mut coeffs: Vec<BigRational> = self.coeffs[1..].to_vec();
        // Lose one order of precision.
        if coeffs.is_empty() {
            coeffs.push(BigRational::zero());
        }
        Ok(Series { coeffs })
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::new(self.coeffs[..=order.min(self.order())].to_vec(), order)
    }

    pub fn inverse(&self) -> Result<Self> {
        let a0 = &self.coeffs[0];
        if a0.is_zero() {
            return Err(Error::NonInvertibleSeries);
        }
        let n = self.order();
        let mut inv = vec![BigRational::zero(); n + 1];
        inv[0] = a0.recip();
        for k in 1..=n {
            let mut s = BigRational::zero();
            for i in 1..=k {
                s += &self.coeffs[i] * &inv[k - i];
            }
            inv[k] = -s * &inv[0];
        }
        Ok(Series { coeffs: inv })
    }

    /// Logarithm of a series with constant term 1.
    pub fn log(&self) -> Result<Self> {
        if !self.coeffs[0].is_one() {
            return Err(Error::NonInvertibleSeries);
        }
        // (log f)' = f'/f
        let n = self.order();
        let derivative: Vec<BigRational> = (1..=n)
            .map(|k| &self.coeffs[k] * BigRational::from_integer(k.into()))
            .collect();
        let quotient = &Series::new(derivative, n.saturating_sub(1)) * &self.truncate(n.saturating_sub(1)).inverse()?;
        let mut coeffs = vec![BigRational::zero(); n + 1];
        for k in 1..=n {
            coeffs[k] = quotient.coeff(k - 1) / BigRational::from_integer(k.into());
        }
        Ok(Series { coeffs })
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one(self.order());
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }
}

impl Add for &Series {
    type Output = Series;

    fn add(self, rhs: Self) -> Series {
        let n = self.order().min(rhs.order());
        Series {
            coeffs: (0..=n).map(|i| &self.coeffs[i] + &rhs.coeffs[i]).collect(),
        }
    }
}

impl Sub for &Series {
    type Output = Series;

    fn sub(self, rhs: Self) -> Series {
        let n = self.order().min(rhs.order());
        Series {
            coeffs: (0..=n).map(|i| &self.coeffs[i] - &rhs.coeffs[i]).collect(),
        }
    }
}

impl Neg for &Series {
    type Output = Series;

    fn neg(self) -> Series {
        Series {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Mul for &Series {
    type Output = Series;

    fn mul(self, rhs: Self) -> Series {
        let n = self.order().min(rhs.order());
        let mut coeffs = vec![BigRational::zero(); n + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(n + 1) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate().take(n + 1 - i) {
                coeffs[i + j] += a * b;
            }
        }
        Series { coeffs }
    }
}
