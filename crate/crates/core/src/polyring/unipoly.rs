use num_traits::{One, Zero};

use super::mpoly::{ratio_to_f64, MPoly};
use super::Ratio;
use crate::error::{Error, Result};

/// Dense univariate polynomial over the rationals; `coeffs[i]` multiplies
/// `x^i`. Trailing zeros are trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniPoly {
    coeffs: Vec<Ratio>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<Ratio>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        UniPoly { coeffs }
    }

    pub fn zero() -> Self {
        UniPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        UniPoly::new(vec![Ratio::one()])
    }

    /// Reads `p` as a polynomial in `x_var`; fails if another variable
    /// occurs.
    pub fn from_mpoly(p: &MPoly, var: usize) -> Result<Self> {
        let mut coeffs = vec![Ratio::zero(); p.degree_in(var) as usize + 1];
        for (m, c) in p.terms() {
            let others = m
                .exps()
                .iter()
                .enumerate()
                .any(|(i, &e)| i != var && e > 0);
            if others {
                return Err(Error::usage(format!(
                    "polynomial {p} involves variables other than {}",
                    MPoly::variable_name(var, p.nvars())
                )));
            }
            coeffs[m.exps()[var] as usize] = c.clone();
        }
        Ok(UniPoly::new(coeffs))
    }

    pub fn to_mpoly(&self, nvars: usize, var: usize) -> MPoly {
        let terms = self.coeffs.iter().enumerate().map(|(i, c)| {
            let mut exps = vec![0; nvars];
            exps[var] = i as u32;
            (exps, c.clone())
        });
        MPoly::from_terms(nvars, terms).expect("exponent vectors built with nvars entries")
    }

    pub fn coeffs(&self) -> &[Ratio] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Ratio {
        self.coeffs.last().cloned().unwrap_or_else(Ratio::zero)
    }

    pub fn monic(&self) -> UniPoly {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.leading().recip();
        UniPoly::new(self.coeffs.iter().map(|c| c * &inv).collect())
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        UniPoly::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(Ratio::zero);
                    let b = other.coeffs.get(i).cloned().unwrap_or_else(Ratio::zero);
                    a + b
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &UniPoly) -> UniPoly {
        self.add(&other.scale(&-Ratio::one()))
    }

    pub fn scale(&self, c: &Ratio) -> UniPoly {
        UniPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![Ratio::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    /// Euclidean division over the rationals.
    pub fn div_rem(&self, divisor: &UniPoly) -> Result<(UniPoly, UniPoly)> {
        let dd = divisor
            .degree()
            .ok_or_else(|| Error::usage("division by the zero polynomial"))?;
        let lead_inv = divisor.leading().recip();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![Ratio::zero(); rem.len().saturating_sub(dd)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let q = rem.last().unwrap() * &lead_inv;
            for (i, c) in divisor.coeffs.iter().enumerate() {
                rem[shift + i] -= &q * c;
            }
            quot[shift] = q;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        Ok((UniPoly::new(quot), UniPoly::new(rem)))
    }

    /// Monic gcd (zero when both inputs vanish).
    pub fn gcd(&self, other: &UniPoly) -> UniPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b).expect("nonzero divisor");
            a = std::mem::replace(&mut b, if r.is_zero() { r } else { r.monic() });
        }
        if a.is_zero() {
            a
        } else {
            a.monic()
        }
    }

    /// Returns `(g, u, v)` with `u*self + v*other = g`, `g` monic (or zero
    /// when both inputs vanish).
    pub fn ext_gcd(&self, other: &UniPoly) -> (UniPoly, UniPoly, UniPoly) {
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (UniPoly::one(), UniPoly::zero());
        let (mut t0, mut t1) = (UniPoly::zero(), UniPoly::one());
        while !r1.is_zero() {
            let (q, r) = r0.div_rem(&r1).expect("nonzero divisor");
            let s = s0.sub(&q.mul(&s1));
            let t = t0.sub(&q.mul(&t1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
            t0 = std::mem::replace(&mut t1, t);
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let inv = r0.leading().recip();
        (r0.scale(&inv), s0.scale(&inv), t0.scale(&inv))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(ratio_to_f64).collect()
    }
}

/// Horner evaluation of `coeffs[0] + coeffs[1] x + ...`.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Univariate view of a one-variable polynomial as f64 coefficients.
pub fn to_f64_coeffs(p: &MPoly) -> Vec<f64> {
    debug_assert_eq!(p.nvars(), 1);
    let mut out = vec![0.0; p.degree_in(0) as usize + 1];
    for (m, c) in p.terms() {
        out[m.exps()[0] as usize] = ratio_to_f64(c);
    }
    out
}
