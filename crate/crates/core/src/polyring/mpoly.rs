use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::Ratio;
use crate::error::{Error, Result};

/// Exponent vector ordered graded-lexicographically, variable 0 (t) first.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self / other` when `other` divides `self`.
    fn checked_div(&self, other: &Monomial) -> Option<Monomial> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| a.checked_sub(b))
            .collect::<Option<Vec<_>>>()
            .map(Monomial)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact sparse polynomial over the rationals in `(t, p_1, ..., p_q)`.
///
/// Terms are kept in a map keyed by graded-lex monomials with no zero
/// coefficients, so structural equality is mathematical equality.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MPoly {
    nvars: usize,
    terms: BTreeMap<Monomial, Ratio>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

/// Checked ring operation; the variable counts must agree.
pub fn arith(op: ArithOp, lhs: &MPoly, rhs: &MPoly) -> Result<MPoly> {
    lhs.check_compatible(rhs)?;
    Ok(match op {
        ArithOp::Add => lhs + rhs,
        ArithOp::Sub => lhs - rhs,
        ArithOp::Mul => lhs * rhs,
    })
}

impl MPoly {
    pub fn zero(nvars: usize) -> Self {
        MPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Ratio::one())
    }

    pub fn constant(nvars: usize, c: Ratio) -> Self {
        let mut p = Self::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(nvars), c);
        }
        p
    }

    pub fn from_int(nvars: usize, c: i64) -> Self {
        Self::constant(nvars, Ratio::from_integer(BigInt::from(c)))
    }

    /// The variable `x_var` itself.
    pub fn var(nvars: usize, var: usize) -> Self {
        assert!(var < nvars, "variable index {var} out of range for {nvars} variables");
        let mut exps = vec![0; nvars];
        exps[var] = 1;
        Self::monomial(Monomial(exps), Ratio::one())
    }

    pub fn monomial(mono: Monomial, coeff: Ratio) -> Self {
        let nvars = mono.0.len();
        let mut p = Self::zero(nvars);
        if !coeff.is_zero() {
            p.terms.insert(mono, coeff);
        }
        p
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs, summing
    /// repeated exponent vectors.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, Ratio)>,
    {
        let mut p = Self::zero(nvars);
        for (exps, c) in terms {
            if exps.len() != nvars {
                return Err(Error::usage(format!(
                    "exponent vector of length {} for {} variables",
                    exps.len(),
                    nvars
                )));
            }
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }

    fn add_term(&mut self, mono: Monomial, c: Ratio) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mono) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(Monomial::is_one)
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().is_some_and(|c| c.is_one())
    }

    /// The value if the polynomial is constant (zero included).
    pub fn constant_value(&self) -> Option<Ratio> {
        if self.is_zero() {
            Some(Ratio::zero())
        } else if self.is_constant() {
            self.terms.values().next().cloned()
        } else {
            None
        }
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Ratio)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> Ratio {
        self.terms.get(mono).cloned().unwrap_or_else(Ratio::zero)
    }

    pub fn leading_term(&self) -> Option<(&Monomial, &Ratio)> {
        self.terms.iter().next_back()
    }

    pub fn leading_coeff(&self) -> Ratio {
        self.leading_term()
            .map(|(_, c)| c.clone())
            .unwrap_or_else(Ratio::zero)
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|m| m.0[var]).max().unwrap_or(0)
    }

    /// Whether `x_var` occurs in some term.
    pub fn involves(&self, var: usize) -> bool {
        self.terms.keys().any(|m| m.0[var] > 0)
    }

    pub fn max_abs_coeff(&self) -> Ratio {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Ratio::zero)
    }

    pub fn has_integer_coeffs(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }

    pub(crate) fn check_compatible(&self, other: &MPoly) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::usage(format!(
                "variable-count mismatch: {} vs {}",
                self.nvars, other.nvars
            )));
        }
        Ok(())
    }

    pub fn scale(&self, c: &Ratio) -> MPoly {
        if c.is_zero() {
            return MPoly::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    fn mul_term(&self, mono: &Monomial, c: &Ratio) -> MPoly {
        MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.mul(mono), v * c))
                .collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> MPoly {
        let mut base = self.clone();
        let mut acc = MPoly::one(self.nvars);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Partial derivative with respect to `x_var`.
    pub fn diff(&self, var: usize) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.0.clone();
            exps[var] -= 1;
            out.terms
                .insert(Monomial(exps), c * Ratio::from_integer(BigInt::from(e)));
        }
        out
    }

    /// Partial derivative with respect to t (variable 0).
    pub fn diff_t(&self) -> MPoly {
        self.diff(0)
    }

    /// Substitutes `x_var = value`; the variable count is unchanged.
    pub fn substitute(&self, var: usize, value: &Ratio) -> MPoly {
        let mut out = MPoly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.0[var];
            let mut exps = m.0.clone();
            exps[var] = 0;
            out.add_term(Monomial(exps), c * num_traits::pow(value.clone(), e as usize));
        }
        out
    }

    /// Substitutes all parameters (variables 1..) and returns a polynomial in
    /// t alone (one variable).
    pub fn eval_params(&self, values: &[Ratio]) -> Result<MPoly> {
        if values.len() + 1 != self.nvars {
            return Err(Error::usage(format!(
                "expected {} parameter values, got {}",
                self.nvars - 1,
                values.len()
            )));
        }
        let mut out = MPoly::zero(1);
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &e) in values.iter().zip(&m.0[1..]) {
                if e > 0 {
                    v *= num_traits::pow(x.clone(), e as usize);
                }
            }
            out.add_term(Monomial(vec![m.0[0]]), v);
        }
        Ok(out)
    }

    /// Exact evaluation at a rational point.
    pub fn eval(&self, point: &[Ratio]) -> Ratio {
        assert_eq!(point.len(), self.nvars);
        let mut acc = Ratio::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &e) in point.iter().zip(&m.0) {
                if e > 0 {
                    v *= num_traits::pow(x.clone(), e as usize);
                }
            }
            acc += v;
        }
        acc
    }

    /// Floating-point evaluation.
    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        assert_eq!(point.len(), self.nvars);
        self.terms
            .iter()
            .map(|(m, c)| {
                m.0.iter()
                    .zip(point)
                    .fold(ratio_to_f64(c), |acc, (&e, &x)| acc * x.powi(e as i32))
            })
            .sum()
    }

    /// Splits into coefficients of powers of `x_var`; entry `j` multiplies
    /// `x_var^j` and does not involve `x_var`.
    pub fn coefficients_in(&self, var: usize) -> Vec<MPoly> {
        if self.is_zero() {
            return Vec::new();
        }
        let mut out = vec![MPoly::zero(self.nvars); self.degree_in(var) as usize + 1];
        for (m, c) in &self.terms {
            let e = m.0[var] as usize;
            let mut exps = m.0.clone();
            exps[var] = 0;
            out[e].terms.insert(Monomial(exps), c.clone());
        }
        out
    }

    /// Inverse of [`MPoly::coefficients_in`].
    pub fn from_coefficients_in(nvars: usize, var: usize, coeffs: &[MPoly]) -> MPoly {
        let mut out = MPoly::zero(nvars);
        for (j, c) in coeffs.iter().enumerate() {
            for (m, v) in &c.terms {
                let mut exps = m.0.clone();
                exps[var] += j as u32;
                out.add_term(Monomial(exps), v.clone());
            }
        }
        out
    }

    /// Exact quotient `self / divisor`, or `None` when the division leaves a
    /// remainder.
    pub fn exact_div(&self, divisor: &MPoly) -> Result<Option<MPoly>> {
        self.check_compatible(divisor)?;
        let (lm, lc) = divisor
            .leading_term()
            .ok_or_else(|| Error::usage("division by the zero polynomial"))?;
        let (lm, lc) = (lm.clone(), lc.clone());
        let mut rem = self.clone();
        let mut quot = MPoly::zero(self.nvars);
        while let Some((m, c)) = rem.leading_term() {
            // A divisible polynomial keeps a divisible leading term throughout.
            let Some(qm) = m.checked_div(&lm) else {
                return Ok(None);
            };
            let qc = c / &lc;
            rem = &rem - &divisor.mul_term(&qm, &qc);
            quot.add_term(qm, qc);
        }
        Ok(Some(quot))
    }

    /// Largest `m` with `(x_var - root)^m` dividing `self`.
    pub fn valuation(&self, var: usize, root: &Ratio) -> Result<u32> {
        if self.is_zero() {
            return Err(Error::usage("valuation of the zero polynomial is infinite"));
        }
        if var >= self.nvars {
            return Err(Error::usage(format!("variable index {var} out of range")));
        }
        let factor = &MPoly::var(self.nvars, var) - &MPoly::constant(self.nvars, root.clone());
        let mut p = self.clone();
        let mut m = 0;
        while let Some(q) = p.exact_div(&factor)? {
            p = q;
            m += 1;
        }
        Ok(m)
    }

    /// Returns `(c, p / c)` with `p / c` having coprime integer coefficients
    /// and a positive leading coefficient. The zero polynomial maps to
    /// `(1, 0)`.
    pub fn primitive_normalize(&self) -> (Ratio, MPoly) {
        if self.is_zero() {
            return (Ratio::one(), self.clone());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for c in self.terms.values() {
            num_gcd = num_gcd.gcd(c.numer());
            den_lcm = den_lcm.lcm(c.denom());
        }
        let mut content = Ratio::new(num_gcd, den_lcm);
        if self.leading_coeff().is_negative() {
            content = -content;
        }
        let inv = content.recip();
        (content, self.scale(&inv))
    }

    pub fn variable_name(index: usize, nvars: usize) -> String {
        match (index, nvars) {
            (0, _) => "t".to_string(),
            (1, 2) => "eps".to_string(),
            (i, _) => format!("p{i}"),
        }
    }

    /// Parses expressions such as `3*t^2*eps - 1/2*t + 1`.
    ///
    /// Variables are named as in [`MPoly::variable_name`]; no parentheses.
    pub fn parse(s: &str, nvars: usize) -> Result<MPoly> {
        let names: Vec<String> = (0..nvars).map(|i| MPoly::variable_name(i, nvars)).collect();
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::parse("polynomial", "empty expression"));
        }
        let mut out = MPoly::zero(nvars);
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for (i, ch) in compact.chars().enumerate() {
            if (ch == '+' || ch == '-') && !(i > 0 && cur.ends_with('^')) {
                if !cur.is_empty() {
                    terms.push((neg, std::mem::take(&mut cur)));
                } else if i > 0 {
                    return Err(Error::parse("polynomial", format!("dangling sign in {s:?}")));
                }
                neg = ch == '-';
            } else {
                cur.push(ch);
            }
        }
        if cur.is_empty() {
            return Err(Error::parse("polynomial", format!("trailing sign in {s:?}")));
        }
        terms.push((neg, cur));
        for (neg, term) in terms {
            let mut coeff = Ratio::one();
            let mut exps = vec![0u32; nvars];
            for factor in term.split('*') {
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => (
                        b,
                        e.parse::<u32>().map_err(|_| {
                            Error::parse("polynomial", format!("bad exponent in {factor:?}"))
                        })?,
                    ),
                    None => (factor, 1),
                };
                if let Some(v) = names.iter().position(|n| n == base) {
                    exps[v] += exp;
                } else {
                    let c = parse_ratio(base)
                        .ok_or_else(|| Error::parse("polynomial", format!("bad factor {factor:?}")))?;
                    coeff *= num_traits::pow(c, exp as usize);
                }
            }
            if neg {
                coeff = -coeff;
            }
            out.add_term(Monomial(exps), coeff);
        }
        Ok(out)
    }
}

/// Parses `"3"`, `"-7/2"`.
pub fn parse_ratio(s: &str) -> Option<Ratio> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.parse().ok()?;
            let d: BigInt = d.parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Ratio::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Ratio::from_integer),
    }
}

pub fn ratio_to_f64(r: &Ratio) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // num-rational's conversion can overflow for huge numerators and
        // denominators separately; fall back to a scaled division.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub fn ratio_from_i64(v: i64) -> Ratio {
    Ratio::from_integer(BigInt::from(v))
}

impl Add for &MPoly {
    type Output = MPoly;

    fn add(self, rhs: &MPoly) -> MPoly {
        assert_eq!(self.nvars, rhs.nvars, "variable-count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl Sub for &MPoly {
    type Output = MPoly;

    fn sub(self, rhs: &MPoly) -> MPoly {
        assert_eq!(self.nvars, rhs.nvars, "variable-count mismatch");
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl Mul for &MPoly {
    type Output = MPoly;

    fn mul(self, rhs: &MPoly) -> MPoly {
        assert_eq!(self.nvars, rhs.nvars, "variable-count mismatch");
        let mut out = MPoly::zero(self.nvars);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }
}

impl Neg for &MPoly {
    type Output = MPoly;

    fn neg(self) -> MPoly {
        MPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $f:ident) => {
        impl $tr for MPoly {
            type Output = MPoly;
            fn $f(self, rhs: MPoly) -> MPoly {
                (&self).$f(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for MPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let mut factors = Vec::new();
            if !abs.is_one() || m.is_one() {
                factors.push(abs.to_string());
            }
            for (v, &e) in m.0.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(MPoly::variable_name(v, self.nvars)),
                    e => factors.push(format!("{}^{}", MPoly::variable_name(v, self.nvars), e)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}
