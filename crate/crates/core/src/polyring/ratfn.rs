use std::fmt;

use super::{gcd, MPoly, Ratio};
use crate::error::{Error, Result};

/// Rational function `num / den` in lowest terms.
///
/// The denominator has coprime integer coefficients and a positive graded-lex
/// leading coefficient, so equal functions have equal representations.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RatFn {
    num: MPoly,
    den: MPoly,
}

impl RatFn {
    pub fn new(num: MPoly, den: MPoly) -> Result<Self> {
        num.check_compatible(&den)?;
        if den.is_zero() {
            return Err(Error::usage("rational function with zero denominator"));
        }
        if num.is_zero() {
            let nvars = num.nvars();
            return Ok(RatFn {
                num,
                den: MPoly::one(nvars),
            });
        }
        let g = gcd(&num, &den)?;
        let cancel = |p: &MPoly| {
            p.exact_div(&g)?
                .ok_or_else(|| Error::internal("gcd does not divide its argument"))
        };
        let (num, den) = (cancel(&num)?, cancel(&den)?);
        let (c, den) = den.primitive_normalize();
        let num = num.scale(&c.recip());
        Ok(RatFn { num, den })
    }

    pub fn from_poly(p: MPoly) -> Self {
        let nvars = p.nvars();
        RatFn {
            num: p,
            den: MPoly::one(nvars),
        }
    }

    pub fn num(&self) -> &MPoly {
        &self.num
    }

    pub fn den(&self) -> &MPoly {
        &self.den
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn scale(&self, c: &Ratio) -> RatFn {
        RatFn {
            num: self.num.scale(c),
            den: if num_traits::Zero::is_zero(c) {
                MPoly::one(self.den.nvars())
            } else {
                self.den.clone()
            },
        }
    }
}

impl fmt::Display for RatFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({})/({})", self.num, self.den)
        }
    }
}
