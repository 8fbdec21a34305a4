//! Multivariate gcd by recursive content / primitive-part splitting with a
//! subresultant remainder sequence in the main variable.

use num_bigint::BigInt;

use super::{MPoly, Ratio, UniPoly};
use crate::error::{Error, Result};

/// Greatest common divisor, normalized to coprime integer coefficients with
/// a positive graded-lex leading coefficient.
pub fn gcd(a: &MPoly, b: &MPoly) -> Result<MPoly> {
    a.check_compatible(b)?;
    if a.is_zero() && b.is_zero() {
        return Err(Error::usage("gcd(0, 0) is undefined"));
    }
    Ok(gcd_rec(a, b)?.primitive_normalize().1)
}

/// Normalized gcd of a list; zero entries are ignored. Fails if all vanish.
pub fn gcd_all<'a, I>(polys: I) -> Result<MPoly>
where
    I: IntoIterator<Item = &'a MPoly>,
{
    let mut acc: Option<MPoly> = None;
    for p in polys {
        if p.is_zero() {
            continue;
        }
        acc = Some(match acc {
            None => p.clone(),
            Some(g) if g.is_constant() => g,
            Some(g) => gcd_rec(&g, p)?,
        });
    }
    acc.map(|g| g.primitive_normalize().1)
        .ok_or_else(|| Error::usage("gcd of an empty or all-zero family"))
}

fn gcd_rec(a: &MPoly, b: &MPoly) -> Result<MPoly> {
    if a.is_zero() {
        return Ok(b.clone());
    }
    if b.is_zero() {
        return Ok(a.clone());
    }
    if a.is_constant() || b.is_constant() {
        return Ok(MPoly::one(a.nvars()));
    }
    let involved: Vec<usize> = (0..a.nvars()).filter(|&v| a.involves(v) || b.involves(v)).collect();
    let var = involved[0];
    if involved.len() == 1 {
        let g = UniPoly::from_mpoly(a, var)?.gcd(&UniPoly::from_mpoly(b, var)?);
        return Ok(g.to_mpoly(a.nvars(), var));
    }

    let cont_a = content_in(a, var)?;
    let cont_b = content_in(b, var)?;
    let cont = gcd_rec(&cont_a, &cont_b)?;
    let pp_a = divide(a, &cont_a)?;
    let pp_b = divide(b, &cont_b)?;
    if pp_a.degree_in(var) == 0 || pp_b.degree_in(var) == 0 || images_coprime(&pp_a, &pp_b, var)? {
        return Ok(cont);
    }
    let g = subresultant_gcd(pp_a, pp_b, var)?;
    Ok(&cont * &g)
}

/// Sufficient test for coprimality of `a`, `b` (both primitive in `x_var`):
/// specialize the other variables at a point where neither leading
/// coefficient in `x_var` vanishes. A common factor would survive with its
/// full degree, so a constant image gcd proves the primitive gcd is 1.
fn images_coprime(a: &MPoly, b: &MPoly, var: usize) -> Result<bool> {
    let others: Vec<usize> = (0..a.nvars()).filter(|&v| v != var).collect();
    let (lc_a, lc_b) = (leading_in(a, var), leading_in(b, var));
    for attempt in 0..4i64 {
        let point: Vec<Ratio> = others
            .iter()
            .enumerate()
            .map(|(i, _)| Ratio::from_integer(BigInt::from(3 + 7 * attempt + 2 * i as i64)))
            .collect();
        let at = |p: &MPoly| {
            others
                .iter()
                .zip(&point)
                .fold(p.clone(), |acc, (&v, x)| acc.substitute(v, x))
        };
        if at(&lc_a).is_zero() || at(&lc_b).is_zero() {
            continue;
        }
        let g = UniPoly::from_mpoly(&at(a), var)?.gcd(&UniPoly::from_mpoly(&at(b), var)?);
        return Ok(g.degree() == Some(0));
    }
    Ok(false)
}

/// Gcd of the coefficients of `p` viewed as a polynomial in `x_var`.
fn content_in(p: &MPoly, var: usize) -> Result<MPoly> {
    let mut acc = MPoly::zero(p.nvars());
    for c in p.coefficients_in(var) {
        if c.is_zero() {
            continue;
        }
        acc = gcd_rec(&acc, &c)?;
        if acc.is_constant() {
            break;
        }
    }
    Ok(acc)
}

fn primitive_part_in(p: &MPoly, var: usize) -> Result<MPoly> {
    let c = content_in(p, var)?;
    divide(p, &c)
}

fn divide(p: &MPoly, d: &MPoly) -> Result<MPoly> {
    p.exact_div(d)?
        .ok_or_else(|| Error::internal(format!("expected exact division of {p} by {d}")))
}

fn leading_in(p: &MPoly, var: usize) -> MPoly {
    p.coefficients_in(var)
        .pop()
        .unwrap_or_else(|| MPoly::zero(p.nvars()))
}

/// Pseudo-remainder `lc(g)^(deg f - deg g + 1) * f mod g` in `x_var`.
fn pseudo_rem(f: &MPoly, g: &MPoly, var: usize) -> MPoly {
    let nvars = f.nvars();
    let dg = g.degree_in(var) as usize;
    let lc_g = leading_in(g, var);
    let g_coeffs = g.coefficients_in(var);
    let mut r = f.coefficients_in(var);
    let exponent = f.degree_in(var) as usize + 1 - dg;
    let mut steps = 0;
    while r.len() > dg && !r.is_empty() {
        let shift = r.len() - 1 - dg;
        let lr = r.last().cloned().unwrap();
        for c in r.iter_mut() {
            *c = &lc_g * c;
        }
        for (i, gc) in g_coeffs.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &(&lr * gc);
        }
        r.pop();
        while r.last().is_some_and(MPoly::is_zero) {
            r.pop();
        }
        steps += 1;
    }
    let rem = MPoly::from_coefficients_in(nvars, var, &r);
    if steps < exponent {
        &rem * &lc_g.pow((exponent - steps) as u32)
    } else {
        rem
    }
}

/// Gcd of two polynomials primitive in `x_var`, both of positive degree
/// there.
fn subresultant_gcd(f: MPoly, g: MPoly, var: usize) -> Result<MPoly> {
    let nvars = f.nvars();
    let (mut a, mut b) = if f.degree_in(var) >= g.degree_in(var) {
        (f, g)
    } else {
        (g, f)
    };
    let mut g_lc = MPoly::one(nvars);
    let mut h = MPoly::one(nvars);
    loop {
        let delta = a.degree_in(var) - b.degree_in(var);
        let r = pseudo_rem(&a, &b, var);
        if r.is_zero() {
            break;
        }
        if r.degree_in(var) == 0 {
            return Ok(MPoly::one(nvars));
        }
        a = b;
        b = divide(&r, &(&g_lc * &h.pow(delta)))?;
        g_lc = leading_in(&a, var);
        if delta > 0 {
            h = divide(&g_lc.pow(delta), &h.pow(delta - 1))?;
        }
    }
    primitive_part_in(&b, var)
}
