//! Fraction-free (Bareiss) elimination over the polynomial ring.
//!
//! Every intermediate entry is a minor of the input, so each division by the
//! previous pivot is exact. Pivots are taken from the lowest available row.

use crate::error::{Error, Result};
use crate::polyring::MPoly;

pub(crate) struct Echelon {
    /// Columns in which a pivot was found, ascending.
    pub pivots: Vec<usize>,
    /// Last pivot entry; for a nonsingular square input this is the
    /// determinant up to `sign`.
    pub last_pivot: Option<MPoly>,
    pub sign: i32,
}

pub(crate) fn eliminate(mut m: Vec<Vec<MPoly>>, nvars: usize) -> Result<Echelon> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut prev = MPoly::one(nvars);
    let mut r = 0;
    let mut pivots = Vec::new();
    let mut sign = 1;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            m.swap(p, r);
            sign = -sign;
        }
        for i in r + 1..rows {
            for j in c + 1..cols {
                let v = &(&m[r][c] * &m[i][j]) - &(&m[i][c] * &m[r][j]);
                m[i][j] = v.exact_div(&prev)?.ok_or_else(|| {
                    Error::internal("Bareiss step produced an inexact division")
                })?;
            }
            m[i][c] = MPoly::zero(nvars);
        }
        prev = m[r][c].clone();
        pivots.push(c);
        r += 1;
    }
    Ok(Echelon {
        pivots,
        last_pivot: (r > 0).then_some(prev),
        sign,
    })
}

pub(crate) fn determinant(m: Vec<Vec<MPoly>>, nvars: usize) -> Result<MPoly> {
    let size = m.len();
    if size == 0 {
        return Ok(MPoly::one(nvars));
    }
    let ech = eliminate(m, nvars)?;
    if ech.pivots.len() < size {
        return Ok(MPoly::zero(nvars));
    }
    let det = ech.last_pivot.expect("full rank implies a pivot");
    Ok(if ech.sign < 0 { -&det } else { det })
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}
