//! Singular-perturbation detection for one-parameter derived equations and
//! ideal-membership certificates for their coefficients.
//!
//! A coefficient `A_i = num / den` (lowest terms) is singularly perturbed at
//! `eps_0` when the denominator vanishes identically in t there while the
//! numerator does not. Since the fraction is reduced, that happens exactly
//! when `eps - eps_0` divides the eps-content of `den` (the gcd of its
//! t-coefficients), so the verdict needs no root finding: the equation is
//! free of singular perturbations iff every such content is constant.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::derivation::DerivedEq;
use crate::error::{Error, Result};
use crate::polyring::{gcd_all, MPoly, Monomial, RatFn, Ratio, UniPoly, T};

const EPS: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Verdict {
    NotPerturbed,
    Perturbed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    /// Index `i` of the offending coefficient `A_i`.
    pub coefficient: usize,
    /// Nonconstant eps-content of its reduced denominator.
    pub content: MPoly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationReport {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    /// eps-content of each reduced denominator, in coefficient order.
    pub reduced_den_contents: Vec<MPoly>,
}

fn require_one_parameter(nvars: usize) -> Result<()> {
    if nvars != 2 {
        return Err(Error::UnsupportedParameterCount {
            expected: 1,
            found: nvars.saturating_sub(1),
        });
    }
    Ok(())
}

/// Exact verdict on the monic form of `eq`.
pub fn perturbation_verdict(eq: &DerivedEq) -> Result<PerturbationReport> {
    require_one_parameter(eq.nvars())?;
    let mut witnesses = Vec::new();
    let mut contents = Vec::with_capacity(eq.k());
    for (i, a) in eq.reduced().iter().enumerate() {
        let content = gcd_all(a.den().coefficients_in(T).iter())?;
        if !content.is_constant() {
            witnesses.push(Witness {
                coefficient: i,
                content: content.clone(),
            });
        }
        contents.push(content);
    }
    Ok(PerturbationReport {
        verdict: if witnesses.is_empty() {
            Verdict::NotPerturbed
        } else {
            Verdict::Perturbed
        },
        witnesses,
        reduced_den_contents: contents,
    })
}

/// Order of vanishing along `eps = root`; the zero polynomial vanishes to
/// infinite order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(u32),
    Infinite,
}

/// `(eps - root)`-valuations of numerator and denominator of `f`.
pub fn valuation_profile(f: &RatFn, root: &Ratio) -> Result<(Valuation, u32)> {
    valuation_profile_of(f.num(), f.den(), root)
}

/// As [`valuation_profile`] for an unreduced pair `num / den`.
pub fn valuation_profile_of(num: &MPoly, den: &MPoly, root: &Ratio) -> Result<(Valuation, u32)> {
    require_one_parameter(den.nvars())?;
    if den.is_zero() {
        return Err(Error::usage("zero denominator"));
    }
    let v_num = if num.is_zero() {
        Valuation::Infinite
    } else {
        Valuation::Finite(num.valuation(EPS, root)?)
    };
    Ok((v_num, den.valuation(EPS, root)?))
}

/// The two ways the pointwise definition can be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefinitionReading {
    /// Denominator vanishes to strictly higher order than the numerator:
    /// the equation takes the form `(eps - eps_0)^s y^(k) + ...` with
    /// `s > 0`. This is the reading [`perturbation_verdict`] implements.
    PoleOrder,
    /// Numerator divisible by a higher or equal power than the denominator,
    /// taken word for word.
    Literal,
}

/// Whether `f` is singularly perturbed at `eps = root` under `reading`.
///
/// Under [`DefinitionReading::PoleOrder`] a zero numerator is never
/// perturbed; equal valuations are not perturbed either.
pub fn singular_at(f: &RatFn, root: &Ratio, reading: DefinitionReading) -> Result<bool> {
    let (num, den) = valuation_profile(f, root)?;
    Ok(match reading {
        DefinitionReading::PoleOrder => num < Valuation::Finite(den),
        DefinitionReading::Literal => num >= Valuation::Finite(den),
    })
}

/// Cofactors `h_j` with `sum_j h_j b_j = target`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivisionCertificate {
    /// Which target in a family this certifies (0 for a single target).
    pub target_index: usize,
    pub target: MPoly,
    pub basis: Vec<MPoly>,
    pub cofactors: Vec<MPoly>,
    pub degree_cap: u32,
}

impl DivisionCertificate {
    pub fn with_target_index(mut self, i: usize) -> Self {
        self.target_index = i;
        self
    }

    /// Re-checks the identity and the degree cap exactly.
    pub fn verify(&self) -> bool {
        if self.basis.len() != self.cofactors.len() {
            return false;
        }
        let nvars = self.target.nvars();
        let combo = self
            .cofactors
            .iter()
            .zip(&self.basis)
            .fold(MPoly::zero(nvars), |acc, (h, b)| &acc + &(h * b));
        combo == self.target
            && self
                .cofactors
                .iter()
                .all(|h| h.is_zero() || h.total_degree() <= self.degree_cap)
    }
}

fn check_division_inputs(target: &MPoly, basis: &[MPoly]) -> Result<()> {
    if basis.is_empty() {
        return Err(Error::usage("empty basis"));
    }
    for p in std::iter::once(target).chain(basis) {
        target.check_compatible(p)?;
        if p.involves(T) {
            return Err(Error::usage(format!("{p} involves t; expected a parameter polynomial")));
        }
    }
    Ok(())
}

/// Monomials in the parameters (t-exponent 0) of total degree at most `cap`.
fn parameter_monomials(nvars: usize, cap: u32) -> Vec<Monomial> {
    fn go(var: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if var == cur.len() {
            out.push(Monomial::new(cur.clone()));
            return;
        }
        for e in 0..=left {
            cur[var] = e;
            go(var + 1, left - e, cur, out);
        }
        cur[var] = 0;
    }
    let mut out = Vec::new();
    go(1, cap, &mut vec![0; nvars], &mut out);
    out
}

/// Searches for cofactors of degree at most `cap` by solving the linear
/// system in their unknown coefficients. `None` if the system is infeasible.
pub fn effective_division(
    target: &MPoly,
    basis: &[MPoly],
    cap: u32,
) -> Result<Option<DivisionCertificate>> {
    Ok(effective_division_many(std::slice::from_ref(target), basis, cap)?
        .pop()
        .flatten())
}

/// [`effective_division`] for several targets sharing one basis; the
/// elimination is done once.
pub fn effective_division_many(
    targets: &[MPoly],
    basis: &[MPoly],
    cap: u32,
) -> Result<Vec<Option<DivisionCertificate>>> {
    let Some(first) = targets.first() else {
        return Ok(Vec::new());
    };
    for t in targets {
        check_division_inputs(t, basis)?;
    }
    let nvars = first.nvars();
    let monos = parameter_monomials(nvars, cap);
    let unknowns: Vec<(usize, &Monomial)> = (0..basis.len())
        .filter(|&j| !basis[j].is_zero())
        .flat_map(|j| monos.iter().map(move |m| (j, m)))
        .collect();

    // One equation per monomial that can occur on either side.
    let mut row_of: BTreeMap<Monomial, usize> = BTreeMap::new();
    let mut columns: Vec<Vec<(usize, Ratio)>> = Vec::with_capacity(unknowns.len());
    for (j, m) in &unknowns {
        let shifted = &basis[*j] * &MPoly::monomial((*m).clone(), Ratio::one());
        let col = shifted
            .terms()
            .map(|(mono, c)| {
                let next = row_of.len();
                (*row_of.entry(mono.clone()).or_insert(next), c.clone())
            })
            .collect();
        columns.push(col);
    }
    for t in targets {
        for (mono, _) in t.terms() {
            let next = row_of.len();
            row_of.entry(mono.clone()).or_insert(next);
        }
    }
    let rows = row_of.len();
    let ncols = unknowns.len();
    let width = ncols + targets.len();
    let mut mat = vec![vec![Ratio::zero(); width]; rows];
    for (c, col) in columns.iter().enumerate() {
        for (r, v) in col {
            mat[*r][c] = v.clone();
        }
    }
    for (ti, t) in targets.iter().enumerate() {
        for (mono, c) in t.terms() {
            mat[row_of[mono]][ncols + ti] = c.clone();
        }
    }

    if let Some(out) = solve_on_modular_pivots(&mat, ncols, &unknowns, targets, basis, cap) {
        return Ok(out);
    }

    let pivots = row_reduce(&mut mat, ncols);

    let mut out = Vec::with_capacity(targets.len());
    for (ti, target) in targets.iter().enumerate() {
        let rhs = ncols + ti;
        let feasible = mat[pivots.len()..].iter().all(|row| row[rhs].is_zero());
        if !feasible {
            out.push(None);
            continue;
        }
        let values: Vec<(usize, Ratio)> = pivots.iter().enumerate().map(|(r, &c)| (c, mat[r][rhs].clone())).collect();
        out.push(Some(certificate(ti, target, basis, &unknowns, &values, cap)?));
    }
    Ok(out)
}

fn certificate(
    ti: usize,
    target: &MPoly,
    basis: &[MPoly],
    unknowns: &[(usize, &Monomial)],
    values: &[(usize, Ratio)],
    cap: u32,
) -> Result<DivisionCertificate> {
    let cert = build_certificate(ti, target, basis, unknowns, values, cap);
    if !cert.verify() {
        return Err(Error::internal("effective division certificate fails re-verification"));
    }
    Ok(cert)
}

fn build_certificate(
    ti: usize,
    target: &MPoly,
    basis: &[MPoly],
    unknowns: &[(usize, &Monomial)],
    values: &[(usize, Ratio)],
    cap: u32,
) -> DivisionCertificate {
    let mut cofactors = vec![MPoly::zero(target.nvars()); basis.len()];
    for (c, v) in values {
        let (j, m) = unknowns[*c];
        cofactors[j] = &cofactors[j] + &MPoly::monomial(m.clone(), v.clone());
    }
    DivisionCertificate {
        target_index: ti,
        target: target.clone(),
        basis: basis.to_vec(),
        cofactors,
        degree_cap: cap,
    }
}

const PRIME: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % PRIME as u128) as u64
}

fn inv_mod(a: u64) -> u64 {
    let (mut base, mut e, mut acc) = (a, PRIME - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, base);
        }
        base = mul_mod(base, base);
        e >>= 1;
    }
    acc
}

fn reduce_mod(r: &Ratio) -> Option<u64> {
    let p = num_bigint::BigInt::from(PRIME);
    let residue = |x: &num_bigint::BigInt| {
        let v = ((x % &p) + &p) % &p;
        u64::try_from(v).expect("residue below the prime")
    };
    let den = residue(r.denom());
    (den != 0).then(|| mul_mod(residue(r.numer()), inv_mod(den)))
}

/// Picks pivot rows and columns by elimination modulo a prime, then solves
/// the square subsystem on them exactly. A nonsingular image mod p makes the
/// subsystem nonsingular over Q; each solution is accepted only if the full
/// identity verifies. `None` means the caller should fall back to exact
/// elimination on the whole matrix.
fn solve_on_modular_pivots(
    mat: &[Vec<Ratio>],
    ncols: usize,
    unknowns: &[(usize, &Monomial)],
    targets: &[MPoly],
    basis: &[MPoly],
    cap: u32,
) -> Option<Vec<Option<DivisionCertificate>>> {
    let mut m: Vec<Vec<u64>> = Vec::with_capacity(mat.len());
    for row in mat {
        m.push(row[..ncols].iter().map(reduce_mod).collect::<Option<Vec<_>>>()?);
    }
    let mut order: Vec<usize> = (0..mat.len()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let Some(p) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(p, r);
        order.swap(p, r);
        let inv = inv_mod(m[r][c]);
        for v in m[r].iter_mut().skip(c) {
            *v = mul_mod(*v, inv);
        }
        let pivot_row = m[r].clone();
        for row in m.iter_mut().skip(r + 1) {
            let f = row[c];
            if f == 0 {
                continue;
            }
            for (v, pv) in row.iter_mut().zip(&pivot_row).skip(c) {
                *v = (*v + PRIME - mul_mod(f, *pv)) % PRIME;
            }
        }
        pivots.push(c);
        r += 1;
    }

    let mut sub: Vec<Vec<Ratio>> = order[..pivots.len()]
        .iter()
        .map(|&i| {
            pivots
                .iter()
                .map(|&c| mat[i][c].clone())
                .chain((0..targets.len()).map(|ti| mat[i][ncols + ti].clone()))
                .collect()
        })
        .collect();
    let sub_pivots = row_reduce(&mut sub, pivots.len());
    if sub_pivots.len() != pivots.len() {
        return None;
    }
    let mut out = Vec::with_capacity(targets.len());
    for (ti, target) in targets.iter().enumerate() {
        let values: Vec<(usize, Ratio)> = pivots
            .iter()
            .enumerate()
            .map(|(k, &c)| (c, sub[k][pivots.len() + ti].clone()))
            .collect();
        let cert = build_certificate(ti, target, basis, unknowns, &values, cap);
        if !cert.verify() {
            return None;
        }
        out.push(Some(cert));
    }
    Some(out)
}

/// Reduced row echelon form on the first `ncols` columns, lowest-index
/// pivots first. Returns pivot columns; pivot `r` sits in row `r`.
fn row_reduce(mat: &mut [Vec<Ratio>], ncols: usize) -> Vec<usize> {
    let rows = mat.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !mat[i][c].is_zero()) else {
            continue;
        };
        mat.swap(p, r);
        let inv = mat[r][c].recip();
        for v in mat[r].iter_mut().skip(c) {
            *v *= &inv;
        }
        let pivot_row = mat[r].clone();
        for (i, row) in mat.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row).skip(c) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Constructive membership in the ideal generated by univariate `basis`:
/// factor out `b = gcd(basis)`, write `b = sum h_j b_j` by iterated extended
/// Euclid, and scale by `target / b`. `None` when `b` does not divide the
/// target.
pub fn bezout_membership(target: &MPoly, basis: &[MPoly]) -> Result<Option<DivisionCertificate>> {
    require_one_parameter(target.nvars())?;
    check_division_inputs(target, basis)?;
    let nvars = target.nvars();
    let uni_basis = basis
        .iter()
        .map(|b| UniPoly::from_mpoly(b, EPS))
        .collect::<Result<Vec<_>>>()?;
    let uni_target = UniPoly::from_mpoly(target, EPS)?;

    let mut g = UniPoly::zero();
    let mut h: Vec<UniPoly> = vec![UniPoly::zero(); basis.len()];
    for (j, b) in uni_basis.iter().enumerate() {
        if b.is_zero() {
            continue;
        }
        if g.is_zero() {
            g = b.monic();
            h[j] = UniPoly::new(vec![b.leading().recip()]);
            continue;
        }
        let (next, s, t) = g.ext_gcd(b);
        for hj in h.iter_mut().take(j) {
            *hj = hj.mul(&s);
        }
        h[j] = t;
        g = next;
    }

    let quotient = if g.is_zero() {
        if !uni_target.is_zero() {
            return Ok(None);
        }
        UniPoly::zero()
    } else {
        let (q, r) = uni_target.div_rem(&g)?;
        if !r.is_zero() {
            return Ok(None);
        }
        q
    };

    let cofactors: Vec<MPoly> = h
        .iter()
        .map(|hj| hj.mul(&quotient).to_mpoly(nvars, EPS))
        .collect();
    let degree_cap = cofactors.iter().map(MPoly::total_degree).max().unwrap_or(0);
    let cert = DivisionCertificate {
        target_index: 0,
        target: target.clone(),
        basis: basis.to_vec(),
        cofactors,
        degree_cap,
    };
    if !cert.verify() {
        return Err(Error::internal("Bezout certificate fails re-verification"));
    }
    Ok(Some(cert))
}

/// Location of a target among the t-coefficients of the `gamma_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TargetSlot {
    pub gamma: usize,
    pub t_power: usize,
}

/// Nonzero t-coefficients of every `gamma_i`, with their slots, and the
/// nonzero t-coefficients of `beta` as the basis.
pub fn coefficient_family(eq: &DerivedEq) -> (Vec<(TargetSlot, MPoly)>, Vec<MPoly>) {
    let targets = eq
        .gammas()
        .iter()
        .enumerate()
        .flat_map(|(gamma, g)| {
            g.coefficients_in(T)
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(move |(t_power, c)| (TargetSlot { gamma, t_power }, c))
        })
        .collect();
    let basis = eq
        .beta()
        .coefficients_in(T)
        .into_iter()
        .filter(|c| !c.is_zero())
        .collect();
    (targets, basis)
}

/// Largest joint `(t, p)` degree among `beta` and the `gamma_i`.
pub fn family_degree(eq: &DerivedEq) -> u32 {
    std::iter::once(eq.beta())
        .chain(eq.gammas())
        .map(MPoly::total_degree)
        .max()
        .unwrap_or(0)
}

/// The division-theorem cap `2D - 1` for a family of joint degree `D`,
/// floored at 0.
pub fn division_cap(degree: u32) -> u32 {
    (2 * degree).saturating_sub(1)
}
