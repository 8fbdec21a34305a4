//! The derived scalar equation for the first component of `x' = A(t, p) x`.
//!
//! Writing `x_1^(i) = a^(i) . x`, the covectors obey
//! `a^(i) = d/dt a^(i-1) + A^T a^(i-1)` with `a^(0) = e_1`. The first `k`
//! for which `a^(0), ..., a^(k)` become dependent over the field of rational
//! functions is the order of the derived equation, and Cramer's rule on a
//! nonsingular `k`-minor gives its coefficients.

mod bareiss;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyring::{gcd_all, MPoly, RatFn, T};

pub(crate) use bareiss::determinant;

/// How the declared degree of a system is read.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum DegreeReading {
    /// Total degree in `(t, p)` jointly.
    #[default]
    Joint,
    /// Degree in t only; parameters enter the coefficients freely.
    Time,
}

/// The input system `x' = A(t, p) x` with integer polynomial entries.
#[derive(Clone, Debug, PartialEq)]
pub struct LinSys {
    q: usize,
    d: u32,
    reading: DegreeReading,
    matrix: Vec<Vec<MPoly>>,
    max_coeff: BigInt,
}

impl LinSys {
    pub fn new(q: usize, d: u32, reading: DegreeReading, matrix: Vec<Vec<MPoly>>) -> Result<Self> {
        let n = matrix.len();
        if n == 0 {
            return Err(Error::usage("system dimension must be at least 1"));
        }
        let mut max_coeff = BigInt::zero();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::usage(format!(
                    "row {} has {} entries, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, a) in row.iter().enumerate() {
                if a.nvars() != q + 1 {
                    return Err(Error::usage(format!(
                        "entry ({}, {}) has {} variables, expected {}",
                        i + 1,
                        j + 1,
                        a.nvars(),
                        q + 1
                    )));
                }
                if !a.has_integer_coeffs() {
                    return Err(Error::usage(format!(
                        "entry ({}, {}) has a non-integer coefficient",
                        i + 1,
                        j + 1
                    )));
                }
                let deg = match reading {
                    DegreeReading::Joint => a.total_degree(),
                    DegreeReading::Time => a.degree_in(T),
                };
                if deg > d {
                    return Err(Error::usage(format!(
                        "entry ({}, {}) has degree {deg} above the declared {d}",
                        i + 1,
                        j + 1
                    )));
                }
                for (_, c) in a.terms() {
                    let c = c.numer().abs();
                    if c > max_coeff {
                        max_coeff = c;
                    }
                }
            }
        }
        Ok(LinSys {
            q,
            d,
            reading,
            matrix,
            max_coeff,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.len()
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn nvars(&self) -> usize {
        self.q + 1
    }

    pub fn declared_degree(&self) -> u32 {
        self.d
    }

    pub fn reading(&self) -> DegreeReading {
        self.reading
    }

    /// A bound on the joint `(t, p)` degree of every entry.
    pub fn joint_degree_bound(&self) -> u32 {
        match self.reading {
            DegreeReading::Joint => self.d,
            DegreeReading::Time => self
                .matrix
                .iter()
                .flatten()
                .map(MPoly::total_degree)
                .max()
                .unwrap_or(0)
                .max(self.d),
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> &MPoly {
        &self.matrix[i][j]
    }

    pub fn matrix(&self) -> &[Vec<MPoly>] {
        &self.matrix
    }

    /// Largest coefficient modulus `M` (0 for the zero system).
    pub fn max_coeff(&self) -> &BigInt {
        &self.max_coeff
    }

    /// `M` floored to 1, as the bound formulas require.
    pub fn max_coeff_for_bounds(&self) -> BigInt {
        self.max_coeff.clone().max(BigInt::from(1))
    }
}

/// `a^(0), ..., a^(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovectorSeq {
    vectors: Vec<Vec<MPoly>>,
}

impl CovectorSeq {
    pub fn vectors(&self) -> &[Vec<MPoly>] {
        &self.vectors
    }

    pub fn get(&self, i: usize) -> &[MPoly] {
        &self.vectors[i]
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    fn nvars(&self) -> usize {
        self.vectors[0][0].nvars()
    }

    /// The `n x cols` matrix whose columns are `a^(0), ..., a^(cols-1)`.
    fn column_matrix(&self, cols: usize) -> Vec<Vec<MPoly>> {
        (0..self.dim())
            .map(|r| (0..cols).map(|c| self.vectors[c][r].clone()).collect())
            .collect()
    }
}

/// `d/dt a + A^T a`.
pub fn covector_step(sys: &LinSys, a: &[MPoly]) -> Result<Vec<MPoly>> {
    let n = sys.n();
    if a.len() != n {
        return Err(Error::usage(format!(
            "covector of length {}, system dimension {n}",
            a.len()
        )));
    }
    if let Some(bad) = a.iter().find(|x| x.nvars() != sys.nvars()) {
        return Err(Error::usage(format!(
            "covector entry has {} variables, system has {}",
            bad.nvars(),
            sys.nvars()
        )));
    }
    Ok((0..n)
        .map(|j| {
            (0..n).fold(a[j].diff_t(), |acc, i| {
                if sys.matrix[i][j].is_zero() || a[i].is_zero() {
                    acc
                } else {
                    &acc + &(&sys.matrix[i][j] * &a[i])
                }
            })
        })
        .collect())
}

/// `a^(0) = e_1` through `a^(upto)`.
pub fn covector_sequence(sys: &LinSys, upto: usize) -> Result<CovectorSeq> {
    let n = sys.n();
    let nvars = sys.nvars();
    let mut first = vec![MPoly::zero(nvars); n];
    first[0] = MPoly::one(nvars);
    let mut vectors = vec![first];
    for _ in 0..upto {
        let next = covector_step(sys, vectors.last().unwrap())?;
        vectors.push(next);
    }
    Ok(CovectorSeq { vectors })
}

/// Least `k` with `a^(0), ..., a^(k)` linearly dependent over the rational
/// function field.
pub fn minimal_k(seq: &CovectorSeq) -> Result<usize> {
    if seq.is_empty() {
        return Err(Error::usage("empty covector sequence"));
    }
    let ech = bareiss::eliminate(seq.column_matrix(seq.len()), seq.nvars())?;
    // A column without a pivot lies in the span of the columns before it.
    (0..seq.len())
        .find(|c| ech.pivots.get(*c) != Some(c))
        .ok_or_else(|| {
            Error::usage(format!(
                "covectors a^(0)..a^({}) are independent; extend the sequence to index n",
                seq.len() - 1
            ))
        })
}

/// The derived equation `beta y^(k) = sum_i gamma_i y^(i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedEq {
    k: usize,
    minor_rows: Vec<usize>,
    beta: MPoly,
    gammas: Vec<MPoly>,
    reduced: Vec<RatFn>,
    content: MPoly,
}

impl DerivedEq {
    /// A scalar equation given directly by its coefficients, not derived from
    /// a system: `beta y^(k) = sum_i gammas[i] y^(i)` with `k = gammas.len()`.
    pub fn from_coefficients(beta: MPoly, gammas: Vec<MPoly>) -> Result<Self> {
        if beta.is_zero() {
            return Err(Error::usage("leading coefficient is identically zero"));
        }
        if gammas.is_empty() {
            return Err(Error::usage("equation of order zero"));
        }
        for g in &gammas {
            beta.check_compatible(g)?;
        }
        let reduced = gammas
            .iter()
            .map(|g| RatFn::new(g.clone(), beta.clone()))
            .collect::<Result<Vec<_>>>()?;
        let content = gcd_all(std::iter::once(&beta).chain(&gammas))?;
        Ok(DerivedEq {
            k: gammas.len(),
            minor_rows: Vec::new(),
            beta,
            gammas,
            reduced,
            content,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Zero-based rows of the chosen minor (empty for hand-built equations).
    pub fn minor_rows(&self) -> &[usize] {
        &self.minor_rows
    }

    pub fn beta(&self) -> &MPoly {
        &self.beta
    }

    pub fn gammas(&self) -> &[MPoly] {
        &self.gammas
    }

    /// `A_i = gamma_i / beta` in lowest terms.
    pub fn reduced(&self) -> &[RatFn] {
        &self.reduced
    }

    /// `gcd(beta, gamma_0, ..., gamma_{k-1})`.
    pub fn content(&self) -> &MPoly {
        &self.content
    }

    pub fn nvars(&self) -> usize {
        self.beta.nvars()
    }

    pub fn q(&self) -> usize {
        self.nvars() - 1
    }

    /// `(beta, gammas)` divided by their common content.
    pub fn cleared(&self) -> (MPoly, Vec<MPoly>) {
        let div = |p: &MPoly| {
            p.exact_div(&self.content)
                .ok()
                .flatten()
                .expect("content divides every coefficient")
        };
        (div(&self.beta), self.gammas.iter().map(div).collect())
    }

    /// The monic equation `y^(k) + c_{k-1} y^(k-1) + ... + c_0 y = 0`,
    /// returned as `c_0, ..., c_{k-1}` (that is, `-A_i`).
    pub fn normalized_coefficients(&self) -> Vec<RatFn> {
        let minus_one = -crate::polyring::ratio_from_i64(1);
        self.reduced.iter().map(|a| a.scale(&minus_one)).collect()
    }

    /// Renders the monic equation, e.g. `y'' + (-2)*y' + (-eps + 1)*y = 0`.
    pub fn render(&self) -> String {
        let mut parts = vec![derivative_symbol(self.k)];
        for (i, c) in self.normalized_coefficients().iter().enumerate().rev() {
            if c.num().is_zero() {
                continue;
            }
            parts.push(format!("({c})*{}", derivative_symbol(i)));
        }
        format!("{} = 0", parts.join(" + "))
    }
}

fn derivative_symbol(order: usize) -> String {
    format!("y{}", "'".repeat(order))
}

/// Solves `a^(k) = sum A_i a^(i)` by Cramer's rule on the lexicographically
/// first nonsingular `k`-row minor of `(a^(0) ... a^(k-1))`.
pub fn decompose(seq: &CovectorSeq, k: usize) -> Result<DerivedEq> {
    if k == 0 || k >= seq.len() {
        return Err(Error::usage(format!(
            "order {k} outside 1..{} for this sequence",
            seq.len() - 1
        )));
    }
    let n = seq.dim();
    let nvars = seq.nvars();
    let basis = seq.column_matrix(k);
    let target = seq.get(k);

    let mut chosen = None;
    for rows in bareiss::subsets(n, k) {
        let minor: Vec<Vec<MPoly>> = rows.iter().map(|&r| basis[r].clone()).collect();
        let det = determinant(minor, nvars)?;
        if !det.is_zero() {
            chosen = Some((rows, det));
            break;
        }
    }
    let (minor_rows, beta) = chosen.ok_or_else(|| {
        Error::internal(format!("no nonsingular {k}-minor; k is not minimal"))
    })?;

    let mut gammas = Vec::with_capacity(k);
    for col in 0..k {
        let replaced: Vec<Vec<MPoly>> = minor_rows
            .iter()
            .map(|&r| {
                let mut row = basis[r].clone();
                row[col] = target[r].clone();
                row
            })
            .collect();
        gammas.push(determinant(replaced, nvars)?);
    }

    for (r, entry) in target.iter().enumerate().take(n) {
        let lhs = &beta * entry;
        let rhs = gammas
            .iter()
            .enumerate()
            .fold(MPoly::zero(nvars), |acc, (i, g)| &acc + &(g * &seq.get(i)[r]));
        if lhs != rhs {
            return Err(Error::internal(format!(
                "decomposition identity fails in row {}",
                r + 1
            )));
        }
    }

    let mut eq = DerivedEq::from_coefficients(beta, gammas)?;
    eq.minor_rows = minor_rows;
    Ok(eq)
}

/// One generator `b_ij(p)` of the degeneracy ideal.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub poly: MPoly,
    /// Position of the minor in lexicographic order of row subsets.
    pub minor_index: usize,
    /// Zero-based rows of that minor.
    pub minor_rows: Vec<usize>,
    pub t_power: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DegeneracyIdeal {
    pub generators: Vec<Generator>,
    /// Determinant of every `k`-minor, zero ones included, in lexicographic
    /// order of row subsets.
    pub minors: Vec<MPoly>,
}

impl DegeneracyIdeal {
    /// `sum_j b_ij t^j` for minor `i`.
    pub fn reconstruct(&self, minor_index: usize, nvars: usize) -> MPoly {
        let t = MPoly::var(nvars, T);
        self.generators
            .iter()
            .filter(|g| g.minor_index == minor_index)
            .fold(MPoly::zero(nvars), |acc, g| {
                &acc + &(&g.poly * &t.pow(g.t_power as u32))
            })
    }
}

/// Coefficients of powers of t in every `k`-minor of `(a^(0) ... a^(k-1))`.
pub fn degeneracy_generators(seq: &CovectorSeq, k: usize) -> Result<DegeneracyIdeal> {
    if k == 0 || k > seq.len() {
        return Err(Error::usage(format!("order {k} out of range")));
    }
    let nvars = seq.nvars();
    let basis = seq.column_matrix(k);
    let mut generators = Vec::new();
    let mut minors = Vec::new();
    for (minor_index, rows) in bareiss::subsets(seq.dim(), k).into_iter().enumerate() {
        let minor: Vec<Vec<MPoly>> = rows.iter().map(|&r| basis[r].clone()).collect();
        let det = determinant(minor, nvars)?;
        for (t_power, b) in det.coefficients_in(T).into_iter().enumerate() {
            if !b.is_zero() {
                generators.push(Generator {
                    poly: b,
                    minor_index,
                    minor_rows: rows.clone(),
                    t_power,
                });
            }
        }
        minors.push(det);
    }
    Ok(DegeneracyIdeal { generators, minors })
}

/// `g(eps)`: gcd of the t-coefficients of `beta`. Its roots are the parameter
/// values at which the leading coefficient vanishes identically in t.
pub fn exceptional_locus(eq: &DerivedEq) -> Result<MPoly> {
    if eq.q() != 1 {
        return Err(Error::UnsupportedParameterCount {
            expected: 1,
            found: eq.q(),
        });
    }
    gcd_all(eq.beta.coefficients_in(T).iter())
}

/// Full derivation of a system: sequence up to `n`, order, decomposition.
#[derive(Clone, Debug)]
pub struct Derivation {
    pub seq: CovectorSeq,
    pub eq: DerivedEq,
}

pub fn derive(sys: &LinSys) -> Result<Derivation> {
    let seq = covector_sequence(sys, sys.n())?;
    let k = minimal_k(&seq)?;
    let eq = decompose(&seq, k)?;
    Ok(Derivation { seq, eq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::{ratio_from_i64, RatFn};

    fn p(s: &str) -> MPoly {
        MPoly::parse(s, 2).unwrap()
    }

    fn system(entries: &[&[&str]], d: u32) -> LinSys {
        let m = entries
            .iter()
            .map(|r| r.iter().map(|s| p(s)).collect())
            .collect();
        LinSys::new(1, d, DegreeReading::Joint, m).unwrap()
    }

    fn worked_example() -> LinSys {
        system(&[&["1", "eps"], &["1", "1"]], 1)
    }

    fn harmonic() -> LinSys {
        system(&[&["0", "1"], &["-1", "0"]], 0)
    }

    fn zero_system(n: usize) -> LinSys {
        LinSys::new(1, 0, DegreeReading::Joint, vec![vec![MPoly::zero(2); n]; n]).unwrap()
    }

    #[test]
    fn covector_steps_of_worked_example() {
        let sys = worked_example();
        let a1 = covector_step(&sys, &[p("1"), p("0")]).unwrap();
        assert_eq!(a1, vec![p("1"), p("eps")]);
        let a2 = covector_step(&sys, &a1).unwrap();
        assert_eq!(a2, vec![p("1 + eps"), p("2*eps")]);
    }

    #[test]
    fn covector_step_of_zero_matrix() {
        let a = covector_step(&zero_system(3), &[p("1"), p("0"), p("0")]).unwrap();
        assert!(a.iter().all(MPoly::is_zero));
    }

    #[test]
    fn covector_step_dimension_mismatch() {
        assert!(covector_step(&worked_example(), &[p("1")]).is_err());
    }

    #[test]
    fn diagonal_identity_system() {
        let sys = system(&[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]], 0);
        let seq = covector_sequence(&sys, 3).unwrap();
        for v in seq.vectors() {
            assert_eq!(v, &vec![p("1"), p("0"), p("0")]);
        }
        assert_eq!(minimal_k(&seq).unwrap(), 1);
    }

    #[test]
    fn worked_example_derivation() {
        let d = derive(&worked_example()).unwrap();
        assert_eq!(d.seq.vectors()[..3].to_vec(), vec![
            vec![p("1"), p("0")],
            vec![p("1"), p("eps")],
            vec![p("1 + eps"), p("2*eps")],
        ]);
        let eq = &d.eq;
        assert_eq!(eq.k(), 2);
        assert_eq!(eq.minor_rows(), &[0, 1]);
        assert_eq!(eq.beta(), &p("eps"));
        assert_eq!(eq.gammas(), &[p("eps^2 - eps"), p("2*eps")]);
        assert_eq!(eq.reduced()[1], RatFn::from_poly(p("2")));
        assert_eq!(eq.reduced()[0], RatFn::from_poly(p("eps - 1")));
        assert_eq!(eq.content(), &p("eps"));
        assert_eq!(eq.render(), "y'' + (-2)*y' + (-eps + 1)*y = 0");
    }

    #[test]
    fn harmonic_oscillator_derivation() {
        let eq = derive(&harmonic()).unwrap().eq;
        assert_eq!(eq.k(), 2);
        assert_eq!(eq.beta(), &p("1"));
        assert_eq!(eq.gammas(), &[p("-1"), p("0")]);
        assert_eq!(eq.render(), "y'' + (1)*y = 0");
    }

    #[test]
    fn zero_system_derivation() {
        for n in 1..=3 {
            let d = derive(&zero_system(n)).unwrap();
            assert_eq!(d.eq.k(), 1);
            assert_eq!(d.eq.beta(), &p("1"));
            assert!(d.eq.gammas()[0].is_zero());
            assert_eq!(d.eq.render(), "y' = 0");
        }
    }

    #[test]
    fn degeneracy_generators_examples() {
        let d = derive(&worked_example()).unwrap();
        let ideal = degeneracy_generators(&d.seq, 2).unwrap();
        assert_eq!(ideal.generators.len(), 1);
        assert_eq!(ideal.generators[0].poly, p("eps"));

        let d = derive(&harmonic()).unwrap();
        let ideal = degeneracy_generators(&d.seq, 2).unwrap();
        assert_eq!(ideal.generators.iter().map(|g| g.poly.clone()).collect::<Vec<_>>(), vec![p("1")]);

        let d = derive(&zero_system(2)).unwrap();
        let ideal = degeneracy_generators(&d.seq, 1).unwrap();
        assert_eq!(ideal.minors, vec![p("1"), p("0")]);
        assert_eq!(ideal.generators.len(), 1);
        assert_eq!(ideal.generators[0].poly, p("1"));
    }

    #[test]
    fn generators_reconstruct_minors() {
        let sys = system(&[&["t", "eps + t^2"], &["1 - eps*t", "eps"]], 2);
        let d = derive(&sys).unwrap();
        let ideal = degeneracy_generators(&d.seq, d.eq.k()).unwrap();
        for (i, m) in ideal.minors.iter().enumerate() {
            assert_eq!(&ideal.reconstruct(i, 2), m);
        }
    }

    #[test]
    fn exceptional_locus_examples() {
        let eq = derive(&worked_example()).unwrap().eq;
        assert_eq!(exceptional_locus(&eq).unwrap(), p("eps"));
        let eq = derive(&harmonic()).unwrap().eq;
        assert_eq!(exceptional_locus(&eq).unwrap(), p("1"));
        let eq = DerivedEq::from_coefficients(p("eps^2 - eps + eps*t"), vec![p("1")]).unwrap();
        assert_eq!(exceptional_locus(&eq).unwrap(), p("eps"));
    }

    #[test]
    fn exceptional_locus_needs_one_parameter() {
        let beta = MPoly::parse("p1 + t", 3).unwrap();
        let eq = DerivedEq::from_coefficients(beta, vec![MPoly::one(3)]).unwrap();
        assert!(matches!(
            exceptional_locus(&eq),
            Err(Error::UnsupportedParameterCount { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn linsys_validation() {
        let half = MPoly::constant(2, crate::polyring::Ratio::new(1.into(), 2.into()));
        assert!(LinSys::new(1, 0, DegreeReading::Joint, vec![vec![half]]).is_err());
        assert!(LinSys::new(1, 1, DegreeReading::Joint, vec![vec![p("t*eps")]]).is_err());
        let ok = LinSys::new(1, 1, DegreeReading::Time, vec![vec![p("-7*t*eps")]]).unwrap();
        assert_eq!(ok.max_coeff(), &BigInt::from(7));
        assert_eq!(ok.joint_degree_bound(), 2);
        assert_eq!(zero_system(2).max_coeff_for_bounds(), BigInt::from(1));
        let _ = ratio_from_i64(0);
    }

    #[test]
    fn minimal_k_needs_long_enough_sequence() {
        let seq = covector_sequence(&worked_example(), 1).unwrap();
        assert!(minimal_k(&seq).is_err());
    }
}
