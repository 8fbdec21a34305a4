//! Numerical integration at a fixed real parameter, zero counting on the
//! segment `[-R/2, R/2]`, and residual checks of derived equations.

mod dopri;

use crate::derivation::{covector_sequence, exceptional_locus, DerivedEq, LinSys};
use crate::error::{Error, Result};
use crate::polyring::{horner, to_f64_coeffs, MPoly, Ratio};
use dopri::Step;

/// Evaluates each polynomial at the parameter value, as f64 coefficient
/// vectors in `t`.
fn at_parameter(polys: &[&MPoly], eps: &Ratio) -> Result<Vec<Vec<f64>>> {
    polys
        .iter()
        .map(|p| {
            let params: Vec<Ratio> = if p.nvars() == 2 { vec![eps.clone()] } else { Vec::new() };
            Ok(to_f64_coeffs(&p.eval_params(&params)?))
        })
        .collect()
}

fn require_single_parameter(q: usize) -> Result<()> {
    if q > 1 {
        return Err(Error::UnsupportedParameterCount { expected: 1, found: q });
    }
    Ok(())
}

/// A numerical solution on `[-R/2, R/2]` with dense output.
#[derive(Clone, Debug)]
pub struct Trajectory {
    epsilon: Ratio,
    half_width: f64,
    local_tol: f64,
    nodes: Vec<f64>,
    states: Vec<Vec<f64>>,
    /// Ordered by position on the segment.
    steps: Vec<Step>,
}

impl Trajectory {
    pub fn epsilon(&self) -> &Ratio {
        &self.epsilon
    }

    pub fn segment(&self) -> (f64, f64) {
        (-self.half_width, self.half_width)
    }

    pub fn local_tol(&self) -> f64 {
        self.local_tol
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn states(&self) -> &[Vec<f64>] {
        &self.states
    }

    pub fn dim(&self) -> usize {
        self.states[0].len()
    }

    /// Dense-output state at `t`, clamped to the segment.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        if self.steps.is_empty() {
            out.copy_from_slice(&self.states[0]);
            return out;
        }
        let t = t.clamp(-self.half_width, self.half_width);
        let idx = self.steps.partition_point(|s| s.span().1 < t).min(self.steps.len() - 1);
        self.steps[idx].eval(t, &mut out);
        out
    }

    pub fn component_at(&self, t: f64, component: usize) -> f64 {
        self.state_at(t)[component]
    }

    /// Mesh for sign scans: every node plus interior points of each step,
    /// at least `per_step` per step and no coarser than `max_spacing`.
    fn mesh(&self, per_step: usize, max_spacing: f64) -> Vec<f64> {
        let mut out = vec![-self.half_width];
        for s in &self.steps {
            let (a, b) = s.span();
            let parts = per_step.max(((b - a) / max_spacing).ceil() as usize);
            for j in 1..=parts {
                out.push(if j == parts { b } else { a + (b - a) * j as f64 / parts as f64 });
            }
        }
        out
    }
}

/// Integrates `x' = A(t, eps) x` over `[-R/2, R/2]` from `t = 0` outward.
pub fn integrate_system(sys: &LinSys, epsilon: &Ratio, init: &[f64], r: f64, tol: f64) -> Result<Trajectory> {
    require_single_parameter(sys.q())?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::usage(format!("tolerance must be positive, got {tol}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::usage(format!("R must be positive, got {r}")));
    }
    let n = sys.n();
    if init.len() != n {
        return Err(Error::usage(format!(
            "initial state has {} components, expected {n}",
            init.len()
        )));
    }
    let entries: Vec<&MPoly> = sys.matrix().iter().flatten().collect();
    let coeffs = at_parameter(&entries, epsilon)?;
    let rhs = |t: f64, x: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                let c = &coeffs[i * n + j];
                if c.len() > 1 || c[0] != 0.0 {
                    acc += horner(c, t) * x[j];
                }
            }
            out[i] = acc;
        }
    };
    let half = r / 2.0;
    let backward = dopri::integrate(rhs, 0.0, init, -half, tol)?;
    let forward = dopri::integrate(rhs, 0.0, init, half, tol)?;

    let mut steps: Vec<Step> = backward.into_iter().rev().collect();
    steps.extend(forward);
    let mut nodes = Vec::with_capacity(steps.len() + 1);
    let mut states = Vec::with_capacity(steps.len() + 1);
    let mut buf = vec![0.0; n];
    if steps.is_empty() {
        nodes.push(0.0);
        states.push(init.to_vec());
    } else {
        let (a, _) = steps[0].span();
        steps[0].eval(a, &mut buf);
        nodes.push(a);
        states.push(buf.clone());
        for s in &steps {
            let (_, b) = s.span();
            s.eval(b, &mut buf);
            nodes.push(b);
            states.push(buf.clone());
        }
    }
    Ok(Trajectory {
        epsilon: epsilon.clone(),
        half_width: half,
        local_tol: tol,
        nodes,
        states,
        steps,
    })
}

/// Zeros of one component on the segment.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroCount {
    pub count: usize,
    /// Sign-change intervals of width at most `refine_tol`; an interval
    /// collapses to a point when bisection lands on an exact zero.
    pub brackets: Vec<(f64, f64)>,
    /// Near-zero points without a sign change (possible even-order zeros).
    pub suspects: Vec<f64>,
    pub refine_tol: f64,
}

const MESH_PER_STEP: usize = 8;
const MESH_SEGMENT_PARTS: f64 = 4000.0;

pub fn count_zeros(traj: &Trajectory, component: usize, refine_tol: f64) -> Result<ZeroCount> {
    if component >= traj.dim() {
        return Err(Error::usage(format!(
            "component {component} out of range for dimension {}",
            traj.dim()
        )));
    }
    let f = |t: f64| traj.component_at(t, component);
    let (lo, hi) = traj.segment();
    let mesh = traj.mesh(MESH_PER_STEP, (hi - lo) / MESH_SEGMENT_PARTS);
    let values: Vec<f64> = mesh.iter().map(|&t| f(t)).collect();
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out = ZeroCount {
        count: 0,
        brackets: Vec::new(),
        suspects: Vec::new(),
        refine_tol,
    };
    if scale == 0.0 {
        // Identically zero on the mesh: not countable.
        out.suspects.push(0.0);
        return Ok(out);
    }

    let nonzero: Vec<usize> = (0..mesh.len()).filter(|&i| values[i] != 0.0).collect();
    for w in nonzero.windows(2) {
        let (i, j) = (w[0], w[1]);
        if values[i].signum() != values[j].signum() {
            out.brackets.push(bisect(&f, mesh[i], mesh[j], values[i], refine_tol));
        } else if j > i + 1 {
            // Exact zeros between points of equal sign.
            out.suspects.push(mesh[i + 1]);
        }
    }
    if let (Some(&first), Some(&last)) = (nonzero.first(), nonzero.last()) {
        if first > 0 {
            out.suspects.push(mesh[0]);
        }
        if last + 1 < mesh.len() {
            out.suspects.push(mesh[last + 1]);
        }
    }

    let threshold = refine_tol * scale;
    for i in 1..mesh.len() - 1 {
        let (a, b, c) = (values[i - 1].abs(), values[i].abs(), values[i + 1].abs());
        let same_sign = values[i - 1].signum() == values[i].signum() && values[i].signum() == values[i + 1].signum();
        if values[i] == 0.0 || !same_sign || b > a || b > c {
            continue;
        }
        let (t_min, v_min) = golden_min(|t| f(t).abs(), mesh[i - 1], mesh[i + 1]);
        if v_min < threshold && f(t_min).signum() == values[i].signum() {
            out.suspects.push(t_min);
        }
    }
    out.suspects.sort_by(f64::total_cmp);
    out.suspects.dedup();
    out.count = out.brackets.len();
    Ok(out)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, fa: f64, tol: f64) -> (f64, f64) {
    let sa = fa.signum();
    while b - a > tol {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return (m, m);
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    (a, b)
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let x1 = b - inv_phi * (b - a);
        let x2 = a + inv_phi * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// Ratio of `|beta y^(k) - sum gamma_i y^(i)|` to the sum of the absolute
/// values of its terms (zero when every term vanishes).
fn normalized_residual(beta: f64, gammas: &[f64], derivs: &[f64]) -> f64 {
    let k = gammas.len();
    let lead = beta * derivs[k];
    let mut diff = lead;
    let mut mag = lead.abs();
    for i in 0..k {
        let term = gammas[i] * derivs[i];
        diff -= term;
        mag += term.abs();
    }
    if mag == 0.0 {
        0.0
    } else {
        diff.abs() / mag
    }
}

fn cleared_at(eq: &DerivedEq, eps: &Ratio) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (beta, gammas) = eq.cleared();
    let mut polys = vec![&beta];
    polys.extend(&gammas);
    let mut c = at_parameter(&polys, eps)?;
    let beta = c.remove(0);
    Ok((beta, c))
}

/// Checks that the first component of system solutions satisfies the derived
/// equation, computing its derivatives exactly as `a^(i)(t, eps) . x`.
/// Systems without a parameter ignore `epsilon`.
pub fn claim1_residual(sys: &LinSys, eq: &DerivedEq, epsilon: &Ratio, init: &[f64], r: f64, tol: f64) -> Result<f64> {
    require_single_parameter(sys.q())?;
    if sys.q() == 1 {
        let locus = exceptional_locus(eq)?;
        if locus.eval_params(std::slice::from_ref(epsilon))?.is_zero() {
            return Err(Error::DegenerateParameter(epsilon.to_string()));
        }
    }
    let k = eq.k();
    let seq = covector_sequence(sys, k)?;
    let cov: Vec<Vec<Vec<f64>>> = (0..=k)
        .map(|i| at_parameter(&seq.get(i).iter().collect::<Vec<_>>(), epsilon))
        .collect::<Result<_>>()?;
    let (beta, gammas) = cleared_at(eq, epsilon)?;
    let traj = integrate_system(sys, epsilon, init, r, tol)?;

    let mut worst = 0.0f64;
    let mut derivs = vec![0.0; k + 1];
    let mut g = vec![0.0; k];
    for (t, x) in traj.nodes().iter().zip(traj.states()) {
        for (i, d) in derivs.iter_mut().enumerate() {
            *d = cov[i].iter().zip(x).map(|(c, xj)| horner(c, *t) * xj).sum();
        }
        for (gi, c) in g.iter_mut().zip(&gammas) {
            *gi = horner(c, *t);
        }
        worst = worst.max(normalized_residual(horner(&beta, *t), &g, &derivs));
    }
    Ok(worst)
}

/// Points in the grid used by [`closed_form_residual`].
pub const CLOSED_FORM_GRID: usize = 100;

/// Max normalized residual of the derived equation with `f` substituted;
/// `f(t)` returns the value and the first `k` derivatives.
pub fn closed_form_residual<F>(eq: &DerivedEq, epsilon: &Ratio, f: F, r: f64) -> Result<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    require_single_parameter(eq.q())?;
    let (beta, gammas) = cleared_at(eq, epsilon)?;
    let k = eq.k();
    let half = r / 2.0;
    let mut worst = 0.0f64;
    let mut g = vec![0.0; k];
    for j in 0..CLOSED_FORM_GRID {
        let t = -half + r * j as f64 / (CLOSED_FORM_GRID - 1) as f64;
        let derivs = f(t);
        if derivs.len() <= k {
            return Err(Error::usage(format!(
                "closed form supplies {} values, need {}",
                derivs.len(),
                k + 1
            )));
        }
        for (gi, c) in g.iter_mut().zip(&gammas) {
            *gi = horner(c, t);
        }
        worst = worst.max(normalized_residual(horner(&beta, t), &g, &derivs));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::derivation::{derive, DegreeReading};
    use crate::polyring::ratio_from_i64;

    fn system(entries: &[&[&str]], d: u32) -> LinSys {
        let m = entries
            .iter()
            .map(|r| r.iter().map(|s| MPoly::parse(s, 2).unwrap()).collect())
            .collect();
        LinSys::new(1, d, DegreeReading::Joint, m).unwrap()
    }

    fn demo() -> LinSys {
        system(&[&["1", "eps"], &["1", "1"]], 1)
    }

    fn harmonic() -> LinSys {
        system(&[&["0", "1"], &["-1", "0"]], 0)
    }

    fn quarter() -> Ratio {
        Ratio::new(1.into(), 4.into())
    }

    #[test]
    fn sine_value() {
        let tr = integrate_system(&harmonic(), &ratio_from_i64(0), &[0.0, 1.0], std::f64::consts::PI, 1e-10).unwrap();
        assert!((tr.component_at(std::f64::consts::FRAC_PI_2, 0) - 1.0).abs() < 1e-8);
        assert!((tr.component_at(-1.0, 0) + 1f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn zero_matrix_is_constant() {
        let sys = system(&[&["0", "0"], &["0", "0"]], 0);
        let tr = integrate_system(&sys, &ratio_from_i64(0), &[2.5, -1.0], 6.0, 1e-9).unwrap();
        for t in [-3.0, -1.2, 0.0, 2.9] {
            assert_eq!(tr.state_at(t), vec![2.5, -1.0]);
        }
    }

    #[test]
    fn demo_matches_eigen_decomposition() {
        let tr = integrate_system(&demo(), &quarter(), &[1.0, 0.0], 4.0, 1e-11).unwrap();
        for t in [-2.0f64, -0.7, 0.3, 1.5, 2.0] {
            let exact = ((1.5 * t).exp() + (0.5 * t).exp()) / 2.0;
            assert!((tr.component_at(t, 0) - exact).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn nodes_cover_segment_in_order() {
        let tr = integrate_system(&demo(), &quarter(), &[1.0, 0.0], 3.0, 1e-8).unwrap();
        assert_eq!(tr.nodes().first(), Some(&-1.5));
        assert_eq!(tr.nodes().last(), Some(&1.5));
        assert!(tr.nodes().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(tr.nodes().len(), tr.states().len());
    }

    #[test]
    fn sine_zeros() {
        let tr = integrate_system(&harmonic(), &ratio_from_i64(0), &[0.0, 1.0], 10.0, 1e-10).unwrap();
        let zc = count_zeros(&tr, 0, 1e-12).unwrap();
        assert_eq!(zc.count, 3);
        assert!(zc.suspects.is_empty());
        let pi = std::f64::consts::PI;
        for ((a, b), z) in zc.brackets.iter().zip([-pi, 0.0, pi]) {
            assert!(*a <= z + 1e-8 && z - 1e-8 <= *b);
        }
    }

    #[test]
    fn positive_solution_has_no_zeros() {
        let sys = system(&[&["1"]], 0);
        let tr = integrate_system(&sys, &ratio_from_i64(0), &[1.0], 2.0, 1e-10).unwrap();
        let zc = count_zeros(&tr, 0, 1e-12).unwrap();
        assert_eq!(zc.count, 0);
        assert!(zc.suspects.is_empty());
    }

    #[test]
    fn tangential_zero_is_a_suspect() {
        // x = t^2 solves x' = (2/t) x only away from 0; use y = (t - 1/2)^2
        // as the first component of y' = z, z' = 2.
        let sys = LinSys::new(
            0,
            0,
            DegreeReading::Joint,
            vec![
                vec![MPoly::zero(1), MPoly::one(1), MPoly::zero(1)],
                vec![MPoly::zero(1), MPoly::zero(1), MPoly::from_int(1, 2)],
                vec![MPoly::zero(1), MPoly::zero(1), MPoly::zero(1)],
            ],
        )
        .unwrap();
        let tr = integrate_system(&sys, &ratio_from_i64(0), &[0.25, -1.0, 1.0], 4.0, 1e-12).unwrap();
        let zc = count_zeros(&tr, 0, 1e-8).unwrap();
        assert_eq!(zc.count, 0);
        assert_eq!(zc.suspects.len(), 1);
        assert!((zc.suspects[0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn bad_component() {
        let tr = integrate_system(&harmonic(), &ratio_from_i64(0), &[0.0, 1.0], 2.0, 1e-8).unwrap();
        assert!(count_zeros(&tr, 2, 1e-10).is_err());
    }

    #[test]
    fn claim1_examples() {
        let sys = demo();
        let d = derive(&sys).unwrap();
        let eps = Ratio::new(3.into(), 10.into());
        let res = claim1_residual(&sys, &d.eq, &eps, &[0.3, -1.1], 2.0, 1e-9).unwrap();
        assert!(res <= 1e-6, "{res}");
        assert!(matches!(
            claim1_residual(&sys, &d.eq, &ratio_from_i64(0), &[1.0, 0.0], 2.0, 1e-9),
            Err(Error::DegenerateParameter(_))
        ));

        let h = harmonic();
        let d = derive(&h).unwrap();
        assert!(claim1_residual(&h, &d.eq, &ratio_from_i64(1), &[0.0, 1.0], 6.0, 1e-10).unwrap() <= 1e-9);

        let z = system(&[&["0", "0"], &["0", "0"]], 0);
        let d = derive(&z).unwrap();
        assert_eq!(claim1_residual(&z, &d.eq, &ratio_from_i64(1), &[1.0, 2.0], 2.0, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn closed_forms_at_zero_parameter() {
        let eq = derive(&demo()).unwrap().eq;
        let zero = ratio_from_i64(0);
        let te_t = |t: f64| vec![t * t.exp(), (t + 1.0) * t.exp(), (t + 2.0) * t.exp()];
        assert!(closed_form_residual(&eq, &zero, te_t, 2.0).unwrap() <= 1e-10);
        let e_t = |t: f64| vec![t.exp(); 3];
        assert!(closed_form_residual(&eq, &zero, e_t, 2.0).unwrap() <= 1e-10);
        let e_2t = |t: f64| vec![(2.0 * t).exp(), 2.0 * (2.0 * t).exp(), 4.0 * (2.0 * t).exp()];
        assert!(closed_form_residual(&eq, &zero, e_2t, 2.0).unwrap() >= 0.1);
    }
}
