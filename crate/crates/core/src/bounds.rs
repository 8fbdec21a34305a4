//! Zero-count bounds: the exact path built from an actual derived equation,
//! and the closed-form a-priori formulas in `(M, n, d, E, R)`.
//!
//! The constants `C`, `sigma` and `mu` are not determined by the theory used
//! here; they are configuration. Values of the a-priori formulas are
//! therefore illustrative unless the caller supplies constants valid for the
//! geometry at hand. Large values are carried in log space.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::derivation::{DerivedEq, LinSys};
use crate::error::{Error, Result};
use crate::polyring::{horner, ratio_to_f64, to_f64_coeffs, MPoly, Ratio, T};

/// Smallest f64 above e; growth formulas are upper bounds, so e rounds up.
const E_UP: f64 = 2.718_281_828_459_045_5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    #[serde(rename = "C")]
    pub c: f64,
    pub sigma: f64,
    pub mu: f64,
    /// Radius of the parameter disc.
    #[serde(rename = "E")]
    pub e_radius: f64,
    /// The segment is `[-R/2, R/2]`.
    #[serde(rename = "R")]
    pub r: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            c: 1.0,
            sigma: 1.0,
            mu: 1.0,
            e_radius: 1.0,
            r: 2.0,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("C", self.c),
            ("sigma", self.sigma),
            ("mu", self.mu),
            ("E", self.e_radius),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::usage(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.r.is_finite() && self.r >= 2.0) {
            return Err(Error::usage(format!("R must be at least 2, got {}", self.r)));
        }
        Ok(())
    }
}

/// A positive quantity with its base-10 logarithm; `value` is infinite when
/// it exceeds the f64 range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogValue {
    pub value: f64,
    pub log10: f64,
}

impl LogValue {
    fn from_ln(ln: f64) -> Self {
        LogValue {
            value: ln.exp(),
            log10: ln / std::f64::consts::LN_10,
        }
    }
}

fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn ln_bigint(m: &BigInt) -> f64 {
    match m.to_f64() {
        Some(v) if v.is_finite() => v.ln(),
        _ => {
            // ln(m) = ln(leading digits) + (bits dropped) * ln 2
            let bits = m.bits();
            let shift = bits.saturating_sub(60);
            let top = (m >> shift).to_f64().unwrap_or(1.0);
            top.ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

/// Rational upper approximation of e used in exact floors.
pub fn e_upper_ratio() -> Ratio {
    Ratio::new(BigInt::from(27_182_818_285u64), BigInt::from(10_000_000_000u64))
}

/// `1 / ((4e)^(s^2+s) 2^(s+1) d^s)`, exact, with e rounded up so the floor
/// stays valid. `d^0 = 1`.
pub fn cartan_floor(d: u32, s: u32) -> Result<Ratio> {
    if s > d {
        return Err(Error::usage(format!("s = {s} exceeds d = {d}")));
    }
    let four_e = e_upper_ratio() * Ratio::from_integer(BigInt::from(4));
    let s = s as usize;
    let den = num_traits::pow(four_e, s * s + s)
        * Ratio::from_integer(num_traits::pow(BigInt::from(2), s + 1))
        * Ratio::from_integer(num_traits::pow(BigInt::from(d), s));
    Ok(den.recip())
}

/// `sum |c| R^(t-degree) E^(eps-degree)`: a bound for `|p|` on
/// `{|t| <= R} x {|eps| <= E}`.
pub fn coeff_sup(p: &MPoly, e_radius: f64, r: f64) -> Result<f64> {
    if p.nvars() > 2 {
        return Err(Error::UnsupportedParameterCount {
            expected: 1,
            found: p.nvars() - 1,
        });
    }
    Ok(p.terms()
        .map(|(m, c)| {
            let ex = m.exps();
            let mut v = ratio_to_f64(&c.abs()) * r.powi(ex[T] as i32);
            if let Some(&ee) = ex.get(1) {
                v *= e_radius.powi(ee as i32);
            }
            v
        })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentFloor {
    /// `|beta(t_star, eps)|`, a lower bound for the max over the segment.
    pub value: f64,
    pub t_star: f64,
}

/// Best sampled `|beta(t, eps)|` on `[-R/2, R/2]`: a uniform grid, then a
/// golden-section refinement around the best grid point.
pub fn segment_leading_floor(beta: &MPoly, eps: &Ratio, r: f64, grid: usize) -> Result<SegmentFloor> {
    if beta.nvars() != 2 {
        return Err(Error::UnsupportedParameterCount {
            expected: 1,
            found: beta.nvars() - 1,
        });
    }
    let at_eps = beta.eval_params(std::slice::from_ref(eps))?;
    if at_eps.is_zero() {
        return Err(Error::DegenerateParameter(eps.to_string()));
    }
    let coeffs = to_f64_coeffs(&at_eps);
    let f = |t: f64| horner(&coeffs, t).abs();
    let (lo, hi) = (-r / 2.0, r / 2.0);
    let grid = grid.max(2);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best = SegmentFloor {
        value: f(lo),
        t_star: lo,
    };
    let mut best_i = 0;
    for i in 1..grid {
        let t = if i == grid - 1 { hi } else { lo + step * i as f64 };
        let v = f(t);
        if v > best.value {
            best = SegmentFloor { value: v, t_star: t };
            best_i = i;
        }
    }
    let mut a = (lo + step * (best_i as f64 - 1.0)).max(lo);
    let mut b = (lo + step * (best_i as f64 + 1.0)).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = b - inv_phi * (b - a);
        let x2 = a + inv_phi * (b - a);
        let (f1, f2) = (f(x1), f(x2));
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v > best.value {
                best = SegmentFloor { value: v, t_star: x };
            }
        }
        if f1 > f2 {
            b = x2;
        } else {
            a = x1;
        }
    }
    Ok(best)
}

/// `(A/a + order)^mu`.
pub fn iy_zero_bound(a_sup: f64, a_floor: f64, order: usize, mu: f64) -> Result<f64> {
    if a_floor.is_nan() || a_floor <= 0.0 {
        return Err(Error::usage(format!("leading-coefficient floor must be positive, got {a_floor}")));
    }
    if a_sup < 0.0 {
        return Err(Error::usage(format!("coefficient bound must be nonnegative, got {a_sup}")));
    }
    Ok((a_sup / a_floor + order as f64).powf(mu))
}

fn check_growth_inputs(m: &BigInt, e_radius: f64, r: f64) -> Result<()> {
    if m < &BigInt::one() {
        return Err(Error::usage("M must be at least 1"));
    }
    if !(e_radius > 0.0 && r > 0.0) {
        return Err(Error::usage("E and R must be positive"));
    }
    Ok(())
}

/// `( (Me)^(C d^3) (E^(2d) + 1) R^(d+1) + k )^sigma`.
pub fn apriori_lemma5(
    m: &BigInt,
    d: u32,
    e_radius: f64,
    r: f64,
    k: usize,
    cfg: &BoundConfig,
) -> Result<LogValue> {
    check_growth_inputs(m, e_radius, r)?;
    let d = d as f64;
    let ln_me = ln_bigint(m) + E_UP.ln();
    let ln_main = cfg.c * d.powi(3) * ln_me
        + ln_add_exp(2.0 * d * e_radius.ln(), 0.0)
        + (d + 1.0) * r.ln();
    let ln_k = if k == 0 { f64::NEG_INFINITY } else { (k as f64).ln() };
    Ok(LogValue::from_ln(cfg.sigma * ln_add_exp(ln_main, ln_k)))
}

/// `( (Me)^(C n^9 d^4) (E^(n(n+1)d) + 1) R^(n(n+1)d/2 + 1) + n )^sigma`.
pub fn apriori_theorem2(
    m: &BigInt,
    n: usize,
    d: u32,
    e_radius: f64,
    r: f64,
    cfg: &BoundConfig,
) -> Result<LogValue> {
    check_growth_inputs(m, e_radius, r)?;
    if n == 0 {
        return Err(Error::usage("n must be at least 1"));
    }
    let (nf, d) = (n as f64, d as f64);
    let ln_me = ln_bigint(m) + E_UP.ln();
    let nn1d = nf * (nf + 1.0) * d;
    let ln_main = cfg.c * nf.powi(9) * d.powi(4) * ln_me
        + ln_add_exp(nn1d * e_radius.ln(), 0.0)
        + (nn1d / 2.0 + 1.0) * r.ln();
    Ok(LogValue::from_ln(cfg.sigma * ln_add_exp(ln_main, nf.ln())))
}

/// Coefficient bound after normalizing by the largest denominator
/// coefficient: `(eM)^(C d^3) (E^(2d-1) + 1)`.
pub fn lemma4_coeff_bound(m: &BigInt, d: u32, e_radius: f64, cfg: &BoundConfig) -> Result<LogValue> {
    check_growth_inputs(m, e_radius, 1.0)?;
    let d = d as f64;
    let ln_me = ln_bigint(m) + E_UP.ln();
    let ln = cfg.c * d.powi(3) * ln_me + ln_add_exp((2.0 * d - 1.0) * e_radius.ln(), 0.0);
    Ok(LogValue::from_ln(ln))
}

/// `exp(exp(exp(P))) (ER)^(C n^2 d)` for a caller-supplied value of the
/// unspecified polynomial `P(n, d)`. Only the log10 is meaningful in
/// practice.
pub fn multi_parameter_growth(p_value: f64, e_radius: f64, r: f64, n: usize, d: u32, cfg: &BoundConfig) -> LogValue {
    let ln = p_value.exp().exp() + cfg.c * (n * n) as f64 * d as f64 * (e_radius * r).ln();
    LogValue::from_ln(ln)
}

/// Degree and coefficient-size bounds for the entries of `a^(i)`:
/// `(d i, n^i (d + (d+1)^(q+1) M)^i)`, with `d` the joint degree bound and
/// `M` floored to 1.
pub fn size_bounds(sys: &LinSys, i: usize) -> (u32, BigInt) {
    let d = sys.joint_degree_bound();
    let n = BigInt::from(sys.n());
    let m = sys.max_coeff_for_bounds();
    let base = BigInt::from(d) + num_traits::pow(BigInt::from(d + 1), sys.q() + 1) * m;
    (d * i as u32, num_traits::pow(n * base, i))
}

/// `k (k+1) d / 2`.
pub fn lemma9_degree_bound(k: usize, d: u32) -> u32 {
    (k * (k + 1)) as u32 * d / 2
}

/// `(2d(d+1))! M^(2d(d+1))`.
pub fn lemma3_coeff_bound(d: u32, m: &BigInt) -> BigInt {
    let dim = 2 * d as usize * (d as usize + 1);
    let fact = (1..=dim).fold(BigInt::one(), |acc, i| acc * BigInt::from(i));
    fact * num_traits::pow(m.clone(), dim)
}

/// All bound quantities for one derived equation at one parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// Sup bound for the lower coefficients of the cleared equation.
    pub a_sup: f64,
    /// Sampled floor for the cleared leading coefficient on the segment.
    pub a_floor: SegmentFloor,
    pub cartan_floor: Ratio,
    pub iy_bound: f64,
    pub lemma5: LogValue,
    pub theorem2: LogValue,
    pub lemma3_coeff_bound: BigInt,
    pub lemma9_degree_bound: u32,
    /// Whether `M = 0` was raised to 1 for the formulas.
    pub m_floored: bool,
}

/// Grid size for [`segment_leading_floor`] in [`bound_report`].
pub const FLOOR_GRID: usize = 2001;

pub fn bound_report(sys: &LinSys, eq: &DerivedEq, eps: &Ratio, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate()?;
    let (beta, gammas) = eq.cleared();
    let a_sup = gammas
        .iter()
        .map(|g| coeff_sup(g, cfg.e_radius, cfg.r))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let a_floor = segment_leading_floor(&beta, eps, cfg.r, FLOOR_GRID)?;
    let iy_bound = iy_zero_bound(a_sup, a_floor.value, eq.k(), cfg.mu)?;

    let (lemma5, theorem2) = apriori_values(sys, eq, cfg)?;
    let (eq_degree, eq_m) = cleared_size(eq);
    Ok(BoundReport {
        a_sup,
        a_floor,
        cartan_floor: cartan_floor(eq_degree, eq_degree)?,
        iy_bound,
        lemma5,
        theorem2,
        lemma3_coeff_bound: lemma3_coeff_bound(eq_degree, &eq_m),
        lemma9_degree_bound: lemma9_degree_bound(eq.k(), sys.joint_degree_bound()),
        m_floored: sys.max_coeff().is_zero(),
    })
}

/// Joint degree and ceiling of the largest coefficient (at least 1) of the
/// content-cleared equation.
fn cleared_size(eq: &DerivedEq) -> (u32, BigInt) {
    let (beta, gammas) = eq.cleared();
    let eq_degree = std::iter::once(&beta)
        .chain(&gammas)
        .map(MPoly::total_degree)
        .max()
        .unwrap_or(0);
    let eq_m = std::iter::once(&beta)
        .chain(&gammas)
        .map(|p| p.max_abs_coeff().ceil().to_integer())
        .max()
        .unwrap_or_else(BigInt::zero)
        .max(BigInt::one());
    (eq_degree, eq_m)
}

/// The parameter-independent a-priori values: the single-equation growth
/// form from the cleared equation and the system form from `sys`.
pub fn apriori_values(sys: &LinSys, eq: &DerivedEq, cfg: &BoundConfig) -> Result<(LogValue, LogValue)> {
    let (eq_degree, eq_m) = cleared_size(eq);
    let lemma5 = apriori_lemma5(&eq_m, eq_degree, cfg.e_radius, cfg.r, eq.k(), cfg)?;
    let sys_m = sys.max_coeff_for_bounds();
    let theorem2 = apriori_theorem2(&sys_m, sys.n(), sys.joint_degree_bound(), cfg.e_radius, cfg.r, cfg)?;
    Ok((lemma5, theorem2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::ratio_from_i64;

    fn p(s: &str) -> MPoly {
        MPoly::parse(s, 2).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn e_approximations_are_upper_bounds() {
        assert_eq!(E_UP, f64::from_bits(std::f64::consts::E.to_bits() + 1));
        assert!(ratio_to_f64(&e_upper_ratio()) > std::f64::consts::E);
    }

    #[test]
    fn cartan_floor_examples() {
        assert_eq!(cartan_floor(1, 0).unwrap(), Ratio::new(1.into(), 2.into()));
        let v = ratio_to_f64(&cartan_floor(2, 1).unwrap());
        let four_e = 4.0 * ratio_to_f64(&e_upper_ratio());
        assert!(close(v, 1.0 / (four_e * four_e * 8.0), 1e-12));
        assert!((v - 1.057e-3).abs() < 1e-6);
        let v = ratio_to_f64(&cartan_floor(3, 3).unwrap());
        assert!(close(v, 1.0 / (four_e.powi(12) * 16.0 * 27.0), 1e-12));
        assert_eq!(cartan_floor(0, 0).unwrap(), Ratio::new(1.into(), 2.into()));
        assert!(cartan_floor(2, 3).is_err());
    }

    #[test]
    fn coeff_sup_examples() {
        assert_eq!(coeff_sup(&p("3*t^2*eps + 2"), 2.0, 1.0).unwrap(), 8.0);
        assert_eq!(coeff_sup(&p("0"), 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(coeff_sup(&p("t^3"), 5.0, 1.5).unwrap(), 1.5f64.powi(3));
        assert!(coeff_sup(&MPoly::parse("p1*p2", 3).unwrap(), 1.0, 1.0).is_err());
    }

    #[test]
    fn segment_floor_examples() {
        let half = Ratio::new(1.into(), 2.into());
        let f = segment_leading_floor(&p("t"), &half, 2.0, 101).unwrap();
        assert!(f.value >= 1.0 - 1e-15 && f.t_star.abs() == 1.0);
        let f = segment_leading_floor(&p("t^2 - 1"), &half, 2.0, 101).unwrap();
        assert!(f.value >= 1.0 - 1e-15);
        let f = segment_leading_floor(&p("eps"), &half, 2.0, 101).unwrap();
        assert_eq!(f.value, 0.5);
        assert!(matches!(
            segment_leading_floor(&p("eps*t"), &ratio_from_i64(0), 2.0, 101),
            Err(Error::DegenerateParameter(_))
        ));
    }

    #[test]
    fn segment_floor_refines_off_grid_maximum() {
        // |t (t - 0.3)| on [-1, 1] peaks at t = -1, but an interior local
        // max sits at t = 0.15; a coarse grid still finds the endpoint.
        let f = segment_leading_floor(&p("t^2 - 3/10*t"), &ratio_from_i64(0), 2.0, 7).unwrap();
        assert!(close(f.value, 1.3, 1e-12));
        // The refinement climbs to an interior peak missed by the grid.
        let f = segment_leading_floor(&p("-t^2 + 1/3*t + 1"), &ratio_from_i64(0), 2.0, 4).unwrap();
        assert!(close(f.value, 1.0 + 1.0 / 36.0, 1e-9));
    }

    #[test]
    fn iy_examples() {
        assert_eq!(iy_zero_bound(1.0, 1.0, 2, 1.0).unwrap(), 3.0);
        assert_eq!(iy_zero_bound(10.0, 2.0, 1, 2.0).unwrap(), 36.0);
        assert_eq!(iy_zero_bound(0.0, 1.0, 3, 2.5).unwrap(), 3f64.powf(2.5));
        assert!(iy_zero_bound(1.0, 0.0, 2, 1.0).is_err());
    }

    #[test]
    fn lemma5_examples() {
        let cfg = BoundConfig::default();
        let v = apriori_lemma5(&BigInt::from(1), 0, 1.0, 2.0, 1, &cfg).unwrap();
        assert!(close(v.value, 5.0, 1e-12));
        let v = apriori_lemma5(&BigInt::from(2), 1, 1.0, 2.0, 2, &cfg).unwrap();
        assert!(close(v.value, 16.0 * std::f64::consts::E + 2.0, 1e-12));
        let lo = apriori_lemma5(&BigInt::from(3), 2, 1.0, 2.0, 2, &cfg).unwrap();
        let hi = apriori_lemma5(&BigInt::from(3), 2, 2.0, 2.0, 2, &cfg).unwrap();
        assert!(hi.value >= lo.value);
        assert!(apriori_lemma5(&BigInt::from(0), 1, 1.0, 2.0, 1, &cfg).is_err());
    }

    #[test]
    fn theorem2_examples() {
        let cfg = BoundConfig::default();
        let v = apriori_theorem2(&BigInt::from(1), 1, 0, 1.0, 2.0, &cfg).unwrap();
        assert!(close(v.value, 5.0, 1e-12));
        let v = apriori_theorem2(&BigInt::from(1), 2, 1, 1.0, 2.0, &cfg).unwrap();
        let expected_log10 = 512.0 * std::f64::consts::LOG10_E + 32f64.log10();
        assert!(close(v.log10, expected_log10, 1e-12));
        assert!((v.log10 - 223.9).abs() < 0.05);
    }

    #[test]
    fn huge_values_stay_in_log_space() {
        let cfg = BoundConfig::default();
        let v = apriori_theorem2(&BigInt::from(5), 4, 2, 1.0, 2.0, &cfg).unwrap();
        assert!(v.value.is_infinite());
        assert!(v.log10.is_finite() && v.log10 > 300.0);
        let big = num_traits::pow(BigInt::from(10), 400);
        let v = apriori_lemma5(&big, 1, 1.0, 2.0, 1, &cfg).unwrap();
        assert!(close(v.log10, 400.0 + std::f64::consts::LOG10_E + 3.0 * 2f64.log10(), 1e-9));
    }

    #[test]
    fn size_bound_formulas() {
        let sys = LinSys::new(
            1,
            1,
            crate::derivation::DegreeReading::Joint,
            vec![vec![p("1"), p("eps")], vec![p("1"), p("1")]],
        )
        .unwrap();
        assert_eq!(size_bounds(&sys, 2), (2, BigInt::from(100)));
        assert_eq!(lemma9_degree_bound(2, 1), 3);
        assert_eq!(lemma3_coeff_bound(1, &BigInt::from(1)), BigInt::from(24));
    }

    #[test]
    fn config_validation() {
        assert!(BoundConfig::default().validate().is_ok());
        let bad = BoundConfig { r: 1.0, ..BoundConfig::default() };
        assert!(bad.validate().is_err());
        let bad = BoundConfig { mu: 0.0, ..BoundConfig::default() };
        assert!(bad.validate().is_err());
    }
}
