use std::collections::BTreeMap;
use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::doc::{ProbeExpectation, SystemDoc};
use super::report::*;
use crate::bounds::{apriori_values, bound_report, BoundConfig};
use crate::derivation::{degeneracy_generators, derive, exceptional_locus, Derivation, LinSys};
use crate::error::{Error, Result};
use crate::numerics::{claim1_residual, closed_form_residual, count_zeros, integrate_system};
use crate::perturbation::{
    bezout_membership, coefficient_family, division_cap, effective_division, effective_division_many,
    family_degree, perturbation_verdict,
};
use crate::polyring::{MPoly, Ratio};

/// Bisection width for zero brackets.
pub const REFINE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub bounds: BoundConfig,
    /// Integrator tolerance.
    pub tol: f64,
    /// Degree cap for effective division; defaults to `2D - 1`.
    pub cap: Option<u32>,
    /// Parameter samples; defaults to `{-2/3, -1/3, 1/3, 2/3} E` minus
    /// exceptional values.
    pub epsilon_samples: Option<Vec<Ratio>>,
    /// Initial state; defaults to a seeded random vector per sample.
    pub init: Option<Vec<f64>>,
    pub seed: u64,
    /// Largest acceptable residual.
    pub residual_max: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            bounds: BoundConfig::default(),
            tol: 1e-9,
            cap: None,
            epsilon_samples: None,
            init: None,
            seed: 0,
            residual_max: 1e-6,
        }
    }
}

fn summary(doc: &SystemDoc, sys: &LinSys) -> SystemSummary {
    SystemSummary {
        name: doc.name.clone(),
        n: sys.n(),
        q: sys.q(),
        degree: sys.declared_degree(),
        degree_reading: sys.reading(),
        joint_degree: sys.joint_degree_bound(),
        max_coeff: sys.max_coeff().to_string(),
        m_floored_for_bounds: sys.max_coeff().is_zero(),
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn empty_report(command: &str, doc: &SystemDoc, sys: &LinSys, opts: &RunOptions, samples: &[Ratio]) -> RunReport {
    RunReport {
        command: command.to_string(),
        fingerprint: doc.fingerprint(),
        system: summary(doc, sys),
        config: ConfigEcho {
            bounds: opts.bounds,
            tol: opts.tol,
            cap: opts.cap,
            residual_max: opts.residual_max,
            seed: opts.seed,
            epsilon_samples: samples.iter().map(ToString::to_string).collect(),
            init: opts.init.clone(),
        },
        derivation: None,
        perturbation: None,
        certificates: Vec::new(),
        probes: Vec::new(),
        samples: Vec::new(),
        checks: Vec::new(),
        passed: true,
        timing_ms: BTreeMap::new(),
    }
}

fn finish(mut report: RunReport) -> RunReport {
    report.passed = report.checks.iter().all(|c| c.passed);
    report
}

fn derivation_section(d: &Derivation) -> Result<DerivationSection> {
    let eq = &d.eq;
    let ideal = degeneracy_generators(&d.seq, eq.k())?;
    let locus = if eq.q() == 1 {
        Some(exceptional_locus(eq)?.to_string())
    } else {
        None
    };
    Ok(DerivationSection {
        k: eq.k(),
        minor_rows: eq.minor_rows().to_vec(),
        beta: eq.beta().to_string(),
        gammas: eq.gammas().iter().map(ToString::to_string).collect(),
        content: eq.content().to_string(),
        equation: eq.render(),
        degeneracy_generators: ideal
            .generators
            .iter()
            .map(|g| GeneratorRecord {
                minor_rows: g.minor_rows.clone(),
                t_power: g.t_power,
                poly: g.poly.to_string(),
            })
            .collect(),
        exceptional_locus: locus,
    })
}

/// `beta a^(k) = sum gamma_i a^(i)`, checked exactly.
fn identity_holds(d: &Derivation) -> bool {
    let eq = &d.eq;
    let k = eq.k();
    let n = d.seq.get(0).len();
    (0..n).all(|r| {
        let lhs = eq.beta() * &d.seq.get(k)[r];
        let rhs = eq
            .gammas()
            .iter()
            .enumerate()
            .fold(MPoly::zero(eq.nvars()), |acc, (i, g)| &acc + &(g * &d.seq.get(i)[r]));
        lhs == rhs
    })
}

fn run_derivation(report: &mut RunReport, sys: &LinSys) -> Result<Derivation> {
    let start = Instant::now();
    let d = derive(sys)?;
    report.derivation = Some(derivation_section(&d)?);
    report.timing_ms.insert("derive".into(), ms(start));
    if !identity_holds(&d) {
        return Err(Error::internal("derived equation fails the covector identity"));
    }
    report.check("covectorIdentity", true, format!("k = {}", d.eq.k()));
    Ok(d)
}

pub fn derive_report(doc: &SystemDoc, sys: &LinSys) -> Result<RunReport> {
    let mut report = empty_report("derive", doc, sys, &RunOptions::default(), &[]);
    run_derivation(&mut report, sys)?;
    Ok(finish(report))
}

fn is_exceptional(locus: Option<&MPoly>, eps: &Ratio) -> Result<bool> {
    match locus {
        Some(l) => Ok(l.eval_params(std::slice::from_ref(eps))?.is_zero()),
        None => Ok(false),
    }
}

/// `{-2/3, -1/3, 1/3, 2/3} E` without exceptional values (`{0}` when the
/// system has no parameter).
pub fn default_samples(e_radius: f64, locus: Option<&MPoly>, q: usize) -> Result<Vec<Ratio>> {
    if q == 0 {
        return Ok(vec![Ratio::zero()]);
    }
    let e = Ratio::from_float(e_radius).ok_or_else(|| Error::usage("E must be finite"))?;
    let mut out = Vec::new();
    for (num, den) in [(-2, 3), (-1, 3), (1, 3), (2, 3)] {
        let eps = &e * Ratio::new(num.into(), den.into());
        if !is_exceptional(locus, &eps)? {
            out.push(eps);
        }
    }
    Ok(out)
}

fn seeded_init(n: usize, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64));
    (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn bound_record(sys: &LinSys, d: &Derivation, eps: &Ratio, cfg: &BoundConfig) -> Result<BoundRecord> {
    let b = bound_report(sys, &d.eq, eps, cfg)?;
    Ok(BoundRecord {
        a_sup: b.a_sup,
        a_floor: b.a_floor.value,
        t_star: b.a_floor.t_star,
        cartan_floor: b.cartan_floor.to_string(),
        iy_bound: finite(b.iy_bound),
        lemma5: finite(b.lemma5.value),
        lemma5_log10: b.lemma5.log10,
        theorem2: finite(b.theorem2.value),
        theorem2_log10: b.theorem2.log10,
        lemma3_coeff_bound: b.lemma3_coeff_bound.to_string(),
        lemma9_degree_bound: b.lemma9_degree_bound,
    })
}

fn run_certificates(report: &mut RunReport, d: &Derivation, cap_override: Option<u32>, q: usize) -> Result<()> {
    let start = Instant::now();
    let (targets, basis) = coefficient_family(&d.eq);
    let cap = cap_override.unwrap_or_else(|| division_cap(family_degree(&d.eq)));
    report.config.cap = Some(cap);
    if basis.is_empty() {
        return Err(Error::internal("leading coefficient has no t-coefficients"));
    }
    let mut missing_bezout = Vec::new();
    if q == 1 {
        for (slot, target) in &targets {
            match bezout_membership(target, &basis)? {
                Some(c) => report.certificates.push(CertificateRecord::new(CertificateKind::Bezout, Some(*slot), &c)),
                None => missing_bezout.push(format!("gamma_{}[t^{}]", slot.gamma, slot.t_power)),
            }
        }
        report.check(
            "bezoutMembership",
            missing_bezout.is_empty(),
            if missing_bezout.is_empty() {
                format!("{} targets", targets.len())
            } else {
                format!("no certificate for {}", missing_bezout.join(", "))
            },
        );
    }
    let polys: Vec<MPoly> = targets.iter().map(|(_, p)| p.clone()).collect();
    let found = effective_division_many(&polys, &basis, cap)?;
    let mut missing = Vec::new();
    for ((slot, _), cert) in targets.iter().zip(&found) {
        match cert {
            Some(c) => report.certificates.push(CertificateRecord::new(CertificateKind::Division, Some(*slot), c)),
            None => missing.push(format!("gamma_{}[t^{}]", slot.gamma, slot.t_power)),
        }
    }
    // Without a single parameter there is no membership guarantee.
    let detail = if missing.is_empty() {
        format!("{} targets at cap {cap}", targets.len())
    } else {
        format!("none at cap {cap} for {}", missing.join(", "))
    };
    if q == 1 {
        report.check("effectiveDivision", missing.is_empty(), detail);
    } else {
        report.check("effectiveDivisionInformational", true, detail);
    }
    report.timing_ms.insert("certificates".into(), ms(start));
    Ok(())
}

fn run_probes(report: &mut RunReport, doc: &SystemDoc) -> Result<()> {
    for (index, ((target, basis), probe)) in doc.probe_polys()?.into_iter().zip(&doc.division_probes).enumerate() {
        let cert = effective_division(&target, &basis, probe.cap)?;
        let found = cert.is_some();
        if let Some(c) = &cert {
            report.certificates.push(CertificateRecord::new(CertificateKind::Probe, None, c));
        }
        let expect_member = probe.expect == ProbeExpectation::Member;
        let passed = found == expect_member;
        report.probes.push(ProbeRecord {
            index,
            target: target.to_string(),
            basis: basis.iter().map(ToString::to_string).collect(),
            cap: probe.cap,
            expect: if expect_member { "member" } else { "nonMember" }.into(),
            found,
            expected_negative: !found && !expect_member,
            passed,
        });
        report.check(
            &format!("divisionProbe{index}"),
            passed,
            format!(
                "{} at cap {}{}",
                if found { "certificate found" } else { "no certificate" },
                probe.cap,
                if !found && !expect_member { " (expected negative)" } else { "" }
            ),
        );
    }
    Ok(())
}

fn run_samples(report: &mut RunReport, sys: &LinSys, d: &Derivation, samples: &[Ratio], opts: &RunOptions) {
    let start = Instant::now();
    let records: Vec<SampleRecord> = samples
        .par_iter()
        .enumerate()
        .map(|(i, eps)| {
            let init = opts.init.clone().unwrap_or_else(|| seeded_init(sys.n(), opts.seed, i));
            let mut rec = SampleRecord {
                epsilon: eps.to_string(),
                init: init.clone(),
                residual: None,
                residual_passed: false,
                zero_count: None,
                suspects: None,
                bounds: None,
                error: None,
            };
            match claim1_residual(sys, &d.eq, eps, &init, opts.bounds.r, opts.tol) {
                Ok(r) => {
                    rec.residual = Some(r);
                    rec.residual_passed = r <= opts.residual_max;
                }
                Err(e) => rec.error = Some(e.to_string()),
            }
            if let Ok(traj) = integrate_system(sys, eps, &init, opts.bounds.r, opts.tol) {
                if let Ok(zc) = count_zeros(&traj, 0, REFINE_TOL) {
                    rec.zero_count = Some(zc.count);
                    rec.suspects = Some(zc.suspects.len());
                }
            }
            if sys.q() == 1 {
                rec.bounds = bound_record(sys, d, eps, &opts.bounds).ok();
            }
            rec
        })
        .collect();
    let failed: Vec<String> = records
        .iter()
        .filter(|r| !r.residual_passed)
        .map(|r| match (&r.residual, &r.error) {
            (Some(v), _) => format!("eps = {}: residual {v:e}", r.epsilon),
            (None, Some(e)) => format!("eps = {}: {e}", r.epsilon),
            _ => format!("eps = {}", r.epsilon),
        })
        .collect();
    report.check(
        "claim1Residual",
        failed.is_empty() && !records.is_empty(),
        if records.is_empty() {
            "no admissible samples".to_string()
        } else if failed.is_empty() {
            format!("{} samples within {:e}", records.len(), opts.residual_max)
        } else {
            failed.join("; ")
        },
    );
    report.samples = records;
    report.timing_ms.insert("samples".into(), ms(start));
}

/// Derivation, perturbation verdict, membership certificates, division
/// probes and residual samples. Check failures are recorded in the report;
/// errors are reserved for malformed input and internal inconsistencies.
pub fn verify_report(doc: &SystemDoc, sys: &LinSys, opts: &RunOptions) -> Result<RunReport> {
    opts.bounds.validate()?;
    let total = Instant::now();
    let mut report = empty_report("verify", doc, sys, opts, &[]);
    let d = run_derivation(&mut report, sys)?;
    let q = sys.q();

    let locus = if q == 1 { Some(exceptional_locus(&d.eq)?) } else { None };
    if q == 1 {
        let v = perturbation_verdict(&d.eq)?;
        report.check(
            "perturbationVerdict",
            v.witnesses.is_empty(),
            format!("{:?}", v.verdict),
        );
        report.perturbation = Some(PerturbationSection {
            verdict: v.verdict,
            witnesses: v
                .witnesses
                .iter()
                .map(|w| WitnessRecord {
                    coefficient: w.coefficient,
                    content: w.content.to_string(),
                })
                .collect(),
            reduced_denominator_contents: v.reduced_den_contents.iter().map(ToString::to_string).collect(),
        });
    }
    if q >= 1 {
        run_certificates(&mut report, &d, opts.cap, q)?;
    }
    run_probes(&mut report, doc)?;

    if q <= 1 {
        let requested = match &opts.epsilon_samples {
            Some(s) => s.clone(),
            None => default_samples(opts.bounds.e_radius, locus.as_ref(), q)?,
        };
        let mut samples = Vec::new();
        for eps in requested {
            if is_exceptional(locus.as_ref(), &eps)? {
                report.check(
                    "sampleAdmissible",
                    true,
                    format!("skipped exceptional value eps = {eps}"),
                );
            } else {
                samples.push(eps);
            }
        }
        report.config.epsilon_samples = samples.iter().map(ToString::to_string).collect();
        run_samples(&mut report, sys, &d, &samples, opts);
    }
    if report.reverify().is_err() {
        return Err(Error::internal("a certificate failed re-verification"));
    }
    report.timing_ms.insert("total".into(), ms(total));
    Ok(finish(report))
}

/// The two-dimensional example `x' = x + eps y, y' = x + y`.
pub fn demo_doc() -> SystemDoc {
    SystemDoc::parse(
        br#"{
  "n": 2, "q": 1, "degree": 1, "name": "demo",
  "matrix": [
    [[{"tExp": 0, "pExp": [0], "coeff": 1}], [{"tExp": 0, "pExp": [1], "coeff": 1}]],
    [[{"tExp": 0, "pExp": [0], "coeff": 1}], [{"tExp": 0, "pExp": [0], "coeff": 1}]]
  ]
}"#,
    )
    .expect("demo document is valid")
}

/// `verify` on the demo system, plus the closed-form checks at `eps = 0`:
/// `t e^t` solves the degenerate equation while `e^(2t)` does not.
pub fn demo_report(opts: &RunOptions) -> Result<RunReport> {
    let doc = demo_doc();
    let sys = doc.to_linsys()?;
    let mut report = verify_report(&doc, &sys, opts)?;
    report.command = "demo".into();
    let eq = derive(&sys)?.eq;
    let zero = Ratio::zero();
    let te_t = closed_form_residual(&eq, &zero, |t| vec![t * t.exp(), (t + 1.0) * t.exp(), (t + 2.0) * t.exp()], 2.0)?;
    report.check("extraSolution", te_t <= 1e-10, format!("t e^t residual {te_t:e}"));
    let e2t = closed_form_residual(&eq, &zero, |t| {
        let v = (2.0 * t).exp();
        vec![v, 2.0 * v, 4.0 * v]
    }, 2.0)?;
    report.check("negativeControl", e2t >= 0.1, format!("e^(2t) residual {e2t:e}"));
    Ok(finish(report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOptions {
    pub bounds: BoundConfig,
    pub tol: f64,
    /// Defaults to `{-3/4, ..., 3/4} E` in steps of `E/4`.
    pub grid: Option<Vec<Ratio>>,
    /// Defaults to `e_2` (`e_1` for scalar systems).
    pub init: Option<Vec<f64>>,
    pub component: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            bounds: BoundConfig::default(),
            tol: 1e-10,
            grid: None,
            init: None,
            component: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub epsilon: Ratio,
    pub count: Option<usize>,
    pub suspects: Option<usize>,
    pub a_sup: Option<f64>,
    pub a_floor: Option<f64>,
    pub iy_bound: Option<f64>,
    pub lemma5: f64,
    pub theorem2_log10: f64,
    pub degenerate: bool,
    pub error: Option<String>,
}

pub const SWEEP_HEADER: &str = "epsilon,count,suspects,A,a,iy_bound,lemma5,theorem2_log10,degenerate";

pub fn default_init(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[if n > 1 { 1 } else { 0 }] = 1.0;
    v
}

/// One row per grid value, computed in parallel and returned in grid order.
/// Exceptional values are flagged and skip the exact-path bound.
pub fn sweep(sys: &LinSys, opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if sys.q() != 1 {
        return Err(Error::UnsupportedParameterCount {
            expected: 1,
            found: sys.q(),
        });
    }
    opts.bounds.validate()?;
    let e = Ratio::from_float(opts.bounds.e_radius).ok_or_else(|| Error::usage("E must be finite"))?;
    let grid = match &opts.grid {
        Some(g) => g.clone(),
        None => (-3..=3).map(|i| &e * Ratio::new(i.into(), 4.into())).collect(),
    };
    for eps in &grid {
        if num_traits::Signed::abs(eps) >= e {
            return Err(Error::usage(format!("grid value {eps} outside (-E, E)")));
        }
    }
    let init = opts.init.clone().unwrap_or_else(|| default_init(sys.n()));
    if init.len() != sys.n() {
        return Err(Error::usage(format!("initial state needs {} components", sys.n())));
    }
    if opts.component >= sys.n() {
        return Err(Error::usage(format!("component {} out of range", opts.component)));
    }
    let d = derive(sys)?;
    let locus = exceptional_locus(&d.eq)?;
    let (lemma5, theorem2) = apriori_values(sys, &d.eq, &opts.bounds)?;

    grid.par_iter()
        .map(|eps| {
            let degenerate = is_exceptional(Some(&locus), eps)?;
            let mut row = SweepRow {
                epsilon: eps.clone(),
                count: None,
                suspects: None,
                a_sup: None,
                a_floor: None,
                iy_bound: None,
                lemma5: lemma5.value,
                theorem2_log10: theorem2.log10,
                degenerate,
                error: None,
            };
            match integrate_system(sys, eps, &init, opts.bounds.r, opts.tol)
                .and_then(|tr| count_zeros(&tr, opts.component, REFINE_TOL))
            {
                Ok(zc) => {
                    row.count = Some(zc.count);
                    row.suspects = Some(zc.suspects.len());
                }
                Err(e) => row.error = Some(e.to_string()),
            }
            if !degenerate {
                match bound_report(sys, &d.eq, eps, &opts.bounds) {
                    Ok(b) => {
                        row.a_sup = Some(b.a_sup);
                        row.a_floor = Some(b.a_floor.value);
                        row.iy_bound = Some(b.iy_bound);
                    }
                    Err(e) => {
                        row.error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            Ok(row)
        })
        .collect()
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// CSV body (header plus rows), without the timestamp comment.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.epsilon,
            opt(&r.count),
            opt(&r.suspects),
            opt(&r.a_sup),
            opt(&r.a_floor),
            opt(&r.iy_bound),
            r.lemma5,
            r.theorem2_log10,
            r.degenerate
        ));
    }
    out
}

/// `count` seeded systems with `n` in 1..=4, `d` in 0..=2, `M` in 1..=5 and
/// one parameter.
pub fn ensemble(count: usize, seed: u64) -> Vec<SystemDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=4);
            let d = rng.gen_range(0..=2);
            let m = rng.gen_range(1..=5);
            let s = rng.gen();
            super::random::gen_random(n, d, m, 1, s).expect("valid ensemble parameters")
        })
        .collect()
}
