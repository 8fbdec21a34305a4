//! Dormand–Prince 5(4) with the standard continuous extension.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const MAX_STEPS: usize = 1_000_000;

/// One accepted step with its interpolation data.
#[derive(Clone, Debug)]
pub(crate) struct Step {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl Step {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interval covered, ascending.
    pub fn span(&self) -> (f64, f64) {
        let t1 = self.t1();
        if self.h >= 0.0 {
            (self.t0, t1)
        } else {
            (t1, self.t0)
        }
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        for i in 0..out.len() {
            out[i] = r1[i] + s * (r2[i] + s1 * (r3[i] + s * (r4[i] + s1 * r5[i])));
        }
    }
}

fn axpy(out: &mut [f64], y: &[f64], h: f64, terms: &[(f64, &[f64])]) {
    for i in 0..out.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
pub(crate) fn integrate<F>(f: F, t0: f64, y0: &[f64], t_end: f64, tol: f64) -> Result<Vec<Step>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut steps = Vec::new();
    if t_end == t0 {
        return Ok(steps);
    }
    let dir = (t_end - t0).signum();
    let span = (t_end - t0).abs();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut h = dir * (span * 1e-3).min(1e-2);

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y1 = vec![0.0; n];
    f(t, &y, &mut k1);

    while (t_end - t) * dir > 0.0 {
        if steps.len() >= MAX_STEPS {
            return Err(Error::Integration {
                t,
                message: format!("exceeded {MAX_STEPS} steps"),
            });
        }
        let mut last = false;
        if (t + h - t_end) * dir >= 0.0 {
            h = t_end - t;
            last = true;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integration {
                t,
                message: format!("step size underflow (h = {h:e})"),
            });
        }

        axpy(&mut tmp, &y, h, &[(A21, &k1)]);
        f(t + C2 * h, &tmp, &mut k2);
        axpy(&mut tmp, &y, h, &[(A31, &k1), (A32, &k2)]);
        f(t + C3 * h, &tmp, &mut k3);
        axpy(&mut tmp, &y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(t + C4 * h, &tmp, &mut k4);
        axpy(&mut tmp, &y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(t + C5 * h, &tmp, &mut k5);
        axpy(
            &mut tmp,
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        f(t + h, &tmp, &mut k6);
        axpy(
            &mut y1,
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        f(t + h, &y1, &mut k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol + tol * y[i].abs().max(y1[i].abs());
            err += (e / sc).powi(2);
        }
        let err = if n == 0 { 0.0 } else { (err / n as f64).sqrt() };
        if !err.is_finite() {
            return Err(Error::Integration {
                t,
                message: "non-finite error estimate".into(),
            });
        }

        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        if err <= 1.0 {
            let ydiff: Vec<f64> = (0..n).map(|i| y1[i] - y[i]).collect();
            let bspl: Vec<f64> = (0..n).map(|i| h * k1[i] - ydiff[i]).collect();
            let r4: Vec<f64> = (0..n).map(|i| ydiff[i] - h * k7[i] - bspl[i]).collect();
            let r5: Vec<f64> = (0..n)
                .map(|i| {
                    h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                })
                .collect();
            steps.push(Step {
                t0: t,
                h,
                rcont: [y.clone(), ydiff, bspl, r4, r5],
            });
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y1);
            std::mem::swap(&mut k1, &mut k7);
            h *= factor;
        } else {
            h *= factor.min(1.0);
        }
    }
    Ok(steps)
}
