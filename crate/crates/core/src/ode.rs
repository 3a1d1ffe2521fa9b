//! Explicit Runge–Kutta steppers: classical RK4 and the Dormand–Prince 5(4)
//! embedded pair with a standard step-size controller.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Classical fourth-order Runge–Kutta, fixed step.
    #[default]
    Rk4,
    /// Dormand–Prince 5(4), adaptive step.
    Rk45,
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rk4" => Ok(Method::Rk4),
            "rk45" => Ok(Method::Rk45),
            other => Err(format!("unknown method `{other}` (expected rk4 or rk45)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OdeError<E> {
    /// The right-hand side could not be evaluated.
    Rhs(E),
    /// The adaptive controller asked for a step below the floor.
    StepUnderflow { t: f64, h: f64 },
}

impl<E> From<E> for OdeError<E> {
    fn from(e: E) -> Self {
        OdeError::Rhs(e)
    }
}

fn axpy(y: &[f64], h: f64, terms: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = y.to_vec();
    for (k, c) in terms {
        if *c != 0.0 {
            for (o, v) in out.iter_mut().zip(k.iter()) {
                *o += h * c * v;
            }
        }
    }
    out
}

/// One classical RK4 step.
pub fn rk4_step<E, F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, h, &[(&k1, 0.5)]))?;
    let k3 = f(t + 0.5 * h, &axpy(y, h, &[(&k2, 0.5)]))?;
    let k4 = f(t + h, &axpy(y, h, &[(&k3, 1.0)]))?;
    Ok(axpy(y, h, &[(&k1, 1.0 / 6.0), (&k2, 1.0 / 3.0), (&k3, 1.0 / 3.0), (&k4, 1.0 / 6.0)]))
}

/// RK4 step plus a step-doubling estimate of its local error (max-norm).
pub fn rk4_step_with_estimate<E, F>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<(Vec<f64>, f64), E>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
{
    let full = rk4_step(f, t, y, h)?;
    let half = rk4_step(f, t, y, 0.5 * h)?;
    let two_halves = rk4_step(f, t + 0.5 * h, &half, 0.5 * h)?;
    let err = full
        .iter()
        .zip(&two_halves)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        * 16.0
        / 15.0;
    Ok((full, err))
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// An accepted adaptive step.
#[derive(Debug, Clone)]
pub struct Accepted {
    pub t: f64,
    pub y: Vec<f64>,
    /// Max-norm of the embedded local error estimate.
    pub error: f64,
}

/// Dormand–Prince 5(4) with first-same-as-last reuse.
#[derive(Debug, Clone)]
pub struct DormandPrince {
    atol: f64,
    rtol: f64,
    h: Option<f64>,
    fsal: Option<Vec<f64>>,
}

impl DormandPrince {
    pub fn new(tol: f64) -> Self {
        Self {
            atol: tol,
            rtol: tol,
            h: None,
            fsal: None,
        }
    }

    fn scaled_norm(&self, err: &[f64], y0: &[f64], y1: &[f64]) -> f64 {
        let n = err.len().max(1) as f64;
        let s: f64 = err
            .iter()
            .zip(y0.iter().zip(y1))
            .map(|(e, (a, b))| {
                let sc = self.atol + self.rtol * a.abs().max(b.abs());
                (e / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    fn initial_step<E, F>(&self, f: &mut F, t: f64, y: &[f64], k1: &[f64]) -> Result<f64, E>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    {
        let sc: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.abs()).collect();
        let rms = |v: &[f64]| {
            (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / v.len().max(1) as f64).sqrt()
        };
        let d0 = rms(y);
        let d1 = rms(k1);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let y1 = axpy(y, h0, &[(k1, 1.0)]);
        let k2 = f(t + h0, &y1)?;
        let diff: Vec<f64> = k2.iter().zip(k1).map(|(a, b)| a - b).collect();
        let d2 = rms(&diff) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1))
    }

    /// Advances from `(t, y)` by one accepted step, never beyond `t_end`.
    pub fn step<E, F>(&mut self, f: &mut F, t: f64, y: &[f64], t_end: f64) -> Result<Accepted, OdeError<E>>
    where
        F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    {
        let k1 = match self.fsal.take() {
            Some(k) => k,
            None => f(t, y)?,
        };
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(f, t, y, &k1)?,
        };
        let mut rejected = false;
        loop {
            let remaining = t_end - t;
            let last = h >= remaining;
            if last {
                h = remaining;
            }
            if h <= 1e-13 * t.abs().max(1.0) {
                self.fsal = Some(k1);
                return Err(OdeError::StepUnderflow { t, h });
            }
            let k2 = f(t + C[1] * h, &axpy(y, h, &[(&k1, A2[0])]))?;
            let k3 = f(t + C[2] * h, &axpy(y, h, &[(&k1, A3[0]), (&k2, A3[1])]))?;
            let k4 = f(t + C[3] * h, &axpy(y, h, &[(&k1, A4[0]), (&k2, A4[1]), (&k3, A4[2])]))?;
            let k5 = f(
                t + C[4] * h,
                &axpy(y, h, &[(&k1, A5[0]), (&k2, A5[1]), (&k3, A5[2]), (&k4, A5[3])]),
            )?;
            let k6 = f(
                t + C[5] * h,
                &axpy(y, h, &[(&k1, A6[0]), (&k2, A6[1]), (&k3, A6[2]), (&k4, A6[3]), (&k5, A6[4])]),
            )?;
            let y5 = axpy(
                y,
                h,
                &[(&k1, B[0]), (&k3, B[2]), (&k4, B[3]), (&k5, B[4]), (&k6, B[5])],
            );
            let k7 = f(t + h, &y5)?;
            let err: Vec<f64> = (0..y.len())
                .map(|i| {
                    h * (E[0] * k1[i] + E[2] * k3[i] + E[3] * k4[i] + E[4] * k5[i] + E[5] * k6[i] + E[6] * k7[i])
                })
                .collect();
            let norm = self.scaled_norm(&err, y, &y5);
            let factor = if norm == 0.0 {
                5.0
            } else if norm.is_finite() {
                (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                0.2
            };
            if norm <= 1.0 {
                let grow = if rejected { factor.min(1.0) } else { factor };
                // keep the controller's own step when the last step was clipped to land on t_end
                let base = if last { self.h.unwrap_or(h).max(h) } else { h };
                self.h = Some(base * grow);
                self.fsal = Some(k7);
                let t_new = if last { t_end } else { t + h };
                return Ok(Accepted {
                    t: t_new,
                    y: y5,
                    error: err.iter().fold(0.0_f64, |m, e| m.max(e.abs())),
                });
            }
            rejected = true;
            h *= factor;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64]) -> Result<Vec<f64>, ()> {
        Ok(vec![-y[0]])
    }

    #[test]
    fn rk4_exponential() {
        let mut f = decay;
        let mut y = vec![1.0];
        let h = 0.01;
        for i in 0..100 {
            y = rk4_step(&mut f, i as f64 * h, &y, h).unwrap();
        }
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn rk4_estimate_tracks_true_error() {
        let mut f = decay;
        let h = 0.2;
        let (y, est) = rk4_step_with_estimate(&mut f, 0.0, &[1.0], h).unwrap();
        let truth = (y[0] - (-h).exp()).abs();
        assert!(est > 0.5 * truth && est < 2.0 * truth, "{est} vs {truth}");
    }

    #[test]
    fn dopri_reaches_end_accurately() {
        let mut f = |_t: f64, y: &[f64]| -> Result<Vec<f64>, ()> { Ok(vec![y[1], -y[0]]) };
        let mut dp = DormandPrince::new(1e-10);
        let (mut t, mut y) = (0.0, vec![0.0, 1.0]);
        let mut steps = 0;
        while t < 10.0 {
            let acc = dp.step(&mut f, t, &y, 10.0).unwrap();
            t = acc.t;
            y = acc.y;
            steps += 1;
        }
        assert_eq!(t, 10.0);
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
        assert!(steps < 2000);
    }

    #[test]
    fn dopri_reports_underflow_on_blowup() {
        // y' = y², y(0) = 1 blows up at t = 1.
        let mut f = |_t: f64, y: &[f64]| -> Result<Vec<f64>, ()> { Ok(vec![y[0] * y[0]]) };
        let mut dp = DormandPrince::new(1e-8);
        let (mut t, mut y) = (0.0, vec![1.0]);
        loop {
            match dp.step(&mut f, t, &y, 2.0) {
                Ok(acc) => {
                    t = acc.t;
                    y = acc.y;
                    assert!(t < 1.01);
                }
                Err(OdeError::StepUnderflow { t, .. }) => {
                    assert!((t - 1.0).abs() < 0.01);
                    break;
                }
                Err(OdeError::Rhs(())) => unreachable!(),
            }
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("rk45".parse::<Method>().unwrap(), Method::Rk45);
        assert!("euler".parse::<Method>().is_err());
    }
}
