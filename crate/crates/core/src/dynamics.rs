//! Flows `ẋ^μ = ω^{μν}(x) ∂_ν H(x)` of a possibly non-closed 2-form.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::GeometryError;
use crate::form::{eval_jets, eval_matrix, PhasePoint, ScalarField, TwoFormField};
use crate::geometry::{invert_antisymmetric, invert_at, DEFAULT_RCOND_MIN};
use crate::jet::Jet2;
use crate::monopole::{MonopoleParams, SingularityReport};
use crate::ode::{rk4_step_with_estimate, DormandPrince, Method, OdeError};

/// A Hamiltonian, evaluable on jets.
#[derive(Clone)]
pub struct HamiltonianField {
    name: String,
    eval: Arc<dyn Fn(&[Jet2]) -> Jet2 + Send + Sync>,
}

impl HamiltonianField {
    pub fn new(name: impl Into<String>, eval: impl Fn(&[Jet2]) -> Jet2 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    /// `H = |p|²/2`.
    pub fn kinetic() -> Self {
        Self::new("kinetic", |x: &[Jet2]| {
            let n = x.len() / 2;
            let mut acc = x[0].constant_like(0.0);
            for p in &x[n..] {
                acc += &(p * p);
            }
            &acc * 0.5
        })
    }

    /// `H = (|p|² + ν²|q|²)/2`.
    pub fn harmonic(frequency: f64) -> Self {
        Self::new("harmonic", move |x: &[Jet2]| {
            let n = x.len() / 2;
            let mut acc = x[0].constant_like(0.0);
            for p in &x[n..] {
                acc += &(p * p);
            }
            for q in &x[..n] {
                acc += &(&(q * q) * (frequency * frequency));
            }
            &acc * 0.5
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.eval)(&Jet2::seed(x, false)).value()
    }

    pub fn jet(&self, x: &[f64]) -> Jet2 {
        (self.eval)(&Jet2::seed(x, true))
    }
}

impl ScalarField for HamiltonianField {
    fn eval(&self, x: &[Jet2]) -> Jet2 {
        (self.eval)(x)
    }
}

impl fmt::Debug for HamiltonianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HamiltonianField({})", self.name)
    }
}

/// What to do when the flow reaches the margin of a singular set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GuardPolicy {
    /// Return the partial trajectory as a successful result, with `halted` set.
    Stop,
    /// Return [`DynamicsError::SingularEncounter`] carrying the partial trajectory.
    #[default]
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    pub method: Method,
    /// Fixed step for RK4.
    pub step: f64,
    /// Absolute and relative tolerance for RK45.
    pub tol: f64,
    pub t_end: f64,
    pub guard_policy: GuardPolicy,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            step: 1e-3,
            tol: 1e-10,
            t_end: 1.0,
            guard_policy: GuardPolicy::Error,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(step: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk4,
            step,
            t_end,
            ..Self::default()
        }
    }

    pub fn rk45(tol: f64, t_end: f64) -> Self {
        Self {
            method: Method::Rk45,
            tol,
            t_end,
            ..Self::default()
        }
    }

    pub fn with_policy(mut self, policy: GuardPolicy) -> Self {
        self.guard_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!("step must be positive, got {}", self.step)));
        }
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(DynamicsError::InvalidConfig(format!(
                "tolerance must lie in (0, 1e-2], got {}",
                self.tol
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(DynamicsError::InvalidConfig(format!(
                "t_end must be finite and non-negative, got {}",
                self.t_end
            )));
        }
        Ok(())
    }
}

/// Sampled solution with per-sample diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
    pub diagnostics: Vec<BTreeMap<String, f64>>,
    /// Sum of local error estimates (max-norm) over all steps.
    pub error_estimate: f64,
    /// Set when the run stopped early at a singular set under [`GuardPolicy::Stop`].
    pub halted: Option<String>,
}

impl Trajectory {
    pub fn empty() -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            diagnostics: Vec::new(),
            error_estimate: 0.0,
            halted: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&PhasePoint> {
        self.states.last()
    }

    pub fn final_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    /// Largest `|value|` of a diagnostic channel over the run (NaN if absent).
    pub fn max_abs_diagnostic(&self, key: &str) -> f64 {
        let mut found = false;
        let m = self.diagnostics.iter().fold(0.0_f64, |m, d| match d.get(key) {
            Some(v) => {
                found = true;
                m.max(v.abs())
            }
            None => m,
        });
        if found {
            m
        } else {
            f64::NAN
        }
    }

    /// Keeps the listed coordinates of every state (e.g. the physical part).
    pub fn project(&self, indices: &[usize]) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .map(|s| {
                    PhasePoint::new(indices.iter().map(|&i| s.coords()[i]).collect())
                        .expect("projection onto an even number of coordinates")
                })
                .collect(),
            diagnostics: self.diagnostics.clone(),
            error_estimate: self.error_estimate,
            halted: self.halted.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("flow reached a singular set at t = {t}: {reason}")]
    SingularEncounter {
        t: f64,
        reason: String,
        report: Option<Box<SingularityReport>>,
        partial: Box<Trajectory>,
    },
    #[error("adaptive step underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64, partial: Box<Trajectory> },
    #[error("constraint residual {residual:e} exceeded {limit:e} at t = {t}")]
    ConstraintDrift {
        t: f64,
        residual: f64,
        limit: f64,
        partial: Box<Trajectory>,
    },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl DynamicsError {
    pub fn partial(&self) -> Option<&Trajectory> {
        match self {
            DynamicsError::SingularEncounter { partial, .. }
            | DynamicsError::StepFailure { partial, .. }
            | DynamicsError::ConstraintDrift { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Reason an integration run must end early.
#[derive(Debug, Clone)]
pub(crate) enum Halt {
    Singular {
        reason: String,
        report: Option<Box<SingularityReport>>,
    },
    Drift { residual: f64, limit: f64 },
}

impl From<GeometryError> for Halt {
    fn from(e: GeometryError) -> Self {
        let report = match &e {
            GeometryError::DomainViolation { report, .. } => report.clone(),
            _ => None,
        };
        Halt::Singular {
            reason: e.to_string(),
            report,
        }
    }
}

/// Shared stepping loop: `rhs` gives `ẏ`, `guard` vets each accepted state,
/// `diag` produces the diagnostics recorded with it.
pub(crate) fn run<R, G, D>(
    mut rhs: R,
    y0: Vec<f64>,
    config: &IntegratorConfig,
    mut guard: G,
    mut diag: D,
) -> Result<Trajectory, DynamicsError>
where
    R: FnMut(f64, &[f64]) -> Result<Vec<f64>, GeometryError>,
    G: FnMut(&[f64]) -> Result<(), Halt>,
    D: FnMut(&[f64]) -> BTreeMap<String, f64>,
{
    config.validate()?;
    let mut traj = Trajectory::empty();

    let halt = |traj: Trajectory, t: f64, h: Halt, policy: GuardPolicy| -> Result<Trajectory, DynamicsError> {
        match h {
            Halt::Singular { reason, report } => match policy {
                GuardPolicy::Stop => {
                    let mut traj = traj;
                    traj.halted = Some(format!("t = {t}: {reason}"));
                    Ok(traj)
                }
                GuardPolicy::Error => Err(DynamicsError::SingularEncounter {
                    t,
                    reason,
                    report,
                    partial: Box::new(traj),
                }),
            },
            Halt::Drift { residual, limit } => Err(DynamicsError::ConstraintDrift {
                t,
                residual,
                limit,
                partial: Box::new(traj),
            }),
        }
    };

    let admit = |y: &[f64], guard: &mut G| -> Result<PhasePoint, Halt> {
        let x = PhasePoint::new(y.to_vec()).map_err(Halt::from)?;
        guard(y)?;
        Ok(x)
    };

    match admit(&y0, &mut guard) {
        Ok(x) => {
            traj.times.push(0.0);
            traj.diagnostics.push(diag(&y0));
            traj.states.push(x);
        }
        Err(h) => return halt(traj, 0.0, h, config.guard_policy),
    }

    let t_end = config.t_end;
    let mut t = 0.0;
    let mut y = y0;
    let mut dp = DormandPrince::new(config.tol);
    while t < t_end {
        let stepped = match config.method {
            Method::Rk4 => {
                let h = if t + config.step >= t_end * (1.0 - 1e-12) {
                    t_end - t
                } else {
                    config.step
                };
                rk4_step_with_estimate(&mut rhs, t, &y, h)
                    .map(|(y1, err)| (t_end.min(t + h), y1, err))
                    .map_err(OdeError::Rhs)
            }
            Method::Rk45 => dp.step(&mut rhs, t, &y, t_end).map(|a| (a.t, a.y, a.error)),
        };
        let (t1, y1, err) = match stepped {
            Ok(s) => s,
            Err(OdeError::Rhs(e)) => return halt(traj, t, e.into(), config.guard_policy),
            Err(OdeError::StepUnderflow { t, h }) => {
                return Err(DynamicsError::StepFailure {
                    t,
                    h,
                    partial: Box::new(traj),
                })
            }
        };
        let t1 = if (t_end - t1).abs() <= 1e-12 * t_end.max(1.0) { t_end } else { t1 };
        match admit(&y1, &mut guard) {
            Ok(x) => {
                traj.error_estimate += err;
                traj.times.push(t1);
                traj.diagnostics.push(diag(&y1));
                traj.states.push(x);
            }
            Err(h) => return halt(traj, t1, h, config.guard_policy),
        }
        t = t1;
        y = y1;
    }
    Ok(traj)
}

/// `ω^{μν}(x) ∂_ν H(x)`.
pub fn vector_field<F, H>(form: &F, hamiltonian: &H, x: &PhasePoint) -> Result<Vec<f64>, GeometryError>
where
    F: TwoFormField + ?Sized,
    H: ScalarField + ?Sized,
{
    if form.dim() != x.dim() {
        return Err(GeometryError::shape(
            format!("point of dimension {}", form.dim()),
            format!("dimension {}", x.dim()),
        ));
    }
    let w = invert_at(form, x)?;
    let h = hamiltonian.eval(&Jet2::seed(x.coords(), true));
    Ok((w * DVector::from_column_slice(h.grad())).as_slice().to_vec())
}

/// The vector field and its Jacobian `∂_α V^μ` at `x`.
///
/// With `W = ω⁻¹`, `∂_α W = −W (∂_α ω) W`, so
/// `∂_α V = W (∂_α ∂H − (∂_α ω) V)`.
pub fn vector_field_jacobian<F, H>(
    form: &F,
    hamiltonian: &H,
    x: &PhasePoint,
) -> Result<(Vec<f64>, DMatrix<f64>), GeometryError>
where
    F: TwoFormField + ?Sized,
    H: ScalarField + ?Sized,
{
    let comps = eval_jets(form, x)?;
    let n = x.dim();
    let w = invert_antisymmetric(&comps.values(), DEFAULT_RCOND_MIN)?;
    let h = hamiltonian.eval(&Jet2::seed(x.coords(), true));
    let v = &w * DVector::from_column_slice(h.grad());
    let mut inner = DMatrix::from_fn(n, n, |nu, a| h.dd(nu, a));
    for nu in 0..n {
        for a in 0..n {
            let mut s = 0.0;
            for b in 0..n {
                s += comps.get(nu, b).d(a) * v[b];
            }
            inner[(nu, a)] -= s;
        }
    }
    Ok((v.as_slice().to_vec(), w * inner))
}

fn guard_form<F: TwoFormField + ?Sized>(form: &F, y: &[f64]) -> Result<(), Halt> {
    let x = PhasePoint::new(y.to_vec())?;
    form.check_domain(&x)?;
    Ok(())
}

/// Integrates the flow of `H` under `form` from `x0`. Diagnostics record
/// `energy` and `energy_drift = H(x) − H(x0)`.
pub fn integrate<F, H>(
    form: &F,
    hamiltonian: &H,
    x0: &PhasePoint,
    config: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError>
where
    F: TwoFormField + ?Sized,
    H: ScalarField + ?Sized,
{
    if form.dim() != x0.dim() {
        return Err(GeometryError::shape(format!("state of length {}", form.dim()), format!("{}", x0.dim())).into());
    }
    let energy = |y: &[f64]| hamiltonian.eval(&Jet2::seed(y, false)).value();
    let h0 = energy(x0.coords());
    run(
        |_t, y| vector_field(form, hamiltonian, &PhasePoint::new(y.to_vec())?),
        x0.coords().to_vec(),
        config,
        |y| guard_form(form, y),
        |y| {
            let e = energy(y);
            BTreeMap::from([("energy".to_string(), e), ("energy_drift".to_string(), e - h0)])
        },
    )
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `J = q × p − λ q/|q|`.
pub fn poincare_vector(x: &PhasePoint, lambda: f64) -> [f64; 3] {
    let (q, p) = (x.q(), x.p());
    let r = norm(q);
    let c = cross(q, p);
    [c[0] - lambda * q[0] / r, c[1] - lambda * q[1] / r, c[2] - lambda * q[2] / r]
}

/// Monopole-run diagnostics per sample: `energy = |p|²/2`, `speed = |p|`,
/// `J1..J3`, `cone_cosine = q·J/(|q||J|)` and the drifts `energy_drift`,
/// `speed_drift`, `poincare_drift` (max-norm of `J − J(0)`).
pub fn conserved_diagnostics(traj: &Trajectory, params: &MonopoleParams) -> Vec<BTreeMap<String, f64>> {
    let Some(first) = traj.states.first() else {
        return Vec::new();
    };
    if first.dim() != 6 {
        return vec![BTreeMap::new(); traj.len()];
    }
    let e0 = 0.5 * norm(first.p()).powi(2);
    let s0 = norm(first.p());
    let j0 = poincare_vector(first, params.lambda);
    traj.states
        .iter()
        .map(|x| {
            let speed = norm(x.p());
            let energy = 0.5 * speed * speed;
            let j = poincare_vector(x, params.lambda);
            let jd = (0..3).fold(0.0_f64, |m, k| m.max((j[k] - j0[k]).abs()));
            let cone = (x.q()[0] * j[0] + x.q()[1] * j[1] + x.q()[2] * j[2]) / (norm(x.q()) * norm(&j));
            BTreeMap::from([
                ("energy".to_string(), energy),
                ("energy_drift".to_string(), energy - e0),
                ("speed".to_string(), speed),
                ("speed_drift".to_string(), speed - s0),
                ("J1".to_string(), j[0]),
                ("J2".to_string(), j[1]),
                ("J3".to_string(), j[2]),
                ("poincare_drift".to_string(), jd),
                ("cone_cosine".to_string(), cone),
            ])
        })
        .collect()
}

/// Merges [`conserved_diagnostics`] into the trajectory's own channels.
pub fn attach_conserved_diagnostics(traj: &mut Trajectory, params: &MonopoleParams) {
    let extra = conserved_diagnostics(traj, params);
    for (d, e) in traj.diagnostics.iter_mut().zip(extra) {
        d.extend(e);
    }
}

/// `t ↦ ω(x(t))(u(t), v(t))` along a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl TransportSeries {
    /// `max_t |value(t) − value(0)|`.
    pub fn drift(&self) -> f64 {
        let v0 = self.values.first().copied().unwrap_or(0.0);
        self.values.iter().fold(0.0_f64, |m, v| m.max((v - v0).abs()))
    }
}

/// Transports the tangent vectors `u0`, `v0` along the flow from `x0` with
/// the linearized equation `u̇ = (∂V) u` and reports `ω(u, v)` at each sample.
pub fn two_form_transport<F, H>(
    form: &F,
    hamiltonian: &H,
    x0: &PhasePoint,
    u0: &[f64],
    v0: &[f64],
    config: &IntegratorConfig,
) -> Result<TransportSeries, DynamicsError>
where
    F: TwoFormField + ?Sized,
    H: ScalarField + ?Sized,
{
    let n = x0.dim();
    if form.dim() != n || u0.len() != n || v0.len() != n {
        return Err(GeometryError::shape(
            format!("point and tangent vectors of length {}", form.dim()),
            format!("{}, {}, {}", n, u0.len(), v0.len()),
        )
        .into());
    }
    let mut y0 = x0.coords().to_vec();
    y0.extend_from_slice(u0);
    y0.extend_from_slice(v0);
    let pairing = |y: &[f64]| -> f64 {
        let Ok(x) = PhasePoint::new(y[..n].to_vec()) else {
            return f64::NAN;
        };
        match eval_matrix(form, &x) {
            Ok(w) => {
                let u = DVector::from_column_slice(&y[n..2 * n]);
                let v = DVector::from_column_slice(&y[2 * n..]);
                u.dot(&(w * v))
            }
            Err(_) => f64::NAN,
        }
    };
    let traj = run(
        |_t, y| {
            let x = PhasePoint::new(y[..n].to_vec())?;
            let (vf, jac) = vector_field_jacobian(form, hamiltonian, &x)?;
            let u = DVector::from_column_slice(&y[n..2 * n]);
            let v = DVector::from_column_slice(&y[2 * n..]);
            let mut out = vf;
            out.extend_from_slice((&jac * u).as_slice());
            out.extend_from_slice((&jac * v).as_slice());
            Ok(out)
        },
        y0,
        config,
        |y| guard_form(form, &y[..n]),
        |y| BTreeMap::from([("omega_uv".to_string(), pairing(y))]),
    )?;
    Ok(TransportSeries {
        values: traj.diagnostics.iter().map(|d| d["omega_uv"]).collect(),
        times: traj.times,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{Negated, StandardForm};
    use crate::monopole::{MagneticForm, MonopoleParams};

    fn pt(v: &[f64]) -> PhasePoint {
        PhasePoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn free_particle_velocity() {
        let v = vector_field(&StandardForm::new(3), &HamiltonianField::kinetic(), &pt(&[0.1, 0.2, 0.3, 1.0, -2.0, 0.5]))
            .unwrap();
        assert_eq!(v, vec![1.0, -2.0, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn uniform_field_velocity() {
        let form = MagneticForm::new(MonopoleParams::uniform(0.7));
        let v = vector_field(&form, &HamiltonianField::kinetic(), &pt(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        // ṗ = f p × q
        let want = [0.0, 1.0, 0.0, 0.0, 0.0, -0.7];
        for (a, b) in v.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{v:?}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let form = MagneticForm::new(MonopoleParams::magnetic(1.3));
        let ham = HamiltonianField::harmonic(0.4);
        let x = pt(&[0.7, -0.3, 0.9, 0.2, 0.5, -0.8]);
        let (_, jac) = vector_field_jacobian(&form, &ham, &x).unwrap();
        let h = 1e-6;
        for a in 0..6 {
            let mut xp = x.coords().to_vec();
            let mut xm = x.coords().to_vec();
            xp[a] += h;
            xm[a] -= h;
            let vp = vector_field(&form, &ham, &pt(&xp)).unwrap();
            let vm = vector_field(&form, &ham, &pt(&xm)).unwrap();
            for m in 0..6 {
                assert!((jac[(m, a)] - (vp[m] - vm[m]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn rk4_lands_on_t_end() {
        let traj = integrate(
            &StandardForm::new(1),
            &HamiltonianField::kinetic(),
            &pt(&[0.0, 1.0]),
            &IntegratorConfig::rk4(0.3, 1.0),
        )
        .unwrap();
        assert_eq!(traj.final_time(), Some(1.0));
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!((traj.last_state().unwrap().q()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn guard_stop_and_error() {
        // Straight at the origin: q = (1,0,0) − t(1,0,0) with f = 0 would cross q = 0.
        let form = MagneticForm::new(MonopoleParams::magnetic(0.0).with_delta(0.05));
        let x0 = pt(&[1.0, 0.0, 0.0, -1.0, 0.0, 0.0]);
        let cfg = IntegratorConfig::rk4(0.01, 2.0);
        let err = integrate(&form, &HamiltonianField::kinetic(), &x0, &cfg).unwrap_err();
        let partial = err.partial().unwrap();
        assert!(matches!(err, DynamicsError::SingularEncounter { .. }));
        assert!(partial.final_time().unwrap() > 0.9 && partial.final_time().unwrap() < 1.0);

        let traj = integrate(&form, &HamiltonianField::kinetic(), &x0, &cfg.with_policy(GuardPolicy::Stop)).unwrap();
        assert!(traj.halted.is_some());
        assert_eq!(traj.len(), partial.len());
    }

    #[test]
    fn negated_form_runs_backwards() {
        let form = MagneticForm::new(MonopoleParams::magnetic(1.0));
        let ham = HamiltonianField::kinetic();
        let x0 = pt(&[1.0, 0.2, 0.0, 0.0, 1.0, 0.3]);
        let cfg = IntegratorConfig::rk45(1e-11, 1.5);
        let fwd = integrate(&form, &ham, &x0, &cfg).unwrap();
        let back = integrate(&Negated(form), &ham, fwd.last_state().unwrap(), &cfg).unwrap();
        for (a, b) in back.last_state().unwrap().coords().iter().zip(x0.coords()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn transport_of_equal_vectors_vanishes() {
        let form = MagneticForm::new(MonopoleParams::uniform(1.0));
        let u = [0.3, 0.1, 0.0, 0.0, 1.0, 0.0];
        let s = two_form_transport(
            &form,
            &HamiltonianField::kinetic(),
            &pt(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            &u,
            &u,
            &IntegratorConfig::rk4(0.01, 0.5),
        )
        .unwrap();
        assert!(s.values.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = IntegratorConfig {
            step: 0.0,
            ..IntegratorConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(DynamicsError::InvalidConfig(_))));
        let cfg = IntegratorConfig {
            tol: 0.1,
            ..IntegratorConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
