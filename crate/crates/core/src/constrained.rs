//! Monopole motion as a constrained system on the standard symplectic R¹².
//!
//! Coordinates are `(q₁..q₆, p₁..p₆)`; the physical particle is
//! `(q₁..q₃, p₁..p₃)` and the auxiliary copy is `(q₄..q₆, p₄..p₆)`.
//!
//! * Variant A: `H = f εᵢⱼₖ pⱼ qₖ qᵢ₊₃ + ½(pᵢpᵢ − pᵢ₊₃pᵢ₊₃)` with
//!   `φᵢ = pᵢ + pᵢ₊₃`, `φᵢ₊₃ = qᵢ − qᵢ₊₃`.
//! * Variant B: `H̃ = f εᵢⱼₖ pⱼ qₖ qᵢ₊₃ + ½(pᵢpᵢ + pᵢ₊₃pᵢ₊₃)` with
//!   `φ̃ᵢ = pᵢ + pᵢ₊₃`, `φ̃ᵢ₊₃ = qᵢ² − qᵢ₊₃²`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, run, vector_field, DynamicsError, HamiltonianField, Halt, IntegratorConfig, Trajectory};
use crate::error::{GeometryError, Result};
use crate::form::{PhasePoint, StandardForm};
use crate::geometry::poisson_bracket;
use crate::jet::Jet2;
use crate::monopole::{levi_civita, singularity_guard, GMode, MagneticForm, MonopoleParams};

/// Indices of the physical coordinates `(q₁..q₃, p₁..p₃)` in a 12-state.
pub const PHYSICAL: [usize; 6] = [0, 1, 2, 6, 7, 8];

/// Residual accepted for initial data on the constraint surface.
pub const SURFACE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

/// Which solution of `qᵢ² = qᵢ₊₃²` the auxiliary positions take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `qᵢ₊₃ = qᵢ`
    Same,
    /// `qᵢ₊₃ = −qᵢ`
    Mirror,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedSystem {
    pub variant: Variant,
    /// Only `lambda`, `f_mode` and `delta` are used.
    pub params: MonopoleParams,
    /// Largest constraint residual tolerated during integration.
    pub drift_limit: f64,
}

impl ConstrainedSystem {
    pub fn new(variant: Variant, params: MonopoleParams) -> Self {
        Self {
            variant,
            params: params.with_g(GMode::Zero),
            drift_limit: 1e-6,
        }
    }

    /// `f64::INFINITY` disables the drift check.
    pub fn with_drift_limit(mut self, limit: f64) -> Self {
        self.drift_limit = limit;
        self
    }

    pub fn hamiltonian_jet(&self, x: &[Jet2]) -> Jet2 {
        let (q, qa, p, pa) = (&x[0..3], &x[3..6], &x[6..9], &x[9..12]);
        let f = self.params.f_jet(q);
        let mut coupling = x[0].constant_like(0.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e != 0.0 {
                        coupling += &(&(&(&p[j] * &q[k]) * &qa[i]) * e);
                    }
                }
            }
        }
        let mut kinetic = x[0].constant_like(0.0);
        let aux_sign = match self.variant {
            Variant::A => -1.0,
            Variant::B => 1.0,
        };
        for i in 0..3 {
            kinetic += &(&p[i] * &p[i]);
            kinetic += &(&(&pa[i] * &pa[i]) * aux_sign);
        }
        &(&f * &coupling) + &(&kinetic * 0.5)
    }

    pub fn constraint_jets(&self, x: &[Jet2]) -> Vec<Jet2> {
        let (q, qa, p, pa) = (&x[0..3], &x[3..6], &x[6..9], &x[9..12]);
        let mut out: Vec<Jet2> = (0..3).map(|i| &p[i] + &pa[i]).collect();
        for i in 0..3 {
            out.push(match self.variant {
                Variant::A => &q[i] - &qa[i],
                Variant::B => &(&q[i] * &q[i]) - &(&qa[i] * &qa[i]),
            });
        }
        out
    }

    pub fn hamiltonian(&self) -> HamiltonianField {
        let sys = *self;
        HamiltonianField::new(format!("constrained {:?}", self.variant), move |x: &[Jet2]| sys.hamiltonian_jet(x))
    }
}

fn check12(x12: &[f64]) -> Result<()> {
    if x12.len() != 12 {
        return Err(GeometryError::shape("a state of length 12", format!("{}", x12.len())));
    }
    Ok(())
}

pub fn hamiltonian_eval(sys: &ConstrainedSystem, x12: &[f64]) -> Result<f64> {
    check12(x12)?;
    Ok(sys.hamiltonian_jet(&Jet2::seed(x12, false)).value())
}

pub fn constraints_eval(sys: &ConstrainedSystem, x12: &[f64]) -> Result<[f64; 6]> {
    check12(x12)?;
    let c = sys.constraint_jets(&Jet2::seed(x12, false));
    Ok(std::array::from_fn(|i| c[i].value()))
}

fn max_residual(sys: &ConstrainedSystem, x12: &[f64]) -> f64 {
    constraints_eval(sys, x12)
        .map(|c| c.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .unwrap_or(f64::INFINITY)
}

/// Brackets `{φ_r, φ_s}` and `{φ_r, H}` under the standard form on R¹².
#[derive(Debug, Clone, PartialEq)]
pub struct FirstClassReport {
    pub constraint_brackets: DMatrix<f64>,
    pub hamiltonian_brackets: [f64; 6],
}

impl FirstClassReport {
    pub fn max_constraint_bracket(&self) -> f64 {
        self.constraint_brackets.amax()
    }

    pub fn max_hamiltonian_bracket(&self) -> f64 {
        self.hamiltonian_brackets.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn first_class_check(sys: &ConstrainedSystem, x12: &[f64]) -> Result<FirstClassReport> {
    check12(x12)?;
    let x = PhasePoint::new(x12.to_vec())?;
    let form = StandardForm::new(6);
    let phi = |r: usize| move |y: &[Jet2]| sys.constraint_jets(y).swap_remove(r);
    let ham = |y: &[Jet2]| sys.hamiltonian_jet(y);
    let mut brackets = DMatrix::zeros(6, 6);
    let mut with_h = [0.0; 6];
    for r in 0..6 {
        for s in 0..6 {
            brackets[(r, s)] = poisson_bracket(&form, &phi(r), &phi(s), &x)?;
        }
        with_h[r] = poisson_bracket(&form, &phi(r), &ham, &x)?;
    }
    Ok(FirstClassReport {
        constraint_brackets: brackets,
        hamiltonian_brackets: with_h,
    })
}

/// Lifts physical `(q, p)` to the constraint surface:
/// `pᵢ₊₃ = −pᵢ` and `qᵢ₊₃ = ±qᵢ` per `branch`. Variant A only has the
/// `Same` branch.
pub fn on_surface_state(variant: Variant, q: &[f64], p: &[f64], branch: Branch) -> Result<PhasePoint> {
    if q.len() != 3 || p.len() != 3 {
        return Err(GeometryError::shape("q and p of length 3", format!("{} and {}", q.len(), p.len())));
    }
    if variant == Variant::A && branch == Branch::Mirror {
        return Err(GeometryError::domain("variant A has no mirrored branch"));
    }
    let s = match branch {
        Branch::Same => 1.0,
        Branch::Mirror => -1.0,
    };
    let mut x = q.to_vec();
    x.extend(q.iter().map(|v| s * v));
    x.extend_from_slice(p);
    x.extend(p.iter().map(|v| -v));
    PhasePoint::new(x)
}

/// Full 12-dimensional run and its physical projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedRun {
    pub full: Trajectory,
    pub physical: Trajectory,
}

impl ConstrainedRun {
    pub fn max_constraint_residual(&self) -> f64 {
        self.full.max_abs_diagnostic("constraint_residual")
    }
}

/// Integrates with the standard form on R¹², monitoring the constraints.
/// Diagnostics: `energy` (the constrained Hamiltonian) and
/// `constraint_residual` (max-norm of the six constraints).
pub fn integrate_constrained(
    sys: &ConstrainedSystem,
    x12_0: &PhasePoint,
    config: &IntegratorConfig,
) -> std::result::Result<ConstrainedRun, DynamicsError> {
    check12(x12_0.coords())?;
    let start = max_residual(sys, x12_0.coords());
    if start > SURFACE_TOLERANCE {
        return Err(DynamicsError::ConstraintDrift {
            t: 0.0,
            residual: start,
            limit: SURFACE_TOLERANCE,
            partial: Box::new(Trajectory::empty()),
        });
    }
    let form = StandardForm::new(6);
    let ham = sys.hamiltonian();
    let params = sys.params;
    let full = run(
        |_t, y| vector_field(&form, &ham, &PhasePoint::new(y.to_vec())?),
        x12_0.coords().to_vec(),
        config,
        |y| {
            let phys = PhasePoint::from_qp(&y[0..3], &y[6..9])?;
            let report = singularity_guard(&params, &phys);
            if !report.admissible {
                return Err(Halt::Singular {
                    reason: "physical position within the margin of q = 0".into(),
                    report: Some(Box::new(report)),
                });
            }
            let residual = max_residual(sys, y);
            if residual > sys.drift_limit {
                return Err(Halt::Drift {
                    residual,
                    limit: sys.drift_limit,
                });
            }
            Ok(())
        },
        |y| {
            BTreeMap::from([
                ("energy".to_string(), ham.value(y)),
                ("constraint_residual".to_string(), max_residual(sys, y)),
            ])
        },
    )?;
    Ok(ConstrainedRun {
        physical: full.project(&PHYSICAL),
        full,
    })
}

/// A constrained run set against the magnetic-form flow from the same
/// physical `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub variant: Variant,
    pub branch: Branch,
    /// Largest coordinate difference over the shared sample times, or at the
    /// final time when the two runs chose different steps.
    pub max_divergence: f64,
    pub final_divergence: f64,
    pub max_constraint_residual: f64,
}

pub fn compare_with_magnetic_flow(
    sys: &ConstrainedSystem,
    q: &[f64],
    p: &[f64],
    branch: Branch,
    config: &IntegratorConfig,
) -> std::result::Result<Comparison, DynamicsError> {
    let x12 = on_surface_state(sys.variant, q, p, branch)?;
    let constrained = integrate_constrained(sys, &x12, config)?;
    let direct = integrate(
        &MagneticForm::new(sys.params),
        &HamiltonianField::kinetic(),
        &PhasePoint::from_qp(q, p)?,
        config,
    )?;
    let diff = |a: &PhasePoint, b: &PhasePoint| {
        a.coords().iter().zip(b.coords()).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    };
    let (Some(last_a), Some(last_b)) = (direct.last_state(), constrained.physical.last_state()) else {
        return Err(DynamicsError::InvalidConfig("empty trajectory".into()));
    };
    let final_divergence = diff(last_a, last_b);
    let max_divergence = if direct.times == constrained.physical.times {
        direct
            .states
            .iter()
            .zip(&constrained.physical.states)
            .fold(0.0_f64, |m, (a, b)| m.max(diff(a, b)))
    } else {
        final_divergence
    };
    Ok(Comparison {
        variant: sys.variant,
        branch,
        max_divergence,
        final_divergence,
        max_constraint_residual: constrained.max_constraint_residual(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonian_examples() {
        let free = ConstrainedSystem::new(Variant::A, MonopoleParams::uniform(0.0));
        let mut x = [0.0; 12];
        x[6] = 1.0;
        assert_eq!(hamiltonian_eval(&free, &x).unwrap(), 0.5);

        let sys_a = ConstrainedSystem::new(Variant::A, MonopoleParams::magnetic(1.0));
        let sys_b = ConstrainedSystem::new(Variant::B, MonopoleParams::magnetic(1.0));
        let (q, p) = ([0.3, -0.8, 1.1], [0.5, 0.2, -0.4]);
        let xa = on_surface_state(Variant::A, &q, &p, Branch::Same).unwrap();
        assert!(hamiltonian_eval(&sys_a, xa.coords()).unwrap().abs() < 1e-15);
        for branch in [Branch::Same, Branch::Mirror] {
            let xb = on_surface_state(Variant::B, &q, &p, branch).unwrap();
            let h = hamiltonian_eval(&sys_b, xb.coords()).unwrap();
            let p2: f64 = p.iter().map(|v| v * v).sum();
            assert!((h - p2).abs() < 1e-14);
            assert!(constraints_eval(&sys_b, xb.coords()).unwrap().iter().all(|c| c.abs() < 1e-15));
        }
    }

    #[test]
    fn variant_a_constraint_brackets_vanish_everywhere() {
        let sys = ConstrainedSystem::new(Variant::A, MonopoleParams::magnetic(1.0));
        let x: Vec<f64> = (0..12).map(|i| 0.3 + 0.17 * i as f64).collect();
        let rep = first_class_check(&sys, &x).unwrap();
        assert_eq!(rep.max_constraint_bracket(), 0.0);
    }

    #[test]
    fn off_surface_start_rejected() {
        let sys = ConstrainedSystem::new(Variant::A, MonopoleParams::magnetic(1.0));
        let x = PhasePoint::new((0..12).map(|i| 0.3 + 0.17 * i as f64).collect()).unwrap();
        let err = integrate_constrained(&sys, &x, &IntegratorConfig::rk4(0.01, 0.1)).unwrap_err();
        assert!(matches!(err, DynamicsError::ConstraintDrift { .. }));
    }

    #[test]
    fn free_constrained_motion_is_straight() {
        let sys = ConstrainedSystem::new(Variant::A, MonopoleParams::uniform(0.0));
        let x0 = on_surface_state(Variant::A, &[0.1, 0.0, 0.0], &[1.0, 2.0, 0.0], Branch::Same).unwrap();
        let run = integrate_constrained(&sys, &x0, &IntegratorConfig::rk4(0.1, 1.0)).unwrap();
        let last = run.physical.last_state().unwrap();
        assert!((last.q()[0] - 1.1).abs() < 1e-13);
        assert!((last.q()[1] - 2.0).abs() < 1e-13);
        assert!(run.max_constraint_residual() < 1e-13);
    }
}
