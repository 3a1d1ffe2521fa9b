//! 2-form families for a charged particle in the field of a magnetic monopole,
//! and closed-form reference expressions for their geometry.
//!
//! Three related forms on R⁶ with `x = (q₁,q₂,q₃, p₁,p₂,p₃)`:
//!
//! * the bivector `ω^{μν} = [[g εᵢⱼₖ pₖ, δ], [−δ, f εᵣₛₖ qₖ]]` and the form
//!   obtained by inverting it numerically ([`BivectorInverseForm`]);
//! * its closed-form inverse ([`MonopoleForm`]),
//!   `ω_{μν} = [[f εᵢⱼₖ qₖ, fg pᵢqₛ − δ], [δ − fg qᵣpⱼ, g εᵣₛₖ pₖ]] / (1 − fg q·p)`;
//! * the `g = 0` specialization `ω = dp∧dq + f εᵢⱼₖ qᵏ dqⁱ∧dqʲ`
//!   ([`MagneticForm`]).
//!
//! With `H = p²/2` all three give `q̇ = p`, `ṗ = f p × q`. For
//! `f = λ|q|⁻³` this is the monopole force law.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::form::{
    eval_matrix, BivectorField, FormComponents, InverseOfBivector, PhasePoint, StandardForm,
    TwoFormField,
};
use crate::jet::Jet2;
use crate::tensor::{TensorBlock, Variance};

/// Default margin around the singular sets.
pub const DEFAULT_DELTA: f64 = 1e-6;

/// Levi-Civita symbol on three indices.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FMode {
    /// `f = α`
    Constant(f64),
    /// `f = λ |q|⁻³`
    Monopole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GMode {
    Zero,
    Constant(f64),
    /// `g = |p|⁻³`
    Monopole,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonopoleParams {
    /// Coupling `λ = e g_e / (m c)`; multiplies `f` in monopole mode.
    pub lambda: f64,
    pub f_mode: FMode,
    pub g_mode: GMode,
    /// Margin around `q = 0`, `p = 0` and `1 − fg q·p = 0`.
    pub delta: f64,
}

impl Default for MonopoleParams {
    fn default() -> Self {
        Self::monopole(1.0)
    }
}

impl MonopoleParams {
    /// `f = λ|q|⁻³`, `g = |p|⁻³`.
    pub fn monopole(lambda: f64) -> Self {
        Self {
            lambda,
            f_mode: FMode::Monopole,
            g_mode: GMode::Monopole,
            delta: DEFAULT_DELTA,
        }
    }

    /// `f = λ|q|⁻³`, `g = 0`.
    pub fn magnetic(lambda: f64) -> Self {
        Self {
            g_mode: GMode::Zero,
            ..Self::monopole(lambda)
        }
    }

    /// `f = α`, `g = 0`.
    pub fn uniform(alpha: f64) -> Self {
        Self {
            lambda: 1.0,
            f_mode: FMode::Constant(alpha),
            g_mode: GMode::Zero,
            delta: DEFAULT_DELTA,
        }
    }

    /// `f = g = 0`.
    pub fn free() -> Self {
        Self {
            lambda: 1.0,
            f_mode: FMode::Constant(0.0),
            g_mode: GMode::Zero,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn with_g(mut self, g_mode: GMode) -> Self {
        self.g_mode = g_mode;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// `f(q)` as a jet.
    pub fn f_jet(&self, q: &[Jet2]) -> Jet2 {
        match self.f_mode {
            FMode::Constant(a) => q[0].constant_like(a),
            FMode::Monopole => &norm_sq(q).powf(-1.5) * self.lambda,
        }
    }

    /// `g(p)` as a jet.
    pub fn g_jet(&self, p: &[Jet2]) -> Jet2 {
        match self.g_mode {
            GMode::Zero => p[0].constant_like(0.0),
            GMode::Constant(b) => p[0].constant_like(b),
            GMode::Monopole => norm_sq(p).powf(-1.5),
        }
    }

    pub fn f_value(&self, q: &[f64]) -> f64 {
        match self.f_mode {
            FMode::Constant(a) => a,
            FMode::Monopole => self.lambda * dot(q, q).powf(-1.5),
        }
    }

    pub fn g_value(&self, p: &[f64]) -> f64 {
        match self.g_mode {
            GMode::Zero => 0.0,
            GMode::Constant(b) => b,
            GMode::Monopole => dot(p, p).powf(-1.5),
        }
    }
}

fn norm_sq(v: &[Jet2]) -> Jet2 {
    let mut acc = &v[0] * &v[0];
    for c in &v[1..] {
        acc += &(c * c);
    }
    acc
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Where a point sits relative to the singular sets of the monopole forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityReport {
    pub near_q_origin: bool,
    pub near_p_origin: bool,
    /// `1 − f g q·p`; NaN when `f` or `g` cannot be evaluated.
    pub denom_value: f64,
    pub admissible: bool,
}

/// Flags `|q| < δ`, `|p| < δ` and `|1 − fg q·p| < δ`. Only the guards that
/// matter for the selected modes decide admissibility.
pub fn singularity_guard(params: &MonopoleParams, x: &PhasePoint) -> SingularityReport {
    let (q, p) = (x.q(), x.p());
    let delta = params.delta;
    let near_q_origin = dot(q, q).sqrt() < delta;
    let near_p_origin = dot(p, p).sqrt() < delta;
    let q_matters = params.f_mode == FMode::Monopole;
    let p_matters = params.g_mode == GMode::Monopole;
    let f_ok = !(q_matters && near_q_origin);
    let g_ok = !(p_matters && near_p_origin);
    let denom_value = if f_ok && g_ok {
        1.0 - params.f_value(q) * params.g_value(p) * dot(q, p)
    } else {
        f64::NAN
    };
    let admissible = f_ok && g_ok && denom_value.is_finite() && denom_value.abs() >= delta;
    SingularityReport {
        near_q_origin,
        near_p_origin,
        denom_value,
        admissible,
    }
}

fn guard(params: &MonopoleParams, x: &PhasePoint) -> Result<()> {
    if x.dim() != 6 {
        return Err(GeometryError::shape("a point of R⁶", format!("dimension {}", x.dim())));
    }
    let report = singularity_guard(params, x);
    if report.admissible {
        Ok(())
    } else {
        let mut why = Vec::new();
        if report.near_q_origin {
            why.push("|q| below margin");
        }
        if report.near_p_origin {
            why.push("|p| below margin");
        }
        if report.denom_value.is_finite() && report.denom_value.abs() < params.delta {
            why.push("1 − fg q·p below margin");
        }
        Err(GeometryError::DomainViolation {
            reason: if why.is_empty() {
                "singular set".into()
            } else {
                why.join(", ")
            },
            report: Some(Box::new(report)),
        })
    }
}

/// The bivector `ω^{μν}` whose inverse is the monopole form.
#[derive(Debug, Clone, Copy)]
pub struct MonopoleBivector {
    pub params: MonopoleParams,
}

impl BivectorField for MonopoleBivector {
    fn dim(&self) -> usize {
        6
    }

    fn name(&self) -> String {
        "monopole bivector".into()
    }

    fn components(&self, x: &[Jet2]) -> Vec<Jet2> {
        let jd = x[0].dim();
        let (q, p) = (&x[..3], &x[3..]);
        let f = self.params.f_jet(q);
        let g = self.params.g_jet(p);
        let mut m = vec![Jet2::constant(0.0, jd); 36];
        for i in 0..3 {
            m[i * 6 + 3 + i] = Jet2::constant(1.0, jd);
            m[(3 + i) * 6 + i] = Jet2::constant(-1.0, jd);
            for j in 0..3 {
                let mut gp = Jet2::constant(0.0, jd);
                let mut fq = Jet2::constant(0.0, jd);
                for k in 0..3 {
                    let e = levi_civita(i, j, k);
                    if e != 0.0 {
                        gp += &(&p[k] * e);
                        fq += &(&q[k] * e);
                    }
                }
                m[i * 6 + j] = &g * &gp;
                m[(3 + i) * 6 + 3 + j] = &f * &fq;
            }
        }
        m
    }

    fn check_domain(&self, x: &PhasePoint) -> Result<()> {
        guard(&self.params, x)
    }
}

/// The monopole 2-form defined as the pointwise inverse of [`MonopoleBivector`].
pub type BivectorInverseForm = InverseOfBivector<MonopoleBivector>;

pub fn bivector_inverse_form(params: MonopoleParams) -> BivectorInverseForm {
    InverseOfBivector::new(MonopoleBivector { params })
}

/// Closed-form inverse of the monopole bivector.
#[derive(Debug, Clone, Copy)]
pub struct MonopoleForm {
    pub params: MonopoleParams,
}

impl TwoFormField for MonopoleForm {
    fn dim(&self) -> usize {
        6
    }

    fn name(&self) -> String {
        "monopole form".into()
    }

    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        let (q, p) = (&x[..3], &x[3..]);
        let f = self.params.f_jet(q);
        let g = self.params.g_jet(p);
        let fg = &f * &g;
        let mut qp = &q[0] * &p[0];
        for k in 1..3 {
            qp += &(&q[k] * &p[k]);
        }
        let inv_d = (1.0 - &(&fg * &qp)).recip();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let k = 3 - i - j;
                let e = levi_civita(i, j, k);
                out.set(i, j, &(&(&f * &q[k]) * e) * &inv_d);
                out.set(3 + i, 3 + j, &(&(&g * &p[k]) * e) * &inv_d);
            }
            for s in 0..3 {
                let mut v = &(&fg * &p[i]) * &q[s];
                if i == s {
                    v = &v - 1.0;
                }
                out.set(i, 3 + s, &v * &inv_d);
            }
        }
    }

    fn check_domain(&self, x: &PhasePoint) -> Result<()> {
        guard(&self.params, x)
    }
}

/// `ω = dpᵢ∧dqⁱ + f εᵢⱼₖ qᵏ dqⁱ∧dqʲ`: the `g = 0` member, built directly.
/// The `g_mode` of the parameters is ignored.
#[derive(Debug, Clone, Copy)]
pub struct MagneticForm {
    pub params: MonopoleParams,
}

impl MagneticForm {
    pub fn new(params: MonopoleParams) -> Self {
        Self {
            params: params.with_g(GMode::Zero),
        }
    }
}

impl TwoFormField for MagneticForm {
    fn dim(&self) -> usize {
        6
    }

    fn name(&self) -> String {
        "magnetic form".into()
    }

    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        let q = &x[..3];
        let f = self.params.f_jet(q);
        let jd = x[0].dim();
        for (i, j, k) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
            out.set(i, j, &(&f * &q[k]) * levi_civita(i, j, k));
        }
        for i in 0..3 {
            out.set(i, 3 + i, Jet2::constant(-1.0, jd));
        }
    }

    fn check_domain(&self, x: &PhasePoint) -> Result<()> {
        guard(&self.params.with_g(GMode::Zero), x)
    }
}

/// `ω^{μν}` of the monopole bivector at `x`.
pub fn bivector_matrix(params: &MonopoleParams, x: &PhasePoint) -> Result<DMatrix<f64>> {
    let biv = MonopoleBivector { params: *params };
    biv.check_domain(x)?;
    let m = biv.components(&Jet2::seed(x.coords(), false));
    Ok(DMatrix::from_fn(6, 6, |i, j| m[i * 6 + j].value()))
}

/// `ω_{μν}` of the closed-form monopole form at `x`.
pub fn monopole_form_matrix(params: &MonopoleParams, x: &PhasePoint) -> Result<DMatrix<f64>> {
    eval_matrix(&MonopoleForm { params: *params }, x)
}

/// `ω_{μν}` of the `g = 0` magnetic form at `x`.
pub fn magnetic_form_matrix(params: &MonopoleParams, x: &PhasePoint) -> Result<DMatrix<f64>> {
    eval_matrix(&MagneticForm::new(*params), x)
}

/// Model names accepted on the command line.
pub const MODEL_NAMES: [&str; 4] = ["standard", "form4", "form6", "form7"];

/// Builds a named model. `n` is only used by `"standard"`.
pub fn model_form(name: &str, params: MonopoleParams, n: usize) -> Option<Arc<dyn TwoFormField>> {
    match name {
        "standard" => Some(Arc::new(StandardForm::new(n))),
        "form4" => Some(Arc::new(bivector_inverse_form(params))),
        "form6" => Some(Arc::new(MonopoleForm { params })),
        "form7" => Some(Arc::new(MagneticForm::new(params))),
        _ => None,
    }
}

fn require_q(q: &[f64], delta: f64) -> Result<f64> {
    if q.len() != 3 {
        return Err(GeometryError::shape("three coordinates", format!("{}", q.len())));
    }
    let r2 = dot(q, q);
    if r2.sqrt() < delta || !r2.is_finite() {
        return Err(GeometryError::domain("|q| below margin"));
    }
    Ok(r2)
}

/// Closed-form connection `Γ_{i,jk}` (i, j, k over the three positions) of
/// the magnetic form with `f = λ|q|⁻³`:
///
/// ```text
/// Γ_{i,jk} = λ [εᵢⱼₖ(2qᵢ² − qⱼ² − qₖ²) + δᵢⱼ Σᵣ εᵣᵢₖ qᵣ qᵢ] / |q|⁵
/// ```
///
/// with no summation over repeated free indices. The expression is stated for
/// `k ≠ i`; entries with `k = i` are filled by antisymmetry in `(j, k)`.
/// Every other component of the lowered connection vanishes and
/// `Γ^{i+3}_{jk} = −Γ_{i,jk}`.
pub fn closed_form_connection(q: &[f64], lambda: f64, delta: f64) -> Result<TensorBlock> {
    let r2 = require_q(q, delta)?;
    let denom = r2.powf(2.5);
    let raw = |i: usize, j: usize, k: usize| -> f64 {
        let mut v = levi_civita(i, j, k) * (2.0 * q[i] * q[i] - q[j] * q[j] - q[k] * q[k]);
        if i == j {
            v += (0..3).map(|r| levi_civita(r, i, k) * q[r] * q[i]).sum::<f64>();
        }
        lambda * v / denom
    };
    Ok(TensorBlock::from_fn("Γ_{i,jk}", &[Variance::Lower; 3], 3, |idx| {
        let (i, j, k) = (idx[0], idx[1], idx[2]);
        if j == k {
            0.0
        } else if k == i {
            -raw(i, k, j)
        } else {
            raw(i, j, k)
        }
    }))
}

/// Embeds a 3-index position-block connection `Γ_{i,jk}` into the full
/// lowered (`Γ_{k,μν}`) and raised (`Γ^l_{μν}`) connections on R⁶.
pub fn embed_position_connection(block: &TensorBlock) -> (TensorBlock, TensorBlock) {
    let lower = TensorBlock::from_fn("Γ_{k,μν}", &[Variance::Lower; 3], 6, |i| {
        if i.iter().all(|&a| a < 3) {
            block[[i[0], i[1], i[2]]]
        } else {
            0.0
        }
    });
    let upper = TensorBlock::from_fn(
        "Γ^l_{μν}",
        &[Variance::Upper, Variance::Lower, Variance::Lower],
        6,
        |i| {
            if i[0] >= 3 && i[1] < 3 && i[2] < 3 {
                -block[[i[0] - 3, i[1], i[2]]]
            } else {
                0.0
            }
        },
    );
    (lower, upper)
}

/// Closed-form curvature `R^{i+3}_{skl}` (all of i, s, k, l over positions)
/// of the magnetic form with `f = λ|q|⁻³`, indexed `[i, s, k, l]`:
///
/// ```text
/// |q|⁷ R^{i+3}_{skl} / λ =
///     15 [δᵢₗδₛₖ]_{i↔s} εₗₖᵣ qᵣ qₗ qₖ
///   + 3 δᵢₛ εₛₖₗ qₛ (−2qₛ² + 3qₖ² + 3qₗ²)
///   + 3 εᵣₗₖ qᵣ [δᵢₛ δₛₖ (4qₛ² − qᵣ² − qₗ²)]_{l↔k}
///   + 3 [εᵢₗₖ (δₛₖ + δₛₗ) qₛ (4qᵢ² − qₗ² − qₖ²)]_{i↔s}
/// ```
///
/// where `[a]_{i↔s}` adds the term with `i` and `s` exchanged and `r` is
/// summed. All components with a momentum index below vanish.
pub fn closed_form_curvature(q: &[f64], lambda: f64, delta: f64) -> Result<TensorBlock> {
    let r2 = require_q(q, delta)?;
    let scale = lambda * r2.powf(-3.5);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let e = levi_civita;
    Ok(TensorBlock::from_fn(
        "R^{i+3}_{skl}",
        &[Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower],
        3,
        |idx| {
            let (i, s, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut v = 0.0;
            for r in 0..3 {
                v += 15.0 * (d(i, l) * d(s, k) + d(s, l) * d(i, k)) * e(l, k, r) * q[r] * q[l] * q[k];
                v += 3.0
                    * e(r, l, k)
                    * q[r]
                    * (d(i, s) * d(s, k) * (4.0 * q[s] * q[s] - q[r] * q[r] - q[l] * q[l])
                        + d(i, s) * d(s, l) * (4.0 * q[s] * q[s] - q[r] * q[r] - q[k] * q[k]));
            }
            v += 3.0
                * d(i, s)
                * e(s, k, l)
                * q[s]
                * (-2.0 * q[s] * q[s] + 3.0 * q[k] * q[k] + 3.0 * q[l] * q[l]);
            v += 3.0
                * (e(i, l, k) * (d(s, k) + d(s, l)) * q[s] * (4.0 * q[i] * q[i] - q[l] * q[l] - q[k] * q[k])
                    + e(s, l, k) * (d(i, k) + d(i, l)) * q[i] * (4.0 * q[s] * q[s] - q[l] * q[l] - q[k] * q[k]));
            v * scale
        },
    ))
}

/// Embeds `R^{i+3}_{skl}` into the full `R^a_{bcd}` on R⁶.
pub fn embed_position_curvature(block: &TensorBlock) -> TensorBlock {
    TensorBlock::from_fn(
        "R^i_{qkl}",
        &[Variance::Upper, Variance::Lower, Variance::Lower, Variance::Lower],
        6,
        |i| {
            if i[0] >= 3 && i[1] < 3 && i[2] < 3 && i[3] < 3 {
                block[[i[0] - 3, i[1], i[2], i[3]]]
            } else {
                0.0
            }
        },
    )
}

/// `f, ∂_{q₁}f, ∂²_{q₁}f, g, ∂_{p₂}g, ∂_{p₃}g` at `x`.
struct MonopoleScalars {
    f: f64,
    f1: f64,
    f11: f64,
    g: f64,
    g2: f64,
    g3: f64,
}

fn monopole_scalars(params: &MonopoleParams, x: &PhasePoint) -> Result<MonopoleScalars> {
    guard(params, x)?;
    let jets = Jet2::seed(x.coords(), true);
    let f = params.f_jet(&jets[..3]);
    let g = params.g_jet(&jets[3..]);
    Ok(MonopoleScalars {
        f: f.value(),
        f1: f.d(0),
        f11: f.dd(0, 0),
        g: g.value(),
        g2: g.d(4),
        g3: g.d(5),
    })
}

/// Closed-form `R_{1112}` (first position index thrice, then the second) of
/// the monopole form:
///
/// ```text
/// q₃ (∂²f·D + 2(∂f)² g s + 3 ∂f f g p₁ + f³g²p₁²) / D³,   s = q·p, D = 1 − fgs,
/// ```
///
/// with `∂ = ∂_{q₁}`.
pub fn closed_form_r1112(params: &MonopoleParams, x: &PhasePoint) -> Result<f64> {
    let MonopoleScalars { f, f1, f11, g, .. } = monopole_scalars(params, x)?;
    let (q, p) = (x.q(), x.p());
    let s = dot(q, p);
    let d = 1.0 - f * g * s;
    Ok(q[2] * (f11 * d + 2.0 * f1 * f1 * g * s + 3.0 * f1 * f * g * p[0] + f.powi(3) * g * g * p[0] * p[0])
        / d.powi(3))
}

/// Closed-form first diagonal Ricci entry `R₁₁` of the monopole form:
///
/// ```text
/// R₁₁ = −g ∂²f s / D − g (∂f (∂f g s² + 2p₁) + f²g p₁²) / D²
///     + f (q₂∂_{p₃}g − q₃∂_{p₂}g)(∂f (p₁q₁ − p₂q₂ − p₃q₃) − f p₁(1 + 2fg(p₂q₂ + p₃q₃))) / (4D²)
/// ```
pub fn closed_form_ricci_11(params: &MonopoleParams, x: &PhasePoint) -> Result<f64> {
    let MonopoleScalars {
        f,
        f1,
        f11,
        g,
        g2,
        g3,
    } = monopole_scalars(params, x)?;
    let (q, p) = (x.q(), x.p());
    let s = dot(q, p);
    let d = 1.0 - f * g * s;
    let t1 = -g * f11 * s / d;
    let t2 = -g * (f1 * (f1 * g * s * s + 2.0 * p[0]) + f * f * g * p[0] * p[0]) / (d * d);
    let cross = p[1] * q[1] + p[2] * q[2];
    let t3 = f
        * (q[1] * g3 - q[2] * g2)
        * (f1 * (p[0] * q[0] - p[1] * q[1] - p[2] * q[2]) - f * p[0] * (1.0 + 2.0 * f * g * cross))
        / (4.0 * d * d);
    Ok(t1 + t2 + t3)
}

/// `R₁₁` on the slice `q₁ = q₃ = p₁ = p₃ = 0`, in the reduced form
/// `3 / (q₂² (1 − q₂² p₂²))`.
pub fn ricci_11_on_slice(q2: f64, p2: f64) -> f64 {
    3.0 / (q2 * q2 * (1.0 - q2 * q2 * p2 * p2))
}
