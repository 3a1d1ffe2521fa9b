//! Coordinate-basis differential geometry of a non-degenerate 2-form.
//!
//! Index conventions: storage indices run `0..2n` in the order
//! `(q¹..qⁿ, p₁..pₙ)`. Derivative indices come last in the raw derivative
//! arrays (`d_omega[[μ, ν, k]] = ∂_k ω_{μν}`). Connection coefficients carry
//! the differentiation index last as well, so that
//!
//! ```text
//! ∇_k a^i     = ∂_k a^i + Γ^i_{qk} a^q
//! ∇_k ω_{μν}  = ∂_k ω_{μν} − Γ^l_{μk} ω_{lν} − Γ^l_{νk} ω_{μl}
//! Γ_{ν,μk}    = ω_{νl} Γ^l_{μk}          (lowering)
//! Γ^l_{μν}    = ω^{lk} Γ_{k,μν}          (raising)
//! ```
//!
//! The connection built here is the unique ω-consistent connection that is
//! antisymmetric in its last two indices,
//! `Γ_{k,μν} = ½(∂_ν ω_{kμ} + ∂_μ ω_{νk} − ∂_k ω_{μν})`. A general consistent
//! connection differs from it by a symmetric part `S_{kμν}`; that freedom is
//! not exposed.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, Array4};

use crate::error::{GeometryError, Result};
use crate::form::{eval_jets, PhasePoint, ScalarField, TwoFormField, VectorField};
use crate::jet::Jet2;
use crate::tensor::{SymmetryKind, TensorBlock, Variance};

use SymmetryKind::{Antisymmetric, Symmetric};
use Variance::{Lower, Upper};

/// A form is treated as singular below this reciprocal condition number.
pub const DEFAULT_RCOND_MIN: f64 = 1e-10;

/// Reciprocal 2-norm condition number `σ_min / σ_max`.
pub fn reciprocal_condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 || !max.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Inverts an antisymmetric matrix, refusing ill-conditioned input. The
/// result is antisymmetrized.
pub fn invert_antisymmetric(m: &DMatrix<f64>, rcond_min: f64) -> Result<DMatrix<f64>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::domain("2-form has non-finite components"));
    }
    let rcond = reciprocal_condition(m);
    if rcond < rcond_min {
        return Err(GeometryError::SingularForm {
            rcond,
            threshold: rcond_min,
        });
    }
    let inv = m.clone().try_inverse().ok_or(GeometryError::SingularForm {
        rcond,
        threshold: rcond_min,
    })?;
    Ok((&inv - inv.transpose()) * 0.5)
}

/// `ω^{μν}(x)`, the inverse of the form at `x`.
pub fn invert_at<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<DMatrix<f64>> {
    let m = crate::form::eval_matrix(form, x)?;
    invert_antisymmetric(&m, DEFAULT_RCOND_MIN)
}

/// Pair of the lowered and raised skew connection.
#[derive(Debug, Clone)]
pub struct Connection {
    /// `Γ_{k,μν}`
    pub lower: TensorBlock,
    /// `Γ^l_{μν}`
    pub upper: TensorBlock,
}

#[derive(Debug, Clone)]
pub struct Curvature {
    /// `R^i_{qkl}`
    pub upper: TensorBlock,
    /// `R_{jqkl} = ω_{ji} R^i_{qkl}`
    pub lower: TensorBlock,
}

/// Residuals of the commutator identity for one vector field.
#[derive(Debug, Clone)]
pub struct CommutatorCheck {
    /// `[∇_k,∇_l]a^i − (−R^i_{qkl}a^q + T^p_{kl} ∇_p a^i)`.
    pub residual: TensorBlock,
    /// The same with the torsion term contracted against `∂_p a^i` instead of
    /// `∇_p a^i`. It differs from `residual` by `T^p_{kl} Γ^i_{qp} a^q` and
    /// does not vanish once the form is not closed.
    pub partial_torsion_residual: TensorBlock,
}

/// The 2-form and its first two derivatives at one point, with everything
/// derived from them.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    dim: usize,
    omega: DMatrix<f64>,
    inverse: DMatrix<f64>,
    /// `[μ, ν, k] = ∂_k ω_{μν}`
    d_omega: Array3<f64>,
    /// `[μ, ν, k, l] = ∂_k ∂_l ω_{μν}`
    dd_omega: Array4<f64>,
    /// `[μ, ν, k] = ∂_k ω^{μν}`
    d_inverse: Array3<f64>,
}

impl LocalGeometry {
    pub fn at<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<Self> {
        Self::with_threshold(form, x, DEFAULT_RCOND_MIN)
    }

    pub fn with_threshold<F: TwoFormField + ?Sized>(
        form: &F,
        x: &PhasePoint,
        rcond_min: f64,
    ) -> Result<Self> {
        let jets = eval_jets(form, x)?;
        let n = form.dim();
        let omega = jets.values();
        let inverse = invert_antisymmetric(&omega, rcond_min)?;
        let mut d_omega = Array3::zeros((n, n, n));
        let mut dd_omega = Array4::zeros((n, n, n, n));
        for a in 0..n {
            for b in 0..n {
                let j = jets.get(a, b);
                if !j.is_finite() {
                    return Err(GeometryError::domain(format!(
                        "derivatives of ω_{{{a}{b}}} are not finite"
                    )));
                }
                for k in 0..n {
                    d_omega[[a, b, k]] = j.d(k);
                    for l in 0..n {
                        dd_omega[[a, b, k, l]] = j.dd(k, l);
                    }
                }
            }
        }
        // ∂_k ω⁻¹ = −ω⁻¹ (∂_k ω) ω⁻¹
        let mut d_inverse = Array3::zeros((n, n, n));
        for k in 0..n {
            let dk = DMatrix::from_fn(n, n, |a, b| d_omega[[a, b, k]]);
            let m = -(&inverse * dk * &inverse);
            for a in 0..n {
                for b in 0..n {
                    d_inverse[[a, b, k]] = m[(a, b)];
                }
            }
        }
        Ok(Self {
            dim: n,
            omega,
            inverse,
            d_omega,
            dd_omega,
            d_inverse,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `ω_{μν}`
    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }

    /// `ω^{μν}`
    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// `∂_k ω_{μν}` as `[μ, ν, k]`.
    pub fn d_omega_raw(&self) -> &Array3<f64> {
        &self.d_omega
    }

    /// `∂_k ∂_l ω_{μν}` as `[μ, ν, k, l]`.
    pub fn dd_omega_raw(&self) -> &Array4<f64> {
        &self.dd_omega
    }

    /// `∂_k ω^{μν}` as `[μ, ν, k]`.
    pub fn d_inverse_raw(&self) -> &Array3<f64> {
        &self.d_inverse
    }

    /// Exterior derivative `(dω)_{kμν} = ∂_k ω_{μν} + ∂_μ ω_{νk} + ∂_ν ω_{kμ}`.
    pub fn exterior_derivative(&self) -> TensorBlock {
        let dw = &self.d_omega;
        TensorBlock::from_fn("dω_{kμν}", &[Lower; 3], self.dim, |i| {
            let (k, m, n) = (i[0], i[1], i[2]);
            dw[[m, n, k]] + dw[[n, k, m]] + dw[[k, m, n]]
        })
        .with_symmetry(0, 1, Antisymmetric)
        .with_symmetry(1, 2, Antisymmetric)
        .with_symmetry(0, 2, Antisymmetric)
    }

    fn lower_connection_raw(&self) -> Array3<f64> {
        let n = self.dim;
        let dw = &self.d_omega;
        Array3::from_shape_fn((n, n, n), |(k, m, v)| {
            0.5 * (dw[[k, m, v]] + dw[[v, k, m]] - dw[[m, v, k]])
        })
    }

    /// `[k, μ, ν, m] = ∂_m Γ_{k,μν}`
    fn d_lower_connection_raw(&self) -> Array4<f64> {
        let n = self.dim;
        let ddw = &self.dd_omega;
        Array4::from_shape_fn((n, n, n, n), |(k, mu, nu, m)| {
            0.5 * (ddw[[k, mu, nu, m]] + ddw[[nu, k, mu, m]] - ddw[[mu, nu, k, m]])
        })
    }

    fn raise_raw(&self, lower: &Array3<f64>) -> Array3<f64> {
        let n = self.dim;
        let wi = &self.inverse;
        Array3::from_shape_fn((n, n, n), |(l, m, v)| {
            (0..n).map(|k| wi[(l, k)] * lower[[k, m, v]]).sum()
        })
    }

    /// `[l, μ, ν, m] = ∂_m Γ^l_{μν}`
    fn d_upper_connection_raw(&self, lower: &Array3<f64>) -> Array4<f64> {
        let n = self.dim;
        let d_lower = self.d_lower_connection_raw();
        let wi = &self.inverse;
        let dwi = &self.d_inverse;
        Array4::from_shape_fn((n, n, n, n), |(l, mu, nu, m)| {
            (0..n)
                .map(|k| dwi[[l, k, m]] * lower[[k, mu, nu]] + wi[(l, k)] * d_lower[[k, mu, nu, m]])
                .sum()
        })
    }

    pub fn connection(&self) -> Connection {
        let lower_raw = self.lower_connection_raw();
        let upper_raw = self.raise_raw(&lower_raw);
        let lower = TensorBlock::from_fn("Γ_{k,μν}", &[Lower; 3], self.dim, |i| {
            lower_raw[[i[0], i[1], i[2]]]
        })
        .with_symmetry(1, 2, Antisymmetric);
        let upper = TensorBlock::from_fn("Γ^l_{μν}", &[Upper, Lower, Lower], self.dim, |i| {
            upper_raw[[i[0], i[1], i[2]]]
        })
        .with_symmetry(1, 2, Antisymmetric);
        Connection { lower, upper }
    }

    fn curvature_upper_raw(&self) -> Array4<f64> {
        let n = self.dim;
        let lower = self.lower_connection_raw();
        let g = self.raise_raw(&lower);
        let dg = self.d_upper_connection_raw(&lower);
        Array4::from_shape_fn((n, n, n, n), |(i, q, k, l)| {
            let mut r = dg[[i, q, k, l]] - dg[[i, q, l, k]];
            for p in 0..n {
                r += g[[i, p, l]] * g[[p, q, k]] - g[[i, p, k]] * g[[p, q, l]];
            }
            r
        })
    }

    /// `R^i_{qkl} = ∂_l Γ^i_{qk} − ∂_k Γ^i_{ql} + Γ^i_{pl}Γ^p_{qk} − Γ^i_{pk}Γ^p_{ql}`
    /// and its lowered form.
    pub fn curvature(&self) -> Curvature {
        let n = self.dim;
        let r = self.curvature_upper_raw();
        let upper = TensorBlock::from_fn("R^i_{qkl}", &[Upper, Lower, Lower, Lower], n, |i| {
            r[[i[0], i[1], i[2], i[3]]]
        })
        .with_symmetry(2, 3, Antisymmetric);
        let w = &self.omega;
        let lower = TensorBlock::from_fn("R_{jqkl}", &[Lower; 4], n, |i| {
            (0..n).map(|a| w[(i[0], a)] * r[[a, i[1], i[2], i[3]]]).sum()
        })
        .with_symmetry(2, 3, Antisymmetric)
        .with_symmetry(0, 1, Symmetric);
        Curvature { upper, lower }
    }

    /// The lowered curvature assembled directly from the lowered connection,
    /// `R_{jqkl} = ∂_l Γ_{j,qk} − ∂_k Γ_{j,ql} + Γ_{i,jl} Γ^i_{qk} − Γ_{i,jk} Γ^i_{ql}`.
    /// Independent of the raising step used by [`LocalGeometry::curvature`].
    pub fn curvature_lower_direct(&self) -> TensorBlock {
        let n = self.dim;
        let lower = self.lower_connection_raw();
        let dl = self.d_lower_connection_raw();
        let up = self.raise_raw(&lower);
        TensorBlock::from_fn("R_{jqkl}", &[Lower; 4], n, |idx| {
            let (j, q, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            let mut r = dl[[j, q, k, l]] - dl[[j, q, l, k]];
            for i in 0..n {
                r += lower[[i, j, l]] * up[[i, q, k]] - lower[[i, j, k]] * up[[i, q, l]];
            }
            r
        })
        .with_symmetry(2, 3, Antisymmetric)
        .with_symmetry(0, 1, Symmetric)
    }

    /// `R_{ql} = R^i_{qil}`
    pub fn ricci(&self) -> TensorBlock {
        let n = self.dim;
        let r = self.curvature_upper_raw();
        TensorBlock::from_fn("R_{ql}", &[Lower, Lower], n, |idx| {
            (0..n).map(|i| r[[i, idx[0], i, idx[1]]]).sum()
        })
    }

    /// `R = ω^{ik} R_{ki}`
    pub fn scalar_curvature(&self) -> f64 {
        let ric = self.ricci();
        let n = self.dim;
        let wi = &self.inverse;
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += wi[(i, k)] * ric[[k, i]];
            }
        }
        s
    }

    /// Diagonal Ricci entry `R_{ll}` written entirely in terms of `ω`, `ω⁻¹`
    /// and their derivatives:
    ///
    /// ```text
    /// 4 R_ll = 2 ω^{rk} ∂_l∂_l ω_{rk} + ∂_l ω^{rk} ∂_l ω_{rk}
    ///        + ω^{kj} ω^{ri} (∂_j ω_{li} − ∂_i ω_{jl}) B_{rk},
    /// B_{rk} = ∂_l ω_{rk} + ∂_k ω_{lr} − ∂_r ω_{kl}        (no sum over l)
    /// ```
    pub fn ricci_diagonal_closed_form(&self, l: usize) -> Result<f64> {
        let n = self.dim;
        if l >= n {
            return Err(GeometryError::shape(
                format!("index below {n}"),
                format!("index {l}"),
            ));
        }
        let wi = &self.inverse;
        let dw = &self.d_omega;
        let ddw = &self.dd_omega;
        let dwi = &self.d_inverse;
        let mut second = 0.0;
        let mut trace_pair = 0.0;
        for r in 0..n {
            for k in 0..n {
                second += wi[(r, k)] * ddw[[r, k, l, l]];
                trace_pair += dwi[[r, k, l]] * dw[[r, k, l]];
            }
        }
        let b = Array2::from_shape_fn((n, n), |(r, k)| {
            dw[[r, k, l]] + dw[[l, r, k]] - dw[[k, l, r]]
        });
        // m[i][k] = ω^{ri} B_{rk}; c[i][j] = m[i][k] ω^{kj}
        let m = Array2::from_shape_fn((n, n), |(i, k)| (0..n).map(|r| wi[(r, i)] * b[[r, k]]).sum::<f64>());
        let c = Array2::from_shape_fn((n, n), |(i, j)| (0..n).map(|k| m[[i, k]] * wi[(k, j)]).sum::<f64>());
        let mut cross = 0.0;
        for i in 0..n {
            for j in 0..n {
                cross += (dw[[l, i, j]] - dw[[j, l, i]]) * c[[i, j]];
            }
        }
        Ok(0.25 * (2.0 * second + trace_pair + cross))
    }

    /// A four-term variant of the diagonal Ricci formula whose second term is
    /// the square of the trace `ω_{rk} ∂_l ω^{rk}` and whose last term is
    /// `∂_r ω^{jk} ∂_j ω^{ri} ω_{li} ω_{lk}`. It does not agree with
    /// [`LocalGeometry::ricci`] for general forms and is kept for comparison
    /// reports only.
    pub fn ricci_diagonal_squared_trace_form(&self, l: usize) -> Result<f64> {
        let n = self.dim;
        if l >= n {
            return Err(GeometryError::shape(
                format!("index below {n}"),
                format!("index {l}"),
            ));
        }
        let (w, wi) = (&self.omega, &self.inverse);
        let dw = &self.d_omega;
        let ddw = &self.dd_omega;
        let dwi = &self.d_inverse;
        let mut t1 = 0.0;
        let mut trace = 0.0;
        let mut t3 = 0.0;
        for r in 0..n {
            for k in 0..n {
                t1 += 2.0 * wi[(r, k)] * ddw[[r, k, l, l]];
                trace += w[(r, k)] * dwi[[r, k, l]];
                t3 += dwi[[r, k, l]] * dw[[l, r, k]];
            }
        }
        let mut t4 = 0.0;
        for r in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for i in 0..n {
                        t4 += dwi[[j, k, r]] * dwi[[r, i, j]] * w[(l, i)] * w[(l, k)];
                    }
                }
            }
        }
        Ok(0.25 * (t1 + trace * trace + t3 - t4))
    }
}

/// Lowers `Γ^l_{μk}` to `Γ_{ν,μk} = ω_{νl} Γ^l_{μk}`.
pub fn lower_connection(upper: &TensorBlock, omega: &DMatrix<f64>) -> Result<TensorBlock> {
    let n = omega.nrows();
    upper.expect_signature(&[Upper, Lower, Lower], n)?;
    Ok(TensorBlock::from_fn("Γ_{k,μν}", &[Lower; 3], n, |i| {
        (0..n).map(|l| omega[(i[0], l)] * upper[[l, i[1], i[2]]]).sum()
    }))
}

/// Raises `Γ_{k,μν}` to `Γ^l_{μν} = ω^{lk} Γ_{k,μν}`.
pub fn raise_connection(lower: &TensorBlock, inverse: &DMatrix<f64>) -> Result<TensorBlock> {
    let n = inverse.nrows();
    lower.expect_signature(&[Lower; 3], n)?;
    Ok(TensorBlock::from_fn("Γ^l_{μν}", &[Upper, Lower, Lower], n, |i| {
        (0..n).map(|k| inverse[(i[0], k)] * lower[[k, i[1], i[2]]]).sum()
    }))
}

/// Bracket value and gradient: `{f,g}` and `∂_α{f,g}`.
fn bracket_with_gradient(geom: &LocalGeometry, f: &Jet2, g: &Jet2) -> (f64, Vec<f64>) {
    let n = geom.dim;
    let wi = &geom.inverse;
    let dwi = &geom.d_inverse;
    let mut value = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            value += f.d(mu) * wi[(mu, nu)] * g.d(nu);
        }
    }
    let grad = (0..n)
        .map(|a| {
            let mut s = 0.0;
            for mu in 0..n {
                for nu in 0..n {
                    s += f.dd(a, mu) * wi[(mu, nu)] * g.d(nu)
                        + f.d(mu) * dwi[[mu, nu, a]] * g.d(nu)
                        + f.d(mu) * wi[(mu, nu)] * g.dd(a, nu);
                }
            }
            s
        })
        .collect();
    (value, grad)
}

fn eval_scalar<S: ScalarField + ?Sized>(field: &S, x: &PhasePoint) -> Result<Jet2> {
    let v = field.eval(&Jet2::seed(x.coords(), true));
    if v.dim() != x.dim() {
        return Err(GeometryError::shape(
            format!("scalar jet of dimension {}", x.dim()),
            format!("dimension {}", v.dim()),
        ));
    }
    Ok(v)
}

/// `{f,g} = ∂_μ f ω^{μν} ∂_ν g`
pub fn poisson_bracket<F, A, B>(form: &F, f: &A, g: &B, x: &PhasePoint) -> Result<f64>
where
    F: TwoFormField + ?Sized,
    A: ScalarField + ?Sized,
    B: ScalarField + ?Sized,
{
    let wi = invert_at(form, x)?;
    let fj = eval_scalar(f, x)?;
    let gj = eval_scalar(g, x)?;
    let n = x.dim();
    let mut s = 0.0;
    for mu in 0..n {
        for nu in 0..n {
            s += fj.d(mu) * wi[(mu, nu)] * gj.d(nu);
        }
    }
    Ok(s)
}

/// `{f,{g,h}} + {g,{h,f}} + {h,{f,g}}`
pub fn jacobi_residual<F, A, B, C>(form: &F, f: &A, g: &B, h: &C, x: &PhasePoint) -> Result<f64>
where
    F: TwoFormField + ?Sized,
    A: ScalarField + ?Sized,
    B: ScalarField + ?Sized,
    C: ScalarField + ?Sized,
{
    let geom = LocalGeometry::at(form, x)?;
    let fj = eval_scalar(f, x)?;
    let gj = eval_scalar(g, x)?;
    let hj = eval_scalar(h, x)?;
    let n = geom.dim;
    let wi = &geom.inverse;
    let outer = |a: &Jet2, inner_grad: &[f64]| -> f64 {
        let mut s = 0.0;
        for mu in 0..n {
            for nu in 0..n {
                s += a.d(mu) * wi[(mu, nu)] * inner_grad[nu];
            }
        }
        s
    };
    let (_, d_gh) = bracket_with_gradient(&geom, &gj, &hj);
    let (_, d_hf) = bracket_with_gradient(&geom, &hj, &fj);
    let (_, d_fg) = bracket_with_gradient(&geom, &fj, &gj);
    Ok(outer(&fj, &d_gh) + outer(&gj, &d_hf) + outer(&hj, &d_fg))
}

/// `(dω)_{kμν}` at `x`.
pub fn d_omega<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<TensorBlock> {
    let jets = eval_jets(form, x)?;
    let n = form.dim();
    Ok(TensorBlock::from_fn("dω_{kμν}", &[Lower; 3], n, |i| {
        let (k, m, v) = (i[0], i[1], i[2]);
        jets.get(m, v).d(k) + jets.get(v, k).d(m) + jets.get(k, m).d(v)
    })
    .with_symmetry(0, 1, Antisymmetric)
    .with_symmetry(1, 2, Antisymmetric)
    .with_symmetry(0, 2, Antisymmetric))
}

/// The skew-symmetric ω-consistent connection at `x`.
pub fn skew_connection<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<Connection> {
    Ok(LocalGeometry::at(form, x)?.connection())
}

/// `∇_k ω_{μν} = ∂_k ω_{μν} − Γ^l_{μk} ω_{lν} − Γ^l_{νk} ω_{μl}`, indexed `[k, μ, ν]`.
///
/// `connection` may be given lowered (`Γ_{k,μν}`, all lower) or raised
/// (`Γ^l_{μν}`).
pub fn nabla_omega_residual<F: TwoFormField + ?Sized>(
    form: &F,
    connection: &TensorBlock,
    x: &PhasePoint,
) -> Result<TensorBlock> {
    let n = form.dim();
    if connection.dim() != n || connection.rank() != 3 {
        return Err(GeometryError::shape(
            format!("rank-3 connection over dim {n}"),
            format!("rank-{} over dim {}", connection.rank(), connection.dim()),
        ));
    }
    let jets = eval_jets(form, x)?;
    let omega = jets.values();
    let upper = match connection.signature() {
        [Upper, Lower, Lower] => connection.clone(),
        [Lower, Lower, Lower] => {
            let inv = invert_antisymmetric(&omega, DEFAULT_RCOND_MIN)?;
            raise_connection(connection, &inv)?
        }
        other => {
            return Err(GeometryError::shape(
                "signature ^__ or ___",
                format!("{other:?}"),
            ))
        }
    };
    Ok(TensorBlock::from_fn("∇_k ω_{μν}", &[Lower; 3], n, |i| {
        let (k, m, v) = (i[0], i[1], i[2]);
        let mut r = jets.get(m, v).d(k);
        for l in 0..n {
            r -= upper[[l, m, k]] * omega[(l, v)] + upper[[l, v, k]] * omega[(m, l)];
        }
        r
    })
    .with_symmetry(1, 2, Antisymmetric))
}

/// Curvature at `x` in both index positions.
pub fn curvature<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<Curvature> {
    Ok(LocalGeometry::at(form, x)?.curvature())
}

/// `T^p_{kl} = Γ^p_{kl} − Γ^p_{lk}`
pub fn torsion(connection: &TensorBlock) -> Result<TensorBlock> {
    let n = connection.dim();
    connection.expect_signature(&[Upper, Lower, Lower], n)?;
    Ok(TensorBlock::from_fn("T^p_{kl}", &[Upper, Lower, Lower], n, |i| {
        connection[[i[0], i[1], i[2]]] - connection[[i[0], i[2], i[1]]]
    })
    .with_symmetry(1, 2, Antisymmetric))
}

/// Cyclic sum of the lowered torsion, `Σ_cyc ω_{kp} T^p_{μν}`, indexed
/// `[k, μ, ν]`. Since `ω_{kp}T^p_{μν} = 2 T_{kμν}` with `T_{kμν}` the
/// antisymmetric part of `Γ_{k,μν}`, this equals `2(T_{kμν} + T_{μνk} + T_{νkμ})`,
/// which for an ω-consistent connection reproduces `dω`.
pub fn lowered_torsion_cyclic_sum(torsion: &TensorBlock, omega: &DMatrix<f64>) -> Result<TensorBlock> {
    let n = omega.nrows();
    torsion.expect_signature(&[Upper, Lower, Lower], n)?;
    let lowered = |k: usize, m: usize, v: usize| -> f64 {
        (0..n).map(|p| omega[(k, p)] * torsion[[p, m, v]]).sum::<f64>()
    };
    Ok(TensorBlock::from_fn("2ΣT_{kμν}", &[Lower; 3], n, |i| {
        let (k, m, v) = (i[0], i[1], i[2]);
        lowered(k, m, v) + lowered(m, v, k) + lowered(v, k, m)
    }))
}

/// Evaluates `[∇_k, ∇_l] a^i` directly and compares it with the curvature and
/// torsion terms.
pub fn commutator_check<F, V>(form: &F, field: &V, x: &PhasePoint) -> Result<CommutatorCheck>
where
    F: TwoFormField + ?Sized,
    V: VectorField + ?Sized,
{
    let geom = LocalGeometry::at(form, x)?;
    let n = geom.dim;
    let a = field.eval(&Jet2::seed(x.coords(), true));
    if a.len() != n || a.iter().any(|c| c.dim() != n) {
        return Err(GeometryError::shape(
            format!("vector field with {n} jet components"),
            format!("{} components", a.len()),
        ));
    }
    let lower = geom.lower_connection_raw();
    let g = geom.raise_raw(&lower);
    let dg = geom.d_upper_connection_raw(&lower);
    let r = geom.curvature_upper_raw();

    // b[i][l] = ∇_l a^i
    let b = Array2::from_shape_fn((n, n), |(i, l)| {
        a[i].d(l) + (0..n).map(|q| g[[i, q, l]] * a[q].value()).sum::<f64>()
    });
    // c[i][k][l] = ∇_k ∇_l a^i
    let c = Array3::from_shape_fn((n, n, n), |(i, k, l)| {
        let mut s = a[i].dd(k, l);
        for q in 0..n {
            s += dg[[i, q, l, k]] * a[q].value() + g[[i, q, l]] * a[q].d(k);
        }
        for p in 0..n {
            s += g[[i, p, k]] * b[[p, l]] - g[[p, l, k]] * b[[i, p]];
        }
        s
    });
    let torsion = |p: usize, k: usize, l: usize| g[[p, k, l]] - g[[p, l, k]];
    let curv_term = |i: usize, k: usize, l: usize| -> f64 {
        -(0..n).map(|q| r[[i, q, k, l]] * a[q].value()).sum::<f64>()
    };
    let residual = TensorBlock::from_fn("[∇,∇]a − rhs", &[Upper, Lower, Lower], n, |idx| {
        let (i, k, l) = (idx[0], idx[1], idx[2]);
        let lhs = c[[i, k, l]] - c[[i, l, k]];
        let rhs = curv_term(i, k, l) + (0..n).map(|p| torsion(p, k, l) * b[[i, p]]).sum::<f64>();
        lhs - rhs
    })
    .with_symmetry(1, 2, Antisymmetric);
    let partial_torsion_residual =
        TensorBlock::from_fn("[∇,∇]a − rhs(∂a)", &[Upper, Lower, Lower], n, |idx| {
            let (i, k, l) = (idx[0], idx[1], idx[2]);
            let lhs = c[[i, k, l]] - c[[i, l, k]];
            let rhs = curv_term(i, k, l) + (0..n).map(|p| torsion(p, k, l) * a[i].d(p)).sum::<f64>();
            lhs - rhs
        })
        .with_symmetry(1, 2, Antisymmetric);
    Ok(CommutatorCheck {
        residual,
        partial_torsion_residual,
    })
}

/// `R_{ql} = R^i_{qil}` at `x`.
pub fn ricci<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<TensorBlock> {
    Ok(LocalGeometry::at(form, x)?.ricci())
}

/// `R = ω^{ik} R_{ki}` at `x`; identically zero for every non-degenerate form.
pub fn scalar_curvature<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<f64> {
    Ok(LocalGeometry::at(form, x)?.scalar_curvature())
}

/// `R_{ll}` through [`LocalGeometry::ricci_diagonal_closed_form`].
pub fn ricci_diagonal_closed_form<F: TwoFormField + ?Sized>(
    form: &F,
    x: &PhasePoint,
    l: usize,
) -> Result<f64> {
    LocalGeometry::at(form, x)?.ricci_diagonal_closed_form(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{ConstantForm, StandardForm};

    fn x(v: &[f64]) -> PhasePoint {
        PhasePoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn standard_inverse_is_block_identity() {
        let wi = invert_at(&StandardForm::new(3), &x(&[0.1; 6])).unwrap();
        for i in 0..3 {
            assert_eq!(wi[(i, 3 + i)], 1.0);
            assert_eq!(wi[(3 + i, i)], -1.0);
        }
        assert_eq!(wi.iter().filter(|v| **v != 0.0).count(), 6);
    }

    #[test]
    fn singular_form_is_rejected() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 2)] = 1.0;
        let form = ConstantForm::new(m);
        let err = invert_at(&form, &x(&[0.0; 4])).unwrap_err();
        assert!(matches!(err, GeometryError::SingularForm { .. }));
    }

    #[test]
    fn canonical_brackets() {
        let form = StandardForm::new(2);
        let pt = x(&[0.3, -0.2, 1.1, 0.7]);
        for i in 0..2 {
            for j in 0..2 {
                let qi = move |v: &[Jet2]| v[i].clone();
                let pj = move |v: &[Jet2]| v[2 + j].clone();
                let b = poisson_bracket(&form, &qi, &pj, &pt).unwrap();
                assert_eq!(b, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn constant_form_is_flat() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 1)] = 2.0;
        m[(2, 3)] = -0.5;
        m[(0, 3)] = 0.3;
        let form = ConstantForm::new(m);
        let g = LocalGeometry::at(&form, &x(&[0.4, 0.1, -0.3, 2.0])).unwrap();
        assert_eq!(g.exterior_derivative().max_abs(), 0.0);
        let conn = g.connection();
        assert_eq!(conn.lower.max_abs(), 0.0);
        assert_eq!(conn.upper.max_abs(), 0.0);
        assert_eq!(g.curvature().upper.max_abs(), 0.0);
        assert_eq!(g.ricci().max_abs(), 0.0);
        assert_eq!(g.scalar_curvature(), 0.0);
        for l in 0..4 {
            assert_eq!(g.ricci_diagonal_closed_form(l).unwrap(), 0.0);
        }
    }

    #[test]
    fn symmetric_connection_has_no_torsion() {
        let t = TensorBlock::from_fn("Γ", &[Upper, Lower, Lower], 2, |i| (i[1] + i[2]) as f64);
        assert_eq!(torsion(&t).unwrap().max_abs(), 0.0);
        let wrong = TensorBlock::zeros("Γ", &[Lower; 3], 2);
        assert!(torsion(&wrong).is_err());
    }

    #[test]
    fn nabla_residual_rejects_bad_shapes() {
        let form = StandardForm::new(1);
        let bad = TensorBlock::zeros("Γ", &[Upper, Upper, Lower], 2);
        assert!(matches!(
            nabla_omega_residual(&form, &bad, &x(&[0.0, 1.0])),
            Err(GeometryError::ShapeMismatch { .. })
        ));
        let wrong_dim = TensorBlock::zeros("Γ", &[Upper, Lower, Lower], 4);
        assert!(nabla_omega_residual(&form, &wrong_dim, &x(&[0.0, 1.0])).is_err());
    }
}
