//! Phase points, 2-form fields and the scalar/vector fields they act on.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{GeometryError, Result};
use crate::jet::Jet2;

/// A point of R^{2n} ordered as `(q¹..qⁿ, p₁..pₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    coords: Vec<f64>,
}

impl PhasePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(GeometryError::shape(
                "an even, non-zero number of coordinates",
                format!("{} coordinates", coords.len()),
            ));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GeometryError::domain(format!("coordinate {i} is not finite")));
        }
        Ok(Self { coords })
    }

    pub fn from_qp(q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(GeometryError::shape(
                format!("{} momenta", q.len()),
                format!("{} momenta", p.len()),
            ));
        }
        Self::new(q.iter().chain(p).copied().collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Phase-space dimension 2n.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of degrees of freedom n.
    pub fn n(&self) -> usize {
        self.coords.len() / 2
    }

    pub fn q(&self) -> &[f64] {
        &self.coords[..self.n()]
    }

    pub fn p(&self) -> &[f64] {
        &self.coords[self.n()..]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coords
    }
}

/// Antisymmetric matrix of jets. Only `set` with `μ ≠ ν` writes, and it always
/// writes both `(μ,ν)` and `(ν,μ)`, so antisymmetry holds exactly.
#[derive(Clone)]
pub struct FormComponents {
    dim: usize,
    entries: Vec<Jet2>,
}

impl FormComponents {
    pub fn zeros(dim: usize, jet_dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Jet2::constant(0.0, jet_dim); dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn set(&mut self, mu: usize, nu: usize, value: Jet2) {
        assert_ne!(mu, nu, "diagonal of a 2-form is identically zero");
        self.entries[nu * self.dim + mu] = -&value;
        self.entries[mu * self.dim + nu] = value;
    }

    pub fn get(&self, mu: usize, nu: usize) -> &Jet2 {
        &self.entries[mu * self.dim + nu]
    }

    pub fn values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j).value())
    }
}

/// A field `x ↦ ω_{μν}(x)` of antisymmetric matrices on R^{2n}.
///
/// Implementors fill the strictly upper triangle through
/// [`FormComponents::set`]; antisymmetry is then structural.
pub trait TwoFormField: Send + Sync {
    fn dim(&self) -> usize;

    fn name(&self) -> String;

    /// Writes the components at the jet-valued point `x`.
    fn components(&self, x: &[Jet2], out: &mut FormComponents);

    /// Rejects points where the field is singular or undefined.
    fn check_domain(&self, _x: &PhasePoint) -> Result<()> {
        Ok(())
    }
}

impl<T: TwoFormField + ?Sized> TwoFormField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> String {
        (**self).name()
    }
    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        (**self).components(x, out)
    }
    fn check_domain(&self, x: &PhasePoint) -> Result<()> {
        (**self).check_domain(x)
    }
}

impl<T: TwoFormField + ?Sized> TwoFormField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn name(&self) -> String {
        (**self).name()
    }
    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        (**self).components(x, out)
    }
    fn check_domain(&self, x: &PhasePoint) -> Result<()> {
        (**self).check_domain(x)
    }
}

fn check_dim<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<()> {
    if x.dim() != form.dim() {
        return Err(GeometryError::shape(
            format!("point of dimension {}", form.dim()),
            format!("point of dimension {}", x.dim()),
        ));
    }
    Ok(())
}

/// Evaluates the components as jets (value, gradient, Hessian) at `x`.
pub fn eval_jets<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<FormComponents> {
    check_dim(form, x)?;
    form.check_domain(x)?;
    let seeded = Jet2::seed(x.coords(), true);
    let mut out = FormComponents::zeros(form.dim(), x.dim());
    form.components(&seeded, &mut out);
    Ok(out)
}

/// Evaluates the component values only.
pub fn eval_matrix<F: TwoFormField + ?Sized>(form: &F, x: &PhasePoint) -> Result<DMatrix<f64>> {
    check_dim(form, x)?;
    form.check_domain(x)?;
    let seeded = Jet2::seed(x.coords(), false);
    let mut out = FormComponents::zeros(form.dim(), 0);
    form.components(&seeded, &mut out);
    Ok(out.values())
}

/// A scalar function of phase coordinates, evaluable on jets.
pub trait ScalarField: Send + Sync {
    fn eval(&self, x: &[Jet2]) -> Jet2;
}

impl<F> ScalarField for F
where
    F: Fn(&[Jet2]) -> Jet2 + Send + Sync,
{
    fn eval(&self, x: &[Jet2]) -> Jet2 {
        self(x)
    }
}

/// A vector field `x ↦ a^i(x)`, evaluable on jets.
pub trait VectorField: Send + Sync {
    fn eval(&self, x: &[Jet2]) -> Vec<Jet2>;
}

impl<F> VectorField for F
where
    F: Fn(&[Jet2]) -> Vec<Jet2> + Send + Sync,
{
    fn eval(&self, x: &[Jet2]) -> Vec<Jet2> {
        self(x)
    }
}

/// The Darboux form `ω = [[0, −I], [I, 0]]`, whose inverse is `[[0, I], [−I, 0]]`
/// so that `{qⁱ, p_j} = δⁱ_j`.
#[derive(Debug, Clone, Copy)]
pub struct StandardForm {
    n: usize,
}

impl StandardForm {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        Self { n }
    }
}

impl TwoFormField for StandardForm {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn name(&self) -> String {
        format!("standard(n={})", self.n)
    }

    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        let jd = x[0].dim();
        for i in 0..self.n {
            out.set(i, self.n + i, Jet2::constant(-1.0, jd));
        }
    }
}

/// A constant antisymmetric matrix.
#[derive(Debug, Clone)]
pub struct ConstantForm {
    matrix: DMatrix<f64>,
}

impl ConstantForm {
    /// Uses the strictly upper triangle of `matrix`.
    pub fn new(matrix: DMatrix<f64>) -> Self {
        assert!(matrix.is_square() && matrix.nrows() % 2 == 0);
        let n = matrix.nrows();
        let anti = DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Less => matrix[(i, j)],
            std::cmp::Ordering::Greater => -matrix[(j, i)],
            std::cmp::Ordering::Equal => 0.0,
        });
        Self { matrix: anti }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }
}

impl TwoFormField for ConstantForm {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn name(&self) -> String {
        "constant".into()
    }

    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        let jd = x[0].dim();
        let n = self.dim();
        for i in 0..n {
            for j in (i + 1)..n {
                out.set(i, j, Jet2::constant(self.matrix[(i, j)], jd));
            }
        }
    }
}

/// Quadratic polynomial `a + bᵀx + Σ_{k≤l} c_{kl} x^k x^l` in the phase coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub constant: f64,
    pub linear: Vec<f64>,
    /// Upper-triangular coefficients, row-major over `k ≤ l`.
    pub quadratic: Vec<f64>,
}

impl Quadratic {
    pub fn zero(dim: usize) -> Self {
        Self {
            constant: 0.0,
            linear: vec![0.0; dim],
            quadratic: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn eval(&self, x: &[Jet2]) -> Jet2 {
        let n = x.len();
        let mut acc = x[0].constant_like(self.constant);
        for (k, &b) in self.linear.iter().enumerate() {
            if b != 0.0 {
                acc += &(&x[k] * b);
            }
        }
        let mut idx = 0;
        for k in 0..n {
            for l in k..n {
                let c = self.quadratic[idx];
                idx += 1;
                if c != 0.0 {
                    acc += &(&(&x[k] * &x[l]) * c);
                }
            }
        }
        acc
    }

    /// Bound on `|value|` over the box `|x^k| ≤ radius`.
    pub fn bound_on_box(&self, radius: f64) -> f64 {
        self.constant.abs()
            + radius * self.linear.iter().map(|b| b.abs()).sum::<f64>()
            + radius * radius * self.quadratic.iter().map(|c| c.abs()).sum::<f64>()
    }
}

/// `ω(x) = C + ε·P(x)` with `C` constant and `P` an antisymmetric matrix of
/// quadratic polynomials.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolynomialForm {
    dim: usize,
    /// Strictly upper triangle, row-major over `μ < ν`.
    constant: Vec<f64>,
    polynomials: Vec<Quadratic>,
    epsilon: f64,
}

impl PolynomialForm {
    pub fn new(dim: usize, constant: Vec<f64>, polynomials: Vec<Quadratic>, epsilon: f64) -> Self {
        let pairs = dim * (dim - 1) / 2;
        assert_eq!(constant.len(), pairs);
        assert_eq!(polynomials.len(), pairs);
        Self {
            dim,
            constant,
            polynomials,
            epsilon,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn constant_part(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut idx = 0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                m[(i, j)] = self.constant[idx];
                m[(j, i)] = -self.constant[idx];
                idx += 1;
            }
        }
        m
    }

    pub fn polynomials(&self) -> &[Quadratic] {
        &self.polynomials
    }
}

impl TwoFormField for PolynomialForm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn name(&self) -> String {
        format!("polynomial(dim={}, eps={:.3e})", self.dim, self.epsilon)
    }

    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        let mut idx = 0;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let poly = self.polynomials[idx].eval(x);
                out.set(i, j, &(&poly * self.epsilon) + self.constant[idx]);
                idx += 1;
            }
        }
    }
}

/// `-ω`: reverses the orientation of phase space.
#[derive(Clone)]
pub struct Negated<F>(pub F);

impl<F: TwoFormField> TwoFormField for Negated<F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn name(&self) -> String {
        format!("-({})", self.0.name())
    }

    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        let mut inner = FormComponents::zeros(self.dim(), x[0].dim());
        self.0.components(x, &mut inner);
        for i in 0..self.dim() {
            for j in (i + 1)..self.dim() {
                out.set(i, j, -inner.get(i, j));
            }
        }
    }

    fn check_domain(&self, x: &PhasePoint) -> Result<()> {
        self.0.check_domain(x)
    }
}

/// Inverts a jet-valued matrix by Gauss–Jordan elimination with partial
/// pivoting on the values. Derivatives propagate through the elimination.
pub fn invert_jet_matrix(m: &[Jet2], dim: usize) -> Option<Vec<Jet2>> {
    let jd = m[0].dim();
    let mut a: Vec<Jet2> = m.to_vec();
    let mut inv: Vec<Jet2> = (0..dim * dim)
        .map(|k| Jet2::constant(if k / dim == k % dim { 1.0 } else { 0.0 }, jd))
        .collect();
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&r, &s| {
            a[r * dim + col]
                .value()
                .abs()
                .total_cmp(&a[s * dim + col].value().abs())
        })?;
        if a[pivot * dim + col].value() == 0.0 {
            return None;
        }
        if pivot != col {
            for c in 0..dim {
                a.swap(pivot * dim + c, col * dim + c);
                inv.swap(pivot * dim + c, col * dim + c);
            }
        }
        let r = a[col * dim + col].recip();
        for c in 0..dim {
            a[col * dim + c] = &a[col * dim + c] * &r;
            inv[col * dim + c] = &inv[col * dim + c] * &r;
        }
        for row in 0..dim {
            if row == col {
                continue;
            }
            let factor = a[row * dim + col].clone();
            if factor.value() == 0.0 && factor.grad().iter().all(|g| *g == 0.0) {
                continue;
            }
            for c in 0..dim {
                let da = &factor * &a[col * dim + c];
                a[row * dim + c] -= &da;
                let di = &factor * &inv[col * dim + c];
                inv[row * dim + c] -= &di;
            }
        }
    }
    Some(inv)
}

/// A bivector field `π^{μν}(x)`, evaluable on jets, given as a full matrix.
pub trait BivectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn name(&self) -> String;
    /// Row-major `dim × dim` jets.
    fn components(&self, x: &[Jet2]) -> Vec<Jet2>;
    fn check_domain(&self, _x: &PhasePoint) -> Result<()> {
        Ok(())
    }
}

/// The 2-form `ω = π⁻¹` obtained by inverting a bivector field pointwise,
/// with derivatives carried through the inversion.
pub struct InverseOfBivector<B> {
    bivector: B,
}

impl<B: BivectorField> InverseOfBivector<B> {
    pub fn new(bivector: B) -> Self {
        Self { bivector }
    }

    pub fn bivector(&self) -> &B {
        &self.bivector
    }
}

impl<B: BivectorField> TwoFormField for InverseOfBivector<B> {
    fn dim(&self) -> usize {
        self.bivector.dim()
    }

    fn name(&self) -> String {
        format!("inverse({})", self.bivector.name())
    }

    fn components(&self, x: &[Jet2], out: &mut FormComponents) {
        let n = self.dim();
        let pi = self.bivector.components(x);
        let jd = x[0].dim();
        let inv = invert_jet_matrix(&pi, n)
            .unwrap_or_else(|| vec![Jet2::constant(f64::NAN, jd); n * n]);
        for i in 0..n {
            for j in (i + 1)..n {
                // Average the two triangles to cancel rounding asymmetry.
                let v = &(&inv[i * n + j] - &inv[j * n + i]) * 0.5;
                out.set(i, j, v);
            }
        }
    }

    fn check_domain(&self, x: &PhasePoint) -> Result<()> {
        self.bivector.check_domain(x)
    }
}

impl fmt::Debug for dyn TwoFormField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TwoFormField({})", self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_point_rejects_odd_and_non_finite() {
        assert!(PhasePoint::new(vec![1.0, 2.0, 3.0]).is_err());
        assert!(PhasePoint::new(vec![]).is_err());
        assert!(PhasePoint::new(vec![1.0, f64::NAN]).is_err());
        let x = PhasePoint::from_qp(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(x.q(), &[1.0, 2.0]);
        assert_eq!(x.p(), &[3.0, 4.0]);
    }

    #[test]
    fn components_are_exactly_antisymmetric() {
        let q = Quadratic {
            constant: 0.3,
            linear: vec![0.1, -0.2, 0.7, 0.4],
            quadratic: (0..10).map(|k| 0.05 * k as f64 - 0.2).collect(),
        };
        let form = PolynomialForm::new(4, vec![1.0, 0.2, -0.3, 0.5, 0.9, -1.1], vec![q; 6], 0.1);
        let x = PhasePoint::new(vec![0.3, -0.7, 0.1, 0.9]).unwrap();
        let jets = eval_jets(&form, &x).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let a = jets.get(i, j);
                let b = jets.get(j, i);
                assert_eq!(a.value(), -b.value());
                assert!(a.grad().iter().zip(b.grad()).all(|(u, v)| *u == -*v));
            }
        }
    }

    #[test]
    fn jet_inversion_matches_nalgebra_and_differentiates() {
        let x = Jet2::seed(&[0.4, -1.2], true);
        // [[2 + x0, x1], [x0 x1, 3]]
        let m = vec![
            &x[0] + 2.0,
            x[1].clone(),
            &x[0] * &x[1],
            x[0].constant_like(3.0),
        ];
        let inv = invert_jet_matrix(&m, 2).unwrap();
        let vals = DMatrix::from_fn(2, 2, |i, j| m[i * 2 + j].value());
        let expect = vals.try_inverse().unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i * 2 + j].value() - expect[(i, j)]).abs() < 1e-14);
            }
        }
        // d(M⁻¹) = -M⁻¹ dM M⁻¹ along x0.
        let dm = DMatrix::from_fn(2, 2, |i, j| m[i * 2 + j].d(0));
        let dinv = -&expect * dm * &expect;
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[i * 2 + j].d(0) - dinv[(i, j)]).abs() < 1e-13);
            }
        }
    }
}
