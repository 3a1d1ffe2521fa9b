//! Seeded generators of random non-degenerate polynomial 2-forms, points and
//! fields, for property tests and the verification suite.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::form::{PhasePoint, PolynomialForm, Quadratic, ScalarField, VectorField};
use crate::geometry::reciprocal_condition;
use crate::jet::Jet2;
use crate::monopole::{singularity_guard, MonopoleParams};

/// Sampling box `|x^k| ≤ BOX_RADIUS` for points and the non-degeneracy bound.
pub const BOX_RADIUS: f64 = 1.0;

/// Minimum reciprocal condition number accepted for the constant part.
const MIN_RCOND: f64 = 0.05;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Deterministic sub-seed, so parallel workers do not share a stream.
pub fn child_seed(seed: u64, stream: u64) -> u64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r.gen()
}

pub fn random_quadratic<R: Rng>(rng: &mut R, dim: usize) -> Quadratic {
    Quadratic {
        constant: rng.gen_range(-1.0..1.0),
        linear: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        quadratic: (0..dim * (dim + 1) / 2).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    }
}

/// Random constant antisymmetric matrix, upper triangle in row-major order,
/// redrawn until it is comfortably invertible.
pub fn random_constant_part<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    assert!(dim % 2 == 0 && dim > 0);
    loop {
        let upper: Vec<f64> = (0..dim * (dim - 1) / 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if reciprocal_condition(&upper_to_matrix(&upper, dim)) >= MIN_RCOND {
            return upper;
        }
    }
}

fn upper_to_matrix(upper: &[f64], dim: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, dim);
    let mut idx = 0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            m[(i, j)] = upper[idx];
            m[(j, i)] = -upper[idx];
            idx += 1;
        }
    }
    m
}

/// `ω(x) = C + ε P(x)` with `ε` small enough that
/// `σ_min(ω(x)) ≥ σ_min(C)/2` everywhere on the sampling box.
pub fn random_polynomial_form<R: Rng>(rng: &mut R, dim: usize) -> PolynomialForm {
    let constant = random_constant_part(rng, dim);
    let polys: Vec<Quadratic> = (0..constant.len()).map(|_| random_quadratic(rng, dim)).collect();
    let c = upper_to_matrix(&constant, dim);
    let sigma_min = c.svd(false, false).singular_values.min();
    // ‖P(x)‖₂ ≤ ‖P(x)‖_F = sqrt(2 Σ_{μ<ν} P_{μν}²)
    let frob: f64 = (2.0 * polys.iter().map(|p| p.bound_on_box(BOX_RADIUS).powi(2)).sum::<f64>()).sqrt();
    let epsilon = if frob > 0.0 { sigma_min / (2.0 * frob) } else { 0.0 };
    PolynomialForm::new(dim, constant, polys, epsilon)
}

pub fn random_point<R: Rng>(rng: &mut R, dim: usize) -> PhasePoint {
    PhasePoint::new((0..dim).map(|_| rng.gen_range(-BOX_RADIUS..BOX_RADIUS)).collect())
        .expect("finite, even-length coordinates")
}

/// Random unit vector in R³ scaled to a length drawn from `[r_min, r_max]`.
pub fn random_vector3<R: Rng>(rng: &mut R, r_min: f64, r_max: f64) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            let r = rng.gen_range(r_min..=r_max);
            return [v[0] * r / n, v[1] * r / n, v[2] * r / n];
        }
    }
}

/// `count` random forms cycling through dimensions 2, 4, 6, each with
/// `points` random points.
pub fn random_ensemble(seed: u64, count: usize, points: usize) -> Vec<(PolynomialForm, Vec<PhasePoint>)> {
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let dim = 2 * (i % 3 + 1);
            let form = random_polynomial_form(&mut r, dim);
            let pts = (0..points).map(|_| random_point(&mut r, dim)).collect();
            (form, pts)
        })
        .collect()
}

/// Random `(q, p)` with `|q|, |p| ∈ [0.5, 1.5]` that is admissible for
/// `params` with `|1 − fg q·p| ≥ min_denom`.
pub fn random_monopole_point<R: Rng>(rng: &mut R, params: &MonopoleParams, min_denom: f64) -> PhasePoint {
    loop {
        let q = random_vector3(rng, 0.5, 1.5);
        let p = random_vector3(rng, 0.5, 1.5);
        let x = PhasePoint::from_qp(&q, &p).expect("finite coordinates");
        let rep = singularity_guard(params, &x);
        if rep.admissible && rep.denom_value.abs() >= min_denom {
            return x;
        }
    }
}

impl ScalarField for Quadratic {
    fn eval(&self, x: &[Jet2]) -> Jet2 {
        Quadratic::eval(self, x)
    }
}

/// A vector field with quadratic polynomial components.
#[derive(Debug, Clone)]
pub struct QuadraticVectorField {
    pub components: Vec<Quadratic>,
}

impl VectorField for QuadraticVectorField {
    fn eval(&self, x: &[Jet2]) -> Vec<Jet2> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }
}

pub fn random_vector_field<R: Rng>(rng: &mut R, dim: usize) -> QuadraticVectorField {
    QuadraticVectorField {
        components: (0..dim).map(|_| random_quadratic(rng, dim)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::eval_matrix;

    #[test]
    fn same_seed_same_form() {
        let a = random_polynomial_form(&mut rng(7), 4);
        let b = random_polynomial_form(&mut rng(7), 4);
        assert_eq!(a.polynomials(), b.polynomials());
        assert_eq!(a.epsilon(), b.epsilon());
    }

    #[test]
    fn forms_stay_nondegenerate_on_the_box() {
        let mut r = rng(11);
        for dim in [2, 4, 6] {
            for _ in 0..20 {
                let form = random_polynomial_form(&mut r, dim);
                let c = form.constant_part();
                let floor = c.svd(false, false).singular_values.min() / 2.0;
                for _ in 0..10 {
                    let x = random_point(&mut r, dim);
                    let m = eval_matrix(&form, &x).unwrap();
                    let smin = m.svd(false, false).singular_values.min();
                    assert!(smin >= floor * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn child_seeds_differ() {
        assert_ne!(child_seed(1, 0), child_seed(1, 1));
        assert_eq!(child_seed(1, 3), child_seed(1, 3));
    }
}
