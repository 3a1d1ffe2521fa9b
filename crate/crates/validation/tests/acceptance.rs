//! Acceptance criteria 1 to 10, one PASS/FAIL line each.
//!
//! The contractions, residuals and drifts below are recomputed here from
//! the raw tensors and trajectories rather than taken from the library's own
//! summary helpers.

use std::process::ExitCode;

use fedosov::constrained::{
    first_class_check, integrate_constrained, on_surface_state, Branch, ConstrainedSystem, Variant,
};
use fedosov::dynamics::{integrate, two_form_transport, HamiltonianField, IntegratorConfig, Trajectory};
use fedosov::form::{eval_jets, PhasePoint, StandardForm, TwoFormField, VectorField};
use fedosov::geometry::{commutator_check, LocalGeometry};
use fedosov::monopole::{model_form, MagneticForm, MonopoleForm, MonopoleParams};
use fedosov::random_forms::{
    random_monopole_point, random_point, random_polynomial_form, random_vector3, random_vector_field, rng,
};
use fedosov::Jet2;
use rand::Rng;

const SEED: u64 = 0xacce97;

struct Outcome {
    observed: f64,
    pass: bool,
    detail: String,
}

fn below(observed: f64, tol: f64) -> Outcome {
    Outcome {
        observed,
        pass: observed < tol,
        detail: format!("< {tol:e}"),
    }
}

fn ensemble() -> Vec<(Box<dyn TwoFormField>, Vec<PhasePoint>)> {
    let mut r = rng(SEED);
    (0..100)
        .map(|i| {
            let dim = 2 * (i % 3 + 1);
            let form = random_polynomial_form(&mut r, dim);
            let pts = (0..10).map(|_| random_point(&mut r, dim)).collect();
            (Box::new(form) as Box<dyn TwoFormField>, pts)
        })
        .collect()
}

fn max_over_ensemble(mut f: impl FnMut(&dyn TwoFormField, &PhasePoint, &LocalGeometry) -> f64) -> f64 {
    let mut worst = 0.0_f64;
    for (form, pts) in ensemble() {
        for x in &pts {
            let g = LocalGeometry::at(form.as_ref(), x).expect("ensemble forms are non-degenerate");
            worst = worst.max(f(form.as_ref(), x, &g));
        }
    }
    worst
}

fn criterion_1() -> Outcome {
    let worst = max_over_ensemble(|_, _, g| {
        let r = g.curvature().upper;
        let w = g.inverse();
        let n = g.dim();
        let ricci = |q: usize, l: usize| (0..n).map(|i| r[[i, q, i, l]]).sum::<f64>();
        let mut s = 0.0;
        for i in 0..n {
            for k in 0..n {
                s += w[(i, k)] * ricci(k, i);
            }
        }
        s.abs() / r.max_abs().max(1.0)
    });
    below(worst, 1e-9)
}

fn criterion_2() -> Outcome {
    let mut antisym = 0.0_f64;
    let nabla = max_over_ensemble(|form, x, g| {
        let jets = eval_jets(form, x).unwrap();
        let conn = g.connection();
        let (up, low) = (&conn.upper, &conn.lower);
        let w = g.omega();
        let n = g.dim();
        let mut m = 0.0_f64;
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut v = jets.get(a, b).d(k);
                    for l in 0..n {
                        v -= up[[l, a, k]] * w[(l, b)] + up[[l, b, k]] * w[(a, l)];
                    }
                    m = m.max(v.abs());
                    antisym = antisym.max((low[[k, a, b]] + low[[k, b, a]]).abs());
                }
            }
        }
        m / low.max_abs().max(1.0)
    });
    let observed = nabla.max(if antisym == 0.0 { 0.0 } else { f64::INFINITY });
    Outcome {
        observed,
        pass: nabla < 1e-10 && antisym == 0.0,
        detail: format!("nabla {nabla:.3e} < 1e-10, antisymmetry {antisym:e} == 0"),
    }
}

fn criterion_3() -> Outcome {
    let worst = max_over_ensemble(|_, _, g| {
        let c = g.curvature();
        let (up, low) = (&c.upper, &c.lower);
        let n = g.dim();
        let mut m = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        m = m.max((up[[a, b, k, l]] + up[[a, b, l, k]]).abs());
                        m = m.max((low[[a, b, k, l]] - low[[b, a, k, l]]).abs());
                    }
                }
            }
        }
        for k in 0..n {
            for l in 0..n {
                m = m.max((0..n).map(|i| up[[i, i, k, l]]).sum::<f64>().abs());
            }
        }
        m / up.max_abs().max(1.0)
    });
    below(worst, 1e-10)
}

fn criterion_4() -> Outcome {
    let mut r = rng(SEED ^ 4);
    let mut worst = 0.0_f64;
    for name in ["form4", "form6", "form7"] {
        let params = if name == "form7" {
            MonopoleParams::magnetic(1.0)
        } else {
            MonopoleParams::monopole(1.0)
        };
        let form = model_form(name, params, 3).unwrap();
        for _ in 0..10 {
            let x = random_monopole_point(&mut r, &params, 0.1);
            let field = random_vector_field(&mut r, 6);
            let check = commutator_check(&form, &field, &x).unwrap();
            let curv = LocalGeometry::at(&form, &x).unwrap().curvature().upper;
            let a = field.eval(&Jet2::seed(x.coords(), true));
            let size = a
                .iter()
                .flat_map(|c| std::iter::once(c.value()).chain(c.grad().iter().copied()).chain(c.hess().iter().copied()))
                .fold(1.0_f64, |m, v| m.max(v.abs()));
            worst = worst.max(check.residual.max_abs() / (curv.max_abs().max(1.0) * size));
        }
    }
    below(worst, 1e-8)
}

fn criterion_5() -> Outcome {
    let worst = max_over_ensemble(|form, x, g| {
        let jets = eval_jets(form, x).unwrap();
        let up = g.connection().upper;
        let w = g.omega();
        let n = g.dim();
        let lowered_t = |k: usize, a: usize, b: usize| {
            (0..n).map(|p| w[(k, p)] * (up[[p, a, b]] - up[[p, b, a]])).sum::<f64>()
        };
        let mut m = 0.0_f64;
        let mut size = 1.0_f64;
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let d = jets.get(a, b).d(k) + jets.get(b, k).d(a) + jets.get(k, a).d(b);
                    let t = lowered_t(k, a, b) + lowered_t(a, b, k) + lowered_t(b, k, a);
                    m = m.max((d - t).abs());
                    size = size.max(d.abs());
                }
            }
        }
        m / size
    });
    below(worst, 1e-10)
}

fn criterion_6() -> Outcome {
    let form = MagneticForm::new(MonopoleParams::magnetic(1.0));
    let mut r = rng(SEED ^ 6);
    let (mut bad_counts, mut ricci_worst) = (0usize, 0.0_f64);
    for _ in 0..20 {
        let q = random_vector3(&mut r, 0.5, 2.0);
        let p = random_vector3(&mut r, 0.5, 2.0);
        let x = PhasePoint::from_qp(&q, &p).unwrap();
        let g = LocalGeometry::at(&form, &x).unwrap();
        let low = g.connection().lower;
        let thr = 1e-12 * low.max_abs().max(1.0);
        if low.values().filter(|v| v.abs() > thr).count() != 18 {
            bad_counts += 1;
        }
        let up = g.curvature().upper;
        let thr = 1e-12 * up.max_abs().max(1.0);
        let mut block = 0;
        let mut total = 0;
        for i in 0..6 {
            for s in 0..6 {
                for k in 0..6 {
                    for l in 0..6 {
                        if up[[i, s, k, l]].abs() > thr {
                            total += 1;
                            if i >= 3 && s < 3 && k < 3 && l < 3 {
                                block += 1;
                            }
                        }
                    }
                }
            }
        }
        if block != 54 || total != block {
            bad_counts += 1;
        }
        for q in 0..6 {
            for l in 0..6 {
                let ric: f64 = (0..6).map(|i| up[[i, q, i, l]]).sum();
                ricci_worst = ricci_worst.max(ric.abs());
            }
        }
    }
    Outcome {
        observed: ricci_worst,
        pass: bad_counts == 0 && ricci_worst < 1e-10,
        detail: format!("count mismatches {bad_counts} == 0, Ricci < 1e-10"),
    }
}

fn criterion_7() -> Outcome {
    let params = MonopoleParams::monopole(1.0);
    let form = MonopoleForm { params };
    let mut r = rng(SEED ^ 7);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let x = random_monopole_point(&mut r, &params, 0.1);
        let g = LocalGeometry::at(&form, &x).unwrap();
        let up = g.curvature().upper;
        for l in 0..6 {
            let direct: f64 = (0..6).map(|i| up[[i, l, i, l]]).sum();
            let closed = g.ricci_diagonal_closed_form(l).unwrap();
            worst = worst.max((closed - direct).abs() / direct.abs().max(1.0));
        }
    }
    below(worst, 1e-8)
}

fn max_state_diff(a: &PhasePoint, b: &[f64]) -> f64 {
    a.coords().iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}

fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn drifts(traj: &Trajectory, lambda: f64) -> (f64, f64, f64) {
    let measure = |x: &PhasePoint| {
        let (q, p) = (x.q(), x.p());
        let e = 0.5 * p.iter().map(|v| v * v).sum::<f64>();
        let speed = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let r = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        let l = cross(q, p);
        let j = [l[0] - lambda * q[0] / r, l[1] - lambda * q[1] / r, l[2] - lambda * q[2] / r];
        (e, speed, j)
    };
    let (e0, s0, j0) = measure(&traj.states[0]);
    traj.states.iter().fold((0.0, 0.0, 0.0), |(de, ds, dj), x| {
        let (e, s, j) = measure(x);
        let jd = (0..3).fold(0.0_f64, |m, i| m.max((j[i] - j0[i]).abs()));
        (f64::max(de, (e - e0).abs()), f64::max(ds, (s - s0).abs()), f64::max(dj, jd))
    })
}

fn endpoint(form: &dyn TwoFormField, h: &HamiltonianField, x0: &PhasePoint, step: f64, t_end: f64) -> PhasePoint {
    integrate(form, h, x0, &IntegratorConfig::rk4(step, t_end))
        .unwrap()
        .last_state()
        .unwrap()
        .clone()
}

fn criterion_8() -> Outcome {
    let kinetic = HamiltonianField::kinetic();
    let x0 = PhasePoint::new(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    let free = max_state_diff(&endpoint(&StandardForm::new(3), &kinetic, &x0, 0.1, 1.0), &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

    let x0 = PhasePoint::new(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
    let form = MagneticForm::new(MonopoleParams::magnetic(1.0));
    let traj = integrate(&form, &kinetic, &x0, &IntegratorConfig::rk45(1e-10, 5.0)).unwrap();
    let (de, ds, dj) = drifts(&traj, 1.0);

    let osc = HamiltonianField::harmonic(1.0);
    let x0 = PhasePoint::new(vec![1.0, 0.0]).unwrap();
    let t: f64 = 2.0;
    let exact = [t.cos(), -t.sin()];
    let e1 = max_state_diff(&endpoint(&StandardForm::new(1), &osc, &x0, 0.1, t), &exact);
    let e2 = max_state_diff(&endpoint(&StandardForm::new(1), &osc, &x0, 0.05, t), &exact);
    let order = (e1 / e2).log2();

    let pass = free < 1e-10 && de < 1e-9 && ds < 1e-8 && dj < 1e-7 && order >= 3.8;
    Outcome {
        observed: de,
        pass,
        detail: format!(
            "free {free:.2e} < 1e-10, H {de:.2e} < 1e-9, |p| {ds:.2e} < 1e-8, J {dj:.2e} < 1e-7, order {order:.3} >= 3.8"
        ),
    }
}

fn equivalence(variant: Variant, branch: Branch, q: &[f64; 3], p: &[f64; 3]) -> f64 {
    let params = MonopoleParams::magnetic(1.0);
    let config = IntegratorConfig::rk4(1e-3, 1.0);
    let sys = ConstrainedSystem::new(variant, params).with_drift_limit(f64::INFINITY);
    let x12 = on_surface_state(variant, q, p, branch).unwrap();
    let run = integrate_constrained(&sys, &x12, &config).unwrap();
    let direct = integrate(&MagneticForm::new(params), &HamiltonianField::kinetic(), &PhasePoint::from_qp(q, p).unwrap(), &config)
        .unwrap();
    assert_eq!(run.full.times, direct.times);
    run.full
        .states
        .iter()
        .zip(&direct.states)
        .map(|(full, phys)| {
            let f = full.coords();
            let projected = [f[0], f[1], f[2], f[6], f[7], f[8]];
            max_state_diff(phys, &projected)
        })
        .fold(0.0, f64::max)
}

fn criterion_9() -> Outcome {
    let mut r = rng(SEED ^ 9);
    let inits: Vec<_> = (0..10)
        .map(|_| (random_vector3(&mut r, 0.8, 1.5), random_vector3(&mut r, 0.5, 1.0)))
        .collect();
    let a = inits.iter().map(|(q, p)| equivalence(Variant::A, Branch::Same, q, p)).fold(0.0, f64::max);
    let b = inits
        .iter()
        .flat_map(|(q, p)| [Branch::Same, Branch::Mirror].map(|br| equivalence(Variant::B, br, q, p)))
        .fold(0.0, f64::max);

    let sys = ConstrainedSystem::new(Variant::A, MonopoleParams::magnetic(1.0));
    let brackets = (0..20)
        .map(|_| {
            let x: Vec<f64> = (0..12).map(|_| r.gen_range(-1.5..1.5)).collect();
            first_class_check(&sys, &x).unwrap().max_constraint_bracket()
        })
        .fold(0.0, f64::max);

    Outcome {
        observed: a.max(b),
        pass: a < 1e-6 && b < 1e-6 && brackets <= f64::EPSILON,
        detail: format!("variant A {a:.2e} < 1e-6, variant B {b:.2e} < 1e-6, A brackets {brackets:e}"),
    }
}

fn criterion_10() -> Outcome {
    let kinetic = HamiltonianField::kinetic();
    let config = IntegratorConfig::rk4(1e-3, 1.0);
    let x0 = PhasePoint::new(vec![0.3, -0.2, 0.5, 1.0, 0.4, -0.6]).unwrap();
    let u = [1.0, 0.0, 0.5, 0.0, -0.3, 0.2];
    let v = [0.0, 1.0, 0.0, 0.7, 0.0, -1.0];
    let standard = two_form_transport(&StandardForm::new(3), &kinetic, &x0, &u, &v, &config).unwrap();
    let s = standard.values.iter().fold(0.0_f64, |m, w| m.max((w - standard.values[0]).abs()));

    let x0 = PhasePoint::new(vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).unwrap();
    let e = |i: usize| {
        let mut e = [0.0; 6];
        e[i] = 1.0;
        e
    };
    let uniform = MagneticForm::new(MonopoleParams::uniform(1.0));
    let field = two_form_transport(&uniform, &kinetic, &x0, &e(1), &e(2), &config).unwrap();
    let f = field.values.iter().fold(0.0_f64, |m, w| m.max((w - field.values[0]).abs()));
    Outcome {
        observed: f,
        pass: s < 1e-8 && f > 1e-3,
        detail: format!("standard {s:.2e} < 1e-8, uniform field {f:.3e} > 1e-3"),
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("scalar curvature vanishes", criterion_1),
        ("connection consistency and skew symmetry", criterion_2),
        ("curvature symmetries and trace", criterion_3),
        ("commutator identity", criterion_4),
        ("torsion cyclic sum equals exterior derivative", criterion_5),
        ("monopole connection and curvature structure", criterion_6),
        ("diagonal Ricci closed form", criterion_7),
        ("dynamics accuracy and conservation", criterion_8),
        ("constrained formulation equivalence", criterion_9),
        ("two-form transport", criterion_10),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        if !out.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {} (observed {:.3e}; {})",
            i + 1,
            if out.pass { "PASS" } else { "FAIL" },
            name,
            out.observed,
            out.detail
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
