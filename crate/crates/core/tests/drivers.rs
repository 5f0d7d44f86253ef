use proptest::prelude::*;

use tclass::algorithms::{
    cq_explicit_step, haugazeau_step, run, Driver, Outcome, Schedule, StoppingRule,
};
use tclass::operators::{certify_strict_pseudocontraction, t_from_q, PointSet, Sampler};
use tclass::problems::{catalog, make_affine_spc, random_linear_spc, AffineSpec, BuildOptions};
use tclass::Vector;

fn v(c: &[f64]) -> Vector {
    Vector::new(c.to_vec()).unwrap()
}

#[test]
fn mann_converges_on_alternating_weights() {
    let inst = catalog::rotation_scaling_family().build(&BuildOptions::default()).unwrap();
    let schedule = Schedule {
        weights: Some(vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![2.0 / 3.0, 1.0 / 3.0]]),
        ..Schedule::default()
    };
    let ops = inst.operators(&schedule).unwrap();
    let stop = StoppingRule {
        tol_residual: 1e-10,
        ..StoppingRule::default()
    };
    let t = run(Driver::Mann, &v(&[1.0, 1.0]), &*ops, &schedule, &stop, inst.oracle.as_ref()).unwrap();
    assert!(t.outcome.is_converged());
    assert!(t.last().x.norm() < 1e-9);
    for w in t.records.windows(2) {
        assert!(w[1].x.norm() <= w[0].x.norm() + 1e-12);
    }
}

#[test]
fn haugazeau_iterates_stay_in_the_ball_around_x0() {
    // x_n = P_{C_n} x_0 with F ⊂ C_n, so |x_n - x_0| <= |P_F x_0 - x_0| and
    // the distances are nondecreasing.
    let inst = catalog::rotation_scaling_family().build(&BuildOptions::default()).unwrap();
    let schedule = Schedule::default();
    let ops = inst.operators(&schedule).unwrap();
    let x0 = v(&[1.0, 1.0]);
    let stop = StoppingRule {
        max_iter: 400,
        ..StoppingRule::default()
    };
    let t = run(Driver::Haugazeau, &x0, &*ops, &schedule, &stop, None).unwrap();
    let radius = x0.norm();
    let mut prev = 0.0;
    for r in &t.records {
        let d = r.x.distance(&x0);
        assert!(d <= radius + 1e-12);
        assert!(d >= prev - 1e-12);
        prev = d;
    }
}

#[test]
fn cq_steps_follow_the_haugazeau_trajectory() {
    let (q, _) = make_affine_spc(&catalog::minus_two_identity(), None, &Sampler::default()).unwrap();
    let kappa = q.tag().kappa().unwrap();
    let t = t_from_q(&q, kappa).unwrap();
    let x0 = v(&[1.0, 2.0]);
    let mut x = x0.clone();
    for _ in 0..20 {
        let h = haugazeau_step(&x0, &x, &t).unwrap();
        for alpha in [0.4, 0.7, 0.95] {
            let c = cq_explicit_step(&x0, &x, &q, kappa, alpha).unwrap();
            assert!(c.distance(&h) <= 1e-8);
        }
        x = h;
    }
    assert!(x.norm() < 1e-6);
}

#[test]
fn alpha_form_schedule_gives_the_same_trace() {
    let inst = catalog::rotation_scaling_family().build(&BuildOptions::default()).unwrap();
    let stop = StoppingRule {
        max_iter: 20,
        ..StoppingRule::default()
    };
    let base = Schedule::default();
    let alpha = Schedule {
        alpha: Some(tclass::algorithms::Sequence::Cyclic(vec![0.4, 0.9])),
        ..Schedule::default()
    };
    let a = run(Driver::Haugazeau, &v(&[1.0, 1.0]), &*inst.operators(&base).unwrap(), &base, &stop, None).unwrap();
    let b = run(Driver::Haugazeau, &v(&[1.0, 1.0]), &*inst.operators(&alpha).unwrap(), &alpha, &stop, None).unwrap();
    // The iteration amplifies rounding differences geometrically, so only
    // the early steps are compared.
    for (ra, rb) in a.records.iter().zip(&b.records).take(20) {
        assert!(ra.x.distance(&rb.x) < 1e-9, "n = {}", ra.n);
    }
}

#[test]
fn affine_fixed_set_is_found_by_haugazeau() {
    // Q x = P x + c on the line x_1 = x_2 shifted: Fix(Q) is an affine line
    let spec = tclass::problems::InstanceSpec {
        dim: 2,
        set: tclass::convex::ConvexSet::WholeSpace,
        operator: tclass::problems::OperatorSpec::Spc {
            matrix: vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            shift: Some(v(&[1.0, -1.0])),
        },
        kappa: None,
        k: None,
        lambda_bounds: None,
        oracle: None,
    };
    let inst = spec.build(&BuildOptions::default()).unwrap();
    let fixed = inst.oracle.clone().unwrap();
    let x0 = v(&[3.0, -2.0]);
    let target = fixed.nearest(&x0).unwrap();
    let schedule = Schedule::default();
    let ops = inst.operators(&schedule).unwrap();
    let t = run(Driver::Haugazeau, &x0, &*ops, &schedule, &StoppingRule::default(), Some(&fixed)).unwrap();
    assert!(t.outcome.is_converged(), "{:?}", t.outcome);
    assert!(t.last().x.distance(&target) < 1e-6, "{:?} vs {target:?}", t.last().x);
}

#[test]
fn empty_intersection_is_reported_as_an_outcome() {
    // T = -I is outside the T-class: x_1 = -x_0, and then H(x_0, x_1) and
    // H(x_1, T x_1) are disjoint parallel half-spaces.
    let t = tclass::operators::Mapping::scaling(2, -1.0);
    let trace = run(
        Driver::Haugazeau,
        &v(&[1.0, 0.0]),
        &|_| t.clone(),
        &Schedule::default(),
        &StoppingRule::default(),
        None,
    )
    .unwrap();
    assert_eq!(trace.outcome, Outcome::EmptyIntersection);
    assert_eq!(trace.records.len(), 2);
    assert_eq!(trace.last().x, v(&[-1.0, 0.0]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_instances_keep_fixed_points_in_every_half_space(seed in 0u64..1000, n in 0usize..30) {
        let q = random_linear_spc(3, seed).unwrap();
        let kappa = q.tag().kappa().unwrap();
        let r = certify_strict_pseudocontraction(&q, kappa, &Sampler::new(3.0, seed), 2000).unwrap();
        prop_assert!(r.passed);
        let t = t_from_q(&q, kappa).unwrap();
        let sampler = Sampler::new(4.0, seed ^ 0x5eed);
        let x = sampler.point(3, n);
        let tx = t.eval(&x).unwrap();
        let fixed = q.fixed_set().unwrap();
        for p in fixed.sample_points() {
            prop_assert!((&p - &tx).dot(&(&x - &tx)) <= 1e-9 * (1.0 + x.norm_squared()));
        }
        prop_assert!(!matches!(fixed, PointSet::Points(ref ps) if ps.is_empty()));
    }

    #[test]
    fn affine_spec_json_round_trips(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -1.0f64..1.0) {
        let spec = AffineSpec { matrix: vec![vec![a, b], vec![-b, a]], shift: Some(v(&[c, -c])) };
        let json = serde_json::to_string(&spec).unwrap();
        let back: AffineSpec = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, spec);
    }
}
