use stomo_core::baselines::{burn_in_pgd, scalarize, BurnInSettings, ScalarizeSettings};
use stomo_core::math::{dist, dot};
use stomo_core::oracle::{
    make_known_optimum_quadratic, make_np_classification, make_portfolio, make_stochastic_lp, ClassSource,
    LpProblem, QuadraticOptions, QuadraticProblem,
};
use stomo_core::{project_ball, project_halfspaces, Error, Halfspace, Problem, SampledFunctions, StochasticOracle};

fn lp(noise: f64) -> LpProblem {
    make_stochastic_lp(
        vec![-1.0, -0.5, 0.2],
        vec![vec![4.0, 2.0, 0.0], vec![3.0, 0.0, 3.0]],
        vec![1.0, 1.0],
        noise,
        1.0,
    )
    .unwrap()
}

fn burn(horizon: u64, relax: Option<Vec<f64>>) -> BurnInSettings {
    BurnInSettings { fraction: 0.3, relax, horizon, step: None, seed: 0 }
}

#[test]
fn objective_weight_only_is_plain_sgd() {
    let q = make_known_optimum_quadratic(5, 2, 42).unwrap();
    let spec = q.spec();
    let settings = ScalarizeSettings { weights: vec![1.0, 0.0, 0.0], horizon: 3000, step_scale: None, seed: 0 };
    let trace = scalarize(spec, &mut q.oracle(0, 0), &settings).unwrap();

    let c = spec.domain.radius() / spec.lipschitz;
    let mut oracle = q.oracle(0, 0);
    let mut w = vec![0.0; 5];
    let mut sum = vec![0.0; 5];
    for t in 1..=3000 {
        let s = oracle.draw();
        sum.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
        let g = s.grad_at(&w, 0);
        let eta = c / (t as f64).sqrt();
        w.iter_mut().zip(&g).for_each(|(a, b)| *a -= eta * b);
        w = project_ball(&w, 1.0);
    }
    sum.iter_mut().for_each(|v| *v /= 3000.0);
    assert!(dist(&sum, trace.averaged.as_slice()) <= 1e-12);
}

#[test]
fn heavy_constraint_weights_trade_objective_for_feasibility() {
    let quiet = QuadraticOptions { objective_noise: 0.0, constraint_noise: 0.0, ..QuadraticOptions::default() };
    let q = QuadraticProblem::from_parts(vec![0.5, 0.5], vec![vec![1.0, 0.0]], vec![0.0], quiet).unwrap();
    let f = q.expected().unwrap();
    let run = |weights: Vec<f64>| {
        let s = ScalarizeSettings { weights, horizon: 20_000, step_scale: Some(0.5), seed: 0 };
        let t = scalarize(q.spec(), &mut q.oracle(0, 0), &s).unwrap();
        let w = t.averaged.into_vec();
        (f.value(&w, 0) - q.spec().known_optimum.as_ref().unwrap().value, f.value(&w, 1))
    };
    let (_, light_viol) = run(vec![1.0, 0.0]);
    let (heavy_subopt, heavy_viol) = run(vec![1.0, 50.0]);
    assert!(light_viol > 0.4);
    assert!(heavy_viol < 0.0 && heavy_subopt > 0.0);
}

#[test]
fn invalid_weights_are_rejected() {
    let q = make_known_optimum_quadratic(3, 1, 0).unwrap();
    for weights in [vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, -1.0], vec![1.0]] {
        let s = ScalarizeSettings { weights, horizon: 10, step_scale: None, seed: 0 };
        assert!(scalarize(q.spec(), &mut q.oracle(0, 0), &s).is_err());
    }
}

#[test]
fn noiseless_burn_in_is_sgd_on_the_true_domain() {
    let p = lp(0.0);
    let spec = p.spec();
    let trace = burn_in_pgd(spec, p.expected(), &mut p.oracle(0, 0), &burn(2000, Some(vec![0.0, 0.0]))).unwrap();
    let report = trace.burn_in.as_ref().unwrap();
    assert_eq!(report.burn_in, 600);
    assert_eq!(report.estimation_error, Some(0.0));

    let hs = vec![Halfspace::new(vec![4.0, 2.0, 0.0], 1.0), Halfspace::new(vec![3.0, 0.0, 3.0], 1.0)];
    let eta = 1.0 / (spec.lipschitz * 1400f64.sqrt());
    let mut w = project_halfspaces(&[0.0; 3], &hs, 1.0).unwrap();
    let mut sum = vec![0.0; 3];
    for _ in 0..1400 {
        sum.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
        let moved = [w[0] + eta, w[1] + 0.5 * eta, w[2] - 0.2 * eta];
        w = project_halfspaces(&moved, &hs, 1.0).unwrap();
    }
    sum.iter_mut().for_each(|v| *v /= 1400.0);
    assert!(dist(&sum, trace.averaged.as_slice()) <= 1e-9);
}

#[test]
fn iterates_satisfy_the_estimated_constraints() {
    let p = lp(0.3);
    let spec = p.spec();
    let settings = burn(5000, None);
    let trace = burn_in_pgd(spec, p.expected(), &mut p.oracle(8, 0), &settings).unwrap();
    let relax = &trace.burn_in.as_ref().unwrap().relax;

    // Rebuild the estimated constraints from the same burn-in draws.
    let mut oracle = p.oracle(8, 0);
    let mut rows = vec![vec![0.0; 3]; 2];
    let mut offsets = [0.0; 2];
    for _ in 0..settings.burn_in() {
        let s = oracle.draw();
        for i in 0..2 {
            let lf = s.linear_form(i + 1).unwrap();
            rows[i].iter_mut().zip(lf.coeffs).for_each(|(a, b)| *a += b);
            offsets[i] += lf.offset;
        }
    }
    let n = settings.burn_in() as f64;
    for r in &trace.iterate_log {
        for i in 0..2 {
            let value = dot(&rows[i], &r.w) / n + offsets[i] / n;
            assert!(value <= spec.gamma[i] + relax[i] + 1e-7, "t = {}: {value}", r.t);
        }
    }
    assert!(relax.iter().all(|&r| r > 0.0));
}

#[test]
fn estimation_error_shrinks_with_burn_in_length() {
    let p = lp(0.3);
    let median = |horizon: u64| {
        let mut errs: Vec<f64> = (0..11)
            .map(|seed| {
                let t = burn_in_pgd(p.spec(), p.expected(), &mut p.oracle(seed, 0), &burn(horizon, None)).unwrap();
                t.burn_in.unwrap().estimation_error.unwrap()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        errs[5]
    };
    let (short, long) = (median(1000), median(100_000));
    // Ten times the draws in each direction of a sqrt law.
    assert!(long < short / 5.0 && long > short / 20.0, "{short} -> {long}");
}

#[test]
fn degenerate_splits_and_domains_are_rejected() {
    let p = lp(0.1);
    let full = BurnInSettings { fraction: 1.0, ..burn(100, None) };
    assert!(matches!(burn_in_pgd(p.spec(), None, &mut p.oracle(0, 0), &full), Err(Error::Config(_))));
    let all_burn = BurnInSettings { fraction: 0.999, ..burn(100, None) };
    assert!(matches!(burn_in_pgd(p.spec(), None, &mut p.oracle(0, 0), &all_burn), Err(Error::Config(_))));

    let pf = make_portfolio(vec![0.1, 0.2], vec![0.04, 0.0, 0.0, 0.09], 0.15, 1.0).unwrap();
    assert!(matches!(burn_in_pgd(pf.spec(), None, &mut pf.oracle(0, 0), &burn(100, None)), Err(Error::Config(_))));
}

#[test]
fn nonlinear_constraints_are_rejected() {
    let np = make_np_classification(
        ClassSource::isotropic(vec![1.0, 0.5], 1.0),
        ClassSource::isotropic(vec![-1.0, -0.5], 1.0),
        0.5,
        2.0,
    )
    .unwrap();
    let r = burn_in_pgd(np.spec(), np.expected(), &mut np.oracle(0, 0), &burn(100, None));
    assert_eq!(r.unwrap_err(), Error::NonLinearConstraint(1));
}

#[test]
fn empty_estimated_domain_is_infeasible() {
    let p = lp(0.0);
    let r = burn_in_pgd(p.spec(), None, &mut p.oracle(0, 0), &burn(100, Some(vec![-10.0, 0.0])));
    assert!(matches!(r, Err(Error::Infeasible(_))));
}
