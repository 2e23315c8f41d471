use wlcnet::dynamics::*;
use wlcnet::graph::{pathway_matrix, CyclePermutation};
use wlcnet::learning::*;
use wlcnet::sweep::{exhaustive_specs, random_specs, run_trial, TrialOptions, TrialSpec};

fn three_neuron_teacher(dt: f64) -> LimitCycle {
    let net = WlcNetwork::from_permutation(
        CyclePermutation::from_sequence(&[1, 3, 2]).unwrap(),
        CouplingVector::new(vec![0.2, 0.6, 0.8]).unwrap(),
        DEFAULT_EPSILON,
    )
    .unwrap();
    LimitCycle::settle(&net, &[0.3, 0.5, 0.2], dt, 3.0).unwrap()
}

fn gamma0() -> CouplingVector {
    CouplingVector::new(vec![1.6, 0.1, 2.3]).unwrap()
}

fn settle(spec: &TrialSpec) -> LimitCycle {
    let net = WlcNetwork::from_permutation(
        spec.teacher.clone(),
        CouplingVector::new(spec.alpha.clone()).unwrap(),
        DEFAULT_EPSILON,
    )
    .unwrap();
    LimitCycle::settle(&net, &spec.x0, DEFAULT_DT, DEFAULT_WARMUP_PERIODS).unwrap()
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max)
}

#[test]
fn integrated_gamma_matches_the_closed_form() {
    let teacher = three_neuron_teacher(1e-3);
    let sigma = teacher.net.permutation().clone();
    let run = duration_learning_run(
        &teacher.net,
        &teacher.state,
        &pathway_matrix(&sigma),
        &gamma0(),
        2.0 * teacher.period,
        1e-3,
    )
    .unwrap();
    let p = observation_series(&run.x, &sigma);
    let oracle =
        closed_form_gamma_series(gamma0().values(), teacher.net.coupling().values(), &p).unwrap();
    let worst = run
        .gamma
        .samples()
        .zip(oracle.samples())
        .map(|(a, b)| sup_diff(a, b))
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "sup error {worst}");
}

#[test]
fn learner_activity_never_feeds_back_into_gamma() {
    let teacher = three_neuron_teacher(DEFAULT_DT);
    let w = teacher.net.pathway();
    let horizon = teacher.period;
    let plain = duration_learning_run(
        &teacher.net,
        &teacher.state,
        &w,
        &gamma0(),
        horizon,
        DEFAULT_DT,
    )
    .unwrap();
    for y0 in [[0.9, 0.05, 0.05], [0.1, 0.2, 0.7]] {
        let with_y = duration_learning_run_with_learner(
            &teacher.net,
            &teacher.state,
            &w,
            &gamma0(),
            horizon,
            DEFAULT_DT,
            Some(&y0),
        )
        .unwrap();
        assert!(with_y.y.is_some());
        for (a, b) in plain.gamma.samples().zip(with_y.gamma.samples()) {
            assert_eq!(a, b);
        }
    }
}

#[test]
fn distance_to_alpha_stays_under_the_exponential_envelope() {
    for n in [3usize, 6] {
        for spec in random_specs(n, 10, 77).unwrap() {
            let teacher = settle(&spec);
            let w = teacher.net.pathway();
            let traj = teacher.trajectory(1.2 * teacher.period).unwrap();
            let kappa = convergence_exponent(&traj, &w, teacher.period).unwrap();
            let g0 = CouplingVector::new(spec.gamma0.clone()).unwrap();
            let run = duration_learning_run(
                &teacher.net,
                &teacher.state,
                &w,
                &g0,
                4.0 * teacher.period,
                DEFAULT_DT,
            )
            .unwrap();
            let dist0 = sup_diff(&spec.gamma0, &spec.alpha);
            for k in 1..=4 {
                let g = run
                    .gamma
                    .sample(run.gamma.index_of(k as f64 * teacher.period));
                let bound = dist0 * (-kappa * k as f64 * teacher.period).exp();
                assert!(
                    sup_diff(g, &spec.alpha) <= bound * 1.01,
                    "n={n} seed={} k={k}",
                    spec.seed
                );
            }
        }
    }
}

#[test]
fn decay_rate_is_at_least_the_convergence_exponent() {
    let teacher = three_neuron_teacher(DEFAULT_DT);
    let w = teacher.net.pathway();
    let kappa = convergence_exponent(
        &teacher.trajectory(1.2 * teacher.period).unwrap(),
        &w,
        teacher.period,
    )
    .unwrap();
    let run = duration_learning_run(
        &teacher.net,
        &teacher.state,
        &w,
        &gamma0(),
        12.0 * teacher.period,
        DEFAULT_DT,
    )
    .unwrap();
    let alpha = teacher.net.coupling().values();
    let slope = fitted_decay_slope(&run.gamma, alpha, teacher.period, 1e-12).unwrap();
    assert!(slope <= -0.9 * kappa, "slope {slope}, κ {kappa}");
    assert!(sup_diff(run.gamma.last().unwrap(), alpha) < 1e-4);
}

#[test]
fn every_pair_of_four_neuron_cycles_is_learned_within_three_rewirings() {
    for spec in exhaustive_specs(4, 5).unwrap() {
        let r = run_trial(&spec, &TrialOptions::default());
        assert!(r.error.is_none(), "{:?}", r.error);
        assert!(r.recovered && r.iterations.unwrap() <= 3, "{r:?}");
        assert_eq!(r.misclassified, 0);
    }
}

#[test]
fn correct_graph_is_kept_without_rewiring() {
    let spec = &random_specs(6, 1, 3).unwrap()[0];
    let same = TrialSpec {
        learner: spec.teacher.clone(),
        ..spec.clone()
    };
    let r = run_trial(&same, &TrialOptions::default());
    assert_eq!(r.iterations, Some(0));
    assert_eq!(r.periods, 1);
    assert!(r.recovered);
}

#[test]
fn first_period_flags_exactly_the_wrong_edges() {
    // The learner agrees with the teacher on 1→2 and 3→4 only.
    let teacher_sigma = CyclePermutation::from_sequence(&[1, 2, 3, 4, 5]).unwrap();
    let learner_sigma = CyclePermutation::from_sequence(&[1, 2, 5, 3, 4]).unwrap();
    let spec = TrialSpec::with_graphs(teacher_sigma.clone(), learner_sigma.clone(), 11);
    let out = learn_structure(
        &settle(&spec),
        LearnerState::new(
            learner_sigma.clone(),
            CouplingVector::new(spec.gamma0.clone()).unwrap(),
        )
        .unwrap(),
        &StructureOptions::default(),
    )
    .unwrap();
    let first = &out.diagnostics[0];
    for v in &first.vertices {
        assert_eq!(v.sigma_j, learner_sigma.succ(v.j));
        assert_eq!(
            v.matched,
            teacher_sigma.succ(v.j) == v.sigma_j,
            "vertex {}",
            v.j
        );
    }
    assert_eq!(out.sigma, teacher_sigma);
}

#[test]
fn rejected_successors_are_never_retried_and_matches_are_kept() {
    for spec in random_specs(8, 6, 19).unwrap() {
        let out = learn_structure(
            &settle(&spec),
            LearnerState::new(
                spec.learner.clone(),
                CouplingVector::new(spec.gamma0.clone()).unwrap(),
            )
            .unwrap(),
            &StructureOptions::default(),
        )
        .unwrap();
        assert_eq!(out.periods, out.iterations + 1);
        assert_eq!(out.diagnostics.len(), out.periods);
        for j in 1..=8 {
            let tried: Vec<(usize, bool)> = out
                .diagnostics
                .iter()
                .map(|it| {
                    let v = &it.vertices[j - 1];
                    (v.sigma_j, v.matched)
                })
                .collect();
            if let Some(first) = tried.iter().position(|t| t.1) {
                assert!(
                    tried[first..].iter().all(|&t| t == tried[first]),
                    "vertex {j}: {tried:?}"
                );
            }
            let rejected: Vec<usize> = tried.iter().filter(|t| !t.1).map(|t| t.0).collect();
            let mut unique = rejected.clone();
            unique.sort_unstable();
            unique.dedup();
            assert_eq!(
                unique.len(),
                rejected.len(),
                "vertex {j} retried a successor: {tried:?}"
            );
            assert!(out.state.tested[j - 1].len() <= out.periods);
        }
    }
}

#[test]
fn lemma_residuals_vanish_and_gaps_shrink_at_the_predicted_rate() {
    let teacher = three_neuron_teacher(1e-3);
    let sigma_y = CyclePermutation::from_sequence(&[1, 2, 3]).unwrap();
    let report = lemma1_check(&teacher, &sigma_y, &gamma0(), 5).unwrap();
    for r in &report.residuals[1..4] {
        assert!(*r < 1e-5, "{:?}", report.residuals);
    }
    for q in report.gap_ratios().iter().take(3) {
        assert!(
            (q / report.max_a() - 1.0).abs() < 0.1,
            "{:?} vs {}",
            report.gap_ratios(),
            report.max_a()
        );
    }
    assert!(report.general_solution_error < 1e-6);
}
