use proptest::prelude::*;
use wlcnet::dynamics::*;
use wlcnet::graph::{pathway_matrix, CyclePermutation};
use wlcnet::Error;

fn network(seq: &[usize], alpha: &[f64]) -> WlcNetwork {
    WlcNetwork::from_permutation(
        CyclePermutation::from_sequence(seq).unwrap(),
        CouplingVector::new(alpha.to_vec()).unwrap(),
        DEFAULT_EPSILON,
    )
    .unwrap()
}

fn fig2() -> WlcNetwork {
    network(&[1, 2, 3, 4, 5, 6], &[0.6, 0.5, 0.7, 0.1, 0.8, 0.3])
}

#[test]
fn six_neuron_ring_switches_in_order_with_alpha_ordered_durations() {
    let cycle =
        LimitCycle::settle(&fig2(), &[0.3, 0.2, 0.1, 0.4, 0.5, 0.6], DEFAULT_DT, 3.0).unwrap();
    let report = switching_report(&cycle.trajectory(4.0 * cycle.period).unwrap(), 0.0).unwrap();
    assert!(report.cycles() >= 3);
    let seq = report.neuron_sequence();
    for w in seq.windows(2) {
        assert_eq!(
            w[1],
            w[0] % 6 + 1,
            "argmax must advance around the ring: {seq:?}"
        );
    }
    let d = report.complete_durations().unwrap();
    let mut by_duration: Vec<usize> = (0..6).collect();
    by_duration.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    assert_eq!(by_duration, vec![3, 5, 1, 0, 2, 4]);
    // One cycle is the sum of its on-states.
    let total: f64 = d.iter().sum();
    assert!(
        (total - cycle.period).abs() < 1e-3 * cycle.period,
        "{total} vs {}",
        cycle.period
    );
    assert!(cycle.periodicity_defect(2).unwrap() < 1e-5);
}

#[test]
fn strong_couplings_settle_on_an_equilibrium() {
    let net = network(&[1, 3, 2], &[1.6, 0.1, 2.3]);
    assert!(!net.coupling().is_wlc_admissible());
    assert!(matches!(
        LimitCycle::settle(&net, &[0.3, 0.5, 0.2], DEFAULT_DT, 1.0),
        Err(Error::NoPeriod(_))
    ));
    let traj = integrate(&net, &[0.3, 0.5, 0.2], 3000.0, DEFAULT_DT).unwrap();
    let tail = traj.slice(traj.len() - 1000, traj.len());
    let winners: Vec<usize> = tail
        .samples()
        .map(|x| (0..3).max_by(|&a, &b| x[a].total_cmp(&x[b])).unwrap())
        .collect();
    assert!(winners.iter().all(|&w| w == winners[0]));
}

#[test]
fn rk4_error_shrinks_at_fourth_order() {
    let net = network(&[1, 3, 2], &[0.2, 0.6, 0.8]);
    let x0 = [0.3, 0.5, 0.2];
    let end = |dt: f64| {
        integrate(&net, &x0, 20.0, dt)
            .unwrap()
            .last()
            .unwrap()
            .to_vec()
    };
    let (a, b, c) = (end(0.1), end(0.05), end(0.025));
    let diff = |u: &[f64], v: &[f64]| {
        u.iter()
            .zip(v)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max)
    };
    let ratio = diff(&a, &b) / diff(&b, &c);
    assert!((10.0..22.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn duration_grows_with_its_own_coupling() {
    let mut last = 0.0;
    for a in [0.15, 0.35, 0.55, 0.75, 0.9] {
        let net = network(&[1, 2, 3, 4], &[a, 0.5, 0.5, 0.5]);
        let (d, _) = measured_durations(&net, &[0.4, 0.3, 0.2, 0.1], DEFAULT_DT).unwrap();
        assert!(d[0] > last, "T1({a}) = {} not above {last}", d[0]);
        last = d[0];
    }
}

#[test]
fn calibration_hits_targets() {
    let w = pathway_matrix(&CyclePermutation::from_sequence(&[1, 3, 2]).unwrap());
    let targets = [20.0, 14.0, 26.0];
    let alpha = calibrate_alpha(&w, &targets, DEFAULT_EPSILON, DEFAULT_DT).unwrap();
    let net = WlcNetwork::new(&w, alpha.clone(), DEFAULT_EPSILON).unwrap();
    let (d, _) = measured_durations(&net, &[0.3, 0.5, 0.2], DEFAULT_DT).unwrap();
    for (got, want) in d.iter().zip(targets) {
        assert!((got - want).abs() < 0.01 * want, "{d:?} vs {targets:?}");
    }
    assert!(alpha.get(2) < alpha.get(1) && alpha.get(1) < alpha.get(3));
}

#[test]
fn equal_targets_give_equal_couplings() {
    let w = pathway_matrix(&CyclePermutation::from_sequence(&[1, 2, 3, 4]).unwrap());
    let alpha = calibrate_alpha(&w, &[18.0; 4], DEFAULT_EPSILON, DEFAULT_DT).unwrap();
    let v = alpha.values();
    let spread =
        v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 0.02, "{v:?}");
}

#[test]
fn unreachable_targets_are_reported() {
    let w = pathway_matrix(&CyclePermutation::from_sequence(&[1, 2, 3]).unwrap());
    let err = calibrate_alpha(&w, &[1.0, 15.0, 15.0], DEFAULT_EPSILON, DEFAULT_DT).unwrap_err();
    assert!(
        matches!(err, Error::CalibrationRange { neuron: 1, .. }),
        "{err}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn states_stay_positive_and_bounded(
        alpha in prop::collection::vec(0.05f64..0.95, 5),
        x0 in prop::collection::vec(0.01f64..1.0, 5),
    ) {
        let net = network(&[1, 4, 2, 5, 3], &alpha);
        let traj = integrate(&net, &x0, 300.0, DEFAULT_DT).unwrap();
        for x in traj.samples() {
            prop_assert!(x.iter().all(|&v| v > 0.0 && v <= STATE_BOUND));
        }
    }

    #[test]
    fn relabelling_neurons_relabels_the_trajectory(
        alpha in prop::collection::vec(0.1f64..0.9, 4),
        x0 in prop::collection::vec(0.05f64..0.95, 4),
    ) {
        // Ring 1→2→3→4 against its image under the relabelling k ↦ 5 − k.
        let a = network(&[1, 2, 3, 4], &alpha);
        let rev_alpha: Vec<f64> = alpha.iter().rev().cloned().collect();
        let rev_x0: Vec<f64> = x0.iter().rev().cloned().collect();
        let b = network(&[4, 3, 2, 1], &rev_alpha);
        let ta = integrate(&a, &x0, 50.0, DEFAULT_DT).unwrap();
        let tb = integrate(&b, &rev_x0, 50.0, DEFAULT_DT).unwrap();
        for (u, v) in ta.samples().zip(tb.samples()) {
            for j in 0..4 {
                prop_assert!((u[j] - v[3 - j]).abs() < 1e-12);
            }
        }
    }
}
