use super::*;
use crate::kernel::Bandwidth;
use crate::oracle::batch_solve;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn sigma(s: f64) -> Bandwidth {
    Bandwidth::new(s).unwrap()
}

fn params(s: f64) -> HyperParams {
    HyperParams::new(sigma(s))
}

fn k(x: &[f64], y: &[f64], s: f64) -> f64 {
    let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    (-d2 / (2.0 * s * s)).exp()
}

fn two_point() -> SvddModel {
    SvddModel::initialize(&[[0.0, 0.0], [2.0, 0.0]], params(1.0)).unwrap()
}

fn sorted(mut v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Support set of an oracle solution, as points.
fn oracle_points<P: AsRef<[f64]>>(points: &[P], s: f64) -> (Vec<Vec<f64>>, f64) {
    let sol = batch_solve(points, sigma(s)).unwrap();
    let pts = sol
        .support_indices
        .iter()
        .map(|&i| points[i].as_ref().to_vec())
        .collect();
    (sorted(pts), sol.objective)
}

#[test]
fn score_matches_hand_evaluation() {
    let model = two_point();
    let z = [1.0, 0.0];
    // Eq-8 style evaluation straight from the definition, with x_k = (0, 0).
    let svs = [[0.0, 0.0], [2.0, 0.0]];
    let alpha = [0.5, 0.5];
    let first: f64 = alpha
        .iter()
        .zip(&svs)
        .map(|(a, x)| a * k(&svs[0], x, 1.0))
        .sum();
    let second: f64 = alpha.iter().zip(&svs).map(|(a, x)| a * k(&z, x, 1.0)).sum();
    let expected = first - second;
    assert!((expected - -0.0388631).abs() < 1e-7);

    let out = model.score(&z).unwrap();
    assert!((out.q - expected).abs() < 1e-14);
    assert_eq!(out.label, Label::Inside);
    assert!((model.threshold() - 0.5676676).abs() < 1e-7);
}

#[test]
fn support_vectors_score_zero() {
    let model =
        SvddModel::initialize(&[[0.0, 0.0], [2.0, 0.0]], params(1.0).with_eps_near(0.0)).unwrap();
    for sv in model.support_vectors() {
        let out = model.score(sv).unwrap();
        assert!(out.q.abs() < 1e-8);
        assert_eq!(out.label, Label::Inside);
    }
}

#[test]
fn far_points_are_flagged_without_q_decision() {
    let model = two_point();
    let out = model.score(&[500.0, 500.0]).unwrap();
    assert_eq!(out.label, Label::FarOutlier);
    assert!(out.max_similarity < 1e-6);
}

#[test]
fn near_duplicates_are_flagged() {
    let model =
        SvddModel::initialize(&[[0.0, 0.0], [2.0, 0.0]], params(1.0).with_eps_near(1e-3)).unwrap();
    assert_eq!(
        model.score(&[0.01, 0.0]).unwrap().label,
        Label::NearDuplicate
    );
    assert_eq!(
        model.score(&[2.0, 0.0]).unwrap().label,
        Label::NearDuplicate
    );
}

#[test]
fn score_rejects_bad_points() {
    let model = two_point();
    assert!(matches!(
        model.score(&[1.0]),
        Err(FisvddError::DimensionMismatch {
            expected: 2,
            actual: 1
        })
    ));
    assert!(matches!(
        model.score(&[1.0, f64::NAN]),
        Err(FisvddError::NonFinite { index: 1 })
    ));
}

#[test]
fn expand_single_into_symmetric_pair() {
    let mut model = SvddModel::initialize(&[[0.0, 0.0]], params(1.0)).unwrap();
    let z = [2.0, 0.0];
    let v = model.kernel_vector(&z);
    assert!((v[0] - (-2.0f64).exp()).abs() < 1e-15);
    assert_eq!(model.expand(&z, &v).unwrap(), Expansion::Admitted);
    let e = 1.0 / (1.0 + (-2.0f64).exp());
    for a in model.alpha_raw().iter() {
        assert!((a - e).abs() < 1e-14);
    }
    assert_eq!(model.alpha(), &[0.5, 0.5]);
}

#[test]
fn forced_expand_of_interior_point_rolls_back() {
    let mut model = two_point();
    let before = model.clone();
    let z = [1.0, 0.0];

    // Independent check: solve the 3x3 system directly.
    let pts = [[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]];
    let a = DMatrix::from_fn(3, 3, |i, j| k(&pts[i], &pts[j], 1.0));
    let alpha = a.lu().solve(&DVector::from_element(3, 1.0)).unwrap();
    assert!(alpha[2] <= 0.0);

    let v = model.kernel_vector(&z);
    assert_eq!(model.expand(&z, &v).unwrap(), Expansion::Rejected);
    assert_eq!(model, before);
}

#[test]
fn expand_reports_ill_conditioning() {
    let mut model = two_point();
    let before = model.clone();
    let z = [2.0, 0.0];
    let v = model.kernel_vector(&z);
    assert!(matches!(
        model.expand(&z, &v),
        Err(FisvddError::IllConditionedExpansion { .. })
    ));
    assert_eq!(model, before);
}

#[test]
fn shrink_single_negative_entry() {
    let mut model = SvddModel::initialize(&[[0.0], [1.0]], params(1.0)).unwrap();
    let z = [2.0];
    let v = model.kernel_vector(&z);
    assert_eq!(model.expand(&z, &v).unwrap(), Expansion::Admitted);
    let negatives = model.alpha_raw().iter().filter(|&&a| a <= 0.0).count();
    assert_eq!(negatives, 1);
    assert!(model.alpha_raw()[1] <= 0.0);

    let mut backup = BackupSet::new();
    model.shrink(&mut backup).unwrap();
    assert_eq!(backup.len(), 1);
    assert_eq!(backup.get(0).unwrap(), &[1.0]);
    assert_eq!(model.support_vectors(), &[vec![0.0], vec![2.0]]);
    assert!(model.alpha_raw().all_positive());
    model.check_invariants().unwrap();
}

#[test]
fn shrink_removes_lowest_index_on_ties() {
    // Mirror-symmetric configuration: the two inner points end up with
    // bit-identical negative multipliers once both outer points are in.
    let mut model = SvddModel::initialize(&[[0.0, 0.3], [0.0, -0.3]], params(1.0)).unwrap();
    for z in [[-0.8, 0.0], [0.8, 0.0]] {
        let v = model.kernel_vector(&z);
        model.expand(&z, &v).unwrap();
    }
    let raw = model.alpha_raw().as_slice().to_vec();
    assert!(raw[0] <= 0.0 && raw[1] <= 0.0);
    assert_eq!(raw[0], raw[1]);

    let mut backup = BackupSet::new();
    model.shrink(&mut backup).unwrap();
    assert_eq!(backup.get(0).unwrap(), &[0.0, 0.3]);
}

#[test]
fn shrink_matches_oracle_on_covering_point() {
    // Hexagon of support vectors; the new point sits outside the edge
    // between vertices 0 and 1 and pushes both inside.
    let hex: Vec<Vec<f64>> = (0..6)
        .map(|i| {
            let t = i as f64 * std::f64::consts::PI / 3.0;
            vec![t.cos(), t.sin()]
        })
        .collect();
    let mut model = SvddModel::initialize(&hex, params(1.0)).unwrap();
    assert_eq!(model.len(), 6);
    let t = std::f64::consts::PI / 6.0;
    let z = vec![1.5 * t.cos(), 1.5 * t.sin()];

    let out = model.process_point(&z).unwrap();
    assert_eq!(out.action, Action::AbsorbedWithShrink);

    let mut all = hex.clone();
    all.push(z);
    let (expected, objective) = oracle_points(&all, 1.0);
    assert_eq!(expected.len(), 5);
    assert_eq!(sorted(model.support_vectors().to_vec()), expected);
    assert!((model.objective_value() - objective).abs() < 1e-9);
    model.check_invariants().unwrap();
}

#[test]
fn identical_stream_stays_singleton() {
    for eps_near in [1e-9, 0.0] {
        let mut model =
            SvddModel::initialize(&[[0.5, 0.5]], params(1.0).with_eps_near(eps_near)).unwrap();
        for _ in 0..50 {
            let out = model.process_point(&[0.5, 0.5]).unwrap();
            let expected = if eps_near > 0.0 {
                Action::DiscardedNearDuplicate
            } else {
                Action::DiscardedInterior
            };
            assert_eq!(out.action, expected);
        }
        assert_eq!(model.len(), 1);
        assert_eq!(model.alpha(), &[1.0]);
        assert_eq!(model.threshold(), 1.0);
    }
}

#[test]
fn interior_point_is_discarded() {
    let mut model = two_point();
    let before = model.clone();
    let out = model.process_point(&[1.0, 0.0]).unwrap();
    assert_eq!(out.action, Action::DiscardedInterior);
    assert_eq!(out.sv_count, 2);
    assert_eq!(model, before);
}

#[test]
fn small_stream_matches_oracle() {
    let stream = [[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]];
    let mut model = SvddModel::initialize(&stream[..1], params(1.0)).unwrap();
    for z in &stream[1..] {
        model.process_point(z).unwrap();
    }
    let (expected, objective) = oracle_points(&stream, 1.0);
    assert_eq!(sorted(model.support_vectors().to_vec()), expected);
    assert!((model.objective_value() - objective).abs() < 1e-9);
    let sol = batch_solve(&stream, sigma(1.0)).unwrap();
    for (i, a) in sol.support_indices.iter().zip(&sol.alpha) {
        let pos = model
            .support_vectors()
            .iter()
            .position(|sv| sv.as_slice() == stream[*i])
            .unwrap();
        assert!((model.alpha()[pos] - a).abs() < 1e-9);
    }
}

#[test]
fn initialize_single_point() {
    let model = SvddModel::initialize(&[[4.0, -1.0, 2.0]], params(0.3)).unwrap();
    assert_eq!(model.len(), 1);
    assert_eq!(model.alpha(), &[1.0]);
    assert_eq!(model.threshold(), 1.0);
    assert_eq!(model.objective_value(), 1.0);
}

#[test]
fn initialize_drops_interior_burn_in_points() {
    let mut rng = StdRng::seed_from_u64(20);
    let mut pts: Vec<Vec<f64>> = vec![
        vec![0.0, 0.0],
        vec![0.0, 2.0],
        vec![2.0, 0.0],
        vec![2.0, 2.0],
    ];
    for _ in 0..16 {
        pts.push(vec![rng.random_range(0.8..1.2), rng.random_range(0.8..1.2)]);
    }
    let model = SvddModel::initialize(&pts, params(1.0)).unwrap();
    let (expected, objective) = oracle_points(&pts, 1.0);
    assert_eq!(sorted(model.support_vectors().to_vec()), expected);
    assert_eq!(model.len(), 4);
    assert!((model.objective_value() - objective).abs() < 1e-9);
    model.check_invariants().unwrap();
}

#[test]
fn initialize_deduplicates_and_validates() {
    let model = SvddModel::initialize(&[[0.0], [0.0], [1.0], [1.0 + 1e-12]], params(1.0)).unwrap();
    assert_eq!(model.len(), 2);
    let empty: [[f64; 1]; 0] = [];
    assert!(matches!(
        SvddModel::initialize(&empty, params(1.0)),
        Err(FisvddError::EmptyInput(_))
    ));
    assert!(SvddModel::initialize(&[vec![0.0], vec![1.0, 2.0]], params(1.0)).is_err());
    assert!(SvddModel::initialize(&[[f64::NAN]], params(1.0)).is_err());
    assert!(SvddModel::initialize(&[[0.0]], params(1.0).with_max_sv(0)).is_err());
}

#[test]
fn initialize_respects_cap() {
    let pts: Vec<[f64; 1]> = (0..6).map(|i| [3.0 * i as f64]).collect();
    let model = SvddModel::initialize(&pts, params(1.0).with_max_sv(3)).unwrap();
    assert_eq!(model.len(), 3);
    model.check_invariants().unwrap();
}

#[test]
fn objective_closed_forms() {
    assert_eq!(
        SvddModel::initialize(&[[0.0]], params(1.0))
            .unwrap()
            .objective_value(),
        1.0
    );
    // Separation chosen so that K = 0.5.
    let d = (2.0 * 2.0f64.ln()).sqrt();
    let model = SvddModel::initialize(&[[0.0], [d]], params(1.0)).unwrap();
    assert!((model.objective_value() - 0.75).abs() < 1e-14);
}

#[test]
fn objective_equals_quadratic_form() {
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..20 {
        let pts: Vec<Vec<f64>> = (0..12)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let s = rng.random_range(0.3..1.0);
        let mut model = SvddModel::initialize(&pts[..1], params(s)).unwrap();
        for p in &pts[1..] {
            model.process_point(p).unwrap();
        }
        let svs = model.support_vectors();
        let alpha = model.alpha();
        let mut direct = 0.0;
        for i in 0..svs.len() {
            for j in 0..svs.len() {
                direct += alpha[i] * alpha[j] * k(&svs[i], &svs[j], s);
            }
        }
        assert!((model.objective_value() - direct).abs() < 1e-10);
    }
}

#[test]
fn cap_case_a_shrinks_normally() {
    let mut model = SvddModel::initialize(&[[0.0], [1.0]], params(1.0).with_max_sv(2)).unwrap();
    let out = model.process_point(&[2.0]).unwrap();
    assert_eq!(out.action, Action::AbsorbedWithShrink);
    assert_eq!(model.support_vectors(), &[vec![0.0], vec![2.0]]);
    model.check_invariants().unwrap();
}

#[test]
fn cap_case_b_discards_weakest_newcomer() {
    let mut model =
        SvddModel::initialize(&[[0.0, 0.0], [1.0, 0.0]], params(1.0).with_max_sv(2)).unwrap();
    let before = model.clone();
    let z = [0.5, 0.6];
    assert_eq!(model.score(&z).unwrap().label, Label::Outside);
    let out = model.process_point(&z).unwrap();
    assert_eq!(out.action, Action::DiscardedAtCap);
    assert_eq!(model, before);
}

#[test]
fn cap_case_c_replaces_weakest_support_vector() {
    for (z, kept) in [([0.5, 0.9], [1.0, 0.0]), ([3.0, 0.0], [0.0, 0.0])] {
        let mut model =
            SvddModel::initialize(&[[0.0, 0.0], [1.0, 0.0]], params(1.0).with_max_sv(2)).unwrap();
        let out = model.process_point(&z).unwrap();
        assert_eq!(out.action, Action::ReplacedUnderCap);
        assert_eq!(out.sv_count, 2);
        assert_eq!(model.support_vectors(), &[kept.to_vec(), z.to_vec()]);
        model.check_invariants().unwrap();
    }
}

#[test]
fn errors_leave_model_untouched() {
    let mut model = two_point();
    let before = model.clone();
    assert!(model.process_point(&[1.0, 2.0, 3.0]).is_err());
    assert!(model.process_point(&[f64::INFINITY, 0.0]).is_err());
    assert_eq!(model, before);
}

#[test]
fn refresh_keeps_model_consistent() {
    let mut rng = StdRng::seed_from_u64(77);
    let pts: Vec<Vec<f64>> = (0..300)
        .map(|_| vec![rng.random::<f64>() * 4.0, rng.random::<f64>() * 4.0])
        .collect();
    let mut plain = SvddModel::initialize(&pts[..5], params(0.8)).unwrap();
    let mut refreshed =
        SvddModel::initialize(&pts[..5], params(0.8).with_refresh_every(Some(3))).unwrap();
    for p in &pts[5..] {
        plain.process_point(p).unwrap();
        refreshed.process_point(p).unwrap();
        refreshed.check_invariants().unwrap();
    }
    assert!((plain.objective_value() - refreshed.objective_value()).abs() < 1e-9);
    refreshed.refresh().unwrap();
    refreshed.check_invariants().unwrap();
}

fn stream_strategy() -> impl Strategy<Value = (u64, usize, f64)> {
    (any::<u64>(), 5usize..60, 0.3..1.5f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn invariants_hold_after_every_update((seed, n, s) in stream_strategy()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..2).map(|_| rng.random::<f64>() * 3.0).collect())
            .collect();
        let mut model = SvddModel::initialize(&pts[..1], params(s)).unwrap();
        let mut last = model.objective_value();
        for p in &pts[1..] {
            let out = model.process_point(p).unwrap();
            prop_assert_eq!(out.objective, model.threshold());
            prop_assert_eq!(out.sv_count, model.len());
            prop_assert_ne!(out.action, Action::Reverted);
            prop_assert!(model.objective_value() <= last);
            last = model.objective_value();
            let report = model.invariant_report();
            prop_assert!(report.check().is_ok(), "{:?}", report);
        }
    }

    #[test]
    fn refeeding_an_interior_point_is_a_no_op((seed, n, s) in stream_strategy()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut model = SvddModel::initialize(&[[0.0, 0.0]], params(s)).unwrap();
        for _ in 0..n {
            let p = [rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0];
            let out = model.process_point(&p).unwrap();
            if out.action == Action::DiscardedInterior {
                let before = model.clone();
                let again = model.process_point(&p).unwrap();
                prop_assert_eq!(again.action, Action::DiscardedInterior);
                prop_assert_eq!(&model, &before);
            }
        }
    }

    #[test]
    fn cap_is_never_exceeded(seed in any::<u64>(), cap in 1usize..6) {
        let mut rng = StdRng::seed_from_u64(seed);
        let mut model = SvddModel::initialize(&[[0.0, 0.0]], params(0.4).with_max_sv(cap)).unwrap();
        for _ in 0..80 {
            let p = [rng.random::<f64>() * 3.0, rng.random::<f64>() * 3.0];
            let out = model.process_point(&p).unwrap();
            prop_assert!(out.sv_count <= cap);
            prop_assert!(model.check_invariants().is_ok());
        }
    }
}
