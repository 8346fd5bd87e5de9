mod common;

use common::{random_homogeneous, relative_inf, TS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use xilc::agents::default_target;
use xilc::learning::{
    compose_learning_signal, execute, predicted_error, prepare, run_experiment, BoundPolicy, DynamicsSource,
    Experiment, LearningConfig, TrainerSetup, TrainingRecord,
};
use xilc::lti::{is_stable, FrequencyGrid, Signal, TransferFunction};
use xilc::reference::{fig2_paths, sample_path, SamplingMode, ScenarioMap};

fn fig3_experiment() -> Experiment<f64> {
    let (training, target_path) = fig2_paths::<f64>();
    Experiment {
        grid: FrequencyGrid::default_grid(),
        target: default_target(TS).unwrap(),
        reference: sample_path(&target_path, TS, SamplingMode::Linear).unwrap(),
        trainers: vec![TrainerSetup {
            agent: default_target(TS).unwrap(),
            scenario: ScenarioMap::relating(&target_path, &training).unwrap(),
            dynamics: DynamicsSource::Identity,
            alpha: TransferFunction::one(),
            taps: 16,
            lead: 1,
        }],
        learning: LearningConfig::default(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn homogeneous_runs_match_closed_form(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exp = random_homogeneous(&mut rng, n);
        let run = run_experiment(&exp).unwrap();
        let scenarios: Vec<_> = exp.trainers.iter().map(|t| t.scenario).collect();
        let records: Vec<TrainingRecord<f64>> = run.per_trainer.clone();
        let closed = predicted_error(&records, &scenarios, &run.maps, &run.filters, &exp.target.f, run.target_h.len()).unwrap();
        prop_assert!(relative_inf(&run.target_h, &closed) < 1e-9);
        prop_assert!(relative_inf(&run.target_h, &run.predicted_h) < 1e-9);
    }

    #[test]
    fn gates_act_on_per_sample_norms(seed in any::<u64>(), delta in 0.0f64..0.05) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let exp = random_homogeneous(&mut rng, 1);
        let prepared = prepare(&exp).unwrap();
        let run = execute(&exp, &prepared).unwrap();
        let hs = exp.learning.head_start;
        let n = run.target_h.len();
        let records: Vec<_> = run.per_trainer.iter().map(|r| {
            let mut r = r.clone();
            r.h_k = r.h_k.truncated(n + hs);
            r.s_k = r.s_k.truncated(n + hs);
            r.reference = r.reference.truncated(n + hs);
            r
        }).collect();
        let scenarios: Vec<_> = exp.trainers.iter().map(|t| t.scenario).collect();
        let gated_cfg = LearningConfig { delta_h: delta, ..exp.learning.clone() };
        let gated = compose_learning_signal(&records, &scenarios, &prepared.maps, &prepared.filters, &gated_cfg).unwrap();

        // Zero the error samples by hand, then compose with gates off.
        let manual: Vec<_> = records.iter().map(|r| {
            let mut r = r.clone();
            let rows: Vec<Vec<f64>> = (0..r.h_k.len()).map(|t| {
                let x = r.h_k.sample(t);
                let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > delta { x.to_vec() } else { vec![0.0; 3] }
            }).collect();
            r.h_k = Signal::new(TS, 3, rows).unwrap();
            r
        }).collect();
        let open = compose_learning_signal(&manual, &scenarios, &prepared.maps, &prepared.filters, &exp.learning).unwrap();
        prop_assert_eq!(gated, open);
    }
}

#[test]
fn zero_gates_reproduce_ungated_composition() {
    let exp = fig3_experiment();
    let base = run_experiment(&exp).unwrap();
    let mut tiny = exp.clone();
    tiny.learning.delta_h = 0.0;
    tiny.learning.delta_s = 0.0;
    assert_eq!(run_experiment(&tiny).unwrap().composed_s, base.composed_s);
    let mut shut = exp;
    shut.learning.delta_h = 1e6;
    let run = run_experiment(&shut).unwrap();
    assert_eq!(run.composed_s.max_abs(), 0.0);
    assert_eq!(run.target_h, run.baseline_h);
}

#[test]
fn composition_matches_straight_line_filtering() {
    let exp = fig3_experiment();
    let run = run_experiment(&exp).unwrap();
    let filter = &run.filters.filters[0];
    let lead = filter.lead;
    let inv = exp.trainers[0].scenario.scale_inverse();
    let h = &run.per_trainer[0].h_k;
    let n = run.target_h.len();
    for (axis, inv_axis) in inv.iter().enumerate() {
        let taps = filter.l.diagonal().unwrap()[axis].num().to_vec();
        for t in 0..n {
            // s(t) = Λ⁻¹ Σₙ cₙ h(t + lead − n); trainers fly with s = 0.
            let mut acc = 0.0;
            for (i, c) in taps.iter().enumerate() {
                if t + lead >= i {
                    acc += c * h.sample(t + lead - i)[axis];
                }
            }
            let want = inv_axis * acc;
            let got = run.composed_s.sample(t)[axis];
            assert!(
                (got - want).abs() < 1e-12 * (1.0 + want.abs()),
                "t {t} axis {axis}: {got} vs {want}"
            );
        }
    }
}

#[test]
fn learning_never_touches_the_loop() {
    let exp = fig3_experiment();
    let before = (is_stable(&exp.target.t).stable, is_stable(&exp.target.f).stable);
    let run = run_experiment(&exp).unwrap();
    assert_eq!(before, (true, true));
    assert_eq!(
        (is_stable(&exp.target.t).stable, is_stable(&exp.target.f).stable),
        before
    );
    // h − h₀ is the loop's response to s alone.
    let diff = run.target_h.sub(&run.baseline_h).unwrap();
    let via_f = xilc::lti::simulate(&exp.target.f, &run.composed_s).unwrap();
    assert!(diff.sub(&via_f).unwrap().max_abs() < 1e-12);
}

#[test]
fn zero_knowledge_is_neutral_for_random_experiments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let exp = random_homogeneous(&mut rng, 2);
        let mut prepared = prepare(&exp).unwrap();
        for f in &mut prepared.filters.filters {
            f.alpha = TransferFunction::zero();
            f.l = xilc::lti::TransferMatrix::zeros(3, 3);
        }
        let run = execute(&exp, &prepared).unwrap();
        assert_eq!(run.target_h, run.baseline_h);
    }
}

#[test]
fn contraction_bound_holds_on_random_homogeneous_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 10 {
        let n = 1 + checked % 3;
        let mut exp = random_homogeneous(&mut rng, n);
        exp.learning.enforce = BoundPolicy::Strict;
        let Ok(run) = run_experiment(&exp) else { continue };
        let rho = run.convergence.as_ref().unwrap().margin;
        let norms: Vec<f64> = run
            .per_trainer
            .iter()
            .map(|r| r.h_k.truncated(run.target_h.len()).max_abs())
            .collect();
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        let max = norms.iter().copied().fold(0.0, f64::max);
        let h = run.target_h.max_abs();
        assert!(h < min, "‖h‖ {h} vs min {min}");
        assert!(
            h <= rho * n as f64 * max + 1e-9,
            "‖h‖ {h} vs ρN max {}",
            rho * n as f64 * max
        );
        checked += 1;
    }
}
