#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use xilc::agents::{build_agent, AgentModel, PlantSpec};
use xilc::learning::{BoundPolicy, Chaining, DynamicsSource, Experiment, LearningConfig, TrainerSetup};
use xilc::lti::{FrequencyGrid, Signal, TransferFunction};
use xilc::reference::{sample_path, ReferenceTrajectory, SamplingMode, ScenarioMap, WaypointPath};

pub const TS: f64 = 0.02;

pub fn random_pd_agent(rng: &mut ChaCha8Rng, name: &str) -> AgentModel<f64> {
    loop {
        let spec = PlantSpec::PdDoubleIntegrator {
            kp: rng.gen_range(1.0..6.0),
            kd: rng.gen_range(1.0..4.0),
        };
        let axes = [spec.clone(), spec.clone(), spec];
        if let Ok(agent) = build_agent(name, &axes, TS) {
            return agent;
        }
    }
}

pub fn random_reference(rng: &mut ChaCha8Rng) -> ReferenceTrajectory<f64> {
    let count = rng.gen_range(3..6);
    let waypoints: Vec<[f64; 3]> = (0..count)
        .map(|_| {
            [
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(0.0..3.0),
            ]
        })
        .collect();
    let durations: Vec<f64> = (1..count).map(|_| rng.gen_range(0.5..2.0)).collect();
    let path = WaypointPath::new("random", waypoints, durations).unwrap();
    let mode = if rng.gen_bool(0.5) {
        SamplingMode::Linear
    } else {
        SamplingMode::Step
    };
    sample_path(&path, TS, mode).unwrap()
}

pub fn random_scale(rng: &mut ChaCha8Rng) -> [f64; 3] {
    [0, 1, 2].map(|_| {
        let m = rng.gen_range(0.25..4.0);
        if rng.gen_bool(0.2) {
            -m
        } else {
            m
        }
    })
}

/// Random homogeneous experiment: every trainer shares the target's plant,
/// `M = I`, gates off, robustness gains summing to one.
pub fn random_homogeneous(rng: &mut ChaCha8Rng, trainers: usize) -> Experiment<f64> {
    let target = random_pd_agent(rng, "shared");
    let reference = random_reference(rng);
    let weights: Vec<f64> = (0..trainers).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut head_start = 1;
    let setups = weights
        .iter()
        .map(|w| {
            let lead = rng.gen_range(0..3);
            head_start = head_start.max(lead);
            TrainerSetup {
                agent: target.clone(),
                scenario: ScenarioMap::new(random_scale(rng), [0.0; 3]).unwrap(),
                dynamics: DynamicsSource::Identity,
                alpha: TransferFunction::gain(w / total),
                taps: [4, 8, 16][rng.gen_range(0..3)],
                lead,
            }
        })
        .collect();
    Experiment {
        grid: FrequencyGrid::with_points(256).unwrap(),
        target,
        reference,
        trainers: setups,
        learning: LearningConfig {
            delta_h: 0.0,
            delta_s: 0.0,
            head_start,
            enforce: BoundPolicy::None,
            chaining: Chaining::Parallel,
        },
    }
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`
pub fn relative_inf(a: &Signal<f64>, b: &Signal<f64>) -> f64 {
    let scale = a.max_abs().max(b.max_abs());
    if scale == 0.0 {
        0.0
    } else {
        a.sub(b).unwrap().max_abs() / scale
    }
}
