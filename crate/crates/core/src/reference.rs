//! Waypoint reference trajectories and diagonal scenario transformations.

use crate::error::{Error, Result};
use crate::lti::Signal;
use crate::scalar::Scalar;

pub type Point3<S> = [S; 3];

/// Default time spent on each segment, seconds.
pub const DEFAULT_SEGMENT_DURATION: f64 = 2.0;

/// Ordered 3-D waypoints with a traversal time per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WaypointPath<S> {
    name: String,
    waypoints: Vec<Point3<S>>,
    durations: Vec<S>,
}

impl<S: Scalar> WaypointPath<S> {
    pub fn new(name: impl Into<String>, waypoints: Vec<Point3<S>>, durations: Vec<S>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidParameter(
                "a waypoint path needs at least two waypoints".into(),
            ));
        }
        if durations.len() != waypoints.len() - 1 {
            return Err(Error::InvalidParameter(format!(
                "{} waypoints need {} segment durations, got {}",
                waypoints.len(),
                waypoints.len() - 1,
                durations.len()
            )));
        }
        if durations.iter().any(|d| !(*d > S::zero()) || !d.is_finite()) {
            return Err(Error::InvalidParameter(
                "segment durations must be positive".into(),
            ));
        }
        if waypoints.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "waypoint coordinates must be finite".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            waypoints,
            durations,
        })
    }

    /// Same duration for every segment.
    pub fn uniform(name: impl Into<String>, waypoints: Vec<Point3<S>>, segment_duration: S) -> Result<Self> {
        let n = waypoints.len().saturating_sub(1);
        Self::new(name, waypoints, vec![segment_duration; n])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn waypoints(&self) -> &[Point3<S>] {
        &self.waypoints
    }

    pub fn durations(&self) -> &[S] {
        &self.durations
    }

    pub fn total_duration(&self) -> S {
        self.durations.iter().copied().sum()
    }
}

/// How waypoints become a sampled setpoint stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// Setpoint jumps to the next waypoint as the segment starts and holds it.
    Step,
    /// Constant-speed interpolation along each segment.
    Linear,
}

/// A sampled reference plus the name of the path it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory<S> {
    pub signal: Signal<S>,
    pub source: String,
}

impl<S: Scalar> ReferenceTrajectory<S> {
    pub fn start(&self) -> Point3<S> {
        let s = self.signal.sample(0);
        [s[0], s[1], s[2]]
    }

    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    /// Holds the final setpoint for `extra` more samples.
    pub fn extended(&self, extra: usize) -> Self {
        Self {
            signal: self.signal.extended_hold(extra),
            source: self.source.clone(),
        }
    }

    pub fn truncated(&self, len: usize) -> Self {
        Self {
            signal: self.signal.truncated(len),
            source: self.source.clone(),
        }
    }

    /// Reference expressed relative to its first sample.
    pub fn relative(&self) -> Signal<S> {
        let start = self.start();
        let data = self
            .signal
            .as_flat()
            .iter()
            .enumerate()
            .map(|(i, &v)| v - start[i % 3])
            .collect();
        Signal::from_flat(self.signal.sample_period(), 3, data).expect("shape preserved")
    }
}

/// Samples a path every `sample_period` seconds:
/// `ceil(total / sample_period) + 1` samples.
pub fn sample_path<S: Scalar>(
    path: &WaypointPath<S>,
    sample_period: S,
    mode: SamplingMode,
) -> Result<ReferenceTrajectory<S>> {
    if !(sample_period > S::zero()) {
        return Err(Error::InvalidParameter(format!(
            "sample period must be positive, got {sample_period}"
        )));
    }
    let total = path.total_duration();
    // Absorb rounding so an exact multiple does not gain a sample.
    let slack = S::lit(1e-9);
    let steps = (total / sample_period - slack).ceil().max(S::zero());
    let count = steps
        .to_usize()
        .ok_or_else(|| Error::InvalidParameter("path too long for the sample period".into()))?
        + 1;

    let mut boundaries = Vec::with_capacity(path.durations.len() + 1);
    let mut acc = S::zero();
    boundaries.push(acc);
    for d in &path.durations {
        acc += *d;
        boundaries.push(acc);
    }
    let tol = sample_period * slack;
    let wp = &path.waypoints;
    let last = wp.len() - 1;

    let mut samples = Vec::with_capacity(count);
    for k in 0..count {
        let t = S::from_usize_lossy(k) * sample_period;
        let point = match mode {
            SamplingMode::Step => {
                if t <= tol {
                    wp[0]
                } else {
                    // Segment j covers (b_j, b_{j+1}] and holds waypoint j+1.
                    let j = (0..path.durations.len())
                        .find(|&j| t <= boundaries[j + 1] + tol)
                        .unwrap_or(last - 1);
                    wp[j + 1]
                }
            }
            SamplingMode::Linear => match (0..path.durations.len()).find(|&j| t <= boundaries[j + 1] + tol) {
                Some(j) => {
                    let frac = ((t - boundaries[j]) / path.durations[j])
                        .max(S::zero())
                        .min(S::one());
                    let (a, b) = (wp[j], wp[j + 1]);
                    if frac >= S::one() {
                        b
                    } else {
                        [
                            a[0] + frac * (b[0] - a[0]),
                            a[1] + frac * (b[1] - a[1]),
                            a[2] + frac * (b[2] - a[2]),
                        ]
                    }
                }
                None => wp[last],
            },
        };
        samples.push(point.to_vec());
    }
    Ok(ReferenceTrajectory {
        signal: Signal::new(sample_period, 3, samples)?,
        source: path.name.clone(),
    })
}

fn points<S: Scalar>(raw: &[[f64; 3]]) -> Vec<Point3<S>> {
    raw.iter()
        .map(|p| [S::lit(p[0]), S::lit(p[1]), S::lit(p[2])])
        .collect()
}

const TRAINING_WAYPOINTS: [[f64; 3]; 10] = [
    [0.0, 0.0, 0.0],
    [2.0, 0.0, 0.0],
    [2.0, 1.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0],
    [-2.0, 0.0, 1.0],
    [-2.0, -1.0, 1.0],
    [0.0, -1.0, 1.0],
    [0.0, 0.0, 1.0],
];

const TARGET_WAYPOINTS: [[f64; 3]; 10] = [
    [4.0, 0.0, 0.0],
    [5.0, 0.0, 0.0],
    [5.0, 2.0, 0.0],
    [4.0, 2.0, 0.0],
    [4.0, 0.0, 0.0],
    [4.0, 0.0, 2.0],
    [3.0, 0.0, 2.0],
    [3.0, -2.0, 2.0],
    [4.0, -2.0, 2.0],
    [4.0, 0.0, 2.0],
];

/// The built-in training and target box paths, 2 s per segment.
pub fn fig2_paths<S: Scalar>() -> (WaypointPath<S>, WaypointPath<S>) {
    let d = S::lit(DEFAULT_SEGMENT_DURATION);
    (
        WaypointPath::uniform("fig2-training", points(&TRAINING_WAYPOINTS), d)
            .expect("built-in path is valid"),
        WaypointPath::uniform("fig2-target", points(&TARGET_WAYPOINTS), d).expect("built-in path is valid"),
    )
}

/// Looks up a built-in path by name (`fig2-training`, `fig2-target`).
pub fn builtin_path<S: Scalar>(name: &str, segment_duration: S) -> Option<WaypointPath<S>> {
    let raw: &[[f64; 3]] = match name {
        "fig2-training" => &TRAINING_WAYPOINTS,
        "fig2-target" => &TARGET_WAYPOINTS,
        _ => return None,
    };
    WaypointPath::uniform(name, points(raw), segment_duration).ok()
}

pub const BUILTIN_PATHS: [&str; 2] = ["fig2-training", "fig2-target"];

/// Diagonal scaling of start-relative coordinates plus a new start point:
/// `x ↦ Λ (x − x₀) + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioMap<S> {
    pub scale: [S; 3],
    pub offset: Point3<S>,
}

impl<S: Scalar> ScenarioMap<S> {
    pub fn new(scale: [S; 3], offset: Point3<S>) -> Result<Self> {
        if scale.iter().any(|s| *s == S::zero() || !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "scenario scale entries must be finite and nonzero".into(),
            ));
        }
        if offset.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidParameter("scenario offset must be finite".into()));
        }
        Ok(Self { scale, offset })
    }

    pub fn identity() -> Self {
        Self {
            scale: [S::one(); 3],
            offset: [S::zero(); 3],
        }
    }

    pub fn scale_inverse(&self) -> [S; 3] {
        self.scale.map(|s| S::one() / s)
    }

    pub fn is_unit_scale(&self) -> bool {
        self.scale.iter().all(|s| *s == S::one())
    }

    /// Map that undoes `self` and restores the start point `origin`.
    pub fn inverse(&self, origin: Point3<S>) -> Self {
        Self {
            scale: self.scale_inverse(),
            offset: origin,
        }
    }

    /// Finds `Λ` and offset such that `to = Λ (from − from₀) + to₀` for every
    /// waypoint. Axes that never move in `from` must also never move in `to`
    /// and get unit scale.
    pub fn relating(from: &WaypointPath<S>, to: &WaypointPath<S>) -> Result<Self> {
        if from.waypoints.len() != to.waypoints.len() {
            return Err(Error::InvalidParameter(format!(
                "paths `{}` and `{}` have different waypoint counts",
                from.name, to.name
            )));
        }
        let (f0, t0) = (from.waypoints[0], to.waypoints[0]);
        let tol = S::lit(1e-9);
        let mut scale = [S::one(); 3];
        for axis in 0..3 {
            let pairs: Vec<(S, S)> = from
                .waypoints
                .iter()
                .zip(&to.waypoints)
                .map(|(a, b)| (a[axis] - f0[axis], b[axis] - t0[axis]))
                .collect();
            let anchor = pairs
                .iter()
                .copied()
                .max_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap());
            if let Some((df, dt)) = anchor.filter(|(df, _)| df.abs() > tol) {
                scale[axis] = dt / df;
            }
            for (df, dt) in &pairs {
                if (scale[axis] * *df - *dt).abs() > tol * (S::one() + dt.abs()) {
                    return Err(Error::InvalidParameter(format!(
                        "paths `{}` and `{}` are not related by a diagonal scaling on axis {axis}",
                        from.name, to.name
                    )));
                }
            }
        }
        Self::new(scale, t0)
    }
}

/// Output sample = `Λ (input − input₀) + offset`.
pub fn apply_scenario<S: Scalar>(
    map: &ScenarioMap<S>,
    reference: &ReferenceTrajectory<S>,
) -> ReferenceTrajectory<S> {
    let start = reference.start();
    let data = reference
        .signal
        .as_flat()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let axis = i % 3;
            map.scale[axis] * (v - start[axis]) + map.offset[axis]
        })
        .collect();
    ReferenceTrajectory {
        signal: Signal::from_flat(reference.signal.sample_period(), 3, data)
            .expect("scenario map preserves shape"),
        source: reference.source.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> WaypointPath<f64> {
        WaypointPath::uniform("seg", vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]], 1.0).unwrap()
    }

    #[test]
    fn linear_sampling_interpolates() {
        let r = sample_path(&two_point(), 0.5, SamplingMode::Linear).unwrap();
        let xs: Vec<Vec<f64>> = r.signal.samples().map(|s| s.to_vec()).collect();
        assert_eq!(
            xs,
            vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![1.0, 0.0, 0.0]]
        );
    }

    #[test]
    fn step_sampling_holds_next_waypoint() {
        let r = sample_path(&two_point(), 0.5, SamplingMode::Step).unwrap();
        let xs: Vec<Vec<f64>> = r.signal.samples().map(|s| s.to_vec()).collect();
        assert_eq!(
            xs,
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]
        );
    }

    #[test]
    fn fig2_training_sample_count() {
        let (training, _) = fig2_paths::<f64>();
        for mode in [SamplingMode::Step, SamplingMode::Linear] {
            let r = sample_path(&training, 0.02, mode).unwrap();
            // 9 segments x 100 samples + 1
            assert_eq!(r.len(), 901);
            assert_eq!(r.signal.sample(0), &[0.0, 0.0, 0.0]);
            assert_eq!(r.signal.sample(900), &[0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn fig2_endpoints() {
        let (training, target) = fig2_paths::<f64>();
        assert_eq!(training.waypoints()[0], [0.0, 0.0, 0.0]);
        assert_eq!(*training.waypoints().last().unwrap(), [0.0, 0.0, 1.0]);
        assert_eq!(target.waypoints()[0], [4.0, 0.0, 0.0]);
        assert_eq!(*target.waypoints().last().unwrap(), [4.0, 0.0, 2.0]);
    }

    #[test]
    fn fig2_scenario_is_diagonal_scaling() {
        let (training, target) = fig2_paths::<f64>();
        // Offset-removed target waypoints versus training waypoints, by hand:
        // x: 1 -> 2, y: 2 -> 1, z: 2 -> 1.
        let map = ScenarioMap::relating(&target, &training).unwrap();
        assert_eq!(map.scale, [2.0, 0.5, 0.5]);
        assert_eq!(map.offset, [0.0, 0.0, 0.0]);
        let back = ScenarioMap::relating(&training, &target).unwrap();
        assert_eq!(back.scale, [0.5, 2.0, 2.0]);
        assert_eq!(back.offset, [4.0, 0.0, 0.0]);
    }

    #[test]
    fn scenario_maps_target_onto_training() {
        let (training, target) = fig2_paths::<f64>();
        let rel: Vec<Point3<f64>> = target
            .waypoints()
            .iter()
            .map(|p| [p[0] - 4.0, p[1], p[2]])
            .collect();
        assert!(rel.contains(&[1.0, 2.0, 0.0]));
        let rel_path = WaypointPath::uniform("rel", rel, 1.0).unwrap();
        let r = sample_path(&rel_path, 1.0, SamplingMode::Linear).unwrap();
        let map = ScenarioMap::new([2.0, 0.5, 0.5], [0.0, 0.0, 0.0]).unwrap();
        let mapped = apply_scenario(&map, &r);
        for (k, expected) in training.waypoints().iter().enumerate() {
            assert_eq!(mapped.signal.sample(k), expected);
        }
    }

    #[test]
    fn unrelated_paths_rejected() {
        let (training, _) = fig2_paths::<f64>();
        let mut wps = training.waypoints().to_vec();
        wps[3][0] = 0.7;
        let bent = WaypointPath::uniform("bent", wps, 2.0).unwrap();
        assert!(ScenarioMap::relating(&training, &bent).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(WaypointPath::<f64>::uniform("one", vec![[0.0; 3]], 1.0).is_err());
        assert!(WaypointPath::uniform("neg", vec![[0.0; 3], [1.0; 3]], -1.0).is_err());
        assert!(ScenarioMap::new([1.0, 0.0, 1.0], [0.0; 3]).is_err());
        assert!(sample_path(&two_point(), 0.0, SamplingMode::Step).is_err());
    }
}
