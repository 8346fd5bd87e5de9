//! Discrete-time LTI systems: representation, simulation, frequency
//! analysis and the unity-feedback closed-loop split into `T` and `F`.

mod grid;
mod matrix;
mod signal;
mod tf;

pub use grid::{FrequencyGrid, DEFAULT_GRID_LOW, DEFAULT_GRID_POINTS};
pub use matrix::{combine, Combine, TransferMatrix};
pub use signal::Signal;
pub use tf::{TransferFunction, STABILITY_MARGIN, TRIM_TOLERANCE};

use crate::error::{Error, Result};
use crate::linalg::{max_singular_value, ComplexMatrix};
use crate::scalar::Scalar;

/// Filters `sys` over `input`, producing a signal of the same length.
///
/// Zero initial conditions. Entries with a positive lead would read past the
/// end of the input, so they are rejected here; use [`simulate_over`].
pub fn simulate<S: Scalar>(sys: &TransferMatrix<S>, input: &Signal<S>) -> Result<Signal<S>> {
    simulate_over(sys, input, input.len())
}

/// Filters `sys` over `input` and returns the first `horizon` output samples.
///
/// Entries with lead `ℓ` read `input[t + ℓ]`, so the input must hold at least
/// `horizon + ℓ` samples.
pub fn simulate_over<S: Scalar>(
    sys: &TransferMatrix<S>,
    input: &Signal<S>,
    horizon: usize,
) -> Result<Signal<S>> {
    if input.channels() != sys.cols() {
        return Err(Error::DimensionMismatch(format!(
            "system has {} inputs but signal has {} channels",
            sys.cols(),
            input.channels()
        )));
    }
    let lead = sys.max_lead();
    if input.len() < horizon + lead {
        return Err(Error::InsufficientFuture {
            needed: horizon + lead,
            available: input.len(),
            lead,
        });
    }
    let inputs: Vec<Vec<S>> = (0..sys.cols()).map(|c| input.channel(c)).collect();
    let mut outputs = vec![vec![S::zero(); horizon]; sys.rows()];
    for (i, out) in outputs.iter_mut().enumerate() {
        for (j, u) in inputs.iter().enumerate() {
            let tf = sys.get(i, j);
            if !tf.is_zero() {
                filter_accumulate(tf, u, horizon, out);
            }
        }
    }
    Signal::from_channels(input.sample_period(), &outputs)
}

/// Runs the difference equation of `tf` on `u` and adds the result to `out`.
fn filter_accumulate<S: Scalar>(tf: &TransferFunction<S>, u: &[S], horizon: usize, out: &mut [S]) {
    let (b, a, lead) = (tf.num(), tf.den(), tf.lead());
    let mut y = vec![S::zero(); horizon];
    for t in 0..horizon {
        let mut acc = S::zero();
        for (k, &bk) in b.iter().enumerate() {
            if k > t + lead {
                break;
            }
            if bk != S::zero() {
                acc += bk * u[t + lead - k];
            }
        }
        for (k, &ak) in a.iter().enumerate().skip(1) {
            if k > t {
                break;
            }
            acc -= ak * y[t - k];
        }
        y[t] = acc;
    }
    for (o, v) in out.iter_mut().zip(y) {
        *o += v;
    }
}

/// `H(e^{jω})` at each grid frequency, including the `e^{jω·lead}` advance.
pub fn freq_response<S: Scalar>(
    sys: &TransferMatrix<S>,
    grid: &FrequencyGrid<S>,
) -> Result<Vec<ComplexMatrix<S>>> {
    grid.omegas()
        .iter()
        .map(|&w| {
            let data = sys
                .entries()
                .iter()
                .map(|e| e.response(w))
                .collect::<Result<Vec<_>>>()?;
            Ok(ComplexMatrix::from_vec(sys.rows(), sys.cols(), data))
        })
        .collect()
}

/// Largest singular value of `H(e^{jω})` at every grid point.
pub fn gain_profile<S: Scalar>(sys: &TransferMatrix<S>, grid: &FrequencyGrid<S>) -> Result<Vec<S>> {
    Ok(freq_response(sys, grid)?.iter().map(max_singular_value).collect())
}

/// Grid estimate of the H∞ norm: the maximum over grid points of the largest
/// singular value. This is a lower bound of the true norm; its accuracy
/// depends on the grid resolving the peak.
pub fn hinf_norm<S: Scalar>(sys: &TransferMatrix<S>, grid: &FrequencyGrid<S>) -> Result<S> {
    Ok(gain_profile(sys, grid)?.into_iter().fold(S::zero(), S::max))
}

/// Result of a pole check over every entry of a transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<S> {
    pub stable: bool,
    /// Row-major largest pole magnitude of each entry (0 for static entries).
    pub pole_magnitudes: Vec<S>,
    pub max_pole_magnitude: S,
    pub unstable_entries: Vec<(usize, usize)>,
}

pub fn is_stable<S: Scalar>(sys: &TransferMatrix<S>) -> StabilityReport<S> {
    let mut pole_magnitudes = Vec::with_capacity(sys.rows() * sys.cols());
    let mut unstable_entries = Vec::new();
    for i in 0..sys.rows() {
        for j in 0..sys.cols() {
            let e = sys.get(i, j);
            pole_magnitudes.push(e.max_pole_magnitude());
            if !e.is_zero() && !e.is_stable() {
                unstable_entries.push((i, j));
            }
        }
    }
    let max_pole_magnitude = pole_magnitudes.iter().copied().fold(S::zero(), S::max);
    StabilityReport {
        stable: unstable_entries.is_empty(),
        pole_magnitudes,
        max_pole_magnitude,
        unstable_entries,
    }
}

/// Splits a diagonal open loop `G` into `T = (I + G)⁻¹` (reference to error)
/// and `F = −G(I + G)⁻¹` (feedforward input to error).
pub fn close_loop<S: Scalar>(g: &TransferMatrix<S>) -> Result<(TransferMatrix<S>, TransferMatrix<S>)> {
    let diag = g.diagonal()?;
    let mut t_diag = Vec::with_capacity(diag.len());
    let mut f_diag = Vec::with_capacity(diag.len());
    for (axis, gi) in diag.iter().enumerate() {
        if gi.lead() != 0 {
            return Err(Error::InvalidSystem(format!(
                "open loop on axis {axis} has lead {}; loop systems must be causal",
                gi.lead()
            )));
        }
        let (n, d) = (gi.num(), gi.den());
        let len = n.len().max(d.len());
        let char_poly: Vec<S> = (0..len)
            .map(|k| d.get(k).copied().unwrap_or_else(S::zero) + n.get(k).copied().unwrap_or_else(S::zero))
            .collect();
        let t = TransferFunction::new(d.to_vec(), char_poly.clone(), 0)
            .map_err(|e| e.in_stage(format!("closing axis {axis}")))?;
        let f = TransferFunction::new(n.iter().map(|&c| -c).collect(), char_poly, 0)
            .map_err(|e| e.in_stage(format!("closing axis {axis}")))?;
        if !t.is_stable() {
            return Err(Error::UnstableLoop {
                axis,
                pole_magnitude: t.max_pole_magnitude().to_f64_lossy(),
            });
        }
        t_diag.push(t);
        f_diag.push(f);
    }
    Ok((
        TransferMatrix::from_diagonal(t_diag),
        TransferMatrix::from_diagonal(f_diag),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn siso(num: &[f64], den: &[f64]) -> TransferMatrix<f64> {
        TransferMatrix::from_diagonal(vec![TransferFunction::new(num.to_vec(), den.to_vec(), 0).unwrap()])
    }

    fn column(v: &[f64]) -> Signal<f64> {
        Signal::from_channels(1.0, &[v.to_vec()]).unwrap()
    }

    #[test]
    fn unit_delay_shifts_impulse() {
        let y = simulate(&siso(&[0.0, 1.0], &[1.0]), &column(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(y.as_flat(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn identity_passes_input() {
        let u = Signal::new(0.02, 3, vec![vec![1.0, -2.0, 0.5], vec![0.25, 3.0, -1.0]]).unwrap();
        assert_eq!(simulate(&TransferMatrix::identity(3), &u).unwrap(), u);
    }

    #[test]
    fn first_order_step_matches_geometric_series() {
        let n = 40;
        let y = simulate(&siso(&[0.5], &[1.0, -0.5]), &column(&vec![1.0; n])).unwrap();
        for (t, v) in y.as_flat().iter().enumerate() {
            // y[t] = 0.5 * sum_{k<=t} 0.5^k
            let oracle: f64 = (0..=t).map(|k| 0.5 * 0.5f64.powi(k as i32)).sum();
            assert_relative_eq!(*v, oracle, epsilon = 1e-15);
            assert_relative_eq!(*v, 1.0 - 0.5f64.powi(t as i32 + 1), epsilon = 1e-15);
        }
    }

    #[test]
    fn lead_requires_future_samples() {
        let adv = TransferMatrix::from_diagonal(vec![TransferFunction::fir(vec![1.0], 1).unwrap()]);
        let u = column(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            simulate(&adv, &u),
            Err(Error::InsufficientFuture {
                needed: 4,
                available: 3,
                lead: 1
            })
        ));
        let y = simulate_over(&adv, &u, 2).unwrap();
        assert_eq!(y.as_flat(), &[2.0, 3.0]);
    }

    #[test]
    fn channel_mismatch_rejected() {
        let u = Signal::zeros(1.0, 2, 4).unwrap();
        assert!(matches!(
            simulate(&TransferMatrix::identity(3), &u),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn hinf_of_constant_diagonal() {
        let grid = FrequencyGrid::default_grid();
        let d = TransferMatrix::from_diagonal(vec![
            TransferFunction::gain(2.0),
            TransferFunction::gain(1.0),
            TransferFunction::gain(0.5),
        ]);
        assert_relative_eq!(hinf_norm(&d, &grid).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(
            hinf_norm(&TransferMatrix::<f64>::zeros(3, 3), &grid).unwrap(),
            0.0
        );
    }

    #[test]
    fn close_loop_static_gain() {
        let g = TransferMatrix::from_diagonal(vec![TransferFunction::gain(9.0); 3]);
        let (t, f) = close_loop(&g).unwrap();
        for i in 0..3 {
            assert_relative_eq!(t.get(i, i).dc_gain().unwrap(), 0.1, epsilon = 1e-15);
            assert_relative_eq!(f.get(i, i).dc_gain().unwrap(), -0.9, epsilon = 1e-15);
        }
    }

    #[test]
    fn close_loop_rejects_coupled_and_unstable() {
        let coupled = TransferMatrix::new(
            2,
            2,
            vec![
                TransferFunction::gain(1.0),
                TransferFunction::gain(0.1),
                TransferFunction::zero(),
                TransferFunction::gain(1.0),
            ],
        )
        .unwrap();
        assert!(matches!(close_loop(&coupled), Err(Error::NotDiagonal(_))));
        // G = -2 z^-1 / (1 - z^-1): closed-loop pole at -1.
        let g = siso(&[0.0, -2.0], &[1.0, -1.0]);
        let g = TransferMatrix::from_diagonal(vec![TransferFunction::one(), g.get(0, 0).clone()]);
        assert!(matches!(close_loop(&g), Err(Error::UnstableLoop { axis: 1, .. })));
    }

    #[test]
    fn stability_report_lists_entries() {
        let m = TransferMatrix::from_diagonal(vec![
            TransferFunction::new(vec![1.0], vec![1.0, -0.5], 0).unwrap(),
            TransferFunction::new(vec![1.0], vec![1.0, -1.0], 0).unwrap(),
        ]);
        let r = is_stable(&m);
        assert!(!r.stable);
        assert_eq!(r.unstable_entries, vec![(1, 1)]);
        assert_relative_eq!(r.pole_magnitudes[0], 0.5, epsilon = 1e-12);
    }
}
