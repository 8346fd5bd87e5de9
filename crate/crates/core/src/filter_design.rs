//! Synthesis of the robustness filter `α` and the learning filter
//! `L ≈ α F⁻¹`, and evaluation of the convergence conditions.
//!
//! `L` is a diagonal FIR filter with a bounded non-causal advance. Each
//! channel is fitted by linear least squares over a frequency grid so that
//! `α(e^{jω}) + F(e^{jω}) L(e^{jω})` is small; the advance lets the fit undo
//! the input delay of `F` without exceeding the preview the trainer provides.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::lti::{freq_response, gain_profile, hinf_norm, FrequencyGrid, TransferFunction, TransferMatrix};
use crate::scalar::Scalar;

/// Shape of the robustness filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaKind<S> {
    Unity,
    /// Bilinear first-order lowpass with unit DC gain; cutoff in rad/sample.
    FirstOrderLowpass {
        cutoff: S,
    },
    /// Constant weight, used to split authority between several trainers.
    Gain(S),
}

pub fn make_alpha<S: Scalar>(kind: AlphaKind<S>) -> Result<TransferFunction<S>> {
    match kind {
        AlphaKind::Unity => Ok(TransferFunction::one()),
        AlphaKind::Gain(k) => {
            if !k.is_finite() {
                return Err(Error::InvalidParameter(format!("alpha gain {k} is not finite")));
            }
            Ok(TransferFunction::gain(k))
        }
        AlphaKind::FirstOrderLowpass { cutoff } => {
            if !(cutoff > S::zero() && cutoff < S::PI()) {
                return Err(Error::InvalidParameter(format!(
                    "lowpass cutoff {cutoff} must lie in (0, pi) rad/sample"
                )));
            }
            // Prewarped analog prototype g/(s+g) through s = (1 - z^-1)/(1 + z^-1).
            let g = (cutoff / S::lit(2.0)).tan();
            let b = g / (S::one() + g);
            let a1 = (g - S::one()) / (g + S::one());
            TransferFunction::new(vec![b, b], vec![S::one(), a1], 0)
        }
    }
}

/// Weighted least-squares FIR fit: finds `c` minimizing
/// `Σ w(ω) |gain(ω) e^{jω·lead} Σₙ cₙ e^{−jωn} − target(ω)|²`.
///
/// Returns the coefficients and the normal-matrix condition number.
pub fn fit_fir<S: Scalar>(
    gain: &[Complex<S>],
    target: &[Complex<S>],
    grid: &FrequencyGrid<S>,
    taps: usize,
    lead: usize,
    weights: Option<&[S]>,
) -> Result<(Vec<S>, S)> {
    let omegas = grid.omegas();
    if taps == 0 {
        return Err(Error::InvalidParameter("FIR fit needs at least one tap".into()));
    }
    if gain.len() != omegas.len() || target.len() != omegas.len() {
        return Err(Error::DimensionMismatch(
            "fit data does not match the grid".into(),
        ));
    }
    if let Some(w) = weights {
        if w.len() != omegas.len() || w.iter().any(|v| !(*v >= S::zero())) {
            return Err(Error::InvalidParameter(
                "weights must be nonnegative with one per grid point".into(),
            ));
        }
    }
    let m = 2 * omegas.len();
    let mut a = Vec::with_capacity(m * taps);
    let mut b = Vec::with_capacity(m);
    let lead_s = S::from_usize_lossy(lead);
    let mut imag_rows = Vec::with_capacity(omegas.len() * taps);
    let mut imag_rhs = Vec::with_capacity(omegas.len());
    for (j, &w) in omegas.iter().enumerate() {
        let sw = weights.map_or(S::one(), |v| v[j].sqrt());
        for n in 0..taps {
            let phase = w * (lead_s - S::from_usize_lossy(n));
            let col = gain[j] * Complex::from_polar(S::one(), phase);
            a.push(col.re * sw);
            imag_rows.push(col.im * sw);
        }
        b.push(target[j].re * sw);
        imag_rhs.push(target[j].im * sw);
    }
    a.extend(imag_rows);
    b.extend(imag_rhs);
    let sol = least_squares(&a, &b, m, taps)?;
    Ok((sol.x, sol.condition))
}

/// One trainer's robustness and learning filters.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningFilter<S> {
    pub alpha: TransferFunction<S>,
    /// Diagonal FIR learning filter.
    pub l: TransferMatrix<S>,
    pub taps: usize,
    pub lead: usize,
    /// Achieved `‖αI + F L‖∞` over the design grid.
    pub design_residual: S,
}

impl<S: Scalar> LearningFilter<S> {
    /// `αI + F L` for a given `F`.
    pub fn residual_operator(&self, f: &TransferMatrix<S>) -> Result<TransferMatrix<S>> {
        residual_operator(&self.alpha, &self.l, f)
    }
}

/// Per-trainer filters, in trainer order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningFilterSet<S> {
    pub filters: Vec<LearningFilter<S>>,
}

impl<S> LearningFilterSet<S> {
    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }
}

/// `αI + F·L`.
pub fn residual_operator<S: Scalar>(
    alpha: &TransferFunction<S>,
    l: &TransferMatrix<S>,
    f: &TransferMatrix<S>,
) -> Result<TransferMatrix<S>> {
    let alpha_i = TransferMatrix::scalar_identity(alpha, f.rows());
    alpha_i.parallel(&f.series(l)?)
}

/// Designs `L ≈ α F⁻¹` with uniform frequency weighting.
pub fn design_learning_filter<S: Scalar>(
    f: &TransferMatrix<S>,
    alpha: &TransferFunction<S>,
    taps: usize,
    lead: usize,
    grid: &FrequencyGrid<S>,
) -> Result<LearningFilter<S>> {
    design_learning_filter_weighted(f, alpha, taps, lead, grid, None)
}

/// Designs `L ≈ α F⁻¹`, minimizing `Σ w(ω) |α + F L|²` per channel.
pub fn design_learning_filter_weighted<S: Scalar>(
    f: &TransferMatrix<S>,
    alpha: &TransferFunction<S>,
    taps: usize,
    lead: usize,
    grid: &FrequencyGrid<S>,
    weights: Option<&[S]>,
) -> Result<LearningFilter<S>> {
    let diag = f.diagonal()?;
    if let Some(axis) = diag.iter().position(|e| !e.is_stable()) {
        return Err(Error::UnstableLoop {
            axis,
            pole_magnitude: diag[axis].max_pole_magnitude().to_f64_lossy(),
        });
    }
    if taps == 0 {
        return Err(Error::InvalidParameter(
            "learning filter needs at least one tap".into(),
        ));
    }
    let alpha_resp = grid
        .omegas()
        .iter()
        .map(|&w| alpha.response(w).map(|c| -c))
        .collect::<Result<Vec<_>>>()?;
    let mut l_diag = Vec::with_capacity(diag.len());
    for fi in &diag {
        let gain = grid
            .omegas()
            .iter()
            .map(|&w| fi.response(w))
            .collect::<Result<Vec<_>>>()?;
        let (coeffs, _) = fit_fir(&gain, &alpha_resp, grid, taps, lead, weights)?;
        l_diag.push(TransferFunction::fir(coeffs, lead)?);
    }
    let l = TransferMatrix::from_diagonal(l_diag);
    let design_residual = hinf_norm(&residual_operator(alpha, &l, f)?, grid)?;
    Ok(LearningFilter {
        alpha: alpha.clone(),
        l,
        taps,
        lead,
        design_residual,
    })
}

/// Weighted least-squares objective `Σ w |α + F L|²` summed over channels,
/// used to check optimality of a design.
pub fn design_objective<S: Scalar>(
    f: &TransferMatrix<S>,
    alpha: &TransferFunction<S>,
    l: &TransferMatrix<S>,
    grid: &FrequencyGrid<S>,
) -> Result<S> {
    let op = residual_operator(alpha, l, f)?;
    let mut total = S::zero();
    for h in freq_response(&op, grid)? {
        for i in 0..h.rows() {
            total += h[(i, i)].norm_sqr();
        }
    }
    Ok(total)
}

/// Convergence margin of a set of blocks `Λₖ⁻¹ M̂ₖ⁻¹ (αₖI + F Lₖ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<S> {
    /// ∞-norm of the horizontally stacked block row.
    pub margin: S,
    /// `1/N`.
    pub bound_strict: S,
    /// `1`.
    pub bound_unified: S,
    pub per_block_norms: Vec<S>,
    pub satisfied_strict: bool,
    pub satisfied_unified: bool,
    pub omegas: Vec<S>,
    /// Largest singular value of the stacked row at each grid point.
    pub stacked_gains: Vec<S>,
    /// Per-block gain at each grid point, indexed `[block][omega]`.
    pub block_gains: Vec<Vec<S>>,
}

impl<S: Scalar> ConvergenceReport<S> {
    pub fn blocks(&self) -> usize {
        self.per_block_norms.len()
    }
}

pub fn convergence_report<S: Scalar>(
    blocks: &[TransferMatrix<S>],
    grid: &FrequencyGrid<S>,
) -> Result<ConvergenceReport<S>> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter(
            "convergence report needs at least one block".into(),
        ));
    }
    let stacked = TransferMatrix::hstack(blocks)?;
    let stacked_gains = gain_profile(&stacked, grid)?;
    let block_gains = blocks
        .iter()
        .map(|b| gain_profile(b, grid))
        .collect::<Result<Vec<_>>>()?;
    let peak = |v: &[S]| v.iter().copied().fold(S::zero(), S::max);
    let margin = peak(&stacked_gains);
    let per_block_norms: Vec<S> = block_gains.iter().map(|g| peak(g)).collect();
    let bound_strict = S::one() / S::from_usize_lossy(blocks.len());
    let bound_unified = S::one();
    Ok(ConvergenceReport {
        margin,
        bound_strict,
        bound_unified,
        per_block_norms,
        satisfied_strict: margin < bound_strict,
        satisfied_unified: margin < bound_unified,
        omegas: grid.omegas().to_vec(),
        stacked_gains,
        block_gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> FrequencyGrid<f64> {
        FrequencyGrid::default_grid()
    }

    #[test]
    fn static_plant_inverts_exactly() {
        let f = TransferMatrix::from_diagonal(vec![TransferFunction::gain(-0.9); 3]);
        let d = design_learning_filter(&f, &TransferFunction::one(), 1, 0, &grid()).unwrap();
        for i in 0..3 {
            // alpha + F L = 0  =>  L = -alpha / F
            assert_relative_eq!(d.l.get(i, i).num()[0], 1.0 / 0.9, epsilon = 1e-12);
            assert_eq!(d.l.get(i, i).lead(), 0);
        }
        assert!(d.design_residual < 1e-12);
    }

    #[test]
    fn delay_inverted_by_advance() {
        let f = TransferMatrix::from_diagonal(vec![TransferFunction::<f64>::delay(1).neg()]);
        let d = design_learning_filter(&f, &TransferFunction::one(), 1, 1, &grid()).unwrap();
        let l = d.l.get(0, 0);
        assert_eq!(l.lead(), 1);
        assert_relative_eq!(l.num()[0], 1.0, epsilon = 1e-12);
        assert!(d.design_residual < 1e-12);
    }

    #[test]
    fn rejects_unstable_and_coupled_plants() {
        let unstable =
            TransferMatrix::from_diagonal(
                vec![TransferFunction::new(vec![1.0], vec![1.0, -1.2], 0).unwrap()],
            );
        assert!(matches!(
            design_learning_filter(&unstable, &TransferFunction::one(), 4, 1, &grid()),
            Err(Error::UnstableLoop { .. })
        ));
        let coupled = TransferMatrix::constant(2, 2, &[1.0, 0.5, 0.0, 1.0]).unwrap();
        assert!(design_learning_filter(&coupled, &TransferFunction::one(), 4, 1, &grid()).is_err());
    }

    #[test]
    fn degenerate_fit_is_ill_conditioned() {
        // A single grid point cannot determine four taps.
        let g = FrequencyGrid::new(vec![0.5]).unwrap();
        let f = TransferMatrix::from_diagonal(vec![TransferFunction::gain(-1.0)]);
        assert!(matches!(
            design_learning_filter(&f, &TransferFunction::one(), 4, 0, &g),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn alpha_shapes() {
        let unity = make_alpha::<f64>(AlphaKind::Unity).unwrap();
        assert_eq!(unity.num(), &[1.0]);
        assert_eq!(unity.den(), &[1.0]);
        for cutoff in [0.05, 0.5, 2.0] {
            let lp = make_alpha(AlphaKind::FirstOrderLowpass { cutoff }).unwrap();
            assert!(lp.is_stable());
            assert_relative_eq!(lp.response(1e-9).unwrap().norm(), 1.0, epsilon = 1e-6);
        }
        let lp = make_alpha(AlphaKind::FirstOrderLowpass { cutoff: 0.5 }).unwrap();
        let mag = lp.response(0.5).unwrap().norm();
        assert!((mag - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.02 * std::f64::consts::FRAC_1_SQRT_2);
        assert!(make_alpha(AlphaKind::FirstOrderLowpass { cutoff: 0.0 }).is_err());
        assert!(make_alpha(AlphaKind::FirstOrderLowpass { cutoff: 3.2 }).is_err());
    }

    #[test]
    fn convergence_report_boundaries() {
        let g = grid();
        let zero = convergence_report(&[TransferMatrix::<f64>::zeros(3, 3)], &g).unwrap();
        assert_eq!(zero.margin, 0.0);
        assert!(zero.satisfied_strict && zero.satisfied_unified);

        let id = convergence_report(&[TransferMatrix::<f64>::identity(3)], &g).unwrap();
        assert_relative_eq!(id.margin, 1.0, epsilon = 1e-12);
        assert!(!id.satisfied_strict && !id.satisfied_unified);

        assert!(convergence_report::<f64>(&[], &g).is_err());
    }

    #[test]
    fn two_equal_blocks_scale_by_sqrt_two() {
        let g = grid();
        let a = TransferMatrix::from_diagonal(vec![
            TransferFunction::new(vec![0.2, 0.1], vec![1.0, -0.5], 0).unwrap(),
            TransferFunction::gain(0.1),
        ]);
        let single = convergence_report(std::slice::from_ref(&a), &g).unwrap();
        let pair = convergence_report(&[a.clone(), a], &g).unwrap();
        assert_relative_eq!(pair.margin, single.margin * 2f64.sqrt(), max_relative = 1e-12);
        assert_eq!(pair.bound_strict, 0.5);
        assert!(pair.margin <= pair.per_block_norms.iter().sum::<f64>());
    }
}
