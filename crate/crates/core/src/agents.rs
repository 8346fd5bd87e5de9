//! Agent position-loop models and maps between heterogeneous agents.
//!
//! Every agent is a decoupled 3-axis unity-feedback loop with open loop `G`.
//! The target and a trainer are related by `G = M Gₖ`; only the FIR
//! approximation of `M⁻¹` is ever materialized, since `G / Gₖ` can be
//! improper or unstable as a rational system.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::filter_design::fit_fir;
use crate::lti::{close_loop, FrequencyGrid, TransferFunction, TransferMatrix};
use crate::scalar::Scalar;

pub const DEFAULT_SAMPLE_PERIOD: f64 = 0.02;
/// Proportional and derivative gains of the default target loop.
pub const TARGET_GAINS: (f64, f64) = (4.0, 2.8);
/// Proportional and derivative gains of the default trainer loop.
pub const TRAINER_GAINS: (f64, f64) = (2.25, 1.8);

/// Open-loop model of one axis.
#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec<S> {
    /// Double integrator `1/s²` under PD control `kp + kd·s`, discretized
    /// with a zero-order hold.
    PdDoubleIntegrator { kp: S, kd: S },
    /// Raw `num / den` in powers of z⁻¹.
    Rational { num: Vec<S>, den: Vec<S> },
}

impl<S: Scalar> PlantSpec<S> {
    pub fn open_loop(&self, sample_period: S) -> Result<TransferFunction<S>> {
        match self {
            PlantSpec::PdDoubleIntegrator { kp, kd } => pd_double_integrator(*kp, *kd, sample_period),
            PlantSpec::Rational { num, den } => TransferFunction::new(num.clone(), den.clone(), 0),
        }
    }
}

/// Zero-order-hold equivalent of `(kd·s + kp) / s²`:
///
/// `G(z) = [(kd·T + kp·T²/2) z⁻¹ + (kp·T²/2 − kd·T) z⁻²] / (1 − z⁻¹)²`
pub fn pd_double_integrator<S: Scalar>(kp: S, kd: S, sample_period: S) -> Result<TransferFunction<S>> {
    if !(kp > S::zero() && kd > S::zero()) {
        return Err(Error::InvalidParameter(format!(
            "PD gains must be positive, got kp={kp}, kd={kd}"
        )));
    }
    if !(sample_period > S::zero()) {
        return Err(Error::InvalidParameter("sample period must be positive".into()));
    }
    let t = sample_period;
    let half_kp_t2 = kp * t * t / S::lit(2.0);
    TransferFunction::new(
        vec![S::zero(), kd * t + half_kp_t2, half_kp_t2 - kd * t],
        vec![S::one(), S::lit(-2.0), S::one()],
        0,
    )
}

/// One agent's decoupled position loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel<S> {
    pub name: String,
    /// Open loop, 3×3 diagonal.
    pub g: TransferMatrix<S>,
    /// Reference to tracking error, `(I + G)⁻¹`.
    pub t: TransferMatrix<S>,
    /// Learning signal to tracking error, `−G(I + G)⁻¹`.
    pub f: TransferMatrix<S>,
    pub sample_period: S,
}

impl<S: Scalar> AgentModel<S> {
    pub fn from_open_loop(name: impl Into<String>, g: TransferMatrix<S>, sample_period: S) -> Result<Self> {
        let name = name.into();
        let (t, f) = close_loop(&g).map_err(|e| e.in_stage(format!("agent `{name}`")))?;
        Ok(Self {
            name,
            g,
            t,
            f,
            sample_period,
        })
    }
}

pub fn build_agent<S: Scalar>(
    name: impl Into<String>,
    axes: &[PlantSpec<S>; 3],
    sample_period: S,
) -> Result<AgentModel<S>> {
    let name = name.into();
    let diag = axes
        .iter()
        .map(|p| p.open_loop(sample_period))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| e.in_stage(format!("agent `{name}`")))?;
    AgentModel::from_open_loop(name, TransferMatrix::from_diagonal(diag), sample_period)
}

pub fn default_target<S: Scalar>(sample_period: S) -> Result<AgentModel<S>> {
    let (kp, kd) = TARGET_GAINS;
    let spec = PlantSpec::PdDoubleIntegrator {
        kp: S::lit(kp),
        kd: S::lit(kd),
    };
    build_agent("target", &[spec.clone(), spec.clone(), spec], sample_period)
}

pub fn default_trainer<S: Scalar>(sample_period: S) -> Result<AgentModel<S>> {
    let (kp, kd) = TRAINER_GAINS;
    let spec = PlantSpec::PdDoubleIntegrator {
        kp: S::lit(kp),
        kd: S::lit(kd),
    };
    build_agent("trainer", &[spec.clone(), spec.clone(), spec], sample_period)
}

/// FIR approximation of `Mₖ⁻¹` where `G = Mₖ Gₖ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsMap<S> {
    pub m_inverse: TransferMatrix<S>,
    /// `‖I − M M̂⁻¹‖∞` over the design grid (0 for the identity map).
    pub fit_residual: S,
}

impl<S: Scalar> DynamicsMap<S> {
    pub fn identity() -> Self {
        Self {
            m_inverse: TransferMatrix::identity(3),
            fit_residual: S::zero(),
        }
    }

    /// Wraps a user-supplied `M̂⁻¹` and measures how well it inverts
    /// `M = G / Gₖ`.
    pub fn explicit(
        target: &AgentModel<S>,
        trainer: &AgentModel<S>,
        m_inverse: TransferMatrix<S>,
        grid: &FrequencyGrid<S>,
    ) -> Result<Self> {
        if (m_inverse.rows(), m_inverse.cols()) != (3, 3) {
            return Err(Error::DimensionMismatch("M inverse must be 3x3".into()));
        }
        let fit_residual = map_fit_profile(target, trainer, &m_inverse, grid)?
            .into_iter()
            .fold(S::zero(), S::max);
        Ok(Self {
            m_inverse,
            fit_residual,
        })
    }
}

/// Pointwise `M(e^{jω}) = G / Gₖ` for one axis.
fn mapping_response<S: Scalar>(
    g: &TransferFunction<S>,
    gk: &TransferFunction<S>,
    omega: S,
) -> Result<Complex<S>> {
    if g.zero_on_circle_at(omega) || gk.zero_on_circle_at(omega) {
        return Err(Error::SingularResponse {
            omega: omega.to_f64_lossy(),
            what: "open loop has a zero on the unit circle; the dynamics map is singular".into(),
        });
    }
    Ok(g.response(omega)? / gk.response(omega)?)
}

/// Per-frequency `max_axis |1 − M M̂⁻¹|`.
fn map_fit_profile<S: Scalar>(
    target: &AgentModel<S>,
    trainer: &AgentModel<S>,
    m_inverse: &TransferMatrix<S>,
    grid: &FrequencyGrid<S>,
) -> Result<Vec<S>> {
    let g = target.g.diagonal()?;
    let gk = trainer.g.diagonal()?;
    let minv = m_inverse.diagonal()?;
    grid.omegas()
        .iter()
        .map(|&w| {
            let mut worst = S::zero();
            for axis in 0..3 {
                let m = mapping_response(&g[axis], &gk[axis], w)?;
                let dev = (Complex::new(S::one(), S::zero()) - m * minv[axis].response(w)?).norm();
                worst = worst.max(dev);
            }
            Ok(worst)
        })
        .collect()
}

/// Fits `M̂⁻¹ ≈ Gₖ / G` per axis as an FIR filter with `taps` coefficients
/// and advance `lead`, by least squares over the grid.
pub fn derive_dynamics_map<S: Scalar>(
    target: &AgentModel<S>,
    trainer: &AgentModel<S>,
    taps: usize,
    lead: usize,
    grid: &FrequencyGrid<S>,
) -> Result<DynamicsMap<S>> {
    if target.sample_period != trainer.sample_period {
        return Err(Error::InvalidParameter(format!(
            "agents `{}` and `{}` have different sample periods",
            target.name, trainer.name
        )));
    }
    let g = target.g.diagonal()?;
    let gk = trainer.g.diagonal()?;
    let ones = vec![Complex::new(S::one(), S::zero()); grid.len()];
    let mut diag = Vec::with_capacity(3);
    for axis in 0..3 {
        let wanted = grid
            .omegas()
            .iter()
            .map(|&w| mapping_response(&g[axis], &gk[axis], w).map(|m| m.inv()))
            .collect::<Result<Vec<_>>>()?;
        let (coeffs, _) = fit_fir(&ones, &wanted, grid, taps, lead, None)?;
        diag.push(TransferFunction::fir(coeffs, lead)?);
    }
    let m_inverse = TransferMatrix::from_diagonal(diag);
    let fit_residual = map_fit_profile(target, trainer, &m_inverse, grid)?
        .into_iter()
        .fold(S::zero(), S::max);
    Ok(DynamicsMap {
        m_inverse,
        fit_residual,
    })
}

/// Where the closed-loop approximations `T ≈ G⁻¹`, `Tₖ ≈ T M` and `Fₖ ≈ F`
/// hold. Each profile holds the worst axis at each grid frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproximationReport<S> {
    pub omegas: Vec<S>,
    pub t_vs_g_inverse: Vec<S>,
    pub tk_vs_t_m: Vec<S>,
    pub fk_vs_f: Vec<S>,
    /// `|1 − M M̂⁻¹|`.
    pub map_fit: Vec<S>,
    pub max_t_vs_g_inverse: S,
    pub max_tk_vs_t_m: S,
    pub max_fk_vs_f: S,
    pub max_map_fit: S,
}

pub fn approximation_report<S: Scalar>(
    target: &AgentModel<S>,
    trainer: &AgentModel<S>,
    map: &DynamicsMap<S>,
    grid: &FrequencyGrid<S>,
) -> Result<ApproximationReport<S>> {
    let g = target.g.diagonal()?;
    let gk = trainer.g.diagonal()?;
    let t = target.t.diagonal()?;
    let tk = trainer.t.diagonal()?;
    let f = target.f.diagonal()?;
    let fk = trainer.f.diagonal()?;
    let one = Complex::new(S::one(), S::zero());
    let mut t_vs_g_inverse = Vec::with_capacity(grid.len());
    let mut tk_vs_t_m = Vec::with_capacity(grid.len());
    let mut fk_vs_f = Vec::with_capacity(grid.len());
    for &w in grid.omegas() {
        let (mut a, mut b, mut c) = (S::zero(), S::zero(), S::zero());
        for axis in 0..3 {
            let gw = g[axis].response(w)?;
            let tw = t[axis].response(w)?;
            let m = mapping_response(&g[axis], &gk[axis], w)?;
            a = a.max((tw - one / gw).norm());
            b = b.max((tk[axis].response(w)? - tw * m).norm());
            c = c.max((fk[axis].response(w)? - f[axis].response(w)?).norm());
        }
        t_vs_g_inverse.push(a);
        tk_vs_t_m.push(b);
        fk_vs_f.push(c);
    }
    let map_fit = map_fit_profile(target, trainer, &map.m_inverse, grid)?;
    let peak = |v: &[S]| v.iter().copied().fold(S::zero(), S::max);
    Ok(ApproximationReport {
        max_t_vs_g_inverse: peak(&t_vs_g_inverse),
        max_tk_vs_t_m: peak(&tk_vs_t_m),
        max_fk_vs_f: peak(&fk_vs_f),
        max_map_fit: peak(&map_fit),
        omegas: grid.omegas().to_vec(),
        t_vs_g_inverse,
        tk_vs_t_m,
        fk_vs_f,
        map_fit,
    })
}
