use num_complex::Complex;

use crate::error::{Error, Result};
use crate::linalg::{polynomial_roots, schur_cohn_inside};
use crate::scalar::Scalar;

/// Trailing coefficients below this fraction of the largest one are dropped.
pub const TRIM_TOLERANCE: f64 = 1e-12;

/// Poles must satisfy `|p| < 1 − STABILITY_MARGIN`.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// SISO discrete-time system `z^lead · num(z⁻¹) / den(z⁻¹)`.
///
/// Coefficients are in ascending powers of `z⁻¹`. The denominator is kept
/// monic (`den[0] == 1`). A positive `lead` makes the system non-causal: it
/// reads `lead` samples ahead of the current one.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction<S> {
    num: Vec<S>,
    den: Vec<S>,
    lead: usize,
}

impl<S: Scalar> TransferFunction<S> {
    pub fn new(num: Vec<S>, den: Vec<S>, lead: usize) -> Result<Self> {
        if den.is_empty() {
            return Err(Error::InvalidSystem("empty denominator".into()));
        }
        if num.iter().chain(&den).any(|c| !c.is_finite()) {
            return Err(Error::InvalidSystem("non-finite coefficient".into()));
        }
        if den[0] == S::zero() {
            return Err(Error::InvalidSystem(
                "leading denominator coefficient is zero".into(),
            ));
        }
        let d0 = den[0];
        let num: Vec<S> = if num.is_empty() {
            vec![S::zero()]
        } else {
            num.into_iter().map(|c| c / d0).collect()
        };
        let den: Vec<S> = den.into_iter().map(|c| c / d0).collect();
        let scale = max_abs(&num);
        Ok(Self::assemble(num, den, lead, scale))
    }

    /// Builds from already-normalized parts, trimming the numerator relative
    /// to `num_scale` (the magnitude of the terms it was summed from).
    fn assemble(mut num: Vec<S>, mut den: Vec<S>, mut lead: usize, num_scale: S) -> Self {
        trim_trailing(&mut num, num_scale);
        let den_scale = max_abs(&den);
        trim_trailing(&mut den, den_scale);
        if num.iter().all(|c| *c == S::zero()) {
            return Self::zero();
        }
        while lead > 0 && num.len() > 1 && num[0] == S::zero() {
            num.remove(0);
            lead -= 1;
        }
        Self { num, den, lead }
    }

    pub fn zero() -> Self {
        Self {
            num: vec![S::zero()],
            den: vec![S::one()],
            lead: 0,
        }
    }

    pub fn one() -> Self {
        Self::gain(S::one())
    }

    pub fn gain(k: S) -> Self {
        if k == S::zero() {
            return Self::zero();
        }
        Self {
            num: vec![k],
            den: vec![S::one()],
            lead: 0,
        }
    }

    /// Pure delay `z⁻ⁿ`.
    pub fn delay(samples: usize) -> Self {
        let mut num = vec![S::zero(); samples + 1];
        num[samples] = S::one();
        Self {
            num,
            den: vec![S::one()],
            lead: 0,
        }
    }

    /// FIR filter `z^lead · Σ cᵢ z⁻ⁱ`.
    pub fn fir(coeffs: Vec<S>, lead: usize) -> Result<Self> {
        Self::new(coeffs, vec![S::one()], lead)
    }

    pub fn num(&self) -> &[S] {
        &self.num
    }

    pub fn den(&self) -> &[S] {
        &self.den
    }

    pub fn lead(&self) -> usize {
        self.lead
    }

    pub fn is_zero(&self) -> bool {
        self.num.iter().all(|c| *c == S::zero())
    }

    pub fn is_fir(&self) -> bool {
        self.den.len() == 1
    }

    /// Evaluates `H(e^{jω})`.
    pub fn response(&self, omega: S) -> Result<Complex<S>> {
        let zinv = Complex::from_polar(S::one(), -omega);
        let d = horner(&self.den, zinv);
        let den_scale: S = self.den.iter().map(|c| c.abs()).sum();
        if d.norm() <= S::epsilon() * S::lit(1e3) * den_scale {
            return Err(Error::SingularResponse {
                omega: omega.to_f64_lossy(),
                what: "denominator vanishes (pole on the unit circle)".into(),
            });
        }
        let n = horner(&self.num, zinv);
        let advance = Complex::from_polar(S::one(), omega * S::from_usize_lossy(self.lead));
        Ok(n / d * advance)
    }

    /// Whether the numerator vanishes at `e^{jω}` (a zero on the unit circle).
    pub fn zero_on_circle_at(&self, omega: S) -> bool {
        let zinv = Complex::from_polar(S::one(), -omega);
        let scale: S = self.num.iter().map(|c| c.abs()).sum();
        horner(&self.num, zinv).norm() <= S::epsilon() * S::lit(1e3) * scale
    }

    /// Value at z = 1, if finite.
    pub fn dc_gain(&self) -> Option<S> {
        let d: S = self.den.iter().copied().sum();
        if d.abs() <= S::epsilon() * S::lit(1e3) {
            return None;
        }
        Some(self.num.iter().copied().sum::<S>() / d)
    }

    /// Cascade `self · other`.
    pub fn series(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let num = convolve(&self.num, &other.num);
        let den = convolve(&self.den, &other.den);
        let scale = max_abs(&num);
        Self::assemble(num, den, self.lead + other.lead, scale)
    }

    /// Sum `self + other`; the result's lead is the larger of the two.
    pub fn parallel(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lead = self.lead.max(other.lead);
        let na = shifted(&self.num, lead - self.lead);
        let nb = shifted(&other.num, lead - other.lead);
        let (ta, tb, den) = if self.den == other.den {
            (na, nb, self.den.clone())
        } else {
            (
                convolve(&na, &other.den),
                convolve(&nb, &self.den),
                convolve(&self.den, &other.den),
            )
        };
        let scale = max_abs(&ta).max(max_abs(&tb));
        let len = ta.len().max(tb.len());
        let num = (0..len)
            .map(|i| ta.get(i).copied().unwrap_or_else(S::zero) + tb.get(i).copied().unwrap_or_else(S::zero))
            .collect();
        Self::assemble(num, den, lead, scale)
    }

    pub fn scale(&self, k: S) -> Self {
        if k == S::zero() {
            return Self::zero();
        }
        Self {
            num: self.num.iter().map(|&c| c * k).collect(),
            den: self.den.clone(),
            lead: self.lead,
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-S::one())
    }

    /// Denominator roots in the z-plane.
    pub fn poles(&self) -> Vec<Complex<S>> {
        polynomial_roots(&self.den)
    }

    pub fn max_pole_magnitude(&self) -> S {
        self.poles().iter().map(|p| p.norm()).fold(S::zero(), S::max)
    }

    /// All poles strictly inside `|z| < 1 − STABILITY_MARGIN`.
    pub fn is_stable(&self) -> bool {
        schur_cohn_inside(&self.den, S::one() - S::lit(STABILITY_MARGIN))
    }

    /// Convert to another scalar type.
    pub fn cast<T: Scalar>(&self) -> TransferFunction<T> {
        let conv = |v: &[S]| v.iter().map(|c| T::lit(c.to_f64_lossy())).collect::<Vec<T>>();
        TransferFunction {
            num: conv(&self.num),
            den: conv(&self.den),
            lead: self.lead,
        }
    }
}

fn horner<S: Scalar>(coeffs: &[S], x: Complex<S>) -> Complex<S> {
    coeffs
        .iter()
        .rev()
        .fold(Complex::new(S::zero(), S::zero()), |acc, &c| acc * x + c)
}

fn max_abs<S: Scalar>(v: &[S]) -> S {
    v.iter().map(|c| c.abs()).fold(S::zero(), S::max)
}

fn trim_trailing<S: Scalar>(poly: &mut Vec<S>, scale: S) {
    let tol = scale * S::lit(TRIM_TOLERANCE);
    while poly.len() > 1 && poly.last().is_some_and(|c| c.abs() <= tol) {
        poly.pop();
    }
    if poly.len() == 1 && poly[0].abs() <= tol {
        poly[0] = S::zero();
    }
}

fn shifted<S: Scalar>(poly: &[S], by: usize) -> Vec<S> {
    let mut out = vec![S::zero(); by];
    out.extend_from_slice(poly);
    out
}

fn convolve<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    let mut out = vec![S::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == S::zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}
