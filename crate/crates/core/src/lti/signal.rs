use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniformly sampled multichannel time series, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<S> {
    sample_period: S,
    channels: usize,
    data: Vec<S>,
}

impl<S: Scalar> Signal<S> {
    pub fn new(sample_period: S, channels: usize, samples: Vec<Vec<S>>) -> Result<Self> {
        let mut data = Vec::with_capacity(samples.len() * channels);
        for (t, s) in samples.iter().enumerate() {
            if s.len() != channels {
                return Err(Error::InvalidSignal(format!(
                    "sample {t} has {} channels, expected {channels}",
                    s.len()
                )));
            }
            data.extend_from_slice(s);
        }
        Self::from_flat(sample_period, channels, data)
    }

    pub fn from_flat(sample_period: S, channels: usize, data: Vec<S>) -> Result<Self> {
        if !(sample_period > S::zero()) || !sample_period.is_finite() {
            return Err(Error::InvalidSignal(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        if channels == 0 {
            return Err(Error::InvalidSignal("signal needs at least one channel".into()));
        }
        if !data.len().is_multiple_of(channels) {
            return Err(Error::InvalidSignal(format!(
                "{} values do not divide into {channels} channels",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal("non-finite sample".into()));
        }
        Ok(Self {
            sample_period,
            channels,
            data,
        })
    }

    /// Builds from per-channel series of equal length.
    pub fn from_channels(sample_period: S, channels: &[Vec<S>]) -> Result<Self> {
        let n = channels.first().map_or(0, |c| c.len());
        if channels.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidSignal("channels have different lengths".into()));
        }
        let mut data = Vec::with_capacity(n * channels.len());
        for t in 0..n {
            for c in channels {
                data.push(c[t]);
            }
        }
        Self::from_flat(sample_period, channels.len(), data)
    }

    pub fn zeros(sample_period: S, channels: usize, len: usize) -> Result<Self> {
        Self::from_flat(sample_period, channels, vec![S::zero(); channels * len])
    }

    pub fn sample_period(&self) -> S {
        self.sample_period
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn sample(&self, t: usize) -> &[S] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn samples(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks(self.channels)
    }

    pub fn as_flat(&self) -> &[S] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> Vec<S> {
        self.data.iter().skip(c).step_by(self.channels).copied().collect()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.channels != other.channels || self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "signals of shape {}x{} and {}x{}",
                self.len(),
                self.channels,
                other.len(),
                other.channels
            )));
        }
        if self.sample_period != other.sample_period {
            return Err(Error::DimensionMismatch(format!(
                "sample periods {} and {} differ",
                self.sample_period, other.sample_period
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect();
        Self::from_flat(self.sample_period, self.channels, data)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| *a - *b).collect();
        Self::from_flat(self.sample_period, self.channels, data)
    }

    pub fn scaled(&self, k: S) -> Self {
        Self {
            sample_period: self.sample_period,
            channels: self.channels,
            data: self.data.iter().map(|&v| v * k).collect(),
        }
    }

    /// Multiplies channel `c` by `gains[c]`.
    pub fn scaled_channels(&self, gains: &[S]) -> Result<Self> {
        if gains.len() != self.channels {
            return Err(Error::DimensionMismatch(format!(
                "{} channel gains for a {}-channel signal",
                gains.len(),
                self.channels
            )));
        }
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| v * gains[i % self.channels])
            .collect();
        Self::from_flat(self.sample_period, self.channels, data)
    }

    /// First `len` samples.
    pub fn truncated(&self, len: usize) -> Self {
        let len = len.min(self.len());
        Self {
            sample_period: self.sample_period,
            channels: self.channels,
            data: self.data[..len * self.channels].to_vec(),
        }
    }

    /// Appends `extra` copies of the last sample.
    pub fn extended_hold(&self, extra: usize) -> Self {
        let mut data = self.data.clone();
        if let Some(last) = self
            .data
            .len()
            .checked_sub(self.channels)
            .map(|i| self.data[i..].to_vec())
        {
            for _ in 0..extra {
                data.extend_from_slice(&last);
            }
        }
        Self {
            sample_period: self.sample_period,
            channels: self.channels,
            data,
        }
    }

    /// Largest absolute sample value over all channels.
    pub fn max_abs(&self) -> S {
        self.data.iter().map(|v| v.abs()).fold(S::zero(), S::max)
    }

    /// Largest per-sample Euclidean norm.
    pub fn max_norm(&self) -> S {
        self.samples()
            .map(|s| s.iter().map(|&v| v * v).sum::<S>().sqrt())
            .fold(S::zero(), S::max)
    }

    /// Root mean square over all samples and channels.
    pub fn rms(&self) -> S {
        if self.data.is_empty() {
            return S::zero();
        }
        let ss: S = self.data.iter().map(|&v| v * v).sum();
        (ss / S::from_usize_lossy(self.data.len())).sqrt()
    }

    pub fn channel_rms(&self) -> Vec<S> {
        (0..self.channels)
            .map(|c| {
                let ch = self.channel(c);
                if ch.is_empty() {
                    return S::zero();
                }
                let ss: S = ch.iter().map(|&v| v * v).sum();
                (ss / S::from_usize_lossy(ch.len())).sqrt()
            })
            .collect()
    }

    pub fn channel_max_abs(&self) -> Vec<S> {
        (0..self.channels)
            .map(|c| self.channel(c).iter().map(|v| v.abs()).fold(S::zero(), S::max))
            .collect()
    }

    /// Zeroes every sample whose Euclidean norm is not above `threshold`.
    pub fn gated(&self, threshold: S) -> Self {
        let mut data = self.data.clone();
        for chunk in data.chunks_mut(self.channels) {
            let norm = chunk.iter().map(|&v| v * v).sum::<S>().sqrt();
            if !(norm > threshold) {
                chunk.iter_mut().for_each(|v| *v = S::zero());
            }
        }
        Self {
            sample_period: self.sample_period,
            channels: self.channels,
            data,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_validates() {
        assert!(Signal::new(0.0, 1, vec![vec![1.0]]).is_err());
        assert!(Signal::new(0.1, 2, vec![vec![1.0]]).is_err());
        assert!(Signal::new(0.1, 1, vec![vec![f64::INFINITY]]).is_err());
    }

    #[test]
    fn channel_views_and_metrics() {
        let s = Signal::new(0.1, 2, vec![vec![3.0, 0.0], vec![0.0, -4.0]]).unwrap();
        assert_eq!(s.channel(1), vec![0.0, -4.0]);
        assert_eq!(s.max_abs(), 4.0);
        assert_eq!(s.max_norm(), 4.0);
        assert_eq!(s.rms(), (25.0f64 / 4.0).sqrt());
        let g = s.gated(3.5);
        assert_eq!(g.sample(0), &[0.0, 0.0]);
        assert_eq!(g.sample(1), &[0.0, -4.0]);
    }

    #[test]
    fn hold_extension() {
        let s = Signal::new(0.1, 1, vec![vec![1.0], vec![2.0]]).unwrap();
        let e = s.extended_hold(2);
        assert_eq!(e.as_flat(), &[1.0, 2.0, 2.0, 2.0]);
        assert_eq!(e.truncated(2), s);
    }
}
