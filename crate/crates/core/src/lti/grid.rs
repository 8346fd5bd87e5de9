use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Number of points in the default evaluation grid.
pub const DEFAULT_GRID_POINTS: usize = 512;
/// Lowest frequency of the default grid, rad/sample.
pub const DEFAULT_GRID_LOW: f64 = 1e-3;

/// Strictly increasing normalized angular frequencies in `(0, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid<S> {
    omegas: Vec<S>,
}

impl<S: Scalar> FrequencyGrid<S> {
    pub fn new(omegas: Vec<S>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidGrid("grid is empty".into()));
        }
        for w in &omegas {
            if !(*w > S::zero() && *w <= S::PI()) {
                return Err(Error::InvalidGrid(format!("frequency {w} outside (0, pi]")));
            }
        }
        if omegas.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidGrid(
                "frequencies must be strictly increasing".into(),
            ));
        }
        Ok(Self { omegas })
    }

    /// `points` logarithmically spaced frequencies in `[low, high]`.
    pub fn logspace(points: usize, low: S, high: S) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidGrid("grid needs at least one point".into()));
        }
        if !(low > S::zero() && low <= high && high <= S::PI()) {
            return Err(Error::InvalidGrid(format!("bad grid range [{low}, {high}]")));
        }
        if points == 1 {
            return Self::new(vec![high]);
        }
        let (la, lb) = (low.ln(), high.ln());
        let step = (lb - la) / S::from_usize_lossy(points - 1);
        let mut omegas: Vec<S> = (0..points)
            .map(|i| (la + step * S::from_usize_lossy(i)).exp())
            .collect();
        omegas[0] = low;
        omegas[points - 1] = high;
        Self::new(omegas)
    }

    /// 512 log-spaced points in `[1e-3, π]`.
    pub fn default_grid() -> Self {
        Self::with_points(DEFAULT_GRID_POINTS).expect("default grid is valid")
    }

    /// `points` log-spaced points over the default range.
    pub fn with_points(points: usize) -> Result<Self> {
        Self::logspace(points, S::lit(DEFAULT_GRID_LOW), S::PI())
    }

    /// Same range with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let first = self.omegas[0];
        let last = *self.omegas.last().unwrap();
        Self::logspace(self.omegas.len() * factor.max(1), first, last)
    }

    pub fn omegas(&self) -> &[S] {
        &self.omegas
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = FrequencyGrid::<f64>::default_grid();
        assert_eq!(g.len(), 512);
        assert_eq!(g.omegas()[0], 1e-3);
        assert_eq!(*g.omegas().last().unwrap(), std::f64::consts::PI);
        assert!(g.omegas().windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn rejects_invalid() {
        assert!(FrequencyGrid::<f64>::new(vec![]).is_err());
        assert!(FrequencyGrid::new(vec![0.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 4.0]).is_err());
        assert!(FrequencyGrid::new(vec![1.0, 0.5]).is_err());
    }
}
