use crate::error::{Error, Result};
use crate::lti::TransferFunction;
use crate::scalar::Scalar;

/// `rows × cols` grid of SISO transfer functions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix<S> {
    rows: usize,
    cols: usize,
    entries: Vec<TransferFunction<S>>,
}

impl<S: Scalar> TransferMatrix<S> {
    pub fn new(rows: usize, cols: usize, entries: Vec<TransferFunction<S>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                "transfer matrix needs at least one row and column".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} transfer matrix given {} entries",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![TransferFunction::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(vec![TransferFunction::one(); n])
    }

    pub fn from_diagonal(diag: Vec<TransferFunction<S>>) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, tf) in diag.into_iter().enumerate() {
            m.entries[i * n + i] = tf;
        }
        m
    }

    /// Same SISO system on every diagonal channel (`tf · I`).
    pub fn scalar_identity(tf: &TransferFunction<S>, n: usize) -> Self {
        Self::from_diagonal(vec![tf.clone(); n])
    }

    /// Constant matrix from a row-major slice.
    pub fn constant(rows: usize, cols: usize, values: &[S]) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} constant matrix given {} values",
                values.len()
            )));
        }
        Self::new(
            rows,
            cols,
            values.iter().map(|&v| TransferFunction::gain(v)).collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &TransferFunction<S> {
        &self.entries[row * self.cols + col]
    }

    pub fn entries(&self) -> &[TransferFunction<S>] {
        &self.entries
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Square with identically zero off-diagonal entries.
    pub fn is_diagonal(&self) -> bool {
        self.is_square() && (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    /// Diagonal entries, or an error naming the first coupled entry.
    pub fn diagonal(&self) -> Result<Vec<TransferFunction<S>>> {
        if !self.is_square() {
            return Err(Error::NotDiagonal(format!(
                "expected a square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j && !self.get(i, j).is_zero() {
                    return Err(Error::NotDiagonal(format!(
                        "off-diagonal entry ({i}, {j}) is nonzero; decoupled axes are required"
                    )));
                }
            }
        }
        Ok((0..self.rows).map(|i| self.get(i, i).clone()).collect())
    }

    /// Largest lead among nonzero entries.
    pub fn max_lead(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| !e.is_zero())
            .map(|e| e.lead())
            .max()
            .unwrap_or(0)
    }

    /// Matrix product `self · other`.
    pub fn series(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "series of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = TransferFunction::zero();
                for k in 0..self.cols {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    acc = acc.parallel(&a.series(b));
                }
                entries.push(acc);
            }
        }
        Self::new(self.rows, other.cols, entries)
    }

    /// Entrywise sum.
    pub fn parallel(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "parallel of {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.parallel(b))
            .collect();
        Self::new(self.rows, self.cols, entries)
    }

    /// Left multiplication by a constant real matrix (`rows_out × self.rows`,
    /// row-major).
    pub fn scale_by(&self, constant: &[S], rows_out: usize) -> Result<Self> {
        let c = Self::constant(rows_out, self.rows, constant)?;
        c.series(self)
    }

    pub fn neg(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.neg()).collect(),
        }
    }

    /// Horizontal concatenation `[A₁ A₂ …]`.
    pub fn hstack(blocks: &[Self]) -> Result<Self> {
        let first = blocks
            .first()
            .ok_or_else(|| Error::DimensionMismatch("hstack of no blocks".into()))?;
        let rows = first.rows;
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::DimensionMismatch(
                "hstack blocks have different row counts".into(),
            ));
        }
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for b in blocks {
                for j in 0..b.cols {
                    entries.push(b.get(i, j).clone());
                }
            }
        }
        Self::new(rows, cols, entries)
    }

    pub fn cast<T: Scalar>(&self) -> TransferMatrix<T> {
        TransferMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.cast()).collect(),
        }
    }
}

/// Composition mode accepted by [`combine`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Combine {
    Series,
    Parallel,
}

/// `a · b` or `a + b`.
pub fn combine<S: Scalar>(
    a: &TransferMatrix<S>,
    b: &TransferMatrix<S>,
    mode: Combine,
) -> Result<TransferMatrix<S>> {
    match mode {
        Combine::Series => a.series(b),
        Combine::Parallel => a.parallel(b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TransferMatrix<f64> {
        let a = TransferFunction::new(vec![0.2, 0.1], vec![1.0, -0.6], 0).unwrap();
        let b = TransferFunction::<f64>::delay(2);
        let c = TransferFunction::fir(vec![1.0, -0.5], 1).unwrap();
        TransferMatrix::new(2, 2, vec![a, b, c, TransferFunction::gain(0.7)]).unwrap()
    }

    #[test]
    fn series_identity_is_neutral() {
        let x = sample();
        assert_eq!(TransferMatrix::identity(2).series(&x).unwrap(), x);
        assert_eq!(x.series(&TransferMatrix::identity(2)).unwrap(), x);
    }

    #[test]
    fn parallel_with_negation_vanishes() {
        let x = sample();
        let z = combine(&x, &x.neg(), Combine::Parallel).unwrap();
        assert!(z.entries().iter().all(|e| e.is_zero()));
    }

    #[test]
    fn dimension_checks() {
        let x = sample();
        assert!(x.series(&TransferMatrix::identity(3)).is_err());
        assert!(x.parallel(&TransferMatrix::zeros(2, 3)).is_err());
        assert!(TransferMatrix::<f64>::new(2, 2, vec![]).is_err());
    }

    #[test]
    fn diagonal_detection() {
        assert!(TransferMatrix::<f64>::identity(3).is_diagonal());
        assert!(!sample().is_diagonal());
        assert!(sample().diagonal().is_err());
    }

    #[test]
    fn hstack_and_scale() {
        let x = sample();
        let s = TransferMatrix::hstack(&[x.clone(), x.clone()]).unwrap();
        assert_eq!((s.rows(), s.cols()), (2, 4));
        let doubled = x.scale_by(&[2.0, 0.0, 0.0, 2.0], 2).unwrap();
        assert_eq!(doubled.get(1, 1), &TransferFunction::gain(1.4));
        assert_eq!(x.max_lead(), 1);
    }
}
