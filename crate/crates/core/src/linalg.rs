//! Small dense linear-algebra kernels: symmetric eigenvalues, Cholesky,
//! least squares, spectral norm of complex matrices and polynomial roots.
//!
//! Problem sizes here are tiny (3×3 transfer matrices, FIR designs of a few
//! dozen taps), so plain Jacobi sweeps are accurate and fast enough.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<S>>,
}

impl<S: Scalar> ComplexMatrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(S::zero(), S::zero()); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex<S>>) -> Self {
        assert_eq!(data.len(), rows * cols, "complex matrix data length");
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(S::one(), S::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex<S>] {
        &self.data
    }

    /// Largest elementwise modulus.
    pub fn max_abs(&self) -> S {
        self.data
            .iter()
            .map(|c| c.norm())
            .fold(S::zero(), |a, b| a.max(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self::from_vec(self.rows, self.cols, data)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> S {
        max_singular_value(self)
    }
}

impl<S> std::ops::Index<(usize, usize)> for ComplexMatrix<S> {
    type Output = Complex<S>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<S> {
        &self.data[r * self.cols + c]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<S> {
        &mut self.data[r * self.cols + c]
    }
}

/// Eigenvalues of a real symmetric `n×n` matrix (row-major), cyclic Jacobi.
/// Returned in no particular order.
pub fn symmetric_eigenvalues<S: Scalar>(a: &[S], n: usize) -> Vec<S> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let frob2: S = m.iter().map(|&x| x * x).sum();
    if frob2 == S::zero() {
        return vec![S::zero(); n];
    }
    let eps = S::epsilon();
    for _sweep in 0..100 {
        let mut off = S::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off <= eps * eps * frob2 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == S::zero() {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (S::lit(2.0) * apq);
                let t = if theta.abs() > S::lit(1e30) {
                    S::one() / (S::lit(2.0) * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + S::one()).sqrt())
                };
                let c = S::one() / (t * t + S::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).collect()
}

/// Solves `A x = b` for symmetric positive definite `A`. `None` if a pivot
/// is not positive.
pub fn cholesky_solve<S: Scalar>(a: &[S], b: &[S], n: usize) -> Option<Vec<S>> {
    let mut l = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= S::zero() {
                    return None;
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut y = vec![S::zero(); n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![S::zero(); n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    Some(x)
}

/// Solution of a linear least-squares problem.
#[derive(Debug, Clone)]
pub struct LeastSquares<S> {
    pub x: Vec<S>,
    /// Condition number of the normal matrix `AᵀA`.
    pub condition: S,
}

/// Largest admissible condition number of the normal equations.
pub const MAX_NORMAL_CONDITION: f64 = 1e12;

/// Minimizes `‖A x − b‖²` through the normal equations. `a` is `m×n`
/// row-major.
pub fn least_squares<S: Scalar>(a: &[S], b: &[S], m: usize, n: usize) -> Result<LeastSquares<S>> {
    assert_eq!(a.len(), m * n);
    assert_eq!(b.len(), m);
    let mut normal = vec![S::zero(); n * n];
    let mut rhs = vec![S::zero(); n];
    for r in 0..m {
        let row = &a[r * n..(r + 1) * n];
        for i in 0..n {
            rhs[i] += row[i] * b[r];
            for j in i..n {
                normal[i * n + j] += row[i] * row[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            normal[i * n + j] = normal[j * n + i];
        }
    }
    let eig = symmetric_eigenvalues(&normal, n);
    let max = eig.iter().copied().fold(S::zero(), S::max);
    let min = eig.iter().copied().fold(S::infinity(), S::min);
    let condition = if min <= S::zero() {
        S::infinity()
    } else {
        max / min
    };
    if !(condition <= S::lit(MAX_NORMAL_CONDITION)) {
        return Err(Error::IllConditioned {
            condition: condition.to_f64_lossy(),
        });
    }
    let x = cholesky_solve(&normal, &rhs, n).ok_or(Error::IllConditioned {
        condition: condition.to_f64_lossy(),
    })?;
    Ok(LeastSquares { x, condition })
}

/// Largest singular value of a complex matrix.
///
/// Forms the smaller Gram matrix `P = H Hᴴ` (or `Hᴴ H`) and takes its largest
/// eigenvalue through the real symmetric embedding `[[Re P, −Im P], [Im P, Re P]]`.
pub fn max_singular_value<S: Scalar>(h: &ComplexMatrix<S>) -> S {
    let (rows, cols) = (h.rows(), h.cols());
    if rows == 0 || cols == 0 {
        return S::zero();
    }
    let n = rows.min(cols);
    let mut gram = vec![Complex::new(S::zero(), S::zero()); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex::new(S::zero(), S::zero());
            if rows <= cols {
                for k in 0..cols {
                    acc = acc + h[(i, k)] * h[(j, k)].conj();
                }
            } else {
                for k in 0..rows {
                    acc = acc + h[(k, i)].conj() * h[(k, j)];
                }
            }
            gram[i * n + j] = acc;
        }
    }
    if n == 1 {
        return gram[0].re.max(S::zero()).sqrt();
    }
    let m = 2 * n;
    let mut real = vec![S::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            let g = gram[i * n + j];
            real[i * m + j] = g.re;
            real[(i + n) * m + (j + n)] = g.re;
            real[i * m + (j + n)] = -g.im;
            real[(i + n) * m + j] = g.im;
        }
    }
    let top = symmetric_eigenvalues(&real, m)
        .into_iter()
        .fold(S::zero(), S::max);
    top.sqrt()
}

/// Roots of `c[0] zⁿ + c[1] zⁿ⁻¹ + … + c[n]` by Aberth–Ehrlich iteration.
pub fn polynomial_roots<S: Scalar>(coeffs: &[S]) -> Vec<Complex<S>> {
    let lead_idx = coeffs.iter().position(|c| *c != S::zero());
    let Some(lead_idx) = lead_idx else {
        return Vec::new();
    };
    let mut c: Vec<S> = coeffs[lead_idx..].to_vec();
    let mut roots = Vec::new();
    while c.len() > 1 && *c.last().unwrap() == S::zero() {
        c.pop();
        roots.push(Complex::new(S::zero(), S::zero()));
    }
    let degree = c.len() - 1;
    if degree == 0 {
        return roots;
    }
    let c0 = c[0];
    let monic: Vec<Complex<S>> = c.iter().map(|&x| Complex::new(x / c0, S::zero())).collect();
    let radius = monic[1..]
        .iter()
        .map(|x| x.norm())
        .fold(S::zero(), S::max)
        .max(S::lit(1e-3));
    let mut z: Vec<Complex<S>> = (0..degree)
        .map(|k| {
            let angle =
                S::lit(2.0) * S::PI() * S::from_usize_lossy(k) / S::from_usize_lossy(degree) + S::lit(0.4);
            Complex::from_polar(radius, angle)
        })
        .collect();
    let eval = |x: Complex<S>| {
        let mut p = Complex::new(S::zero(), S::zero());
        let mut dp = Complex::new(S::zero(), S::zero());
        for coef in &monic {
            dp = dp * x + p;
            p = p * x + coef;
        }
        (p, dp)
    };
    for _ in 0..500 {
        let mut max_step = S::zero();
        for k in 0..degree {
            let (p, dp) = eval(z[k]);
            if p.norm() == S::zero() {
                continue;
            }
            let ratio = p / dp;
            let mut repulsion = Complex::new(S::zero(), S::zero());
            for j in 0..degree {
                if j != k {
                    let d = z[k] - z[j];
                    if d.norm() > S::zero() {
                        repulsion = repulsion + d.inv();
                    }
                }
            }
            let denom = Complex::new(S::one(), S::zero()) - ratio * repulsion;
            let step = if denom.norm() > S::zero() {
                ratio / denom
            } else {
                ratio
            };
            if step.re.is_finite() && step.im.is_finite() {
                z[k] = z[k] - step;
                max_step = max_step.max(step.norm() / z[k].norm().max(S::one()));
            }
        }
        if max_step <= S::epsilon() * S::lit(4.0) {
            break;
        }
    }
    roots.extend(z);
    roots
}

/// Schur–Cohn test: are all roots of `zⁿ + a₁zⁿ⁻¹ + … + aₙ` strictly inside
/// the circle of the given radius? `den` is `[1, a₁, …, aₙ]` (powers of z⁻¹).
pub fn schur_cohn_inside<S: Scalar>(den: &[S], radius: S) -> bool {
    let n = den.len() - 1;
    if n == 0 {
        return true;
    }
    let lead = den[0];
    let mut a: Vec<S> = den
        .iter()
        .enumerate()
        .map(|(i, &x)| x / lead / radius.powi(i as i32))
        .collect();
    for m in (1..=n).rev() {
        let k = a[m];
        if !(k.abs() < S::one()) {
            return false;
        }
        let denom = S::one() - k * k;
        let prev = a.clone();
        for i in 1..m {
            a[i] = (prev[i] - k * prev[m - i]) / denom;
        }
        a.truncate(m);
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jacobi_matches_known_spectrum() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let mut eig = symmetric_eigenvalues(&a, 3);
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(eig[1], 3.0, epsilon = 1e-12);
        assert_relative_eq!(eig[2], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let a: Vec<f64> = xs.iter().flat_map(|&x| [1.0, x]).collect();
        let b: Vec<f64> = xs.iter().map(|&x| 0.5 + 2.0 * x).collect();
        let sol = least_squares(&a, &b, 4, 2).unwrap();
        assert_relative_eq!(sol.x[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(sol.x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn least_squares_rejects_rank_deficient() {
        let a = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let b = [1.0, 2.0, 3.0];
        assert!(matches!(
            least_squares(&a, &b, 3, 2),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn spectral_norm_of_rotation_scaled() {
        // [[0, 2i], [-1, 0]] has singular values 2 and 1.
        let z = Complex::new(0.0, 0.0);
        let h = ComplexMatrix::from_vec(2, 2, vec![z, Complex::new(0.0, 2.0), Complex::new(-1.0, 0.0), z]);
        assert_relative_eq!(max_singular_value(&h), 2.0, epsilon = 1e-12);
        let row = ComplexMatrix::from_vec(1, 2, vec![Complex::new(3.0, 0.0), Complex::new(0.0, 4.0)]);
        assert_relative_eq!(max_singular_value(&row), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn roots_of_quadratic() {
        // z^2 - 1.5 z + 0.56 = (z - 0.8)(z - 0.7)
        let mut r: Vec<f64> = polynomial_roots(&[1.0, -1.5, 0.56])
            .iter()
            .map(|c| c.re)
            .collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(r[0], 0.7, epsilon = 1e-10);
        assert_relative_eq!(r[1], 0.8, epsilon = 1e-10);
        let c = polynomial_roots(&[1.0f64, 0.0, 0.25]);
        assert!(c.iter().all(|z| (z.norm() - 0.5).abs() < 1e-12));
    }

    #[test]
    fn schur_cohn_boundaries() {
        assert!(schur_cohn_inside(&[1.0, -0.5], 1.0));
        assert!(!schur_cohn_inside(&[1.0, -1.0], 1.0));
        assert!(!schur_cohn_inside(&[1.0, -2.0, 1.0], 1.0 - 1e-9));
        assert!(schur_cohn_inside(&[1.0, -1.5, 0.56], 1.0));
        assert!(!schur_cohn_inside(&[1.0, -1.5, 0.56], 0.75));
        assert!(schur_cohn_inside(&[1.0], 1.0));
    }
}
