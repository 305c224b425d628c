use crate::error::{Error, Result};

/// A tridiagonal matrix. `lower[i]` is entry `(i+1, i)` and `upper[i]` is
/// entry `(i, i+1)`, so both off-diagonals have length `n - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Tridiagonal> {
        let n = diag.len();
        if n == 0 || lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::Domain(format!(
                "tridiagonal shape mismatch: lower {}, diag {n}, upper {}",
                lower.len(),
                upper.len()
            )));
        }
        Ok(Tridiagonal { lower, diag, upper })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    fn off_diagonal_sum(&self, i: usize) -> f64 {
        let n = self.len();
        (if i > 0 { self.lower[i - 1].abs() } else { 0.0 }) + if i + 1 < n { self.upper[i].abs() } else { 0.0 }
    }

    /// Row-wise strict diagonal dominance.
    pub fn is_strictly_dominant(&self) -> bool {
        (0..self.len()).all(|i| self.diag[i].abs() > self.off_diagonal_sum(i))
    }

    /// Weak dominance in every row and strict dominance in at least one, with
    /// nonzero couplings so the matrix is irreducible. Such matrices are
    /// nonsingular and Thomas elimination needs no pivoting.
    pub fn is_dominant(&self) -> bool {
        if self.is_strictly_dominant() {
            return true;
        }
        let weak = (0..self.len()).all(|i| self.diag[i].abs() >= self.off_diagonal_sum(i));
        let strict = (0..self.len()).any(|i| self.diag[i].abs() > self.off_diagonal_sum(i));
        let coupled = self.lower.iter().chain(&self.upper).all(|v| *v != 0.0);
        weak && strict && coupled
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(x.len(), n);
        if n == 1 {
            y[0] = self.diag[0] * x[0];
            return;
        }
        y[0] = self.diag[0] * x[0] + self.upper[0] * x[1];
        for i in 1..n - 1 {
            y[i] = self.lower[i - 1] * x[i - 1] + self.diag[i] * x[i] + self.upper[i] * x[i + 1];
        }
        y[n - 1] = self.lower[n - 2] * x[n - 2] + self.diag[n - 1] * x[n - 1];
    }

    /// Thomas elimination, stored for repeated solves. Fails on systems that
    /// are not diagonally dominant (see [`Tridiagonal::is_dominant`]).
    pub fn factor(&self) -> Result<TridiagonalLu> {
        if !self.is_dominant() {
            return Err(Error::Numerical("tridiagonal system is not diagonally dominant".into()));
        }
        let n = self.len();
        let mut inv_pivot = vec![0.0; n];
        let mut c = vec![0.0; n.saturating_sub(1)];
        let mut pivot = self.diag[0];
        inv_pivot[0] = 1.0 / pivot;
        for i in 1..n {
            c[i - 1] = self.upper[i - 1] * inv_pivot[i - 1];
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if pivot == 0.0 {
                return Err(Error::Numerical(format!("zero pivot in row {i}")));
            }
            inv_pivot[i] = 1.0 / pivot;
        }
        Ok(TridiagonalLu { lower: self.lower.clone(), c, inv_pivot })
    }
}

/// Precomputed Thomas factorization.
#[derive(Clone, Debug)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    c: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalLu {
    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    /// Overwrites `rhs` with the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        rhs[0] *= self.inv_pivot[0];
        for i in 1..n {
            rhs[i] = (rhs[i] - self.lower[i - 1] * rhs[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= self.c[i] * rhs[i + 1];
        }
    }

    /// Solves along a strided slice (`data[offset + k * stride]`, `k < n`).
    pub fn solve_strided(&self, data: &mut [f64], offset: usize, stride: usize) {
        let n = self.len();
        let at = |k: usize| offset + k * stride;
        data[at(0)] *= self.inv_pivot[0];
        for i in 1..n {
            data[at(i)] = (data[at(i)] - self.lower[i - 1] * data[at(i - 1)]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            data[at(i)] -= self.c[i] * data[at(i + 1)];
        }
    }
}

/// Solves `T y = rhs` for a diagonally dominant tridiagonal `T`.
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let t = Tridiagonal::new(lower.to_vec(), diag.to_vec(), upper.to_vec())?;
    if rhs.len() != t.len() {
        return Err(Error::Domain(format!("rhs has length {}, matrix {}", rhs.len(), t.len())));
    }
    let lu = t.factor()?;
    let mut y = rhs.to_vec();
    lu.solve_in_place(&mut y);
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Gaussian elimination with partial pivoting on the dense matrix.
    fn dense_solve(t: &Tridiagonal, rhs: &[f64]) -> Vec<f64> {
        let n = t.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            a[i][i] = t.diag[i];
            if i > 0 {
                a[i][i - 1] = t.lower[i - 1];
            }
            if i + 1 < n {
                a[i][i + 1] = t.upper[i];
            }
            a[i][n] = rhs[i];
        }
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..=n {
                    a[i][j] -= m * a[k][j];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (a[i][n] - s) / a[i][i];
        }
        x
    }

    fn random_dominant(rng: &mut impl Rng, n: usize) -> Tridiagonal {
        let lower: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upper: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag = (0..n)
            .map(|i| {
                let off = if i > 0 { lower[i - 1].abs() } else { 0.0 } + if i + 1 < n { upper[i].abs() } else { 0.0 };
                let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                s * (off + rng.gen_range(0.05..2.0))
            })
            .collect();
        Tridiagonal::new(lower, diag, upper).unwrap()
    }

    #[test]
    fn identity_returns_rhs() {
        let r = [1.5, -2.0, 3.25, 0.0];
        let y = solve_tridiagonal(&[0.0; 3], &[1.0; 4], &[0.0; 3], &r).unwrap();
        assert_eq!(y, r);
    }

    #[test]
    fn hand_eliminated_three_by_three() {
        let y = solve_tridiagonal(&[-1.0, -1.0], &[2.0, 2.0, 2.0], &[-1.0, -1.0], &[1.0, 0.0, 1.0]).unwrap();
        for v in y {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn non_dominant_is_rejected() {
        let err = solve_tridiagonal(&[-1.0], &[1.0, 1.0], &[-1.0], &[1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn agrees_with_dense_elimination() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for &n in &[2usize, 3, 10, 57, 200] {
            let t = random_dominant(&mut rng, n);
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y = solve_tridiagonal(&t.lower, &t.diag, &t.upper, &rhs).unwrap();
            let x = dense_solve(&t, &rhs);
            let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).abs() <= 1e-10 * scale, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn residual_small_on_large_system() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let n = 10_000;
        let t = random_dominant(&mut rng, n);
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y = solve_tridiagonal(&t.lower, &t.diag, &t.upper, &rhs).unwrap();
        let back = t.apply(&y);
        let num: f64 = back.iter().zip(&rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den <= 1e-12);
    }

    #[test]
    fn strided_matches_contiguous() {
        let t = Tridiagonal::new(vec![-0.3; 4], vec![2.0; 5], vec![-0.7; 4]).unwrap();
        let lu = t.factor().unwrap();
        let rhs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let mut a = rhs.to_vec();
        lu.solve_in_place(&mut a);
        let mut data = vec![0.0; 15];
        for (k, v) in rhs.iter().enumerate() {
            data[1 + 3 * k] = *v;
        }
        lu.solve_strided(&mut data, 1, 3);
        for k in 0..5 {
            assert_eq!(a[k], data[1 + 3 * k]);
        }
    }
}
