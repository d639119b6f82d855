//! Small dense symmetric linear algebra for the Newton solver.

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            m.data[r * n..(r + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    pub fn add_assign(&mut self, other: &SquareMatrix) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Copies the upper triangle onto the lower one.
    pub fn symmetrize_from_upper(&mut self) {
        for r in 0..self.n {
            for c in 0..r {
                let v = self.get(c, r);
                self.set(r, c, v);
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for c in 0..r {
                worst = worst.max((self.get(r, c) - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Relative pivot size below which a direction counts as degenerate.
pub const PIVOT_TOL: f64 = 1e-10;

/// Lower Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: SquareMatrix,
}

impl Cholesky {
    /// Factorizes `a`; on failure returns the index of the first pivot that
    /// was non-positive relative to its diagonal entry.
    pub fn new(a: &SquareMatrix) -> Result<Self, usize> {
        let n = a.dim();
        let mut l = SquareMatrix::zeros(n);
        for j in 0..n {
            let mut d = a.get(j, j);
            for k in 0..j {
                d -= l.get(j, k).powi(2);
            }
            if d.is_nan() || d <= PIVOT_TOL * a.get(j, j).abs() || d <= 0.0 {
                return Err(j);
            }
            let d = d.sqrt();
            l.set(j, j, d);
            for i in (j + 1)..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / d);
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self.l.get(i, k) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self.l.get(k, i) * y[k];
            }
            y[i] /= self.l.get(i, i);
        }
        y
    }

    pub fn inverse(&self) -> SquareMatrix {
        let n = self.l.dim();
        let mut inv = SquareMatrix::zeros(n);
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            for (r, v) in self.solve(&e).into_iter().enumerate() {
                inv.set(r, c, v);
            }
        }
        inv
    }
}

/// Groups of mutually dependent columns of a positive semi-definite matrix.
///
/// Columns are scanned in order; each one whose Schur complement against the
/// independent columns seen so far is negligible is reported together with
/// the earlier columns that span it.
pub fn dependent_sets(a: &SquareMatrix) -> Vec<Vec<usize>> {
    let n = a.dim();
    let mut kept: Vec<usize> = Vec::new();
    let mut out = Vec::new();
    for t in 0..n {
        let diag = a.get(t, t);
        let sub = principal(a, &kept);
        let rhs: Vec<f64> = kept.iter().map(|&s| a.get(s, t)).collect();
        let (schur, coef) = if kept.is_empty() {
            (diag, Vec::new())
        } else {
            let ch = Cholesky::new(&sub).expect("kept columns are independent");
            let x = ch.solve(&rhs);
            let proj: f64 = x.iter().zip(&rhs).map(|(a, b)| a * b).sum();
            (diag - proj, x)
        };
        let scale = diag.abs().max(f64::MIN_POSITIVE);
        if diag <= 0.0 || schur <= PIVOT_TOL * scale {
            let mut set: Vec<usize> = kept.iter().zip(&coef).filter(|(_, c)| c.abs() > 1e-6).map(|(&s, _)| s).collect();
            set.push(t);
            out.push(set);
        } else {
            kept.push(t);
        }
    }
    out
}

fn principal(a: &SquareMatrix, idx: &[usize]) -> SquareMatrix {
    let mut m = SquareMatrix::zeros(idx.len());
    for (r, &i) in idx.iter().enumerate() {
        for (c, &j) in idx.iter().enumerate() {
            m.set(r, c, a.get(i, j));
        }
    }
    m
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solve_and_inverse() {
        let a = SquareMatrix::from_rows(&[vec![4.0, 2.0, 0.6], vec![2.0, 5.0, 1.0], vec![0.6, 1.0, 3.0]]);
        let ch = Cholesky::new(&a).unwrap();
        let x = ch.solve(&[1.0, 2.0, 3.0]);
        for r in 0..3 {
            let ax: f64 = (0..3).map(|c| a.get(r, c) * x[c]).sum();
            assert_abs_diff_eq!(ax, [1.0, 2.0, 3.0][r], epsilon = 1e-12);
        }
        let inv = ch.inverse();
        for r in 0..3 {
            for c in 0..3 {
                let v: f64 = (0..3).map(|k| a.get(r, k) * inv.get(k, c)).sum();
                assert_abs_diff_eq!(v, if r == c { 1.0 } else { 0.0 }, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn detects_duplicate_columns() {
        // columns 1 and 3 identical
        let a = SquareMatrix::from_rows(&[
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 3.0, 0.5, 3.0],
            vec![0.0, 0.5, 1.0, 0.5],
            vec![1.0, 3.0, 0.5, 3.0],
        ]);
        assert_eq!(Cholesky::new(&a).unwrap_err(), 3);
        assert_eq!(dependent_sets(&a), vec![vec![1, 3]]);
    }

    #[test]
    fn zero_column_reported_alone() {
        let a = SquareMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(dependent_sets(&a), vec![vec![1]]);
    }
}
