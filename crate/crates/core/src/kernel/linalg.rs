//! Envelope Cholesky for symmetric positive definite systems with band-like structure.

/// Dense row-major symmetric matrix; only the lower triangle is read.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[i * self.n + j]
    }

    /// Adds `v` to entry `(i, j)` of the lower triangle (and implicitly `(j, i)`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.data[i * self.n + j] += v;
    }

    /// Adds `w * a a^T` for a sparse vector `a`.
    pub fn add_outer(&mut self, a: &[(usize, f64)], w: f64) {
        for (p, &(i, ai)) in a.iter().enumerate() {
            for (q, &(j, aj)) in a[..=p].iter().enumerate() {
                // a repeated index contributes both (p, q) and (q, p) to the diagonal
                let twice = if q != p && i == j { 2.0 } else { 1.0 };
                self.add(i, j, twice * w * ai * aj);
            }
        }
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).fold(0.0f64, |m, i| m.max(self.get(i, i).abs()))
    }
}

/// Lower Cholesky factor restricted to the matrix envelope.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    n: usize,
    first: Vec<usize>,
    l: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factors `a + shift * I`; `None` if a pivot is not positive.
    pub fn factor(a: &SymMatrix, shift: f64) -> Option<Self> {
        let n = a.n;
        let first: Vec<usize> = (0..n)
            .map(|i| (0..i).find(|&j| a.data[i * n + j] != 0.0).unwrap_or(i))
            .collect();
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in first[i]..=i {
                let mut s = a.data[i * n + j];
                if i == j {
                    s += shift;
                }
                for k in first[i].max(first[j])..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(EnvelopeCholesky { n, first, l })
    }

    /// Solves `L L^T x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in self.first[i]..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            b[i] /= self.l[i * n + i];
            let bi = b[i];
            for k in self.first[i]..i {
                b[k] -= self.l[i * n + k] * bi;
            }
        }
    }
}
