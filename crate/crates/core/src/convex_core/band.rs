/// Symmetric banded matrix stored by its lower band, with an in-place
/// Cholesky factorization.
#[derive(Debug, Clone)]
pub struct SymBand {
    n: usize,
    bw: usize,
    // row i holds entries (i, i-bw..=i), diagonal last
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        let bw = bw.min(n.saturating_sub(1));
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw, "({i},{j}) outside band {}", self.bw);
        i * (self.bw + 1) + (self.bw - (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)` (once on the diagonal).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += v;
        }
    }

    pub fn max_abs_diagonal(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }

    /// Factorizes in place as `L Lᵀ`. Returns `false` if the matrix is not
    /// numerically positive definite, leaving the contents unspecified.
    pub fn cholesky_in_place(&mut self) -> bool {
        let bw = self.bw;
        for j in 0..self.n {
            let lo = j.saturating_sub(bw);
            let mut d = self.data[self.slot(j, j)];
            for k in lo..j {
                let l = self.data[self.slot(j, k)];
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            let sj = self.slot(j, j);
            self.data[sj] = d;
            let hi = (j + bw).min(self.n - 1);
            for i in j + 1..=hi {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut v = self.data[self.slot(i, j)];
                for k in lo_i..j {
                    v -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                let s = self.slot(i, j);
                self.data[s] = v / d;
            }
        }
        true
    }

    /// Solves `L Lᵀ x = rhs` in place, assuming `self` holds a Cholesky factor.
    pub fn cholesky_solve(&self, rhs: &mut [f64]) {
        let bw = self.bw;
        for i in 0..self.n {
            let mut v = rhs[i];
            for k in i.saturating_sub(bw)..i {
                v -= self.data[self.slot(i, k)] * rhs[k];
            }
            rhs[i] = v / self.data[self.slot(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut v = rhs[i];
            let hi = (i + bw).min(self.n - 1);
            for k in i + 1..=hi {
                v -= self.data[self.slot(k, i)] * rhs[k];
            }
            rhs[i] = v / self.data[self.slot(i, i)];
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.n {
            for j in i.saturating_sub(self.bw)..=i {
                let a = self.data[self.slot(i, j)];
                out[i] += a * x[j];
                if i != j {
                    out[j] += a * x[i];
                }
            }
        }
    }
}
