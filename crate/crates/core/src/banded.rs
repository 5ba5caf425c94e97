//! Symmetric banded matrices in lower-band storage with a Cholesky solver.

/// Symmetric matrix with half-bandwidth `bw`: row `i` stores columns
/// `i - bw ..= i`.
#[derive(Clone, Debug)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw, "({i}, {j}) outside band {}", self.bw);
        i * (self.bw + 1) + self.bw + j - i
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        assert!(r - c <= self.bw, "entry ({r}, {c}) outside bandwidth {}", self.bw);
        let s = self.slot(r, c);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.data[self.slot(r, c)]
        }
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            let s = self.slot(i, i);
            self.data[s] += shift;
        }
    }

    /// `D^{1/2}`-congruence `diag(s) A diag(s)`.
    pub fn scale_symmetric(&mut self, s: &[f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let k = self.slot(i, j);
                self.data[k] *= s[i] * s[j];
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1) + self.bw + lo - i..i * (self.bw + 1) + self.bw + 1];
            let mut acc = 0.0;
            for (a, xj) in row.iter().zip(&x[lo..=i]) {
                acc += a * xj;
            }
            y[i] += acc;
            for (a, j) in row[..row.len() - 1].iter().zip(lo..i) {
                y[j] += a * x[i];
            }
        }
        y
    }

    /// Cholesky factor `L` with `A = L L^T`. Fails with the index and value
    /// of the first non-positive pivot, i.e. exactly when `A` is not positive
    /// definite.
    pub fn cholesky(&self) -> Result<BandedCholesky, (usize, f64)> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut l = self.data.clone();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                // L[i][j] = (A[i][j] - sum_{k<j} L[i][k] L[j][k]) / L[j][j]
                let klo = lo.max(j.saturating_sub(bw));
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                let mut s = l[ri + j];
                let (a, b) = (&l[ri + klo..ri + j], &l[rj + klo..rj + j]);
                s -= a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
                if j == i {
                    if !(s > 0.0) {
                        return Err((i, s));
                    }
                    l[ri + i] = s.sqrt();
                } else {
                    l[ri + j] = s / l[rj + j];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

#[derive(Clone, Debug)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut x = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let r = i * w + bw - i;
            let s: f64 = self.l[r + lo..r + i].iter().zip(&x[lo..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / self.l[r + i];
        }
        for i in (0..n).rev() {
            let r = i * w + bw - i;
            x[i] /= self.l[r + i];
            let xi = x[i];
            let lo = i.saturating_sub(bw);
            for (a, xj) in self.l[r + lo..r + i].iter().zip(&mut x[lo..i]) {
                *xj -= a * xi;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_spd(n: usize, bw: usize) -> SymBanded {
        let mut a = SymBanded::zeros(n, bw);
        let mut seed = 12345u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for i in 0..n {
            for j in i.saturating_sub(bw)..i {
                a.add(i, j, next());
            }
            a.add(i, i, 2.0 * bw as f64 + 1.0);
        }
        a
    }

    #[test]
    fn cholesky_solves() {
        let a = random_spd(60, 7);
        let x: Vec<f64> = (0..60).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x);
        let y = a.cholesky().unwrap().solve(&b);
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn indefinite_is_detected() {
        let mut a = random_spd(20, 3);
        a.add_diagonal(-100.0);
        assert!(a.cholesky().is_err());
    }

    #[test]
    fn matvec_is_symmetric() {
        let a = random_spd(15, 4);
        for i in 0..15 {
            let mut e = vec![0.0; 15];
            e[i] = 1.0;
            let col = a.matvec(&e);
            for j in 0..15 {
                assert_eq!(col[j], a.get(j, i));
            }
        }
    }
}
