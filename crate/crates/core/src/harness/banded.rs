//! Symmetric positive definite band matrices with an in-place Cholesky factor.

use crate::error::{Error, Result};

/// Lower band of an SPD matrix: entry `(i, j)`, `i − bw ≤ j ≤ i`.
#[derive(Clone, Debug)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    factored: bool,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, data: vec![0.0; n * (bw + 1)], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * (self.bw + 1) + (i - j)
    }

    /// Adds `v` to `(i, j)` (and implicitly `(j, i)`); `|i − j|` must be within the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let k = self.at(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.at(i, j)]
        }
    }

    /// Replaces the stored band by its Cholesky factor `L` (`A = LLᵀ`).
    pub fn factor(&mut self) -> Result<()> {
        let bw = self.bw;
        for i in 0..self.n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.at(i, j)];
                for k in k0..j {
                    s -= self.data[self.at(i, k)] * self.data[self.at(j, k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::InvalidInput(format!("band matrix not positive definite at row {i}")));
                    }
                    let idx = self.at(i, i);
                    self.data[idx] = s.sqrt();
                } else {
                    let idx = self.at(i, j);
                    self.data[idx] = s / self.data[self.at(j, j)];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place with the factor.
    pub fn solve(&self, b: &mut [f64]) {
        assert!(self.factored, "solve before factor");
        let bw = self.bw;
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.data[self.at(i, k)] * b[k];
            }
            b[i] = s / self.data[self.at(i, i)];
        }
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in (i + 1)..(i + bw + 1).min(self.n) {
                s -= self.data[self.at(k, i)] * b[k];
            }
            b[i] = s / self.data[self.at(i, i)];
        }
    }
}
