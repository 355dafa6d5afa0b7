//! Banded LU with partial pivoting, used for the shifted solves of inverse
//! iteration.
//!
//! Periodic operators are reordered as `0, n−1, 1, n−2, 2, …`, which turns
//! the cyclic tridiagonal pattern into a pentadiagonal one, so a single band
//! solver covers every boundary kind.

pub struct BandLu {
    n: usize,
    kl: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    order: Option<Vec<usize>>,
}

impl BandLu {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        // column offset j − i ranges over [−kl, ku + kl]
        i * self.width + (j + self.kl - i)
    }

    /// Factors `A − shift·I` for the (cyclic) tridiagonal `A`.
    pub fn shifted(diag: &[f64], off: &[f64], corner: f64, shift: f64) -> Self {
        let n = diag.len();
        let cyclic = corner != 0.0 && n >= 3;
        let (kl, ku) = if cyclic { (2, 2) } else { (1, 1) };
        let width = 2 * kl + ku + 1;
        let order: Option<Vec<usize>> = cyclic.then(|| {
            (0..n)
                .map(|k| if k % 2 == 0 { k / 2 } else { n - 1 - k / 2 })
                .collect()
        });
        let mut position = vec![0usize; n];
        match &order {
            Some(o) => o.iter().enumerate().for_each(|(k, &i)| position[i] = k),
            None => position.iter_mut().enumerate().for_each(|(k, p)| *p = k),
        }
        let mut lu = BandLu {
            n,
            kl,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            order,
        };
        let put = |i: usize, j: usize, v: f64, lu: &mut BandLu| {
            let (pi, pj) = (position[i], position[j]);
            let k = lu.idx(pi, pj);
            lu.data[k] += v;
        };
        for i in 0..n {
            put(i, i, diag[i] - shift, &mut lu);
            if i + 1 < n {
                put(i, i + 1, off[i], &mut lu);
                put(i + 1, i, off[i], &mut lu);
            }
        }
        if cyclic {
            put(0, n - 1, corner, &mut lu);
            put(n - 1, 0, corner, &mut lu);
        }
        lu.factor(ku);
        lu
    }

    fn factor(&mut self, ku: usize) {
        let n = self.n;
        let kl = self.kl;
        let scale = self
            .data
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1.0);
        let tiny = f64::EPSILON * scale;
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + ku + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in k + 1..=last_row {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let kk = self.idx(k, k);
            if self.data[kk].abs() < tiny {
                self.data[kk] = if self.data[kk] < 0.0 { -tiny } else { tiny };
            }
            let pivot = self.data[kk];
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l != 0.0 {
                    for j in k + 1..=last_col {
                        let (ij, kj) = (self.idx(i, j), self.idx(k, j));
                        self.data[ij] -= l * self.data[kj];
                    }
                }
            }
        }
    }

    pub fn solve(&self, rhs: &mut [f64]) {
        let n = self.n;
        let kl = self.kl;
        let mut b: Vec<f64> = match &self.order {
            Some(o) => o.iter().map(|&i| rhs[i]).collect(),
            None => rhs.to_vec(),
        };
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.data[self.idx(i, k)] * bk;
            }
        }
        let reach = self.width - kl - 1;
        for k in (0..n).rev() {
            let mut v = b[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                v -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = v / self.data[self.idx(k, k)];
        }
        match &self.order {
            Some(o) => o.iter().enumerate().for_each(|(k, &i)| rhs[i] = b[k]),
            None => rhs.copy_from_slice(&b),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral1d::sturm::apply;

    fn check(diag: &[f64], off: &[f64], corner: f64, shift: f64) -> f64 {
        let n = diag.len();
        let x: Vec<f64> = (0..n).map(|i| (0.37 * i as f64).sin() + 0.2).collect();
        let mut b = vec![0.0; n];
        apply(diag, off, corner, &x, &mut b);
        b.iter_mut().zip(&x).for_each(|(bi, xi)| *bi -= shift * xi);
        let lu = BandLu::shifted(diag, off, corner, shift);
        lu.solve(&mut b);
        b.iter()
            .zip(&x)
            .map(|(a, c)| (a - c).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn solves_tridiagonal_and_cyclic() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|i| 2.0 + 0.1 * (i as f64).cos()).collect();
        let off = vec![-1.0; n - 1];
        assert!(check(&diag, &off, 0.0, 0.3) < 1e-10);
        assert!(check(&diag, &off, -1.0, 0.3) < 1e-10);
    }

    #[test]
    fn degenerate_circle_shift_is_stable() {
        // Free periodic chain shifted right next to a double eigenvalue.
        let n = 64;
        let diag = vec![2.0; n];
        let off = vec![-1.0; n - 1];
        let lambda = 4.0 * (std::f64::consts::PI / n as f64).sin().powi(2);
        let x: Vec<f64> = (0..n).map(|i| (0.37 * i as f64).sin() + 0.2).collect();
        let lu = BandLu::shifted(&diag, &off, -1.0, lambda - 1e-9);
        let mut y = x.clone();
        lu.solve(&mut y);
        let mut ay = vec![0.0; n];
        apply(&diag, &off, -1.0, &y, &mut ay);
        let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let resid = ay
            .iter()
            .zip(&y)
            .zip(&x)
            .map(|((a, yy), xx)| (a - (lambda - 1e-9) * yy - xx).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(
            resid / ynorm < 1e-13,
            "relative backward error {}",
            resid / ynorm
        );
    }
}
