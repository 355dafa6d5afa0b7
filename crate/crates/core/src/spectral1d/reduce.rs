//! Orthogonal reduction of a cyclic tridiagonal matrix to tridiagonal form.
//!
//! Inertia counts taken directly on the cyclic pattern go through a bordered
//! elimination whose leading block is singular at every degenerate pair of
//! the circle spectrum, so the counts lose accuracy exactly where pairs sit.
//! Instead the matrix is reordered as `0, n−1, 1, n−2, …` (pentadiagonal)
//! and brought to tridiagonal form by Givens rotations with bulge chasing.
//! The rotations are orthogonal, so the spectrum is preserved to round-off,
//! and the cost is `O(n²)`.

const HALF: usize = 3;
const WIDTH: usize = 2 * HALF + 1;

struct Band {
    n: usize,
    data: Vec<f64>,
}

impl Band {
    fn new(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * WIDTH],
        }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i.abs_diff(j) > HALF || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * WIDTH + (j + HALF - i))
        }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        if let Some(k) = self.slot(i, j) {
            self.data[k] = v;
        } else {
            debug_assert!(v.abs() < 1e-300, "fill outside band at ({i}, {j})");
        }
    }

    /// `A ← G A Gᵀ` with `G` the rotation acting on coordinates `(r, r+1)`.
    fn rotate(&mut self, r: usize, c: f64, s: f64) {
        let t = r + 1;
        let lo = r.saturating_sub(HALF);
        let hi = (t + HALF).min(self.n - 1);
        for l in lo..=hi {
            let (a, b) = (self.get(r, l), self.get(t, l));
            self.set(r, l, c * a + s * b);
            self.set(t, l, -s * a + c * b);
        }
        for l in lo..=hi {
            let (a, b) = (self.get(l, r), self.get(l, t));
            self.set(l, r, c * a + s * b);
            self.set(l, t, -s * a + c * b);
        }
    }
}

/// Tridiagonal `(diag, off)` orthogonally similar to the cyclic tridiagonal
/// matrix with the given diagonal, off-diagonal and corner.
pub fn cyclic_to_tridiagonal(diag: &[f64], off: &[f64], corner: f64) -> (Vec<f64>, Vec<f64>) {
    let n = diag.len();
    if n < 3 || corner == 0.0 {
        return (diag.to_vec(), off.to_vec());
    }
    let order: Vec<usize> = (0..n)
        .map(|k| if k % 2 == 0 { k / 2 } else { n - 1 - k / 2 })
        .collect();
    let mut position = vec![0usize; n];
    for (k, &i) in order.iter().enumerate() {
        position[i] = k;
    }
    let mut a = Band::new(n);
    for i in 0..n {
        let p = position[i];
        a.set(p, p, diag[i]);
        if i + 1 < n {
            let q = position[i + 1];
            a.set(p, q, off[i]);
            a.set(q, p, off[i]);
        }
    }
    let (p0, p1) = (position[0], position[n - 1]);
    a.set(p0, p1, a.get(p0, p1) + corner);
    a.set(p1, p0, a.get(p1, p0) + corner);

    // Annihilate the second subdiagonal column by column, chasing the bulge
    // created by each rotation down the band.
    for k in 0..n.saturating_sub(2) {
        let mut row = k + 2;
        let mut col = k;
        while row < n {
            let x = a.get(row - 1, col);
            let y = a.get(row, col);
            if y == 0.0 {
                break;
            }
            let r = x.hypot(y);
            let (c, s) = (x / r, y / r);
            a.rotate(row - 1, c, s);
            a.set(row, col, 0.0);
            a.set(col, row, 0.0);
            // rotation on (row−1, row) fills (row+2, row−1)
            col = row - 1;
            row += 2;
            if row >= n {
                break;
            }
        }
    }
    let d = (0..n).map(|i| a.get(i, i)).collect();
    let e = (0..n - 1).map(|i| a.get(i + 1, i)).collect();
    (d, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral1d::sturm::negative_count;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense_eigs(diag: &[f64], off: &[f64], corner: f64) -> Vec<f64> {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = off[i];
                m[(i + 1, i)] = off[i];
            }
        }
        m[(0, n - 1)] += corner;
        m[(n - 1, 0)] += corner;
        let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn reduction_preserves_spectrum() {
        for n in [5usize, 6, 17, 40] {
            let diag: Vec<f64> = (0..n).map(|i| 2.0 + (1.3 * i as f64).sin()).collect();
            let off: Vec<f64> = (0..n - 1).map(|i| -1.0 - 0.1 * (i as f64).cos()).collect();
            let corner = -0.8;
            let (d, e) = cyclic_to_tridiagonal(&diag, &off, corner);
            let mut mine = dense_eigs(&d, &e, 0.0);
            mine.sort_by(f64::total_cmp);
            for (a, b) in mine.iter().zip(dense_eigs(&diag, &off, corner)) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn free_circle_pairs_resolved_by_counts() {
        let n = 512;
        let h = 2.0 * std::f64::consts::PI / n as f64;
        let inv = 1.0 / (h * h);
        let diag = vec![2.0 * inv; n];
        let off = vec![-inv; n - 1];
        let (d, e) = cyclic_to_tridiagonal(&diag, &off, -inv);
        for m in 1..4 {
            let exact = 4.0 * inv * (std::f64::consts::PI * m as f64 / n as f64).sin().powi(2);
            assert_eq!(negative_count(&d, &e, 0.0, exact - 1e-11), 2 * m - 1);
            assert_eq!(negative_count(&d, &e, 0.0, exact + 1e-11), 2 * m + 1);
        }
    }
}
