//! LDLᵀ inertia counts and bisection for symmetric
//! tridiagonal matrices, optionally closed into a cycle by a corner entry.
//!
//! A cyclic tridiagonal matrix is factored with the last unknown treated as a
//! border: the leading block is an ordinary tridiagonal LDLᵀ, and the border
//! row is eliminated into a single Schur pivot. With a zero corner this
//! reduces to the classical Sturm recurrence.

/// Lower bound on pivot magnitude, following the usual `pivmin` choice.
fn pivot_floor(off: &[f64], corner: f64) -> f64 {
    let emax = off
        .iter()
        .map(|e| e * e)
        .fold(corner * corner, f64::max)
        .max(1.0);
    f64::MIN_POSITIVE * emax / f64::EPSILON
}

#[inline]
fn guard(q: f64, floor: f64) -> f64 {
    if q.abs() < floor {
        if q < 0.0 {
            -floor
        } else {
            floor
        }
    } else {
        q
    }
}

/// Number of eigenvalues strictly below `shift`.
pub fn negative_count(diag: &[f64], off: &[f64], corner: f64, shift: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let floor = pivot_floor(off, corner);
    if corner == 0.0 || n < 3 {
        // Plain Sturm recurrence. For n < 3 a corner would merge with the
        // off-diagonal, which callers never construct.
        let mut count = 0;
        let mut q = guard(diag[0] - shift, floor);
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            q = guard(diag[i] - shift - off[i - 1] * off[i - 1] / q, floor);
            if q < 0.0 {
                count += 1;
            }
        }
        return count;
    }

    let m = n - 1;
    let mut count = 0;
    let mut q = guard(diag[0] - shift, floor);
    // Border entry of the forward-eliminated last column.
    let mut z = corner;
    let mut schur = diag[m] - shift;
    for i in 0..m {
        if q < 0.0 {
            count += 1;
        }
        schur -= z * z / q;
        if i + 1 < m {
            let l = off[i] / q;
            let border = if i + 1 == m - 1 { off[m - 1] } else { 0.0 };
            z = border - l * z;
            q = guard(diag[i + 1] - shift - off[i] * l, floor);
        }
    }
    if guard(schur, floor) < 0.0 {
        count += 1;
    }
    count
}

/// Gershgorin enclosure of the spectrum.
pub fn gershgorin(diag: &[f64], off: &[f64], corner: f64) -> (f64, f64) {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let mut r = 0.0;
        if i > 0 {
            r += off[i - 1].abs();
        }
        if i + 1 < n {
            r += off[i].abs();
        }
        if n >= 3 && (i == 0 || i == n - 1) {
            r += corner.abs();
        }
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
    (lo - pad, hi + pad)
}

/// Outcome of a bisection search for one eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
}

impl Bracket {
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

pub const MAX_BISECTION_STEPS: usize = 400;

/// Locates the `index`-th (zero based) eigenvalue by bisection on the
/// inertia count, starting from the enclosure `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol`, or, for `tol == 0`, once
/// the midpoint is no longer representable strictly inside the bracket.
pub fn bisect(
    diag: &[f64],
    off: &[f64],
    corner: f64,
    index: usize,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<Bracket, Bracket> {
    for it in 0..MAX_BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(Bracket {
                lo,
                hi,
                iterations: it,
            });
        }
        if negative_count(diag, off, corner, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Bracket {
        lo,
        hi,
        iterations: MAX_BISECTION_STEPS,
    })
}

/// `y = A x` for a (cyclic) tridiagonal `A`.
pub fn apply(diag: &[f64], off: &[f64], corner: f64, x: &[f64], y: &mut [f64]) {
    let n = diag.len();
    for i in 0..n {
        let mut v = diag[i] * x[i];
        if i > 0 {
            v += off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            v += off[i] * x[i + 1];
        }
        y[i] = v;
    }
    if n >= 3 && corner != 0.0 {
        y[0] += corner * x[n - 1];
        y[n - 1] += corner * x[0];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn dense(diag: &[f64], off: &[f64], corner: f64) -> DMatrix<f64> {
        let n = diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
            if i + 1 < n {
                m[(i, i + 1)] = off[i];
                m[(i + 1, i)] = off[i];
            }
        }
        if n >= 3 {
            m[(0, n - 1)] += corner;
            m[(n - 1, 0)] += corner;
        }
        m
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64)
    }

    #[test]
    fn two_by_two() {
        // [[1, -1], [-1, 3]] has eigenvalues 2 ∓ √2.
        let d = [1.0, 3.0];
        let e = [-1.0];
        assert_eq!(negative_count(&d, &e, 0.0, 0.0), 0);
        assert_eq!(negative_count(&d, &e, 0.0, 1.0), 1);
        assert_eq!(negative_count(&d, &e, 0.0, 4.0), 2);
    }

    #[test]
    fn cyclic_counts_match_dense_spectrum() {
        let mut seed = 7u64;
        for trial in 0..20 {
            let n = 5 + trial;
            let diag: Vec<f64> = (0..n).map(|_| 4.0 * lcg(&mut seed) - 2.0).collect();
            let off: Vec<f64> = (0..n - 1).map(|_| -0.2 - lcg(&mut seed)).collect();
            let corner = -0.2 - lcg(&mut seed);
            let eig = SymmetricEigen::new(dense(&diag, &off, corner)).eigenvalues;
            let mut vals: Vec<f64> = eig.iter().copied().collect();
            vals.sort_by(f64::total_cmp);
            for k in 0..=20 {
                let shift = -4.0 + 0.4 * k as f64 + 1e-3;
                let expected = vals.iter().filter(|&&v| v < shift).count();
                assert_eq!(negative_count(&diag, &off, corner, shift), expected);
            }
        }
    }

    #[test]
    fn bisection_hits_clean_chain() {
        // d = 0, e = -1: eigenvalues -2 cos(kπ/(n+1)).
        let n = 40;
        let d = vec![0.0; n];
        let e = vec![-1.0; n - 1];
        let (lo, hi) = gershgorin(&d, &e, 0.0);
        for k in 0..5 {
            let b = bisect(&d, &e, 0.0, k, lo, hi, 0.0).unwrap();
            let exact = -2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((b.mid() - exact).abs() < 1e-14);
        }
    }
}
