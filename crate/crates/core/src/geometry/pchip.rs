//! Periodic monotone piecewise cubic Hermite interpolation.

/// PCHIP interpolant of periodic data `y(tᵢ)` with period `period`;
/// `t` must be strictly increasing in `[0, period)`.
#[derive(Debug, Clone)]
pub struct PeriodicPchip {
    t: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
    period: f64,
}

impl PeriodicPchip {
    pub fn new(t: &[f64], y: &[f64], period: f64) -> Self {
        let n = t.len();
        assert!(n >= 3 && y.len() == n);
        let width = |i: usize| {
            if i + 1 < n {
                t[i + 1] - t[i]
            } else {
                period - t[n - 1] + t[0]
            }
        };
        let slope = |i: usize| (y[(i + 1) % n] - y[i]) / width(i);
        let d = (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                let (h0, h1) = (width(prev), width(i));
                let (s0, s1) = (slope(prev), slope(i));
                if s0 * s1 <= 0.0 {
                    0.0
                } else {
                    // weighted harmonic mean (Fritsch–Butland)
                    let w1 = 2.0 * h1 + h0;
                    let w2 = h1 + 2.0 * h0;
                    (w1 + w2) / (w1 / s0 + w2 / s1)
                }
            })
            .collect();
        Self {
            t: t.to_vec(),
            y: y.to_vec(),
            d,
            period,
        }
    }

    /// Value and derivative at `x` (any real; reduced modulo the period).
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.t.len();
        let x = (x - self.t[0]).rem_euclid(self.period) + self.t[0];
        let i = self.t.partition_point(|&ti| ti <= x).saturating_sub(1);
        let (t0, t1) = if i + 1 < n {
            (self.t[i], self.t[i + 1])
        } else {
            (self.t[i], self.t[0] + self.period)
        };
        let j = (i + 1) % n;
        let h = t1 - t0;
        let u = (x - t0) / h;
        let (y0, y1, d0, d1) = (self.y[i], self.y[j], self.d[i], self.d[j]);
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        let value = h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1;
        let dh00 = 6.0 * u * (u - 1.0);
        let dh10 = (1.0 - u) * (1.0 - 3.0 * u);
        let dh01 = -dh00;
        let dh11 = u * (3.0 * u - 2.0);
        let deriv = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1;
        (value, deriv)
    }
}
