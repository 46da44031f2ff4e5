//! Piecewise-cubic interpolation with not-a-knot end conditions, and the
//! exact double antiderivative of the interpolant.

/// Cubic piece `a + b·t + c·t² + d·t³` with `t = x − x_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Piece {
    #[inline]
    fn value(&self, t: f64) -> f64 {
        self.a + t * (self.b + t * (self.c + t * self.d))
    }

    #[inline]
    fn first_integral(&self, t: f64) -> f64 {
        t * (self.a + t * (self.b / 2.0 + t * (self.c / 3.0 + t * self.d / 4.0)))
    }

    #[inline]
    fn second_integral(&self, t: f64) -> f64 {
        t * t * (self.a / 2.0 + t * (self.b / 6.0 + t * (self.c / 12.0 + t * self.d / 20.0)))
    }
}

/// Interpolating cubic spline through `(x_j, y_j)`, `x` strictly increasing.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    knots: Vec<f64>,
    pieces: Vec<Piece>,
}

impl CubicSpline {
    /// Not-a-knot spline: exact for cubic data. Needs at least four points.
    pub fn not_a_knot(x: &[f64], y: &[f64]) -> Option<Self> {
        let n = x.len();
        if n < 4 || y.len() != n {
            return None;
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<f64> = (0..n - 1).map(|j| (y[j + 1] - y[j]) / h[j]).collect();

        // Second derivatives m[0..n]; unknowns m[1..n-1] form a tridiagonal
        // system once m[0] and m[n-1] are eliminated by the not-a-knot rows.
        let k = n - 2;
        let mut lower = vec![0.0; k];
        let mut diag = vec![0.0; k];
        let mut upper = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for i in 0..k {
            let j = i + 1;
            lower[i] = h[j - 1];
            diag[i] = 2.0 * (h[j - 1] + h[j]);
            upper[i] = h[j];
            rhs[i] = 6.0 * (slope[j] - slope[j - 1]);
        }
        // m0 = m1 (1 + h0/h1) − m2 h0/h1
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (1.0 + h0 / h1);
        upper[0] -= h0 * h0 / h1;
        // m_{n-1} = m_{n-2} (1 + hl/hp) − m_{n-3} hl/hp
        let (hp, hl) = (h[n - 3], h[n - 2]);
        diag[k - 1] += hl * (1.0 + hl / hp);
        lower[k - 1] -= hl * hl / hp;

        let interior = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;

        let mut m = vec![0.0; n];
        m[1..n - 1].copy_from_slice(&interior);
        m[0] = m[1] * (1.0 + h0 / h1) - m[2] * h0 / h1;
        m[n - 1] = m[n - 2] * (1.0 + hl / hp) - m[n - 3] * hl / hp;

        let pieces = (0..n - 1)
            .map(|j| Piece {
                a: y[j],
                b: slope[j] - h[j] * (2.0 * m[j] + m[j + 1]) / 6.0,
                c: m[j] / 2.0,
                d: (m[j + 1] - m[j]) / (6.0 * h[j]),
            })
            .collect();
        Some(Self {
            knots: x.to_vec(),
            pieces,
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn min_x(&self) -> f64 {
        self.knots[0]
    }

    pub fn max_x(&self) -> f64 {
        self.knots[self.knots.len() - 1]
    }

    /// Index of the piece containing `x` (clamped to the end pieces).
    #[inline]
    fn locate(&self, x: f64) -> usize {
        let idx = self.knots.partition_point(|&k| k <= x);
        idx.saturating_sub(1).min(self.pieces.len() - 1)
    }

    /// Interpolant value. Callers are responsible for range checks.
    pub fn eval(&self, x: f64) -> f64 {
        let j = self.locate(x);
        self.pieces[j].value(x - self.knots[j])
    }

    /// Exact double antiderivative with value and slope zero at knot `origin`.
    pub fn double_integral(&self, origin: usize) -> DoubleIntegral {
        let n = self.knots.len();
        assert!(origin < n);
        let mut value = vec![0.0; n];
        let mut slope = vec![0.0; n];
        for j in origin..n - 1 {
            let h = self.knots[j + 1] - self.knots[j];
            let p = &self.pieces[j];
            slope[j + 1] = slope[j] + p.first_integral(h);
            value[j + 1] = value[j] + slope[j] * h + p.second_integral(h);
        }
        for j in (0..origin).rev() {
            let h = self.knots[j + 1] - self.knots[j];
            let p = &self.pieces[j];
            slope[j] = slope[j + 1] - p.first_integral(h);
            value[j] = value[j + 1] - slope[j] * h - p.second_integral(h);
        }
        DoubleIntegral {
            spline: self.clone(),
            value,
            slope,
        }
    }
}

/// `K(x)` with `K'' = spline`, piecewise quintic.
#[derive(Debug, Clone)]
pub struct DoubleIntegral {
    spline: CubicSpline,
    value: Vec<f64>,
    slope: Vec<f64>,
}

impl DoubleIntegral {
    pub fn eval(&self, x: f64) -> f64 {
        let j = self.spline.locate(x);
        let t = x - self.spline.knots[j];
        self.value[j] + self.slope[j] * t + self.spline.pieces[j].second_integral(t)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let j = self.spline.locate(x);
        let t = x - self.spline.knots[j];
        self.slope[j] + self.spline.pieces[j].first_integral(t)
    }
}

/// Thomas algorithm. Returns `None` on a zero pivot.
fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut beta = diag[0];
    if beta == 0.0 {
        return None;
    }
    c[0] = upper[0] / beta;
    d[0] = rhs[0] / beta;
    for i in 1..n {
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == 0.0 {
            return None;
        }
        c[i] = upper[i] / beta;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / beta;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic(x: f64) -> f64 {
        1.5 - 0.3 * x + 0.7 * x * x - 0.05 * x * x * x
    }

    #[test]
    fn reproduces_cubic_exactly() {
        let x: Vec<f64> = vec![0.0, 0.4, 1.1, 1.9, 2.0, 3.3, 4.0];
        let y: Vec<f64> = x.iter().map(|&v| cubic(v)).collect();
        let s = CubicSpline::not_a_knot(&x, &y).unwrap();
        for i in 0..=80 {
            let v = 4.0 * i as f64 / 80.0;
            assert!((s.eval(v) - cubic(v)).abs() < 1e-12, "x = {v}");
        }
    }

    #[test]
    fn four_points_is_single_cubic() {
        let x = [0.0, 1.0, 2.5, 3.0];
        let y: Vec<f64> = x.iter().map(|&v| cubic(v)).collect();
        let s = CubicSpline::not_a_knot(&x, &y).unwrap();
        assert!((s.eval(1.7) - cubic(1.7)).abs() < 1e-12);
    }

    #[test]
    fn double_integral_of_constant_is_parabola() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y = vec![2.0; 10];
        let k = CubicSpline::not_a_knot(&x, &y).unwrap().double_integral(4);
        for v in [0.0, 1.3, 4.0, 6.5, 9.0] {
            let t: f64 = v - 4.0;
            assert!((k.eval(v) - t * t).abs() < 1e-12);
            assert!((k.derivative(v) - 2.0 * t).abs() < 1e-12);
        }
    }

    #[test]
    fn double_integral_of_quadratic() {
        // K'' = 3 + t² about origin 2.0  =>  K = 1.5 t² + t⁴/12
        let x: Vec<f64> = (0..12).map(|i| 0.5 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| 3.0 + (v - 2.0) * (v - 2.0)).collect();
        let k = CubicSpline::not_a_knot(&x, &y).unwrap().double_integral(4);
        for v in [0.0, 0.77, 2.0, 3.1, 5.5] {
            let t: f64 = v - 2.0;
            let exact = 1.5 * t * t + t.powi(4) / 12.0;
            assert!((k.eval(v) - exact).abs() < 1e-11, "v = {v}");
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CubicSpline::not_a_knot(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).is_none());
        assert!(CubicSpline::not_a_knot(&[0.0, 1.0, 1.0, 2.0], &[0.0; 4]).is_none());
    }
}
