//! Periodic cubic interpolating spline through an ordered closed loop of
//! 2D points, with centripetal (square-root chord length) parameterization.

use crate::error::{Error, Result};
use crate::geometry::Vec2;

// 8-point Gauss-Legendre rule on [-1, 1], used for per-segment arc length.
const GL8_X: [f64; 4] = [
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_W: [f64; 4] = [
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

#[derive(Debug, Clone)]
pub struct PeriodicSpline {
    /// Knot parameters t_0 = 0 .. t_n = period; one more entry than points.
    knots: Vec<f64>,
    points: Vec<Vec2>,
    /// Second derivatives of each coordinate at the knots.
    m: Vec<Vec2>,
    /// Cumulative arc length up to the start of each segment, plus the total.
    seg_arc: Vec<f64>,
}

impl PeriodicSpline {
    /// Fit a closed interpolating spline. The loop is implicit: the last
    /// point connects back to the first.
    pub fn fit(points: &[Vec2]) -> Result<Self> {
        let n = points.len();
        if n < 3 {
            return Err(Error::Geometry(format!(
                "periodic spline needs at least 3 points, got {n}"
            )));
        }
        let mut knots = Vec::with_capacity(n + 1);
        knots.push(0.0);
        for i in 0..n {
            let chord = points[i].dist(points[(i + 1) % n]);
            if chord == 0.0 {
                return Err(Error::Geometry(format!(
                    "coincident points at index {i}"
                )));
            }
            knots.push(knots[i] + chord.sqrt());
        }

        let h: Vec<f64> = (0..n).map(|i| knots[i + 1] - knots[i]).collect();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rx = vec![0.0; n];
        let mut ry = vec![0.0; n];
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            sub[i] = h[im] / 6.0;
            diag[i] = (h[im] + h[i]) / 3.0;
            sup[i] = h[i] / 6.0;
            let dx_f = (points[ip].x - points[i].x) / h[i];
            let dx_b = (points[i].x - points[im].x) / h[im];
            rx[i] = dx_f - dx_b;
            let dy_f = (points[ip].y - points[i].y) / h[i];
            let dy_b = (points[i].y - points[im].y) / h[im];
            ry[i] = dy_f - dy_b;
        }
        let mx = solve_cyclic_tridiag(&sub, &diag, &sup, &rx)?;
        let my = solve_cyclic_tridiag(&sub, &diag, &sup, &ry)?;
        let m: Vec<Vec2> = mx
            .into_iter()
            .zip(my)
            .map(|(x, y)| Vec2::new(x, y))
            .collect();

        let mut spline = PeriodicSpline {
            knots,
            points: points.to_vec(),
            m,
            seg_arc: Vec::new(),
        };
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let len = spline.segment_arc(i, spline.knots[i + 1]);
            cum.push(cum[i] + len);
        }
        spline.seg_arc = cum;
        Ok(spline)
    }

    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn period(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    pub fn knot(&self, i: usize) -> f64 {
        self.knots[i]
    }

    pub fn arc_length(&self) -> f64 {
        *self.seg_arc.last().unwrap()
    }

    fn wrap(&self, t: f64) -> f64 {
        let period = self.period();
        let mut t = t % period;
        if t < 0.0 {
            t += period;
        }
        t
    }

    fn segment_of(&self, t: f64) -> usize {
        match self
            .knots
            .binary_search_by(|k| k.partial_cmp(&t).unwrap())
        {
            Ok(i) => i.min(self.points.len() - 1),
            Err(i) => i - 1,
        }
    }

    pub fn eval(&self, t: f64) -> Vec2 {
        let t = self.wrap(t);
        let i = self.segment_of(t);
        let ip = (i + 1) % self.points.len();
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        let h2_6 = h * h / 6.0;
        self.points[i] * a
            + self.points[ip] * b
            + self.m[i] * ((a * a * a - a) * h2_6)
            + self.m[ip] * ((b * b * b - b) * h2_6)
    }

    pub fn derivative(&self, t: f64) -> Vec2 {
        let t = self.wrap(t);
        let i = self.segment_of(t);
        let ip = (i + 1) % self.points.len();
        let h = self.knots[i + 1] - self.knots[i];
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        (self.points[ip] - self.points[i]) / h
            + self.m[i] * (-(3.0 * a * a - 1.0) * h / 6.0)
            + self.m[ip] * ((3.0 * b * b - 1.0) * h / 6.0)
    }

    /// Arc length from the start of segment `i` to parameter `t` within it.
    fn segment_arc(&self, i: usize, t: f64) -> f64 {
        let lo = self.knots[i];
        if t <= lo {
            return 0.0;
        }
        let mid = 0.5 * (lo + t);
        let half = 0.5 * (t - lo);
        let mut acc = 0.0;
        for k in 0..4 {
            let dt = half * GL8_X[k];
            acc += GL8_W[k]
                * (self.derivative(mid + dt).norm() + self.derivative(mid - dt).norm());
        }
        acc * half
    }

    /// Parameter at arc length `s` from t = 0 (s wrapped into one period).
    pub fn param_at_arc(&self, s: f64) -> f64 {
        let total = self.arc_length();
        let mut s = s % total;
        if s < 0.0 {
            s += total;
        }
        // locate the segment, then bisect within it
        let i = match self
            .seg_arc
            .binary_search_by(|v| v.partial_cmp(&s).unwrap())
        {
            Ok(i) => i.min(self.points.len() - 1),
            Err(i) => i - 1,
        };
        let target = s - self.seg_arc[i];
        let mut lo = self.knots[i];
        let mut hi = self.knots[i + 1];
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.segment_arc(i, mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `count` points equally spaced in arc length, starting at t = 0.
    pub fn resample_uniform(&self, count: usize) -> Vec<Vec2> {
        let total = self.arc_length();
        (0..count)
            .map(|j| self.eval(self.param_at_arc(j as f64 * total / count as f64)))
            .collect()
    }
}

/// Solve the cyclic tridiagonal system with sub/diag/super bands and
/// wrap-around corners a[0] (row 0, col n-1) and c[n-1] (row n-1, col 0),
/// via the Sherman-Morrison rank-one update of a plain Thomas solve.
fn solve_cyclic_tridiag(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    assert!(n >= 3);
    let alpha = c[n - 1];
    let beta = a[0];
    let gamma = -b[0];
    let mut bb = b.to_vec();
    bb[0] = b[0] - gamma;
    bb[n - 1] = b[n - 1] - alpha * beta / gamma;
    let x = solve_tridiag(a, &bb, c, r)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiag(a, &bb, c, &u)?;
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
}

fn solve_tridiag(a: &[f64], b: &[f64], c: &[f64], r: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    let mut bet = b[0];
    if bet == 0.0 {
        return Err(Error::Geometry("singular tridiagonal system".into()));
    }
    dp[0] = r[0] / bet;
    for i in 1..n {
        cp[i] = c[i - 1] / bet;
        bet = b[i] - a[i] * cp[i];
        if bet == 0.0 {
            return Err(Error::Geometry("singular tridiagonal system".into()));
        }
        dp[i] = (r[i] - a[i] * dp[i - 1]) / bet;
    }
    for i in (0..n - 1).rev() {
        dp[i] -= cp[i + 1] * dp[i + 1];
    }
    Ok(dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle(n: usize, r: f64) -> Vec<Vec2> {
        (0..n)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / n as f64;
                Vec2::new(r * phi.cos(), r * phi.sin())
            })
            .collect()
    }

    #[test]
    fn cyclic_tridiag_matches_dense_solve() {
        // 5x5 cyclic system checked against direct substitution
        let a = [0.3, 0.2, 0.1, 0.4, 0.25];
        let b = [2.0, 2.5, 2.2, 2.8, 2.1];
        let c = [0.5, 0.3, 0.6, 0.2, 0.35];
        let r = [1.0, -2.0, 0.5, 3.0, -1.0];
        let x = solve_cyclic_tridiag(&a, &b, &c, &r).unwrap();
        let n = 5;
        for i in 0..n {
            let lhs = a[i] * x[(i + n - 1) % n] + b[i] * x[i] + c[i] * x[(i + 1) % n];
            assert!((lhs - r[i]).abs() < 1e-12, "row {i}: {lhs} vs {}", r[i]);
        }
    }

    #[test]
    fn interpolates_control_points() {
        let pts = circle(17, 1.3);
        let sp = PeriodicSpline::fit(&pts).unwrap();
        for (i, p) in pts.iter().enumerate() {
            let q = sp.eval(sp.knot(i));
            assert!(q.dist(*p) < 1e-10, "node {i}");
        }
    }

    #[test]
    fn circle_shape_and_tangents() {
        let pts = circle(64, 1.0);
        let sp = PeriodicSpline::fit(&pts).unwrap();
        // mid-segment points stay on the circle
        for i in 0..64 {
            let t = 0.5 * (sp.knot(i) + sp.knot(i + 1));
            let p = sp.eval(t);
            assert!((p.norm() - 1.0).abs() < 1e-5);
            // tangent is perpendicular to the radius
            let d = sp.derivative(t).normalized();
            assert!(d.dot(p.normalized()).abs() < 1e-4);
        }
        let len = sp.arc_length();
        assert!((len - 2.0 * PI).abs() < 1e-5, "len = {len}");
    }

    #[test]
    fn uniform_resampling_spacing() {
        let pts = circle(40, 2.0);
        let sp = PeriodicSpline::fit(&pts).unwrap();
        let rs = sp.resample_uniform(100);
        let gaps: Vec<f64> = (0..100)
            .map(|i| rs[i].dist(rs[(i + 1) % 100]))
            .collect();
        let mean: f64 = gaps.iter().sum::<f64>() / 100.0;
        for g in &gaps {
            assert!((g - mean).abs() / mean < 0.01, "gap {g} vs mean {mean}");
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(PeriodicSpline::fit(&[Vec2::ZERO, Vec2::new(1.0, 0.0)]).is_err());
        let dup = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(PeriodicSpline::fit(&dup).is_err());
    }
}
