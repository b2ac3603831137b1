//! The grain envelope: a closed curve through the actively growing tips.
//!
//! The envelope is carried as an ordered counter-clockwise loop of control
//! nodes with a periodic cubic spline through them. Each step the nodes are
//! advected along the outward normal with the projected speed v cos(theta),
//! where theta is the smallest angle between the normal and the four <10>
//! growth directions, and the curve is then reconstructed: nodes that drift
//! too close are pruned, a fresh spline is fitted, and the loop is resampled
//! at uniform arc-length spacing.

use crate::error::{Error, Result};
use crate::geometry::{segments_intersect, signed_area, Vec2};
use crate::spline::PeriodicSpline;

#[derive(Debug, Clone)]
pub struct EnvelopeCurve {
    nodes: Vec<Vec2>,
    spline: PeriodicSpline,
}

impl EnvelopeCurve {
    /// Build from an ordered closed loop. Clockwise input is reversed so the
    /// stored orientation is always counter-clockwise.
    pub fn new(points: &[Vec2]) -> Result<Self> {
        let mut nodes = points.to_vec();
        if nodes.len() < 3 {
            return Err(Error::Geometry(format!(
                "envelope needs at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        let area = signed_area(&nodes);
        if area == 0.0 {
            return Err(Error::Geometry("degenerate envelope (zero area)".into()));
        }
        if area < 0.0 {
            nodes.reverse();
        }
        if let Some((i, j)) = first_self_intersection(&nodes) {
            return Err(Error::Topology(format!(
                "envelope segments {i} and {j} intersect"
            )));
        }
        let spline = PeriodicSpline::fit(&nodes)?;
        Ok(EnvelopeCurve { nodes, spline })
    }

    /// Closed circle of radius `r`, discretized at spacing ~= `h`.
    pub fn circle(center: Vec2, r: f64, h: f64) -> Result<Self> {
        if r <= 0.0 || h <= 0.0 {
            return Err(Error::Geometry("circle needs r > 0 and h > 0".into()));
        }
        let count = ((2.0 * std::f64::consts::PI * r / h).round() as usize).max(8);
        let pts: Vec<Vec2> = (0..count)
            .map(|i| {
                let phi = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                center + Vec2::new(r * phi.cos(), r * phi.sin())
            })
            .collect();
        EnvelopeCurve::new(&pts)
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spline(&self) -> &PeriodicSpline {
        &self.spline
    }

    pub fn arc_length(&self) -> f64 {
        self.spline.arc_length()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.nodes)
    }

    /// Unit normal at control node `i`, pointing out of the grain (to the
    /// right of the counter-clockwise tangent).
    pub fn outward_normal(&self, i: usize) -> Result<Vec2> {
        let tangent = self.spline.derivative(self.spline.knot(i));
        let n = tangent.norm();
        if n < 1e-14 {
            return Err(Error::Geometry(format!(
                "degenerate tangent at envelope node {i}"
            )));
        }
        Ok((tangent / n).perp_cw())
    }

    pub fn outward_normals(&self) -> Result<Vec<Vec2>> {
        (0..self.nodes.len()).map(|i| self.outward_normal(i)).collect()
    }

    /// Move every control node by cos(theta_i) * v_i * dt along its normal.
    pub fn advect_nodes(&self, speeds: &[f64], dt: f64) -> Result<Vec<Vec2>> {
        if speeds.len() != self.nodes.len() {
            return Err(Error::Alignment {
                field_len: speeds.len(),
                node_count: self.nodes.len(),
            });
        }
        if let Some(v) = speeds.iter().find(|v| **v < 0.0 || !v.is_finite()) {
            return Err(Error::Domain(format!("invalid envelope speed {v}")));
        }
        let mut moved = Vec::with_capacity(self.nodes.len());
        for (i, &x) in self.nodes.iter().enumerate() {
            let n = self.outward_normal(i)?;
            let vn = growth_cosine(n)? * speeds[i];
            moved.push(x + n * (vn * dt));
        }
        Ok(moved)
    }

    /// The +x primary tip position: max x over control nodes.
    pub fn tip_position(&self) -> f64 {
        self.nodes.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// cos(theta) for the smallest angle between the unit normal and the four
/// <10> growth directions +-e_x, +-e_y.
pub fn growth_cosine(normal: Vec2) -> Result<f64> {
    if (normal.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Geometry(format!(
            "growth_cosine expects a unit normal, |n| = {}",
            normal.norm()
        )));
    }
    Ok(normal.x.abs().max(normal.y.abs()))
}

/// Rebuild the envelope from moved points: prune points closer than
/// 0.5 * h_d along the loop, fit a periodic spline, and resample it at the
/// uniform arc-length spacing closest to h_d that divides the length evenly.
pub fn reconstruct(points: &[Vec2], h_d: f64) -> Result<EnvelopeCurve> {
    if points.len() < 8 {
        return Err(Error::Geometry(format!(
            "envelope reconstruction needs at least 8 points, got {}",
            points.len()
        )));
    }
    let mut pruned = prune_close(points, 0.5 * h_d);
    if pruned.len() < 3 {
        return Err(Error::Geometry(
            "envelope collapsed: fewer than 3 nodes after pruning".into(),
        ));
    }
    // a crossing usually comes from a small pinched-off loop of overtaken
    // nodes; cut it out once, then give up
    if first_self_intersection(&pruned).is_some() {
        pruned = cut_first_loop(&pruned)?;
        if let Some((i, j)) = first_self_intersection(&pruned) {
            return Err(Error::Topology(format!(
                "envelope self-intersection persists after loop removal \
                 (segments {i} and {j} of {} nodes)",
                pruned.len()
            )));
        }
    }
    let spline = PeriodicSpline::fit(&pruned)?;
    let count = ((spline.arc_length() / h_d).round() as usize).max(8);
    let resampled = spline.resample_uniform(count);
    EnvelopeCurve::new(&resampled)
}

fn prune_close(points: &[Vec2], min_gap: f64) -> Vec<Vec2> {
    let mut kept: Vec<Vec2> = Vec::with_capacity(points.len());
    for &p in points {
        if kept.last().map_or(true, |q| q.dist(p) >= min_gap) {
            kept.push(p);
        }
    }
    // wrap-around: the last kept point must also clear the first
    while kept.len() > 3 && kept[kept.len() - 1].dist(kept[0]) < min_gap {
        kept.pop();
    }
    kept
}

fn first_self_intersection(points: &[Vec2]) -> Option<(usize, usize)> {
    let n = points.len();
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        for j in i + 2..n {
            // skip adjacency (including the wrap pair 0 / n-1)
            if i == 0 && j == n - 1 {
                continue;
            }
            let c = points[j];
            let d = points[(j + 1) % n];
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Remove the shorter arc between the first pair of crossing segments.
fn cut_first_loop(points: &[Vec2]) -> Result<Vec<Vec2>> {
    let n = points.len();
    let (i, j) = first_self_intersection(points).expect("caller checked");
    let inner = j - i; // nodes i+1 ..= j
    let keep: Vec<Vec2> = if inner <= n - inner {
        points
            .iter()
            .enumerate()
            .filter(|(k, _)| *k <= i || *k > j)
            .map(|(_, p)| *p)
            .collect()
    } else {
        points[i + 1..=j].to_vec()
    };
    if keep.len() < 3 {
        return Err(Error::Topology(
            "envelope reduced to fewer than 3 nodes while removing a loop".into(),
        ));
    }
    Ok(keep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn circle_pts(n: usize, r: f64) -> Vec<Vec2> {
        (0..n)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / n as f64;
                Vec2::new(r * phi.cos(), r * phi.sin())
            })
            .collect()
    }

    #[test]
    fn circle_normals_are_radial() {
        let env = EnvelopeCurve::new(&circle_pts(80, 1.4)).unwrap();
        for i in 0..env.len() {
            let p = env.nodes()[i];
            let n = env.outward_normal(i).unwrap();
            assert!(n.dist(p.normalized()) < 1e-6, "node {i}");
        }
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let mut cw = circle_pts(40, 1.0);
        cw.reverse();
        let env = EnvelopeCurve::new(&cw).unwrap();
        assert!(env.area() > 0.0);
        for i in 0..env.len() {
            let n = env.outward_normal(i).unwrap();
            assert!(n.dot(env.nodes()[i]) > 0.99);
        }
    }

    #[test]
    fn growth_cosine_examples() {
        assert_eq!(growth_cosine(Vec2::new(1.0, 0.0)).unwrap(), 1.0);
        let d = growth_cosine(Vec2::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).unwrap();
        assert!((d - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((growth_cosine(Vec2::new(0.6, -0.8)).unwrap() - 0.8).abs() < 1e-15);
        assert!(growth_cosine(Vec2::new(0.5, 0.5)).is_err());
    }

    #[test]
    fn zero_speed_leaves_curve_in_place() {
        let env = EnvelopeCurve::new(&circle_pts(32, 0.22)).unwrap();
        let moved = env.advect_nodes(&vec![0.0; 32], 1e-3).unwrap();
        for (a, b) in moved.iter().zip(env.nodes()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn circle_advection_is_anisotropic() {
        let env = EnvelopeCurve::new(&circle_pts(360, 1.0)).unwrap();
        let dt = 1e-3;
        let moved = env.advect_nodes(&vec![1.0; 360], dt).unwrap();
        // node 0 sits on +x: full speed
        assert!((moved[0].norm() - (1.0 + dt)).abs() < 1e-6);
        // node 45 is at 45 degrees: projected speed sqrt(2)/2
        let d45 = moved[45].norm() - 1.0;
        assert!((d45 - FRAC_1_SQRT_2 * dt).abs() < 1e-6, "d45 = {d45:e}");
    }

    #[test]
    fn advection_grows_area() {
        let env = EnvelopeCurve::new(&circle_pts(64, 0.5)).unwrap();
        let moved = env.advect_nodes(&vec![0.7; 64], 1e-2).unwrap();
        assert!(signed_area(&moved) > env.area());
    }

    #[test]
    fn reconstruct_circle_round_trip() {
        let env = reconstruct(&circle_pts(130, 1.0), 0.05).unwrap();
        assert_eq!(env.len(), 126); // round(2*pi / 0.05)
        for p in env.nodes() {
            assert!((p.norm() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn duplicate_points_are_pruned() {
        let mut pts = circle_pts(50, 1.0);
        let dup = pts[10];
        pts.insert(10, dup);
        let env = reconstruct(&pts, 0.1).unwrap();
        assert!(env.arc_length() > 6.0 && env.arc_length() < 6.6);
    }

    #[test]
    fn four_fold_star_matches_analytic_curve() {
        let shape = |phi: f64| {
            let r = 1.0 + 0.3 * (4.0 * phi).cos();
            Vec2::new(r * phi.cos(), r * phi.sin())
        };
        let h_d = 0.05;
        // sample the analytic curve at spacing ~ h_d
        let n_in = (2.0 * PI * 1.0 / h_d * 1.3) as usize;
        let pts: Vec<Vec2> = (0..n_in)
            .map(|i| shape(2.0 * PI * i as f64 / n_in as f64))
            .collect();
        let env = reconstruct(&pts, h_d).unwrap();
        // dense sampling oracle for the distance to the analytic curve
        let dense: Vec<Vec2> = (0..20000)
            .map(|i| shape(2.0 * PI * i as f64 / 20000.0))
            .collect();
        for p in env.nodes() {
            let d = dense
                .iter()
                .map(|q| q.dist(*p))
                .fold(f64::INFINITY, f64::min);
            assert!(d < 1e-3, "node off the analytic star by {d:e}");
        }
    }

    #[test]
    fn pinched_loop_is_cut() {
        // a circle with a small figure-eight pinch spliced in
        let mut pts = circle_pts(60, 1.0);
        pts[20] = pts[22] + Vec2::new(0.02, 0.02);
        pts[22] = pts[20] + Vec2::new(-0.04, 0.0);
        let env = reconstruct(&pts, 0.1);
        // either the loop was removed or flagged; never a panic
        if let Ok(e) = env {
            assert!(first_self_intersection(e.nodes()).is_none());
        }
    }

    #[test]
    fn tip_position_of_initial_circle() {
        let env = EnvelopeCurve::circle(Vec2::ZERO, 0.22, 0.05).unwrap();
        assert!((env.tip_position() - 0.22).abs() < 1e-3);
    }

    #[test]
    fn self_intersecting_input_rejected() {
        let bow = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 0.0),
        ];
        assert!(matches!(EnvelopeCurve::new(&bow), Err(Error::Topology(_))));
    }
}
