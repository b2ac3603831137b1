//! Partition-of-unity interpolation of a scattered field.
//!
//! Every node carries a circular patch of radius 2.5 h with a local
//! quadratic least-squares fit over the node's 12-point stencil. A point is
//! evaluated by Shepard-blending the covering patches with the Wendland C2
//! weight (1 - r/R)^4 (4 r/R + 1); the normalized weights sum to one, so
//! constants are reproduced exactly. Points slightly outside the covered
//! region (probe offsets can reach past the outer wall) are evaluated with
//! the nearest patch alone.

use nalgebra::{Cholesky, Matrix6, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::nodes::{find_stencils, GridIndex, NodeSet};
use crate::operators::BASIS_SIZE;

/// Patch radius in units of the local spacing.
const PATCH_RADIUS: f64 = 2.5;
/// How far beyond its radius a patch may be used for extrapolation, in
/// units of the radius.
const EXTENDED: f64 = 2.0;

pub struct PuInterpolant {
    centers: Vec<Vec2>,
    radii: Vec<f64>,
    /// Local quadratic coefficients in (x - c) / R coordinates.
    coeffs: Vec<[f64; BASIS_SIZE]>,
    grid: GridIndex,
    max_radius: f64,
}

fn monomials(p: Vec2) -> [f64; BASIS_SIZE] {
    [1.0, p.x, p.y, p.x * p.x, p.x * p.y, p.y * p.y]
}

/// Wendland C2 blending weight on [0, 1].
fn blend(q: f64) -> f64 {
    let t = 1.0 - q;
    t * t * t * t * (4.0 * q + 1.0)
}

/// Fit one patch per node from the node's stencil values.
pub fn build_pu(nodes: &NodeSet, values: &[f64]) -> Result<PuInterpolant> {
    if values.len() != nodes.len() {
        return Err(Error::Alignment {
            field_len: values.len(),
            node_count: nodes.len(),
        });
    }
    let stencils = find_stencils(nodes, 12)?;
    let radii: Vec<f64> = nodes.spacing.iter().map(|h| PATCH_RADIUS * h).collect();
    let coeffs: Vec<[f64; BASIS_SIZE]> = stencils
        .par_iter()
        .map(|st| {
            let c = nodes.positions[st.center];
            let r = radii[st.center];
            // normal equations of the local least-squares quadratic
            let mut g = Matrix6::zeros();
            let mut rhs = Vector6::zeros();
            for &i in &st.support {
                let phi = monomials((nodes.positions[i] - c) / r);
                for a in 0..BASIS_SIZE {
                    rhs[a] += phi[a] * values[i];
                    for b in 0..BASIS_SIZE {
                        g[(a, b)] += phi[a] * phi[b];
                    }
                }
            }
            let sol = Cholesky::new(g)
                .map(|ch| ch.solve(&rhs))
                .ok_or_else(|| Error::Conditioning {
                    node: st.center,
                    reason: "degenerate patch fit (stencil not unisolvent)".into(),
                })?;
            let mut out = [0.0; BASIS_SIZE];
            for a in 0..BASIS_SIZE {
                out[a] = sol[a];
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let max_radius = radii.iter().cloned().fold(0.0, f64::max);
    Ok(PuInterpolant {
        centers: nodes.positions.clone(),
        radii,
        coeffs,
        grid: GridIndex::build(&nodes.positions, nodes.max_spacing()),
        max_radius,
    })
}

impl PuInterpolant {
    fn patch_value(&self, i: usize, p: Vec2) -> f64 {
        let phi = monomials((p - self.centers[i]) / self.radii[i]);
        phi.iter()
            .zip(&self.coeffs[i])
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Blended value at `p`. Covered points use the partition of unity;
    /// points within the extended reach of some patch use the nearest patch
    /// alone; anything farther is an error.
    pub fn eval(&self, p: Vec2) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        self.grid.for_each_within(p, self.max_radius, |i, d2| {
            let r = self.radii[i];
            let d = d2.sqrt();
            if d < r {
                let w = blend(d / r);
                num += w * self.patch_value(i, p);
                den += w;
            }
        });
        if den > 0.0 {
            return Ok(num / den);
        }
        // mild extrapolation off the nearest patch
        let near = self.grid.nearest(p);
        let d = self.centers[near].dist(p);
        if d <= EXTENDED * self.radii[near] {
            Ok(self.patch_value(near, p))
        } else {
            Err(Error::OutOfCover { x: p.x, y: p.y })
        }
    }
}
