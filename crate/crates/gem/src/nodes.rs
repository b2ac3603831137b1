//! Scattered-node discretization: node kinds, normals, per-node target
//! spacing, and a flat-grid spatial index for nearest-neighbor queries.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Envelope,
    Wall,
}

static GENERATION: AtomicU64 = AtomicU64::new(1);

/// One complete discretization of the liquid domain. Regenerated from
/// scratch whenever the envelope moves; the generation tag lets dependent
/// structures (fields, weight stores) detect stale pairings.
#[derive(Debug, Clone)]
pub struct NodeSet {
    pub positions: Vec<Vec2>,
    pub kinds: Vec<NodeKind>,
    /// Unit outward normals for envelope and wall nodes; zero for interior.
    pub normals: Vec<Vec2>,
    /// Local target spacing h(x).
    pub spacing: Vec<f64>,
    pub generation: u64,
}

impl NodeSet {
    pub fn new(
        positions: Vec<Vec2>,
        kinds: Vec<NodeKind>,
        normals: Vec<Vec2>,
        spacing: Vec<f64>,
    ) -> Result<Self> {
        let n = positions.len();
        if kinds.len() != n || normals.len() != n || spacing.len() != n {
            return Err(Error::Geometry(
                "node attribute arrays have mismatched lengths".into(),
            ));
        }
        for (i, k) in kinds.iter().enumerate() {
            if *k != NodeKind::Interior {
                let err = (normals[i].norm() - 1.0).abs();
                if err > 1e-12 {
                    return Err(Error::Geometry(format!(
                        "boundary node {i} has non-unit normal (|n| off by {err:e})"
                    )));
                }
            }
        }
        Ok(NodeSet {
            positions,
            kinds,
            normals,
            spacing,
            generation: GENERATION.fetch_add(1, Ordering::Relaxed),
        })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Support of the operator approximation at one node: the `n` nearest
/// nodes including the center itself, ordered by distance (ties by index).
#[derive(Debug, Clone)]
pub struct Stencil {
    pub center: usize,
    pub support: Vec<usize>,
}

/// Static uniform-cell spatial index. Rebuilt with each NodeSet; build cost
/// is linear in the node count.
pub struct GridIndex {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<usize>>,
    points: Vec<Vec2>,
}

impl GridIndex {
    pub fn build(points: &[Vec2], cell: f64) -> Self {
        assert!(cell > 0.0 && !points.is_empty());
        let mut min = points[0];
        let mut max = points[0];
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        let nx = (((max.x - min.x) / cell).floor() as usize) + 1;
        let ny = (((max.y - min.y) / cell).floor() as usize) + 1;
        let mut cells = vec![Vec::new(); nx * ny];
        let origin = min;
        for (i, p) in points.iter().enumerate() {
            let cx = (((p.x - origin.x) / cell) as usize).min(nx - 1);
            let cy = (((p.y - origin.y) / cell) as usize).min(ny - 1);
            cells[cy * nx + cx].push(i);
        }
        GridIndex {
            origin,
            cell,
            nx,
            ny,
            cells,
            points: points.to_vec(),
        }
    }

    fn cell_of(&self, p: Vec2) -> (isize, isize) {
        (
            ((p.x - self.origin.x) / self.cell).floor() as isize,
            ((p.y - self.origin.y) / self.cell).floor() as isize,
        )
    }

    /// Visit every stored point within `radius` of `p`.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, p: Vec2, radius: f64, mut f: F) {
        let r2 = radius * radius;
        let (cx, cy) = self.cell_of(p);
        let reach = (radius / self.cell).ceil() as isize;
        for gy in (cy - reach).max(0)..=(cy + reach).min(self.ny as isize - 1) {
            for gx in (cx - reach).max(0)..=(cx + reach).min(self.nx as isize - 1) {
                for &idx in &self.cells[gy as usize * self.nx + gx as usize] {
                    let d2 = self.points[idx].dist_sq(p);
                    if d2 <= r2 {
                        f(idx, d2);
                    }
                }
            }
        }
    }

    pub fn has_point_within(&self, p: Vec2, radius: f64) -> bool {
        let mut found = false;
        self.for_each_within(p, radius, |_, _| found = true);
        found
    }

    /// Index of the nearest stored point. Expanding ring search.
    pub fn nearest(&self, p: Vec2) -> usize {
        self.k_nearest(p, 1)[0]
    }

    /// Indices of the k nearest stored points, sorted by distance with ties
    /// broken by ascending index.
    pub fn k_nearest(&self, p: Vec2, k: usize) -> Vec<usize> {
        let (cx, cy) = self.cell_of(p);
        let mut cand: Vec<(f64, usize)> = Vec::with_capacity(4 * k);
        let max_ring = self.nx.max(self.ny) as isize + (cx.abs().max(cy.abs())) + 2;
        let mut ring: isize = 0;
        loop {
            let mut any_cell = false;
            for gy in (cy - ring)..=(cy + ring) {
                if gy < 0 || gy >= self.ny as isize {
                    continue;
                }
                for gx in (cx - ring)..=(cx + ring) {
                    if gx < 0 || gx >= self.nx as isize {
                        continue;
                    }
                    // only the boundary of the ring is new
                    if ring > 0
                        && (gx - cx).abs() != ring
                        && (gy - cy).abs() != ring
                    {
                        continue;
                    }
                    any_cell = true;
                    for &idx in &self.cells[gy as usize * self.nx + gx as usize] {
                        cand.push((self.points[idx].dist_sq(p), idx));
                    }
                }
            }
            // points in rings beyond `ring` lie at least (ring * cell) away
            let safe = ring as f64 * self.cell;
            if cand.len() >= k {
                cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if cand[k - 1].0.sqrt() <= safe {
                    break;
                }
            }
            ring += 1;
            if ring > max_ring && !any_cell {
                cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
                break;
            }
        }
        cand.truncate(k.min(cand.len()));
        cand.into_iter().map(|(_, i)| i).collect()
    }
}

/// Build the n-nearest-neighbor stencil of every node.
pub fn find_stencils(nodes: &NodeSet, n: usize) -> Result<Vec<Stencil>> {
    if nodes.len() < n {
        return Err(Error::StencilSize {
            have: nodes.len(),
            need: n,
        });
    }
    let grid = GridIndex::build(&nodes.positions, nodes.max_spacing());
    Ok((0..nodes.len())
        .into_par_iter()
        .map(|i| Stencil {
            center: i,
            support: grid.k_nearest(nodes.positions[i], n),
        })
        .collect())
}
