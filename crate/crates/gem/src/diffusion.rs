//! Explicit diffusion of the supersaturation field on the scattered nodes:
//! forward Euler on the meshless Laplacian, u = 0 pinned on the envelope,
//! homogeneous Neumann on the outer wall enforced by eliminating each wall
//! value through its own normal-derivative stencil row.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nodes::{NodeKind, NodeSet};
use crate::operators::WeightStore;

/// Default stability constant: dt <= C_STAB * h_min^2.
pub const C_STAB: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct ScalarField {
    pub values: Vec<f64>,
    pub generation: u64,
}

/// u = omega0 in the liquid, u = 0 on the envelope.
pub fn init_field(nodes: &NodeSet, omega0: f64) -> ScalarField {
    let values = nodes
        .kinds
        .iter()
        .map(|k| match k {
            NodeKind::Envelope => 0.0,
            _ => omega0,
        })
        .collect();
    ScalarField {
        values,
        generation: nodes.generation,
    }
}

/// One forward-Euler step. `c_stab` bounds dt by c_stab * h_min^2.
pub fn step(
    nodes: &NodeSet,
    weights: &WeightStore,
    field: &ScalarField,
    dt: f64,
    c_stab: f64,
) -> Result<ScalarField> {
    if field.values.len() != nodes.len() || weights.node_count() != nodes.len() {
        return Err(Error::Alignment {
            field_len: field.values.len(),
            node_count: nodes.len(),
        });
    }
    if field.generation != nodes.generation || weights.generation != nodes.generation {
        return Err(Error::Geometry(
            "field or weights are stale for this node set".into(),
        ));
    }
    let h_min = nodes.min_spacing();
    let bound = c_stab * h_min * h_min;
    if dt > bound {
        return Err(Error::Stability { dt, bound });
    }

    let u = &field.values;
    let mut next: Vec<f64> = (0..nodes.len())
        .into_par_iter()
        .map(|i| match nodes.kinds[i] {
            NodeKind::Interior => {
                let lap: f64 = weights
                    .stencil(i)
                    .support
                    .iter()
                    .zip(weights.row(i))
                    .map(|(&j, w)| w * u[j])
                    .sum();
                u[i] + dt * lap
            }
            NodeKind::Envelope => 0.0,
            NodeKind::Wall => u[i],
        })
        .collect();

    // wall rows: n . grad(u) = 0; the wall stencils contain no other wall
    // nodes (see WeightStore::build), so one elimination pass is exact
    let wall: Vec<usize> = (0..nodes.len())
        .filter(|&i| nodes.kinds[i] == NodeKind::Wall)
        .collect();
    let updates: Vec<(usize, f64)> = wall
        .par_iter()
        .map(|&b| {
            let st = weights.stencil(b);
            let row = weights.row(b);
            let mut diag = 0.0;
            let mut rest = 0.0;
            for (&j, &w) in st.support.iter().zip(row) {
                if j == b {
                    diag = w;
                } else {
                    rest += w * next[j];
                }
            }
            if diag.abs() < 1e-12 {
                return Err(Error::Conditioning {
                    node: b,
                    reason: "vanishing diagonal in wall Neumann row".into(),
                });
            }
            Ok((b, -rest / diag))
        })
        .collect::<Result<_>>()?;
    for (b, v) in updates {
        next[b] = v;
    }

    Ok(ScalarField {
        values: next,
        generation: field.generation,
    })
}
