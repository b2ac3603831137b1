use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("root finding failed to converge: {0}")]
    Convergence(String),

    #[error("requested u_delta {u_delta} exceeds invertible range, saturated at pe = {pe_max}")]
    Saturated { u_delta: f64, pe_max: f64 },

    #[error("not enough nodes: have {have}, need {need}")]
    StencilSize { have: usize, need: usize },

    #[error("ill-conditioned stencil at node {node}: {reason}")]
    Conditioning { node: usize, reason: String },

    #[error("field has {field_len} values but node set has {node_count} nodes")]
    Alignment { field_len: usize, node_count: usize },

    #[error("no interpolation patch covers point ({x}, {y})")]
    OutOfCover { x: f64, y: f64 },

    #[error("interpolant leaves domain region uncovered near ({x}, {y})")]
    Coverage { x: f64, y: f64 },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("envelope topology failure: {0}")]
    Topology(String),

    #[error("interior fill failed: {0}")]
    Fill(String),

    #[error("time step {dt} exceeds stability bound {bound}")]
    Stability { dt: f64, bound: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
