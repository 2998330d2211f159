//! Time grids, Brownian path ensembles, regression-based conditional
//! expectations and the martingale-representation kernels L(u), K(s,u).

mod kernels;
mod regression;

pub use kernels::{k_energy_vs_process, l_energy_vs_terminal, martingale_integrand, representation_kernel_k};
pub use regression::{conditional_expectation, NodeRegressor, Projection, RidgePolicy};

use crate::fields::{MatrixField, StateField, TriangularField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("normal equations singular at node {node} even with ridge {ridge:.3e}")]
    SingularGram { node: usize, ridge: f64 },
}

/// Uniform grid t_0 = 0 < t_1 < ... < t_N = T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    /// Node value t_i = i T / N.
    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.horizon * i as f64 / self.steps as f64
    }

    /// Cell width T / N.
    #[inline]
    pub fn delta(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|i| self.node(i)).collect()
    }

    /// Number of nodes, N + 1.
    #[inline]
    pub fn node_count(&self) -> usize {
        self.steps + 1
    }
}

/// Builds the uniform grid on [0, T] with N steps.
pub fn make_grid(horizon: f64, steps: usize) -> Result<TimeGrid, CoreError> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(CoreError::InvalidArgument(format!(
            "grid horizon must be positive and finite, got {horizon}"
        )));
    }
    if steps < 2 {
        return Err(CoreError::InvalidArgument(format!("grid needs at least 2 steps, got {steps}")));
    }
    Ok(TimeGrid { horizon, steps })
}

/// P sampled Brownian paths on a time grid: the Monte Carlo substrate for
/// all expectations. Reproducible from `(seed, grid, brownian_dim, paths)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub grid: TimeGrid,
    pub brownian_dim: usize,
    pub path_count: usize,
    pub seed: u64,
    /// w(t_i) per (node, path): node-major, `grid.steps + 1` nodes.
    values: StateField,
    /// Increments w(t_{i+1}) - w(t_i) per (cell, path): `grid.steps` cells.
    increments: StateField,
}

/// Identity string of the variate generator, recorded in every report.
pub const GENERATOR_ID: &str = "chacha8/per-path-stream/std-normal";

/// Samples a fresh ensemble. Each path draws from its own ChaCha8 stream
/// keyed by the path index, so generation order across paths (and hence the
/// worker count) cannot change the values.
pub fn sample_paths(
    grid: TimeGrid,
    brownian_dim: usize,
    path_count: usize,
    seed: u64,
) -> Result<PathEnsemble, CoreError> {
    if brownian_dim == 0 {
        return Err(CoreError::InvalidArgument("brownian_dim must be at least 1".into()));
    }
    if path_count == 0 {
        return Err(CoreError::InvalidArgument("path_count must be at least 1".into()));
    }
    let n = grid.steps;
    let m = brownian_dim;
    let sqrt_dt = grid.delta().sqrt();

    let per_path: Vec<Vec<f64>> = crate::par::map_collect(path_count, |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(p as u64);
        let mut incr = vec![0.0; n * m];
        for v in incr.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = z * sqrt_dt;
        }
        incr
    });

    let mut values = StateField::zeros(path_count, n + 1, m);
    let mut increments = StateField::zeros(path_count, n, m);
    for p in 0..path_count {
        let incr = &per_path[p];
        let mut running = vec![0.0; m];
        for step in 0..n {
            let d = &incr[step * m..(step + 1) * m];
            increments.get_mut(step, p).copy_from_slice(d);
            for c in 0..m {
                running[c] += d[c];
            }
            values.get_mut(step + 1, p).copy_from_slice(&running);
        }
    }

    Ok(PathEnsemble { grid, brownian_dim, path_count, seed, values, increments })
}

impl PathEnsemble {
    /// w(t_node) of one path.
    #[inline]
    pub fn state(&self, node: usize, path: usize) -> &[f64] {
        self.values.get(node, path)
    }

    /// Increment over cell `[t_step, t_{step+1}]` of one path.
    #[inline]
    pub fn increment(&self, step: usize, path: usize) -> &[f64] {
        self.increments.get(step, path)
    }

    /// Builds an ensemble from explicit node values (replay or crafted
    /// test ensembles); increments are recomputed from the values.
    pub fn from_values(
        grid: TimeGrid,
        brownian_dim: usize,
        values: StateField,
        seed: u64,
    ) -> Result<Self, CoreError> {
        if values.nodes != grid.steps + 1 || values.dim != brownian_dim {
            return Err(CoreError::InvalidArgument("value field shape does not match grid".into()));
        }
        let path_count = values.paths;
        for p in 0..path_count {
            if values.get(0, p).iter().any(|v| *v != 0.0) {
                return Err(CoreError::InvalidArgument(format!("path {p} does not start at 0")));
            }
        }
        let mut increments = StateField::zeros(path_count, grid.steps, brownian_dim);
        for step in 0..grid.steps {
            for p in 0..path_count {
                let a = values.get(step, p).to_vec();
                let b = values.get(step + 1, p);
                let d = increments.get_mut(step, p);
                for c in 0..brownian_dim {
                    d[c] = b[c] - a[c];
                }
            }
        }
        Ok(Self { grid, brownian_dim, path_count, seed, values, increments })
    }

    /// CSV export with columns `path,node,component,value`.
    pub fn export_csv<W: std::io::Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "path,node,component,value")?;
        for p in 0..self.path_count {
            for node in 0..=self.grid.steps {
                let state = self.state(node, p);
                for (c, v) in state.iter().enumerate() {
                    writeln!(w, "{p},{node},{c},{v:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Polynomial-in-current-state regression basis: all monomials in the
/// components of w(t_i) of total degree <= `degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegressionBasis {
    pub degree: usize,
}

impl RegressionBasis {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    /// Number of basis functions for an m-dimensional state:
    /// binomial(m + degree, degree).
    pub fn size(&self, brownian_dim: usize) -> usize {
        let mut c = 1usize;
        for j in 1..=self.degree {
            c = c * (brownian_dim + j) / j;
        }
        c
    }

    /// Multi-indices of the monomials, graded order, degree-0 first.
    pub fn multi_indices(&self, brownian_dim: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.size(brownian_dim));
        let mut current = vec![0usize; brownian_dim];
        for total in 0..=self.degree {
            emit_indices(brownian_dim, total, 0, total, &mut current, &mut out);
        }
        out
    }
}

fn emit_indices(
    m: usize,
    total: usize,
    pos: usize,
    remaining: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if pos == m {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    if pos == m - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        emit_indices(m, total, pos + 1, remaining - k, current, out);
    }
    current[pos] = 0;
}

/// Estimated martingale-representation kernels. `l_field` holds L(u) per
/// (node, path); `k_field` holds K(s, u) stored at row u, column s with
/// u < s (K vanishes for u >= s and is never stored there).
#[derive(Debug, Clone)]
pub struct MartingaleKernels {
    pub l_field: MatrixField,
    pub k_field: TriangularField,
}
