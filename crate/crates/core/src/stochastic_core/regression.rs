//! Least-squares Monte Carlo projection onto polynomial features of the
//! current Brownian state (Longstaff-Schwartz style conditional expectation).

use super::{CoreError, PathEnsemble, RegressionBasis};
use crate::fields::PathVectors;
use crate::par;
use nalgebra::{Cholesky, DMatrix, Dyn};

/// Regularization behaviour of the normal-equation solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RidgePolicy {
    /// Plain least squares; ridge only when the Cholesky factorization fails,
    /// starting at 1e-10 * trace(G)/B and escalating by 10x.
    Auto,
    /// Always apply ridge `scale * trace(G)/B` (stability experiments).
    Always(f64),
}

/// Result of a conditional-expectation projection.
#[derive(Debug, Clone)]
pub struct Projection {
    /// Per-path estimate of E{target | F_{t_i}}.
    pub values: PathVectors,
    /// Ridge parameter actually applied, if any (warning flag).
    pub ridge: Option<f64>,
}

/// Fitted projection operator at one grid node.
pub struct NodeRegressor {
    pub node: usize,
    basis_indices: Vec<Vec<usize>>,
    /// Feature scale: states are multiplied by this before forming monomials
    /// so the Gram matrix stays O(1)-conditioned on every node.
    scale: f64,
    /// Node 0 carries no state information; the projection is the sample mean.
    mean_mode: bool,
    chol: Option<Cholesky<f64, Dyn>>,
    pub ridge: Option<f64>,
}

fn eval_features(indices: &[Vec<usize>], state: &[f64], scale: f64, out: &mut [f64]) {
    for (b, idx) in indices.iter().enumerate() {
        let mut v = 1.0;
        for (c, &k) in idx.iter().enumerate() {
            for _ in 0..k {
                v *= state[c] * scale;
            }
        }
        out[b] = v;
    }
}

impl NodeRegressor {
    /// Assembles and factors the normal equations of the polynomial basis at
    /// one node. Deterministic for any worker count.
    pub fn fit(
        ensemble: &PathEnsemble,
        basis: &RegressionBasis,
        node: usize,
        policy: RidgePolicy,
    ) -> Result<Self, CoreError> {
        if node > ensemble.grid.steps {
            return Err(CoreError::InvalidArgument(format!(
                "node {node} outside grid with {} steps",
                ensemble.grid.steps
            )));
        }
        let m = ensemble.brownian_dim;
        let indices = basis.multi_indices(m);
        let b = indices.len();
        let t_node = ensemble.grid.node(node);
        let scale = 1.0 / t_node.max(ensemble.grid.delta()).sqrt();

        if node == 0 {
            return Ok(Self {
                node,
                basis_indices: indices,
                scale,
                mean_mode: true,
                chol: None,
                ridge: None,
            });
        }

        let paths = ensemble.path_count;
        let gram_flat = par::block_sum(paths, b * b, |range, acc| {
            let mut phi = vec![0.0; b];
            for p in range {
                eval_features(&indices, ensemble.state(node, p), scale, &mut phi);
                for i in 0..b {
                    let fi = phi[i];
                    for j in 0..b {
                        acc[i * b + j] += fi * phi[j];
                    }
                }
            }
        });
        let mut gram = DMatrix::<f64>::from_fn(b, b, |i, j| gram_flat[i * b + j] / paths as f64);

        let trace_avg = gram.trace() / b as f64;
        let mut ridge_used = None;
        let mut lambda = match policy {
            RidgePolicy::Auto => 0.0,
            RidgePolicy::Always(scale) => scale * trace_avg,
        };
        if lambda > 0.0 {
            for i in 0..b {
                gram[(i, i)] += lambda;
            }
            ridge_used = Some(lambda);
        }
        for _attempt in 0..=8 {
            if let Some(chol) = Cholesky::new(gram.clone()) {
                return Ok(Self {
                    node,
                    basis_indices: indices,
                    scale,
                    mean_mode: false,
                    chol: Some(chol),
                    ridge: ridge_used,
                });
            }
            let bump = if lambda == 0.0 { 1e-10 * trace_avg.max(f64::MIN_POSITIVE) } else { 9.0 * lambda };
            for i in 0..b {
                gram[(i, i)] += bump;
            }
            lambda += bump;
            ridge_used = Some(lambda);
        }
        Err(CoreError::SingularGram { node, ridge: lambda })
    }

    pub fn basis_size(&self) -> usize {
        self.basis_indices.len()
    }

    /// Projects path-major targets (`paths x t_dim`) and evaluates the fitted
    /// function at the fit node.
    pub fn project(&self, ensemble: &PathEnsemble, targets: &[f64], t_dim: usize) -> Vec<f64> {
        self.project_at(ensemble, self.node, targets, t_dim)
    }

    /// Projects targets fitted at `self.node`, then evaluates the fitted
    /// function at the states of `eval_node`.
    pub fn project_at(
        &self,
        ensemble: &PathEnsemble,
        eval_node: usize,
        targets: &[f64],
        t_dim: usize,
    ) -> Vec<f64> {
        let paths = ensemble.path_count;
        debug_assert_eq!(targets.len(), paths * t_dim);

        if self.mean_mode {
            let sums = par::block_sum(paths, t_dim, |range, acc| {
                for p in range {
                    for j in 0..t_dim {
                        acc[j] += targets[p * t_dim + j];
                    }
                }
            });
            let means: Vec<f64> = sums.iter().map(|s| s / paths as f64).collect();
            let mut out = vec![0.0; paths * t_dim];
            for p in 0..paths {
                out[p * t_dim..(p + 1) * t_dim].copy_from_slice(&means);
            }
            return out;
        }

        let b = self.basis_size();
        let indices = &self.basis_indices;
        let scale = self.scale;
        let node = self.node;
        let rhs_flat = par::block_sum(paths, b * t_dim, |range, acc| {
            let mut phi = vec![0.0; b];
            for p in range {
                eval_features(indices, ensemble.state(node, p), scale, &mut phi);
                for i in 0..b {
                    let fi = phi[i];
                    if fi == 0.0 {
                        continue;
                    }
                    for j in 0..t_dim {
                        acc[i * t_dim + j] += fi * targets[p * t_dim + j];
                    }
                }
            }
        });
        let rhs =
            DMatrix::<f64>::from_fn(b, t_dim, |i, j| rhs_flat[i * t_dim + j] / paths as f64);
        let coeffs = self.chol.as_ref().expect("factorization present").solve(&rhs);

        let rows = par::map_collect(paths, |p| {
            let mut phi = vec![0.0; b];
            eval_features(indices, ensemble.state(eval_node, p), scale, &mut phi);
            let mut row = vec![0.0; t_dim];
            for i in 0..b {
                let fi = phi[i];
                if fi == 0.0 {
                    continue;
                }
                for j in 0..t_dim {
                    row[j] += fi * coeffs[(i, j)];
                }
            }
            row
        });
        let mut out = vec![0.0; paths * t_dim];
        for (p, row) in rows.iter().enumerate() {
            out[p * t_dim..(p + 1) * t_dim].copy_from_slice(row);
        }
        out
    }
}

/// Least-squares estimator of E{target | F_{t_i}} evaluated per path.
/// At i = 0 this is the sample mean replicated across paths.
pub fn conditional_expectation(
    target: &PathVectors,
    ensemble: &PathEnsemble,
    node: usize,
    basis: &RegressionBasis,
) -> Result<Projection, CoreError> {
    conditional_expectation_with(target, ensemble, node, basis, RidgePolicy::Auto)
}

pub fn conditional_expectation_with(
    target: &PathVectors,
    ensemble: &PathEnsemble,
    node: usize,
    basis: &RegressionBasis,
    policy: RidgePolicy,
) -> Result<Projection, CoreError> {
    if target.paths != ensemble.path_count {
        return Err(CoreError::InvalidArgument(format!(
            "target has {} paths, ensemble has {}",
            target.paths, ensemble.path_count
        )));
    }
    let reg = NodeRegressor::fit(ensemble, basis, node, policy)?;
    let values = reg.project(ensemble, target.as_slice(), target.dim);
    Ok(Projection {
        values: PathVectors::from_data(target.paths, target.dim, values),
        ridge: reg.ridge,
    })
}
