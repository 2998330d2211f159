//! Extraction of the martingale-representation kernels.
//!
//! For a terminal variable ξ the kernel L satisfies
//! E{ξ | F_t} = E ξ + ∫_0^t L(u) dw(u); for an adapted process f(s) the
//! kernel K(s, u) plays the same role per fixed s, with K(s, u) = 0 for
//! u >= s. Both are estimated by regressing the martingale increment
//! M_{u+1} - M_u against Δw_u conditionally on the state at u:
//! E[ΔM Δwᵀ | F_u] = L(u) Δt because Δw is centered with covariance Δt·I
//! and independent of F_u.

use super::regression::{NodeRegressor, RidgePolicy};
use super::{CoreError, PathEnsemble, RegressionBasis};
use crate::fields::{MatrixField, PathVectors, StateField, TriangularField};
use crate::par;

/// Outcome of a kernel extraction: the field plus the largest ridge that the
/// per-node regressions needed, if any.
pub struct KernelEstimate<F> {
    pub field: F,
    pub max_ridge: Option<f64>,
}

fn merge_ridge(slot: &mut Option<f64>, seen: Option<f64>) {
    if let Some(r) = seen {
        *slot = Some(slot.map_or(r, |cur| cur.max(r)));
    }
}

fn fit_all(
    ensemble: &PathEnsemble,
    basis: &RegressionBasis,
    nodes: usize,
    max_ridge: &mut Option<f64>,
) -> Result<Vec<NodeRegressor>, CoreError> {
    let mut regs = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let reg = NodeRegressor::fit(ensemble, basis, node, RidgePolicy::Auto)?;
        merge_ridge(max_ridge, reg.ridge);
        regs.push(reg);
    }
    Ok(regs)
}

/// Estimates L(u) for a terminal target: per path, per node, an n x m matrix.
///
/// Nodes 0..N-1 carry the per-cell estimates; node N evaluates the last
/// cell's fitted function at the terminal state, so the field is defined on
/// the whole node range used by the triangular solver fields.
pub fn martingale_integrand(
    target: &PathVectors,
    ensemble: &PathEnsemble,
    basis: &RegressionBasis,
) -> Result<KernelEstimate<MatrixField>, CoreError> {
    let paths = ensemble.path_count;
    if target.paths != paths {
        return Err(CoreError::InvalidArgument(format!(
            "target has {} paths, ensemble has {}",
            target.paths, paths
        )));
    }
    let n_steps = ensemble.grid.steps;
    let n_dim = target.dim;
    let m = ensemble.brownian_dim;
    let dt = ensemble.grid.delta();
    let mut l_field = MatrixField::zeros(paths, n_steps + 1, n_dim, m);
    let mut max_ridge = None;

    let regressors = fit_all(ensemble, basis, n_steps, &mut max_ridge)?;

    // Rolling conditional expectations M_u = E{target | F_u}.
    let mut m_prev = regressors[0].project(ensemble, target.as_slice(), n_dim);
    for u in 0..n_steps {
        let m_next = if u + 1 == n_steps {
            // E{target | F_T} = target itself.
            target.as_slice().to_vec()
        } else {
            regressors[u + 1].project(ensemble, target.as_slice(), n_dim)
        };
        // Per-path product ΔM ⊗ Δw, regressed at node u.
        let prod_dim = n_dim * m;
        let mut prods = vec![0.0; paths * prod_dim];
        for p in 0..paths {
            let dw = ensemble.increment(u, p);
            for i in 0..n_dim {
                let dm = m_next[p * n_dim + i] - m_prev[p * n_dim + i];
                for c in 0..m {
                    prods[p * prod_dim + i * m + c] = dm * dw[c];
                }
            }
        }
        let est = regressors[u].project(ensemble, &prods, prod_dim);
        for p in 0..paths {
            let out = l_field.get_mut(u, p);
            for j in 0..prod_dim {
                out[j] = est[p * prod_dim + j] / dt;
            }
        }
        if u + 1 == n_steps {
            // Terminal node: same fitted function, evaluated at w(T).
            let est_t = regressors[u].project_at(ensemble, n_steps, &prods, prod_dim);
            for p in 0..paths {
                let out = l_field.get_mut(n_steps, p);
                for j in 0..prod_dim {
                    out[j] = est_t[p * prod_dim + j] / dt;
                }
            }
        }
        m_prev = m_next;
    }
    Ok(KernelEstimate { field: l_field, max_ridge })
}

/// Estimates K(s, u) for an adapted process f: for each node s, the
/// martingale integrand of f(s) over u < s. The result stores K(s, u) at
/// row u, column s (strict triangle), so K(s, u) = 0 for u >= s never
/// occupies memory.
pub fn representation_kernel_k(
    process: &StateField,
    ensemble: &PathEnsemble,
    basis: &RegressionBasis,
) -> Result<KernelEstimate<TriangularField>, CoreError> {
    let paths = ensemble.path_count;
    if process.paths != paths && process.paths != 1 {
        return Err(CoreError::InvalidArgument(format!(
            "process has {} paths, ensemble has {}",
            process.paths, paths
        )));
    }
    let n_steps = ensemble.grid.steps;
    if process.nodes != n_steps + 1 {
        return Err(CoreError::InvalidArgument(format!(
            "process has {} nodes, grid has {}",
            process.nodes,
            n_steps + 1
        )));
    }
    let n_dim = process.dim;
    let m = ensemble.brownian_dim;
    let dt = ensemble.grid.delta();
    let mut k_field = TriangularField::zeros(paths, n_steps + 1, n_dim, m, true);
    let mut max_ridge = None;

    if process.is_zero() {
        return Ok(KernelEstimate { field: k_field, max_ridge });
    }

    let regressors = fit_all(ensemble, basis, n_steps, &mut max_ridge)?;

    // Targets {f(s): s = from..=N}, path-major.
    let row_targets = |from: usize| -> (Vec<f64>, usize) {
        let dim = (n_steps + 1 - from) * n_dim;
        let mut targets = vec![0.0; paths * dim];
        for p in 0..paths {
            for (si, s) in (from..=n_steps).enumerate() {
                targets[p * dim + si * n_dim..p * dim + (si + 1) * n_dim]
                    .copy_from_slice(process.get(s, p));
            }
        }
        (targets, dim)
    };

    // prev_row: E{f(s) | F_u} for s = u+1..=N (regressed; an adapted value
    // conditioned at its own time is taken pathwise, which only occurs on
    // the ΔM side below).
    let mut prev_row = {
        let (targets, dim) = row_targets(1);
        regressors[0].project(ensemble, &targets, dim)
    };

    for u in 0..n_steps {
        // next_tail: E{f(s) | F_{u+1}} for s = u+2..=N.
        let next_tail = if u + 2 <= n_steps {
            let (targets, dim) = row_targets(u + 2);
            regressors[u + 1].project(ensemble, &targets, dim)
        } else {
            Vec::new()
        };

        let count = n_steps - u; // targets s = u+1..=N
        let prod_dim = count * n_dim * m;
        let tail_dim = (n_steps - u - 1) * n_dim;
        let mut prods = vec![0.0; paths * prod_dim];
        for p in 0..paths {
            let dw = ensemble.increment(u, p);
            for (si, s) in (u + 1..=n_steps).enumerate() {
                for i in 0..n_dim {
                    let next = if s == u + 1 {
                        process.get(s, p)[i]
                    } else {
                        next_tail[p * tail_dim + (si - 1) * n_dim + i]
                    };
                    let dm = next - prev_row[p * (count * n_dim) + si * n_dim + i];
                    for c in 0..m {
                        prods[p * prod_dim + (si * n_dim + i) * m + c] = dm * dw[c];
                    }
                }
            }
        }
        let est = regressors[u].project(ensemble, &prods, prod_dim);
        for (si, s) in (u + 1..=n_steps).enumerate() {
            for p in 0..paths {
                let out = k_field.get_mut(u, s, p);
                for j in 0..n_dim * m {
                    out[j] = est[p * prod_dim + si * n_dim * m + j] / dt;
                }
            }
        }

        prev_row = next_tail;
    }

    Ok(KernelEstimate { field: k_field, max_ridge })
}

/// Sampled sides of the L-energy inequality:
/// (E ∫_0^T ‖L(u)‖² du, 4 E ‖ξ‖²).
pub fn l_energy_vs_terminal(
    l_field: &MatrixField,
    terminal: &PathVectors,
    ensemble: &PathEnsemble,
) -> (f64, f64) {
    let dt = ensemble.grid.delta();
    let paths = ensemble.path_count;
    let lhs = par::mean(paths, |p| {
        let mut acc = 0.0;
        for u in 0..ensemble.grid.steps {
            acc += l_field.get(u, p).iter().map(|v| v * v).sum::<f64>();
        }
        acc * dt
    });
    let rhs = 4.0 * par::mean(paths, |p| terminal.get(p).iter().map(|v| v * v).sum::<f64>());
    (lhs, rhs)
}

/// Sampled sides of the K-energy inequality:
/// (E ∫_0^T ∫_0^s ‖K(s,u)‖² du ds, 4 E ∫_0^T ‖f(s)‖² ds).
pub fn k_energy_vs_process(
    k_field: &TriangularField,
    process: &StateField,
    ensemble: &PathEnsemble,
) -> (f64, f64) {
    let dt = ensemble.grid.delta();
    let paths = ensemble.path_count;
    let n = ensemble.grid.steps;
    let lhs = par::mean(paths, |p| {
        let mut acc = 0.0;
        for u in 0..n {
            for s in u + 1..=n {
                acc += k_field.get(u, s, p).iter().map(|v| v * v).sum::<f64>();
            }
        }
        acc * dt * dt
    });
    let rhs = 4.0
        * par::mean(paths, |p| {
            let mut acc = 0.0;
            for s in 1..=n {
                acc += process.get(s, p).iter().map(|v| v * v).sum::<f64>();
            }
            acc * dt
        });
    (lhs, rhs)
}
