//! Singular-kernel weighted norms on [t, T].
//!
//! The canonical squared norm of a process x is
//!
//! ‖x‖²_{2,α,t} = sup_{t<=τ<=T} E ∫_τ^T (s-τ)^{α-1} ‖x(s)‖² ds,
//!
//! and for a triangular field y
//!
//! |‖y‖|²_{2,α,t} = sup_{t<=τ<=T} E ∫_τ^T (s-τ)^{α-1} ∫_s^T ‖y(s,u)‖² du ds.
//!
//! The kernel factor is integrated exactly per grid cell (product
//! integration), the field factor is read at the right cell endpoint, and
//! the sup runs over grid nodes. A variant that averages the square root
//! before taking the sup is also provided for verbose reports; the two
//! readings differ by a Jensen gap on random fields.

use crate::fields::{StateField, TriangularField};
use crate::par;
use crate::stochastic_core::{CoreError, PathEnsemble, TimeGrid};
use serde::Serialize;

/// Exact per-cell integrals of the kernel (s-τ)^{α-1} over the cells at and
/// after the node τ.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub tau_index: usize,
    /// weights[j] integrates the kernel over [s_{τ+j}, s_{τ+j+1}].
    pub weights: Vec<f64>,
}

impl KernelWeights {
    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Integrates (s - τ)^{α-1} exactly over each grid cell right of τ:
/// ((s_{j+1}-τ)^α - (s_j-τ)^α)/α. The singularity at s = τ is integrated
/// analytically, never sampled. `tau_index == N` yields an empty weight set.
pub fn kernel_weights(grid: &TimeGrid, tau_index: usize, alpha: f64) -> Result<KernelWeights, CoreError> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "kernel order alpha must lie in (0, 1], got {alpha}"
        )));
    }
    if tau_index > grid.steps {
        return Err(CoreError::InvalidArgument(format!(
            "tau index {tau_index} outside grid with {} steps",
            grid.steps
        )));
    }
    let tau = grid.node(tau_index);
    let mut weights = Vec::with_capacity(grid.steps - tau_index);
    for j in tau_index..grid.steps {
        let a = grid.node(j) - tau;
        let b = grid.node(j + 1) - tau;
        weights.push((b.powf(alpha) - a.powf(alpha)) / alpha);
    }
    Ok(KernelWeights { tau_index, weights })
}

fn sup_over_tau(values: &[f64], t_index: usize) -> (f64, usize) {
    let mut best = 0.0f64;
    let mut at = t_index;
    for (off, v) in values.iter().enumerate() {
        if *v > best {
            best = *v;
            at = t_index + off;
        }
    }
    (best, at)
}

/// ‖field‖²_{2,α,t} with the sup location, over τ-nodes in [t, T].
pub fn norm_x_with_argmax(
    field: &StateField,
    ensemble: &PathEnsemble,
    alpha: f64,
    t_index: usize,
) -> Result<(f64, usize), CoreError> {
    let grid = &ensemble.grid;
    let n = grid.steps;
    if field.nodes != n + 1 {
        return Err(CoreError::InvalidArgument(format!(
            "field has {} nodes, grid has {}",
            field.nodes,
            n + 1
        )));
    }
    if t_index > n {
        return Err(CoreError::InvalidArgument(format!("t index {t_index} outside grid")));
    }
    let paths = if field.paths == 1 { 1 } else { ensemble.path_count };
    // Mean squared field value per node, fixed summation order.
    let msq: Vec<f64> = par::map_collect(n + 1, |node| {
        let mut acc = 0.0;
        for p in 0..paths {
            acc += field.get(node, p).iter().map(|v| v * v).sum::<f64>();
        }
        acc / paths as f64
    });
    let vals: Vec<f64> = par::map_collect(n + 1 - t_index, |off| {
        let tau = t_index + off;
        let w = kernel_weights(grid, tau, alpha).expect("validated above");
        let mut acc = 0.0;
        for (j, wj) in w.weights.iter().enumerate() {
            acc += wj * msq[tau + j + 1];
        }
        acc
    });
    Ok(sup_over_tau(&vals, t_index))
}

/// ‖field‖²_{2,α,t}: sup over τ-nodes of the Monte Carlo expectation of the
/// kernel-weighted squared-norm integral (right-endpoint field values).
pub fn norm_x(
    field: &StateField,
    ensemble: &PathEnsemble,
    alpha: f64,
    t_index: usize,
) -> Result<f64, CoreError> {
    norm_x_with_argmax(field, ensemble, alpha, t_index).map(|(v, _)| v)
}

/// The displayed-norm reading with the expectation outside the square root:
/// sup_τ E (∫_τ^T (s-τ)^{α-1} ‖x(s)‖² ds)^{1/2}. Reported in verbose mode.
pub fn norm_x_literal(
    field: &StateField,
    ensemble: &PathEnsemble,
    alpha: f64,
    t_index: usize,
) -> Result<f64, CoreError> {
    let grid = &ensemble.grid;
    let n = grid.steps;
    if field.nodes != n + 1 || t_index > n {
        return Err(CoreError::InvalidArgument("field/grid shape mismatch".into()));
    }
    let paths = if field.paths == 1 { 1 } else { ensemble.path_count };
    let vals: Vec<f64> = par::map_collect(n + 1 - t_index, |off| {
        let tau = t_index + off;
        let w = kernel_weights(grid, tau, alpha).expect("validated above");
        let mut acc = 0.0;
        for p in 0..paths {
            let mut integral = 0.0;
            for (j, wj) in w.weights.iter().enumerate() {
                integral +=
                    wj * field.get(tau + j + 1, p).iter().map(|v| v * v).sum::<f64>();
            }
            acc += integral.sqrt();
        }
        acc / paths as f64
    });
    Ok(sup_over_tau(&vals, t_index).0)
}

/// |‖field‖|²_{2,α,t} with the sup location; the inner u-integral uses the
/// right-endpoint rule, the outer s-integral exact kernel weights.
pub fn norm_y_with_argmax(
    field: &TriangularField,
    ensemble: &PathEnsemble,
    alpha: f64,
    t_index: usize,
) -> Result<(f64, usize), CoreError> {
    let grid = &ensemble.grid;
    let n = grid.steps;
    if field.node_count != n + 1 {
        return Err(CoreError::InvalidArgument(format!(
            "field has {} nodes, grid has {}",
            field.node_count,
            n + 1
        )));
    }
    if t_index > n {
        return Err(CoreError::InvalidArgument(format!("t index {t_index} outside grid")));
    }
    let paths = if field.paths == 1 { 1 } else { ensemble.path_count };
    let dt = grid.delta();
    // inner[r] = E ∫_{s_r}^T ‖y(s_r, u)‖² du, right-endpoint in u. Only
    // pairs with u > s are read, so strict fields are always sufficient.
    let inner: Vec<f64> = par::map_collect(n + 1, |r| {
        let mut acc = 0.0;
        for c in r + 1..=n {
            let mut msq = 0.0;
            for p in 0..paths {
                msq += field.get(r, c, p).iter().map(|v| v * v).sum::<f64>();
            }
            acc += msq / paths as f64 * dt;
        }
        acc
    });
    let vals: Vec<f64> = par::map_collect(n + 1 - t_index, |off| {
        let tau = t_index + off;
        let w = kernel_weights(grid, tau, alpha).expect("validated above");
        let mut acc = 0.0;
        for (j, wj) in w.weights.iter().enumerate() {
            acc += wj * inner[tau + j + 1];
        }
        acc
    });
    Ok(sup_over_tau(&vals, t_index))
}

pub fn norm_y(
    field: &TriangularField,
    ensemble: &PathEnsemble,
    alpha: f64,
    t_index: usize,
) -> Result<f64, CoreError> {
    norm_y_with_argmax(field, ensemble, alpha, t_index).map(|(v, _)| v)
}

/// Product-norm report for an adapted pair; `pair_norm_sq` is the sum of the
/// two component norms by definition. `sup_at` records the τ-node attaining
/// the x-component sup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormReport {
    pub x_norm_sq: f64,
    pub y_norm_sq: f64,
    pub pair_norm_sq: f64,
    #[serde(rename = "sup_at")]
    pub sup_attained_at: usize,
}

/// ‖(x, y)‖²_t = ‖x‖²_{2,α,t} + |‖y‖|²_{2,α,t}.
pub fn pair_norm(
    x_field: &StateField,
    y_field: &TriangularField,
    ensemble: &PathEnsemble,
    alpha: f64,
    t_index: usize,
) -> Result<NormReport, CoreError> {
    let (x_norm_sq, sup_at) = norm_x_with_argmax(x_field, ensemble, alpha, t_index)?;
    let (y_norm_sq, _) = norm_y_with_argmax(y_field, ensemble, alpha, t_index)?;
    Ok(NormReport {
        x_norm_sq,
        y_norm_sq,
        pair_norm_sq: x_norm_sq + y_norm_sq,
        sup_attained_at: sup_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic_core::{make_grid, sample_paths};
    use proptest::prelude::*;

    fn unit_ensemble(steps: usize, paths: usize) -> PathEnsemble {
        sample_paths(make_grid(1.0, steps).unwrap(), 1, paths, 7).unwrap()
    }

    #[test]
    fn single_cell_weight_closed_form() {
        let grid = make_grid(0.5, 2).unwrap();
        let w = kernel_weights(&grid, 0, 0.75).unwrap();
        let d: f64 = 0.25;
        assert!((w.weights[0] - d.powf(0.75) / 0.75).abs() < 1e-15);
    }

    #[test]
    fn weights_telescope_and_limit_to_cell_lengths() {
        let grid = make_grid(2.0, 16).unwrap();
        for tau in [0usize, 5, 15] {
            let w = kernel_weights(&grid, tau, 0.6).unwrap();
            let want = (2.0 - grid.node(tau)).powf(0.6) / 0.6;
            assert!((w.sum() - want).abs() < 1e-12);
        }
        assert!(kernel_weights(&grid, 16, 0.6).unwrap().weights.is_empty());
        let w = kernel_weights(&grid, 3, 1.0).unwrap();
        for wj in &w.weights {
            assert!((wj - grid.delta()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_unit_field_norm_is_reciprocal_alpha() {
        let ens = unit_ensemble(64, 4);
        let field = StateField::from_fn(1, 65, 1, |_, _, out| out[0] = 1.0);
        let (norm, at) = norm_x_with_argmax(&field, &ens, 0.75, 0).unwrap();
        assert!((norm - 4.0 / 3.0).abs() < 1e-12, "norm {norm}");
        assert_eq!(at, 0);
        let zero = StateField::zeros(1, 65, 1);
        assert_eq!(norm_x(&zero, &ens, 0.75, 0).unwrap(), 0.0);
    }

    #[test]
    fn linear_field_norm_matches_dense_closed_form_oracle() {
        // h(s) = s on [0,1], alpha = 3/4. Oracle: the cell integrals of
        // (s-τ)^{-1/4} s² have the closed form
        //   b^{11/4} 4/11 + 2τ b^{7/4} 4/7 + τ² b^{3/4} 4/3, b = 1-τ,
        // maximized over a dense τ grid.
        let n = 16_384;
        let ens = unit_ensemble(n, 1);
        let grid = ens.grid;
        let field = StateField::from_fn(1, n + 1, 1, |node, _, out| out[0] = grid.node(node));
        let got = norm_x(&field, &ens, 0.75, 0).unwrap();
        let oracle = (0..=n)
            .map(|i| {
                let tau = i as f64 / n as f64;
                let b: f64 = 1.0 - tau;
                b.powf(2.75) * 4.0 / 11.0
                    + 2.0 * tau * b.powf(1.75) * 4.0 / 7.0
                    + tau * tau * b.powf(0.75) * 4.0 / 3.0
            })
            .fold(0.0f64, f64::max);
        assert!((got - oracle).abs() <= 1e-4, "got {got}, oracle {oracle}");
    }

    #[test]
    fn constant_y_field_matches_dense_oracle() {
        // y ≡ unit-norm matrix on [0,1]², alpha = 3/4: the exact value is
        // sup_τ ∫_τ^1 (s-τ)^{-1/4}(1-s) ds = 16/21 at τ = 0.
        let n = 8192;
        let ens = unit_ensemble(n, 1);
        let mut field = TriangularField::zeros(1, n + 1, 1, 1, true);
        for r in 0..n {
            for c in r + 1..=n {
                field.get_mut(r, c, 0)[0] = 1.0;
            }
        }
        let (got, at) = norm_y_with_argmax(&field, &ens, 0.75, 0).unwrap();
        assert!((got - 16.0 / 21.0).abs() <= 1e-4, "got {got}");
        assert_eq!(at, 0);

        let zero = TriangularField::zeros(1, n + 1, 1, 1, true);
        assert_eq!(norm_y(&zero, &ens, 0.75, 0).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_homogeneity_of_y_norm() {
        let ens = unit_ensemble(16, 8);
        let mut field = TriangularField::zeros(8, 17, 1, 1, true);
        for r in 0..16 {
            for c in r + 1..=16 {
                for p in 0..8 {
                    field.get_mut(r, c, p)[0] = ((r * 31 + c * 7 + p) as f64).sin();
                }
            }
        }
        let base = norm_y(&field, &ens, 0.75, 0).unwrap();
        let mut doubled = field.clone();
        doubled.scale(2.0);
        let got = norm_y(&doubled, &ens, 0.75, 0).unwrap();
        assert!((got - 4.0 * base).abs() <= 1e-12 * base.max(1.0));
    }

    #[test]
    fn pair_norm_is_componentwise_sum() {
        let ens = unit_ensemble(16, 64);
        let x = StateField::from_fn(64, 17, 1, |node, p, out| {
            out[0] = ens.state(node, p)[0] + 0.3;
        });
        let mut y = TriangularField::zeros(64, 17, 1, 1, true);
        for r in 0..16 {
            for c in r + 1..=16 {
                for p in 0..64 {
                    y.get_mut(r, c, p)[0] = ens.state(c, p)[0] * 0.2;
                }
            }
        }
        let report = pair_norm(&x, &y, &ens, 0.75, 0).unwrap();
        let nx = norm_x(&x, &ens, 0.75, 0).unwrap();
        let ny = norm_y(&y, &ens, 0.75, 0).unwrap();
        assert_eq!(report.x_norm_sq, nx);
        assert_eq!(report.y_norm_sq, ny);
        assert!((report.pair_norm_sq - (nx + ny)).abs() <= 1e-12 * (nx + ny).max(1.0));

        // (x, 0) has pair norm equal to the x part alone.
        let zero_y = TriangularField::zeros(64, 17, 1, 1, true);
        let r2 = pair_norm(&x, &zero_y, &ens, 0.75, 0).unwrap();
        assert_eq!(r2.pair_norm_sq, r2.x_norm_sq);
        assert_eq!(r2.y_norm_sq, 0.0);
    }

    #[test]
    fn sup_monotone_in_tau_range() {
        let ens = unit_ensemble(16, 128);
        let x = StateField::from_fn(128, 17, 1, |node, p, out| {
            out[0] = ens.state(node, p)[0];
        });
        let whole = norm_x(&x, &ens, 0.75, 0).unwrap();
        for t in [2usize, 7, 12] {
            let tail = norm_x(&x, &ens, 0.75, t).unwrap();
            assert!(whole >= tail, "t={t}: {whole} < {tail}");
        }
    }

    #[test]
    fn zero_iff_zero_on_quadrature_nodes() {
        let ens = unit_ensemble(8, 4);
        // Value only at node 0, which no right-endpoint cell reads.
        let mut x = StateField::zeros(4, 9, 1);
        for p in 0..4 {
            x.get_mut(0, p)[0] = 3.0;
        }
        assert_eq!(norm_x(&x, &ens, 0.75, 0).unwrap(), 0.0);
        // Any read node makes it positive.
        let mut x2 = StateField::zeros(4, 9, 1);
        x2.get_mut(5, 2)[0] = 1e-8;
        assert!(norm_x(&x2, &ens, 0.75, 0).unwrap() > 0.0);
    }

    #[test]
    fn literal_reading_never_exceeds_sqrt_of_squared_reading() {
        // Jensen: E sqrt(I) <= sqrt(E I), per τ and hence for the sups.
        let ens = unit_ensemble(16, 256);
        let x = StateField::from_fn(256, 17, 1, |node, p, out| {
            out[0] = ens.state(node, p)[0];
        });
        let literal = norm_x_literal(&x, &ens, 0.75, 0).unwrap();
        let squared = norm_x(&x, &ens, 0.75, 0).unwrap();
        assert!(literal <= squared.sqrt() + 1e-12, "{literal} vs {}", squared.sqrt());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn weights_sum_telescopes(steps in 2usize..32, tau_frac in 0.0f64..1.0, alpha in 0.51f64..0.999) {
            let grid = make_grid(1.5, steps).unwrap();
            let tau = ((steps as f64 * tau_frac) as usize).min(steps);
            let w = kernel_weights(&grid, tau, alpha).unwrap();
            let want = (1.5 - grid.node(tau)).powf(alpha) / alpha;
            prop_assert!((w.sum() - want).abs() <= 1e-12 * want.max(1.0));
            prop_assert!(w.weights.iter().all(|v| *v > 0.0) || tau == steps);
        }

        #[test]
        fn x_norm_triangle_inequality(seed in 0u64..64) {
            let ens = unit_ensemble(8, 32);
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let a = StateField::from_fn(32, 9, 2, |_, _, out| {
                out[0] = rng.random::<f64>() - 0.5;
                out[1] = rng.random::<f64>() - 0.5;
            });
            let b = StateField::from_fn(32, 9, 2, |_, _, out| {
                out[0] = rng.random::<f64>() - 0.5;
                out[1] = rng.random::<f64>() - 0.5;
            });
            let sum = StateField::from_fn(32, 9, 2, |node, p, out| {
                out[0] = a.get(node, p)[0] + b.get(node, p)[0];
                out[1] = a.get(node, p)[1] + b.get(node, p)[1];
            });
            let na = norm_x(&a, &ens, 0.75, 0).unwrap().sqrt();
            let nb = norm_x(&b, &ens, 0.75, 0).unwrap().sqrt();
            let ns = norm_x(&sum, &ens, 0.75, 0).unwrap().sqrt();
            prop_assert!(ns <= na + nb + 1e-10, "{ns} vs {na} + {nb}");
        }
    }
}
