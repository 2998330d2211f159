//! One- and two-parameter Mittag-Leffler functions for scalar and square
//! matrix arguments, plus the sampled operator-norm suprema used by the
//! solver bounds.
//!
//! # Definition
//!
//! E_{α,β}(z) = Σ_{k≥0} z^k / Γ(αk + β)
//!
//! Special cases: E_{1,1}(z) = exp(z), E_{α,β}(0) = 1/Γ(β).
//!
//! Evaluation is by Taylor series with term-ratio stopping. That is accurate
//! in the desk-scale envelope this crate operates in (argument magnitudes up
//! to ~10); an argument-magnitude guard rejects calls outside it instead of
//! returning silently degraded values. Scalar terms are accumulated in log
//! space so that large intermediate powers never overflow.

use nalgebra::DMatrix;
use thiserror::Error;

/// Largest scalar |z| (resp. matrix operator norm) the series evaluator
/// accepts. Beyond this the alternating series loses precision in f64.
pub const MAX_ARGUMENT_NORM: f64 = 12.0;

/// Γ(x) for x > 0 (Lanczos-class approximation, ~1e-14 relative accuracy).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Series evaluation controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    /// Relative term tolerance for series stopping.
    pub rel_tolerance: f64,
    /// Hard cap on the number of series terms.
    pub max_terms: usize,
    /// Sampling density for the sup bounds over t in [0, T].
    pub bound_grid_points: usize,
}

impl Default for MlParams {
    fn default() -> Self {
        Self { rel_tolerance: 1e-13, max_terms: 400, bound_grid_points: 129 }
    }
}

impl MlParams {
    pub fn validate(&self) -> Result<(), MlError> {
        if !(self.rel_tolerance > 0.0) {
            return Err(MlError::InvalidParameter("rel_tolerance must be positive".into()));
        }
        if self.max_terms < 8 {
            return Err(MlError::InvalidParameter("max_terms must be at least 8".into()));
        }
        if self.bound_grid_points < 2 {
            return Err(MlError::InvalidParameter("bound_grid_points must be at least 2".into()));
        }
        Ok(())
    }
}

/// Sampled suprema of ‖E_α(t^α A)‖ and ‖E_{α,α}(t^α A)‖ over t in [0, T].
///
/// Grid-sampled, so these are lower estimates of the true suprema; they are
/// monotone nondecreasing in the grid density.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct MlBounds {
    pub m_alpha: f64,
    pub m_alpha_alpha: f64,
}

#[derive(Debug, Error)]
pub enum MlError {
    #[error("series did not converge within {terms} terms (partial sum {partial_sum:.6e}, last term {last_term:.6e})")]
    NonConvergence { terms: usize, partial_sum: f64, last_term: f64 },
    #[error("argument norm {norm:.6e} exceeds the supported magnitude {limit}")]
    ArgumentTooLarge { norm: f64, limit: f64 },
    #[error("invalid Mittag-Leffler parameter: {0}")]
    InvalidParameter(String),
}

fn check_orders(alpha: f64, beta: f64) -> Result<(), MlError> {
    if !(alpha > 0.0 && alpha <= 1.0) || !alpha.is_finite() {
        return Err(MlError::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(MlError::InvalidParameter(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// E_{α,β}(z) for a real scalar z with |z| <= [`MAX_ARGUMENT_NORM`].
pub fn ml_scalar(alpha: f64, beta: f64, z: f64) -> Result<f64, MlError> {
    ml_scalar_with(alpha, beta, z, &MlParams::default())
}

/// E_{α,β}(z) with explicit evaluation controls.
pub fn ml_scalar_with(alpha: f64, beta: f64, z: f64, params: &MlParams) -> Result<f64, MlError> {
    check_orders(alpha, beta)?;
    params.validate()?;
    if !z.is_finite() {
        return Err(MlError::InvalidParameter(format!("argument must be finite, got {z}")));
    }
    if z.abs() > MAX_ARGUMENT_NORM {
        return Err(MlError::ArgumentTooLarge { norm: z.abs(), limit: MAX_ARGUMENT_NORM });
    }

    let mut sum = 1.0 / gamma(beta);
    if z == 0.0 {
        return Ok(sum);
    }
    let ln_abs_z = z.abs().ln();
    let mut small_streak = 0usize;
    let mut last_term = f64::INFINITY;
    for k in 1..=params.max_terms {
        let magnitude = (k as f64 * ln_abs_z - ln_gamma(alpha * k as f64 + beta)).exp();
        let term = if z < 0.0 && k % 2 == 1 { -magnitude } else { magnitude };
        sum += term;
        last_term = term;
        if magnitude <= params.rel_tolerance * sum.abs().max(1.0) {
            small_streak += 1;
            if small_streak >= 2 && k >= 4 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(MlError::NonConvergence {
        terms: params.max_terms,
        partial_sum: sum,
        last_term,
    })
}

/// E_{α,β}(M) for a square matrix M, by the matrix Taylor series.
pub fn ml_matrix(alpha: f64, beta: f64, m: &DMatrix<f64>) -> Result<DMatrix<f64>, MlError> {
    ml_matrix_with(alpha, beta, m, &MlParams::default())
}

pub fn ml_matrix_with(
    alpha: f64,
    beta: f64,
    m: &DMatrix<f64>,
    params: &MlParams,
) -> Result<DMatrix<f64>, MlError> {
    check_orders(alpha, beta)?;
    params.validate()?;
    if !m.is_square() {
        return Err(MlError::InvalidParameter(format!(
            "matrix argument must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(MlError::InvalidParameter("matrix argument has non-finite entries".into()));
    }
    let norm = operator_norm_2(m);
    if norm > MAX_ARGUMENT_NORM {
        return Err(MlError::ArgumentTooLarge { norm, limit: MAX_ARGUMENT_NORM });
    }

    let n = m.nrows();
    let mut sum = DMatrix::<f64>::identity(n, n) / gamma(beta);
    if m.iter().all(|v| *v == 0.0) {
        return Ok(sum);
    }
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut small_streak = 0usize;
    let mut last_norm = f64::INFINITY;
    for k in 1..=params.max_terms {
        power = &power * m;
        let power_norm = power.norm();
        if !power_norm.is_finite() || power_norm > 1e250 {
            return Err(MlError::NonConvergence {
                terms: k,
                partial_sum: sum.norm(),
                last_term: power_norm,
            });
        }
        let coeff = (-ln_gamma(alpha * k as f64 + beta)).exp();
        let term_norm = power_norm * coeff;
        sum.zip_apply(&power, |s, p| *s += p * coeff);
        last_norm = term_norm;
        if term_norm <= params.rel_tolerance * sum.norm().max(1.0) {
            small_streak += 1;
            if small_streak >= 2 && k >= 4 {
                return Ok(sum);
            }
        } else {
            small_streak = 0;
        }
    }
    Err(MlError::NonConvergence {
        terms: params.max_terms,
        partial_sum: sum.norm(),
        last_term: last_norm,
    })
}

/// Sampled sup bounds M_α = sup_t ‖E_α(t^α A)‖ and
/// M_{α,α} = sup_t ‖E_{α,α}(t^α A)‖ over a uniform t-grid on [0, T].
pub fn ml_bounds(
    alpha: f64,
    a: &DMatrix<f64>,
    horizon: f64,
    params: &MlParams,
) -> Result<MlBounds, MlError> {
    if !(horizon > 0.0) {
        return Err(MlError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    params.validate()?;
    let points = params.bound_grid_points;
    let mut m_alpha = 0.0f64;
    let mut m_alpha_alpha = 0.0f64;
    for i in 0..points {
        let t = horizon * i as f64 / (points - 1) as f64;
        let arg = a * t.powf(alpha);
        m_alpha = m_alpha.max(operator_norm_2(&ml_matrix_with(alpha, 1.0, &arg, params)?));
        m_alpha_alpha =
            m_alpha_alpha.max(operator_norm_2(&ml_matrix_with(alpha, alpha, &arg, params)?));
    }
    Ok(MlBounds { m_alpha, m_alpha_alpha })
}

/// Operator 2-norm (largest singular value) via power iteration on MᵀM,
/// fixed 1e-10 relative tolerance, deterministic start vector.
pub fn operator_norm_2(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 || m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    if n == 1 && m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    let gram = m.transpose() * m;
    let mut v = nalgebra::DVector::<f64>::from_fn(n, |i, _| 1.0 / (i + 1) as f64);
    v /= v.norm();
    let mut lambda = 0.0f64;
    for _ in 0..10_000 {
        let w = &gram * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lambda).abs() <= 1e-10 * next.abs().max(1e-300) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}
