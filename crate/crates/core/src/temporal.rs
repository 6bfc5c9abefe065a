//! Temporal difference operator `D_Γ`, its adjoint, and the two
//! regularization functionals.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grids::{dual_dot_raw, primal_dot_raw, DualField, GammaGrid, PrimalField, SpaceGrid};

/// TV weight `λ` and `H¹` weight `μ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularizerWeights {
    pub lambda: f64,
    pub mu: f64,
}

impl RegularizerWeights {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) || !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Config(format!(
                "regularization weights must be positive, got lambda={lambda}, mu={mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }
}

fn need_two_intervals(gamma: &GammaGrid) -> Result<()> {
    if gamma.intervals() < 2 {
        return Err(Error::Domain("D_Γ needs at least two Γ-intervals".into()));
    }
    Ok(())
}

/// `(D_Γ u)_i = u_{i+1} − u_i` on raw arrays.
pub(crate) fn d_gamma_raw(u: ArrayView2<f64>) -> Array2<f64> {
    let n = u.nrows();
    let mut out = Array2::zeros((n - 1, u.ncols()));
    for i in 0..n - 1 {
        let mut row = out.row_mut(i);
        row.assign(&u.row(i + 1));
        row -= &u.row(i);
    }
    out
}

/// Adjoint of [`d_gamma_raw`] for the weighted primal inner product:
/// `(D_Γ* v)_i = (v_{i−1} − v_i) / (t_i − t_{i−1})`, with `v_0 = v_N = 0`.
pub(crate) fn d_gamma_adjoint_raw(v: ArrayView2<f64>, gamma: &GammaGrid) -> Array2<f64> {
    let n = gamma.intervals();
    let mut out = Array2::zeros((n, v.ncols()));
    for i in 0..n {
        let mut row = out.row_mut(i);
        if i > 0 {
            row += &v.row(i - 1);
        }
        if i + 1 < n {
            row -= &v.row(i);
        }
        row /= gamma.width(i);
    }
    out
}

pub fn d_gamma(u: &PrimalField, gamma: &GammaGrid) -> Result<DualField> {
    need_two_intervals(gamma)?;
    if u.rows() != gamma.intervals() {
        return Err(Error::Shape(format!("{} profiles for {} intervals", u.rows(), gamma.intervals())));
    }
    Ok(DualField::from_array_unchecked(d_gamma_raw(u.view())))
}

pub fn d_gamma_adjoint(v: &DualField, gamma: &GammaGrid) -> Result<PrimalField> {
    need_two_intervals(gamma)?;
    if v.rows() + 1 != gamma.intervals() {
        return Err(Error::Shape(format!("{} dual components for {} intervals", v.rows(), gamma.intervals())));
    }
    Ok(PrimalField::from_array_unchecked(d_gamma_adjoint_raw(v.view(), gamma)))
}

/// `R_Γ(w) = Σ_i ‖w_i‖_{L²(Ω)}`.
pub fn tv_of_dual(w: ArrayView2<f64>, space: &SpaceGrid) -> f64 {
    w.outer_iter().map(|row| space.dot_unchecked(row, row).sqrt()).sum()
}

/// `R_Γ(D_Γ u) = Σ_i ‖u_{i+1} − u_i‖_{L²(Ω)}`.
pub fn tv_value(u: &PrimalField, space: &SpaceGrid) -> f64 {
    let u = u.view();
    (0..u.nrows().saturating_sub(1))
        .map(|i| {
            let d = &u.row(i + 1) - &u.row(i);
            space.dot_unchecked(d.view(), d.view()).sqrt()
        })
        .sum()
}

pub(crate) fn sobolev_raw(u: ArrayView2<f64>, gamma: &GammaGrid, space: &SpaceGrid) -> f64 {
    let h = space.h();
    let mut total = 0.0;
    for (i, row) in u.outer_iter().enumerate() {
        let grad2: f64 = row.windows(2).into_iter().map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / h;
        total += gamma.width(i) * grad2;
    }
    0.5 * total
}

/// `S(u) = ½ Σ_i (t_i − t_{i−1}) Σ_j h ((u_{i,j+1} − u_{i,j}) / h)²`.
pub fn sobolev_value(u: &PrimalField, gamma: &GammaGrid, space: &SpaceGrid) -> Result<f64> {
    u.check(gamma, space)?;
    Ok(sobolev_raw(u.view(), gamma, space))
}

/// Power iteration on `D_Γ* D_Γ`; returns the running estimate of `‖D_Γ‖`
/// after each iteration.
pub fn power_iteration_history(gamma: &GammaGrid, space: &SpaceGrid, iters: usize, seed: u64) -> Result<Vec<f64>> {
    need_two_intervals(gamma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::from_shape_simple_fn((gamma.intervals(), space.len()), || {
        StandardNormal.sample(&mut rng)
    });
    let norm = |x: &Array2<f64>| primal_dot_raw(x.view(), x.view(), gamma, space).sqrt();
    let n0 = norm(&x);
    x /= n0;
    let mut history = Vec::with_capacity(iters);
    for _ in 0..iters {
        let dx = d_gamma_raw(x.view());
        // ⟨D*Dx, x⟩ = ‖Dx‖² with ‖x‖ = 1
        history.push(dual_dot_raw(dx.view(), dx.view(), space).sqrt());
        let next = d_gamma_adjoint_raw(dx.view(), gamma);
        let nn = norm(&next);
        if nn == 0.0 {
            break;
        }
        x = next / nn;
    }
    Ok(history)
}

/// Power-iteration estimate of the operator norm of `D_Γ` between the
/// weighted primal space and `L²(Ω)^{N−1}`.
pub fn estimate_opnorm_dgamma(gamma: &GammaGrid, space: &SpaceGrid, iters: usize, seed: u64) -> Result<f64> {
    if iters < 20 {
        return Err(Error::Config(format!("power iteration needs at least 20 iterations, got {iters}")));
    }
    let history = power_iteration_history(gamma, space, iters, seed)?;
    Ok(history.into_iter().fold(0.0, f64::max))
}
