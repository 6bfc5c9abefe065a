//! Closed-form proximal maps used by the inner primal-dual loop.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::grids::{DualField, GammaGrid, PrimalField, SpaceGrid};
use crate::tridiag::{assemble_helmholtz_neumann, TridiagLu};

/// Factorizations of `I − cΔ_h` (Neumann) keyed by `c`, for one grid.
#[derive(Debug)]
pub struct HelmholtzCache {
    grid: SpaceGrid,
    factors: RwLock<HashMap<u64, Arc<TridiagLu>>>,
}

impl HelmholtzCache {
    pub fn new(grid: SpaceGrid) -> Self {
        Self { grid, factors: RwLock::new(HashMap::new()) }
    }

    pub fn grid(&self) -> &SpaceGrid {
        &self.grid
    }

    pub fn factor(&self, coeff: f64) -> Result<Arc<TridiagLu>> {
        let key = coeff.to_bits();
        if let Some(f) = self.factors.read().expect("helmholtz cache poisoned").get(&key) {
            return Ok(Arc::clone(f));
        }
        let lu = Arc::new(assemble_helmholtz_neumann(coeff, &self.grid)?.factor()?);
        let mut guard = self.factors.write().expect("helmholtz cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(lu)))
    }

    /// Row-wise `(I − coeff·Δ_h)^{-1}` on raw arrays.
    pub(crate) fn solve_rows(&self, w: ArrayView2<f64>, coeff: f64) -> Result<Array2<f64>> {
        let mut out = w.to_owned();
        if coeff == 0.0 {
            return Ok(out);
        }
        let lu = self.factor(coeff)?;
        for row in out.outer_iter_mut() {
            lu.solve_in_place(row);
        }
        Ok(out)
    }
}

/// `prox_{coeff·S_Γ}(w)`: one Neumann Helmholtz solve per Γ-interval.
pub fn prox_sobolev(w: &PrimalField, coeff: f64, gamma: &GammaGrid, space: &SpaceGrid) -> Result<PrimalField> {
    if !(coeff >= 0.0) || !coeff.is_finite() {
        return Err(Error::Domain(format!("prox coefficient must be >= 0, got {coeff}")));
    }
    w.check(gamma, space)?;
    let cache = HelmholtzCache::new(*space);
    Ok(PrimalField::from_array_unchecked(cache.solve_rows(w.view(), coeff)?))
}

pub(crate) fn project_balls_raw(v: ArrayView2<f64>, lambda: f64, space: &SpaceGrid) -> Array2<f64> {
    let mut out = v.to_owned();
    for mut row in out.outer_iter_mut() {
        let norm = space.dot_unchecked(row.view(), row.view()).sqrt();
        if norm > lambda {
            row *= lambda / norm;
        }
    }
    out
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("ball radius must be positive, got {lambda}")));
    }
    Ok(())
}

/// Prox of `(λ R_Γ)*`: projection of every component onto the `L²(Ω)` ball
/// of radius `λ`. The conjugate is an indicator, so the step size does not
/// enter.
pub fn prox_tv_dual(v: &DualField, lambda: f64, space: &SpaceGrid) -> Result<DualField> {
    check_lambda(lambda)?;
    if v.cols() != space.len() {
        return Err(Error::Shape("dual field width does not match the grid".into()));
    }
    Ok(DualField::from_array_unchecked(project_balls_raw(v.view(), lambda, space)))
}

/// Prox of `λ R_Γ`: block soft-thresholding `w_i · max(0, 1 − λ/‖w_i‖)`.
pub fn prox_tv_primal(w: &DualField, lambda: f64, space: &SpaceGrid) -> Result<DualField> {
    check_lambda(lambda)?;
    if w.cols() != space.len() {
        return Err(Error::Shape("dual field width does not match the grid".into()));
    }
    let mut out = w.values().clone();
    for mut row in out.outer_iter_mut() {
        let norm = space.dot_unchecked(row.view(), row.view()).sqrt();
        let scale = if norm > lambda { 1.0 - lambda / norm } else { 0.0 };
        row *= scale;
    }
    Ok(DualField::from_array_unchecked(out))
}
