//! Source identification: given noisy observations `y^δ` of the state,
//! solve
//!
//! ```text
//! A(u) + λ D_Γ* ∂R_Γ(D_Γ u) + μ ∂S_Γ(u) ∋ y^δ
//! ```
//!
//! in `L²_Γ` with the nested primal-dual solver. The residual `A(u) − y^δ`
//! is averaged over each Γ-interval so that all iterates stay in Γ
//! coordinates.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::grids::{
    dual_dot_raw, primal_dot_raw, restrict_raw, trajectory_dot_raw, DualField, GammaGrid, PrimalField,
    TrajectoryField,
};
use crate::pde::{forward_primal_raw, ForwardConfig};
use crate::pdsolver::{check_fixed_point, run, ConvergenceTrace, ProblemBindings, SolverParams};
use crate::prox::{project_balls_raw, HelmholtzCache};
use crate::temporal::{
    d_gamma_adjoint_raw, d_gamma_raw, estimate_opnorm_dgamma, sobolev_raw, tv_of_dual, RegularizerWeights,
};

/// Cocoercivity constant of `A` on the unit interval: the Poincaré constant.
pub const POINCARE_UNIT: f64 = PI * PI;

/// Power-iteration sweeps used for the default dual step.
pub const OPNORM_ITERS: usize = 200;

#[derive(Clone, Debug)]
pub struct InverseProblemSpec {
    pub forward: ForwardConfig,
    pub gamma: GammaGrid,
    pub weights: RegularizerWeights,
    pub y_delta: TrajectoryField,
    pub cocoercivity: f64,
    pub params: SolverParams,
}

impl InverseProblemSpec {
    /// Problem with `C = π²`, `α = C` and `β = 0.95/‖D_Γ‖²`.
    pub fn with_defaults(
        forward: ForwardConfig,
        gamma: GammaGrid,
        weights: RegularizerWeights,
        y_delta: TrajectoryField,
    ) -> Result<Self> {
        let params = default_params(&gamma, &forward, POINCARE_UNIT)?;
        Ok(Self { forward, gamma, weights, y_delta, cocoercivity: POINCARE_UNIT, params })
    }

    /// Checks shapes and the step-size conditions `α < 2C`, `β‖D_Γ‖² < 1`.
    pub fn validate(&self) -> Result<f64> {
        self.gamma.check_time(&self.forward.time)?;
        self.y_delta.check(&self.forward.time, &self.forward.space)?;
        if !(self.cocoercivity > 0.0) {
            return Err(Error::Config(format!("cocoercivity constant must be positive, got {}", self.cocoercivity)));
        }
        let l_norm = estimate_opnorm_dgamma(&self.gamma, &self.forward.space, OPNORM_ITERS, 0)?;
        self.params.validate(self.cocoercivity, l_norm)?;
        Ok(l_norm)
    }
}

/// Solver defaults for the given grids.
pub fn default_params(gamma: &GammaGrid, forward: &ForwardConfig, cocoercivity: f64) -> Result<SolverParams> {
    let l_norm = estimate_opnorm_dgamma(gamma, &forward.space, OPNORM_ITERS, 0)?;
    Ok(SolverParams::new(cocoercivity, 0.95 / (l_norm * l_norm), 5))
}

/// Operators of the inverse problem in the solver's abstract form:
/// `T(u) = restrict(A(u) − y^δ)`, `L = D_Γ`, `g = μ S_Γ`, `f = λ R_Γ`.
#[derive(Debug)]
pub struct InverseBindings {
    forward: ForwardConfig,
    gamma: GammaGrid,
    weights: RegularizerWeights,
    y_delta_restricted: Array2<f64>,
    helmholtz: HelmholtzCache,
}

pub fn build_bindings(spec: &InverseProblemSpec) -> Result<InverseBindings> {
    spec.validate()?;
    Ok(InverseBindings {
        forward: spec.forward.clone(),
        gamma: spec.gamma.clone(),
        weights: spec.weights,
        y_delta_restricted: restrict_raw(spec.y_delta.view(), &spec.gamma),
        helmholtz: HelmholtzCache::new(spec.forward.space),
    })
}

impl InverseBindings {
    pub fn gamma(&self) -> &GammaGrid {
        &self.gamma
    }

    pub fn forward_config(&self) -> &ForwardConfig {
        &self.forward
    }
}

impl ProblemBindings for InverseBindings {
    fn operator(&self, u: ArrayView2<f64>) -> Result<Array2<f64>> {
        let y = forward_primal_raw(u, &self.gamma, &self.forward)?;
        Ok(restrict_raw(y.view(), &self.gamma) - &self.y_delta_restricted)
    }

    fn apply_l(&self, u: ArrayView2<f64>) -> Array2<f64> {
        d_gamma_raw(u)
    }

    fn apply_l_adjoint(&self, v: ArrayView2<f64>) -> Array2<f64> {
        d_gamma_adjoint_raw(v, &self.gamma)
    }

    fn prox_g(&self, x: Array2<f64>, alpha: f64) -> Result<Array2<f64>> {
        self.helmholtz.solve_rows(x.view(), alpha * self.weights.mu)
    }

    fn prox_fstar(&self, v: Array2<f64>, _step: f64) -> Array2<f64> {
        project_balls_raw(v.view(), self.weights.lambda, &self.forward.space)
    }

    fn primal_dot(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
        primal_dot_raw(a, b, &self.gamma, &self.forward.space)
    }

    fn dual_dot(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
        dual_dot_raw(a, b, &self.forward.space)
    }

    fn regularizer_values(&self, u: ArrayView2<f64>) -> (f64, f64) {
        let tv = tv_of_dual(d_gamma_raw(u).view(), &self.forward.space);
        (tv, sobolev_raw(u, &self.gamma, &self.forward.space))
    }
}

#[derive(Clone, Debug)]
pub struct InverseSolution {
    pub u: PrimalField,
    pub v: DualField,
    pub iterations: usize,
    pub converged: bool,
    pub trace: ConvergenceTrace,
    /// `‖A(u) − y^δ‖ / ‖y^δ‖` on the fine mesh.
    pub rel_residual: f64,
    pub fixed_point_residual: f64,
}

/// Runs the solver from `u = 0`, `v = 0`.
pub fn solve_inverse(spec: &InverseProblemSpec) -> Result<InverseSolution> {
    let bindings = build_bindings(spec)?;
    let nx = spec.forward.space.len();
    let n = spec.gamma.intervals();
    let sol = run(&bindings, &spec.params, Array2::zeros((n, nx)), Array2::zeros((n - 1, nx)))?;
    let fixed_point_residual = check_fixed_point(sol.u.view(), sol.v.view(), &bindings, &spec.params)?;

    let y = forward_primal_raw(sol.u.view(), &spec.gamma, &spec.forward)?;
    let diff = &y - spec.y_delta.values();
    let (time, space) = (&spec.forward.time, &spec.forward.space);
    let num = trajectory_dot_raw(diff.view(), diff.view(), time, space).sqrt();
    let den = trajectory_dot_raw(spec.y_delta.view(), spec.y_delta.view(), time, space).sqrt();
    let rel_residual = if den > 0.0 { num / den } else { num };

    Ok(InverseSolution {
        u: PrimalField::from_array_unchecked(sol.u),
        v: DualField::from_array_unchecked(sol.v),
        iterations: sol.iterations,
        converged: sol.converged,
        trace: sol.trace,
        rel_residual,
        fixed_point_residual,
    })
}
