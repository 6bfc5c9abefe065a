//! Nested inertial primal-dual method for
//!
//! ```text
//! find u with 0 ∈ T(u) + L* ∂f(L u) + ∂g(u),
//! ```
//!
//! where `T` is cocoercive, `L` bounded linear, and `f`, `g` convex with
//! computable proximal maps. Each outer iteration extrapolates
//! `ū = u_n + γ_n (u_n − u_{n−1})`, evaluates `T(ū)` once, and runs `k_max`
//! warm-started primal-dual sweeps on the backward step:
//!
//! ```text
//! u^k     = prox_{αg}(ū − α(T(ū) + L* v^k))
//! v^{k+1} = prox_{(β/α) f*}(v^k + (β/α) L u^k)
//! ```
//!
//! followed by `u_{n+1} = (u^1 + … + u^{k_max}) / k_max`.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::output::fmt_f64;

/// Operators and proximal maps defining one inclusion problem.
///
/// Implementations must be reentrant; the solver itself is sequential.
pub trait ProblemBindings {
    /// The cocoercive operator `T`.
    fn operator(&self, u: ArrayView2<f64>) -> Result<Array2<f64>>;

    fn apply_l(&self, u: ArrayView2<f64>) -> Array2<f64>;

    fn apply_l_adjoint(&self, v: ArrayView2<f64>) -> Array2<f64>;

    /// `prox_{α g}(x)`.
    fn prox_g(&self, x: Array2<f64>, alpha: f64) -> Result<Array2<f64>>;

    /// `prox_{s f*}(v)`.
    fn prox_fstar(&self, v: Array2<f64>, step: f64) -> Array2<f64>;

    fn primal_dot(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64;

    fn dual_dot(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64;

    fn primal_norm(&self, a: ArrayView2<f64>) -> f64 {
        self.primal_dot(a, a).max(0.0).sqrt()
    }

    fn dual_norm(&self, a: ArrayView2<f64>) -> f64 {
        self.dual_dot(a, a).max(0.0).sqrt()
    }

    /// Regularizer values `(R, S)` recorded in the trace.
    fn regularizer_values(&self, _u: ArrayView2<f64>) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// Inertial parameter rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Inertia {
    /// `γ_n = 0` for all `n`.
    Off,
    /// `γ_n = min{γ_n^FISTA, σ ρ_n / ‖u_n − u_{n−1}‖}` with `ρ_n = n^{−p}`.
    SafeguardedFista { sigma: f64, rho_exponent: f64 },
}

impl Default for Inertia {
    fn default() -> Self {
        Inertia::SafeguardedFista { sigma: 1.0, rho_exponent: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub alpha: f64,
    pub beta: f64,
    pub k_max: usize,
    pub inertia: Inertia,
    pub max_outer: usize,
    /// Stop once `‖u_{n+1} − u_n‖ ≤ tol_update`. Zero or non-finite values
    /// disable the test, so the run lasts exactly `max_outer` iterations.
    pub tol_update: f64,
    /// Abort when `‖u_n‖` exceeds this multiple of `max(‖u_0‖, 1)`.
    pub divergence_factor: f64,
}

impl SolverParams {
    pub fn new(alpha: f64, beta: f64, k_max: usize) -> Self {
        Self {
            alpha,
            beta,
            k_max,
            inertia: Inertia::default(),
            max_outer: 10_000,
            tol_update: 1e-6,
            divergence_factor: 1e6,
        }
    }

    /// Checks `0 < α < 2C`, `0 < β‖L‖² < 1` and `k_max ≥ 1`.
    pub fn validate(&self, cocoercivity: f64, l_norm: f64) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 2.0 * cocoercivity) {
            return Err(Error::Config(format!(
                "alpha = {} must lie in (0, 2C) = (0, {})",
                self.alpha,
                2.0 * cocoercivity
            )));
        }
        if !(self.beta > 0.0 && self.beta * l_norm * l_norm < 1.0) {
            return Err(Error::Config(format!(
                "beta = {} must lie in (0, 1/||L||^2) = (0, {})",
                self.beta,
                1.0 / (l_norm * l_norm)
            )));
        }
        if self.k_max == 0 {
            return Err(Error::Config("k_max must be at least 1".into()));
        }
        if let Inertia::SafeguardedFista { sigma, rho_exponent } = self.inertia {
            if !(sigma > 0.0) || !(rho_exponent > 1.0) {
                return Err(Error::Config(format!(
                    "inertia needs sigma > 0 and a summable rho (exponent > 1), got {sigma}, {rho_exponent}"
                )));
            }
        }
        Ok(())
    }

    fn tolerance_enabled(&self) -> bool {
        self.tol_update.is_finite() && self.tol_update > 0.0
    }
}

/// Solver state between outer iterations.
#[derive(Clone, Debug)]
pub struct IterateState {
    pub u: Array2<f64>,
    pub u_prev: Array2<f64>,
    /// Dual iterate that warm-starts the next inner loop.
    pub v: Array2<f64>,
    pub t_fista: f64,
    pub n: usize,
    /// `Σ γ_n ‖u_n − u_{n−1}‖` so far.
    pub gamma_sum: f64,
    scale: f64,
}

impl IterateState {
    pub fn new<P: ProblemBindings + ?Sized>(problem: &P, u0: Array2<f64>, v0: Array2<f64>) -> Self {
        let scale = problem.primal_norm(u0.view()).max(1.0);
        Self { u_prev: u0.clone(), u: u0, v: v0, t_fista: 1.0, n: 0, gamma_sum: 0.0, scale }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertialStep {
    pub gamma: f64,
    pub gamma_fista: f64,
    pub t_next: f64,
}

/// `t_{n+1} = (1 + √(1 + 4t_n²)) / 2`, `γ^FISTA_n = (t_n − 1)/t_{n+1}`,
/// safeguarded by `σ ρ_n / ‖u_n − u_{n−1}‖`; `γ_0 = 0`.
pub fn inertial_gamma(n: usize, t_n: f64, step_norm: f64, inertia: &Inertia) -> InertialStep {
    let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_n * t_n).sqrt());
    let gamma_fista = (t_n - 1.0) / t_next;
    let gamma = match *inertia {
        Inertia::Off => 0.0,
        _ if n == 0 => 0.0,
        Inertia::SafeguardedFista { sigma, rho_exponent } => {
            if step_norm > 0.0 {
                let rho = (n as f64).powf(-rho_exponent);
                gamma_fista.min(sigma * rho / step_norm)
            } else {
                gamma_fista
            }
        }
    };
    InertialStep { gamma, gamma_fista, t_next }
}

/// Diagnostics of one outer iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    /// Index `n` of the iteration that produced `u_{n+1}`.
    pub iteration: usize,
    pub update_norm: f64,
    /// `‖T(ū_n)‖`.
    pub residual_norm: f64,
    pub gamma: f64,
    pub step_norm: f64,
    /// `‖v^{k+1} − v^k‖` for `k = 0..k_max`.
    pub dual_increments: Vec<f64>,
}

/// Inner iterate handed to an observer: `primal = u^k` computed from
/// `dual = v^k`.
#[derive(Debug)]
pub struct InnerEvent<'a> {
    pub k: usize,
    pub primal: &'a Array2<f64>,
    pub dual: &'a Array2<f64>,
}

pub fn outer_step<P: ProblemBindings + ?Sized>(
    state: &mut IterateState,
    problem: &P,
    params: &SolverParams,
) -> Result<StepReport> {
    outer_step_observed(state, problem, params, &mut |_| {})
}

pub fn outer_step_observed<P: ProblemBindings + ?Sized>(
    state: &mut IterateState,
    problem: &P,
    params: &SolverParams,
    observer: &mut dyn FnMut(InnerEvent<'_>),
) -> Result<StepReport> {
    let alpha = params.alpha;
    let dual_step = params.beta / alpha;
    let k_max = params.k_max;

    let diff = &state.u - &state.u_prev;
    let step_norm = problem.primal_norm(diff.view());
    let inertial = inertial_gamma(state.n, state.t_fista, step_norm, &params.inertia);
    let u_bar = if inertial.gamma != 0.0 { &state.u + &(diff * inertial.gamma) } else { state.u.clone() };

    let w = problem.operator(u_bar.view())?;
    let residual_norm = problem.primal_norm(w.view());
    let base = u_bar - &(w * alpha);

    let mut v = state.v.clone();
    let mut acc = Array2::<f64>::zeros(state.u.dim());
    let mut dual_increments = Vec::with_capacity(k_max);
    for k in 0..=k_max {
        let ltv = problem.apply_l_adjoint(v.view());
        let uk = problem.prox_g(&base - &(ltv * alpha), alpha)?;
        observer(InnerEvent { k, primal: &uk, dual: &v });
        if k < k_max {
            let lu = problem.apply_l(uk.view());
            let v_next = problem.prox_fstar(&v + &(lu * dual_step), dual_step);
            dual_increments.push(problem.dual_norm((&v_next - &v).view()));
            v = v_next;
        }
        if k >= 1 {
            acc += &uk;
        }
    }
    let u_next = acc / k_max as f64;

    let iteration = state.n;
    let next_norm = problem.primal_norm(u_next.view());
    if !next_norm.is_finite() || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Divergence {
            iteration,
            reason: format!(
                "non-finite iterate (residual {residual_norm:e}, gamma {:e}, step {step_norm:e})",
                inertial.gamma
            ),
        });
    }
    if next_norm > params.divergence_factor * state.scale {
        return Err(Error::Divergence {
            iteration,
            reason: format!(
                "||u|| = {next_norm:e} exceeds {:e} x initial scale {:e}; check alpha and beta",
                params.divergence_factor, state.scale
            ),
        });
    }

    let update_norm = problem.primal_norm((&u_next - &state.u).view());
    state.gamma_sum += inertial.gamma * step_norm;
    state.u_prev = std::mem::replace(&mut state.u, u_next);
    state.v = v;
    state.t_fista = inertial.t_next;
    state.n += 1;

    Ok(StepReport { iteration, update_norm, residual_norm, gamma: inertial.gamma, step_norm, dual_increments })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub update_norm: f64,
    pub residual: f64,
    pub tv: f64,
    pub sobolev: f64,
    pub gamma_n: f64,
    pub gamma_sum: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceTrace {
    pub rows: Vec<TraceRow>,
}

impl ConvergenceTrace {
    pub const HEADER: &'static str = "iter,update_norm,residual,tv,sobolev,gamma_n,gamma_sum";

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.iter,
                fmt_f64(r.update_norm),
                fmt_f64(r.residual),
                fmt_f64(r.tv),
                fmt_f64(r.sobolev),
                fmt_f64(r.gamma_n),
                fmt_f64(r.gamma_sum)
            ));
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gamma_sum: f64,
    pub trace: ConvergenceTrace,
}

pub fn run<P: ProblemBindings + ?Sized>(
    problem: &P,
    params: &SolverParams,
    u0: Array2<f64>,
    v0: Array2<f64>,
) -> Result<Solution> {
    run_observed(problem, params, u0, v0, |_, _| {})
}

/// [`run`], calling `on_step` with the state after every outer iteration.
pub fn run_observed<P, F>(
    problem: &P,
    params: &SolverParams,
    u0: Array2<f64>,
    v0: Array2<f64>,
    mut on_step: F,
) -> Result<Solution>
where
    P: ProblemBindings + ?Sized,
    F: FnMut(&IterateState, &StepReport),
{
    let mut state = IterateState::new(problem, u0, v0);
    let mut trace = ConvergenceTrace::default();
    let mut converged = false;
    for _ in 0..params.max_outer {
        let report = outer_step(&mut state, problem, params)?;
        let (tv, sobolev) = problem.regularizer_values(state.u.view());
        trace.rows.push(TraceRow {
            iter: state.n,
            update_norm: report.update_norm,
            residual: report.residual_norm,
            tv,
            sobolev,
            gamma_n: report.gamma,
            gamma_sum: state.gamma_sum,
        });
        on_step(&state, &report);
        if params.tolerance_enabled() && report.update_norm <= params.tol_update {
            converged = true;
            break;
        }
    }
    Ok(Solution {
        iterations: state.n,
        gamma_sum: state.gamma_sum,
        u: state.u,
        v: state.v,
        converged,
        trace,
    })
}

/// Largest of the two fixed-point residuals
/// `‖u − prox_{αg}(u − α(T(u) + L*v))‖` and
/// `‖v − prox_{(β/α) f*}(v + (β/α) L u)‖`.
pub fn check_fixed_point<P: ProblemBindings + ?Sized>(
    u: ArrayView2<f64>,
    v: ArrayView2<f64>,
    problem: &P,
    params: &SolverParams,
) -> Result<f64> {
    let alpha = params.alpha;
    let dual_step = params.beta / alpha;
    let tu = problem.operator(u)?;
    let ltv = problem.apply_l_adjoint(v);
    let pu = problem.prox_g(&u - &((tu + ltv) * alpha), alpha)?;
    let pv = problem.prox_fstar(&v + &(problem.apply_l(u) * dual_step), dual_step);
    let ru = problem.primal_norm((&u - &pu).view());
    let rv = problem.dual_norm((&v - &pv).view());
    Ok(ru.max(rv))
}
