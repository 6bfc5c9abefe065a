//! Test sources, synthetic noisy data and the reconstruction / rate studies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grids::{
    norm_primal, primal_dot_raw, trajectory_dot_raw, GammaGrid, PrimalField, SpaceGrid, TimeGrid, TrajectoryField,
};
use crate::inverse::{solve_inverse, InverseProblemSpec, InverseSolution};
use crate::output::fmt_f64;
use crate::pde::{forward, ForwardConfig, Source};
use crate::pdsolver::SolverParams;
use crate::temporal::RegularizerWeights;

/// Piecewise-constant-in-time source with jumps at `t = 1/4, 2/3, 3/4`.
pub fn u1_pointwise(t: f64, x: f64) -> f64 {
    if t < 0.25 {
        4.0 * (PI * x).sin()
    } else if t < 2.0 / 3.0 {
        2.0 * (7.0 * PI * x).cos()
    } else if t < 0.75 {
        5.0 * x - (PI * x).cos()
    } else {
        5.0 - 4.0 * (PI * x).sin()
    }
}

/// `sin(2πt)⁵ cos(2πx)`.
pub fn u2_pointwise(t: f64, x: f64) -> f64 {
    (2.0 * PI * t).sin().powi(5) * (2.0 * PI * x).cos()
}

/// Mean of `sin(2πt)⁵` over `[a, b]`, from the antiderivative
/// `∫ sin⁵θ dθ = −cos θ + (2/3)cos³θ − (1/5)cos⁵θ`.
pub fn sin5_mean(a: f64, b: f64) -> f64 {
    let anti = |t: f64| {
        let c = (2.0 * PI * t).cos();
        (-c + 2.0 * c.powi(3) / 3.0 - c.powi(5) / 5.0) / (2.0 * PI)
    };
    (anti(b) - anti(a)) / (b - a)
}

/// `u1` sampled at the midpoint of each Γ-interval. When the jump times are
/// knots this is the exact restriction; otherwise an interval containing a
/// jump takes the piece active at its midpoint.
pub fn phantom_u1(gamma: &GammaGrid, space: &SpaceGrid) -> PrimalField {
    let x = space.nodes();
    let values = Array2::from_shape_fn((gamma.intervals(), space.len()), |(i, j)| {
        u1_pointwise(gamma.midpoint(i), x[j])
    });
    PrimalField::from_array_unchecked(values)
}

/// Orthogonal projection of `u2` onto `L²_Γ`: exact interval means in time.
pub fn phantom_u2(gamma: &GammaGrid, space: &SpaceGrid) -> PrimalField {
    let x = space.nodes();
    let k = gamma.knots();
    let values = Array2::from_shape_fn((gamma.intervals(), space.len()), |(i, j)| {
        sin5_mean(k[i], k[i + 1]) * (2.0 * PI * x[j]).cos()
    });
    PrimalField::from_array_unchecked(values)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phantom {
    U1,
    U2,
    Zero,
}

impl Phantom {
    pub fn sample(self, gamma: &GammaGrid, space: &SpaceGrid) -> PrimalField {
        match self {
            Phantom::U1 => phantom_u1(gamma, space),
            Phantom::U2 => phantom_u2(gamma, space),
            Phantom::Zero => PrimalField::zeros(gamma.intervals(), space.len()),
        }
    }
}

impl FromStr for Phantom {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u1" => Ok(Phantom::U1),
            "u2" => Ok(Phantom::U2),
            "zero" => Ok(Phantom::Zero),
            other => Err(Error::Config(format!("unknown phantom {other:?} (expected u1, u2 or zero)"))),
        }
    }
}

impl fmt::Display for Phantom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phantom::U1 => "u1",
            Phantom::U2 => "u2",
            Phantom::Zero => "zero",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    /// Relative noise level `δ`.
    pub delta: f64,
    pub seed: u64,
    /// Use i.i.d. samples with standard deviation `δ‖y‖` as they come,
    /// instead of rescaling the sample to `‖n‖ = δ‖y‖` exactly.
    pub literal_sigma: bool,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Self {
        Self { delta, seed, literal_sigma: false }
    }
}

/// `y + n` with Gaussian `n` drawn from ChaCha8 via the ziggurat sampler of
/// `rand_distr`. Norms use the space-time quadrature of the fine mesh.
pub fn add_noise(y: &TrajectoryField, spec: &NoiseSpec, time: &TimeGrid, space: &SpaceGrid) -> Result<TrajectoryField> {
    if !(spec.delta >= 0.0) || !spec.delta.is_finite() {
        return Err(Error::Domain(format!("noise level must be >= 0, got {}", spec.delta)));
    }
    y.check(time, space)?;
    if spec.delta == 0.0 {
        return Ok(y.clone());
    }
    let y_norm = trajectory_dot_raw(y.view(), y.view(), time, space).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise = Array2::from_shape_simple_fn(y.values().dim(), || -> f64 { StandardNormal.sample(&mut rng) });
    if spec.literal_sigma {
        noise *= spec.delta * y_norm;
    } else {
        let n_norm = trajectory_dot_raw(noise.view(), noise.view(), time, space).sqrt();
        noise *= spec.delta * y_norm / n_norm;
    }
    TrajectoryField::new(y.values() + &noise)
}

/// `‖u − u_true‖ / ‖u_true‖` in `L²_Γ`.
pub fn rel_error(u: &PrimalField, u_true: &PrimalField, gamma: &GammaGrid, space: &SpaceGrid) -> Result<f64> {
    let den = norm_primal(u_true, gamma, space)?;
    if den == 0.0 {
        return Err(Error::Domain("relative error against a zero field".into()));
    }
    u.check(gamma, space)?;
    let d = u.values() - u_true.values();
    Ok(primal_dot_raw(d.view(), d.view(), gamma, space).sqrt() / den)
}

/// Everything needed to synthesize data from a known source and invert it.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub forward: ForwardConfig,
    pub gamma: GammaGrid,
    pub phantom: Phantom,
    pub noise: NoiseSpec,
    pub weights: RegularizerWeights,
    pub cocoercivity: f64,
    pub params: SolverParams,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub truth: PrimalField,
    pub solution: InverseSolution,
    /// `None` for the zero source.
    pub rel_error: Option<f64>,
}

impl Experiment {
    pub fn truth(&self) -> PrimalField {
        self.phantom.sample(&self.gamma, &self.forward.space)
    }

    pub fn clean_data(&self) -> Result<TrajectoryField> {
        forward(Source::Primal(&self.truth(), &self.gamma), &self.forward)
    }

    pub fn noisy_data(&self) -> Result<TrajectoryField> {
        add_noise(&self.clean_data()?, &self.noise, &self.forward.time, &self.forward.space)
    }

    pub fn inverse_spec(&self) -> Result<InverseProblemSpec> {
        Ok(InverseProblemSpec {
            forward: self.forward.clone(),
            gamma: self.gamma.clone(),
            weights: self.weights,
            y_delta: self.noisy_data()?,
            cocoercivity: self.cocoercivity,
            params: self.params.clone(),
        })
    }

    pub fn reconstruct(&self) -> Result<Reconstruction> {
        let truth = self.truth();
        let solution = solve_inverse(&self.inverse_spec()?)?;
        let rel_error = match self.phantom {
            Phantom::Zero => None,
            _ => Some(rel_error(&solution.u, &truth, &self.gamma, &self.forward.space)?),
        };
        Ok(Reconstruction { truth, solution, rel_error })
    }
}

/// `λ_i = 2^{−i} λ_0`, `μ_i = 2^{−i} μ_0`, `δ_i = 2^{−i} δ_0` for
/// `i = 0..levels`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateStudySpec {
    pub lambda0: f64,
    pub mu0: f64,
    pub delta0: f64,
    pub levels: usize,
}

impl RateStudySpec {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.lambda0) && ok(self.mu0) && ok(self.delta0)) {
            return Err(Error::Config("rate study needs positive lambda0, mu0 and delta0".into()));
        }
        if self.levels == 0 {
            return Err(Error::Config("rate study needs at least one level".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub level: usize,
    pub delta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub rel_error: f64,
    pub rel_residual: f64,
    pub iterations: usize,
    pub wall_seconds: f64,
}

/// Least-squares line `log y = slope · log δ + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<LogLogFit> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some(LogLogFit { slope, intercept: my - slope * mx, r_squared, points: lx.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    pub rows: Vec<RateRow>,
}

impl RateTable {
    pub const HEADER: &'static str = "level,delta,lambda,mu,rel_error,rel_residual,iterations,wall_seconds";

    pub fn error_fit(&self) -> Option<LogLogFit> {
        let d: Vec<f64> = self.rows.iter().map(|r| r.delta).collect();
        fit_loglog(&d, &self.rows.iter().map(|r| r.rel_error).collect::<Vec<_>>())
    }

    pub fn residual_fit(&self) -> Option<LogLogFit> {
        let d: Vec<f64> = self.rows.iter().map(|r| r.delta).collect();
        fit_loglog(&d, &self.rows.iter().map(|r| r.rel_residual).collect::<Vec<_>>())
    }

    /// Wall-clock times vary between runs, so they are written as zero
    /// unless `timing` is set.
    pub fn to_csv(&self, timing: bool) -> String {
        let mut out = format!("{}\n", Self::HEADER);
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.level,
                fmt_f64(r.delta),
                fmt_f64(r.lambda),
                fmt_f64(r.mu),
                fmt_f64(r.rel_error),
                fmt_f64(r.rel_residual),
                r.iterations,
                fmt_f64(if timing { r.wall_seconds } else { 0.0 })
            ));
        }
        out
    }

    pub fn slopes_csv(&self) -> String {
        let mut out = String::from("quantity,slope,intercept,r_squared,points\n");
        for (name, fit) in [("rel_error", self.error_fit()), ("rel_residual", self.residual_fit())] {
            match fit {
                Some(f) => out.push_str(&format!(
                    "{name},{},{},{},{}\n",
                    fmt_f64(f.slope),
                    fmt_f64(f.intercept),
                    fmt_f64(f.r_squared),
                    f.points
                )),
                None => out.push_str(&format!("{name},,,,{}\n", self.rows.len())),
            }
        }
        out
    }
}

/// Runs the levels in parallel. Every level reuses the base noise seed, so
/// the noise fields differ only by their scale.
pub fn run_rate_study(base: &Experiment, spec: &RateStudySpec) -> Result<RateTable> {
    spec.validate()?;
    if base.phantom == Phantom::Zero {
        return Err(Error::Config("rate study needs a nonzero phantom".into()));
    }
    let rows = (0..spec.levels)
        .into_par_iter()
        .map(|level| {
            let scale = 0.5f64.powi(level as i32);
            let mut exp = base.clone();
            exp.weights = RegularizerWeights::new(spec.lambda0 * scale, spec.mu0 * scale)?;
            exp.noise.delta = spec.delta0 * scale;
            let start = Instant::now();
            let rec = exp.reconstruct()?;
            Ok(RateRow {
                level,
                delta: exp.noise.delta,
                lambda: exp.weights.lambda,
                mu: exp.weights.mu,
                rel_error: rec.rel_error.expect("nonzero phantom"),
                rel_residual: rec.solution.rel_residual,
                iterations: rec.solution.iterations,
                wall_seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateTable { rows })
}
