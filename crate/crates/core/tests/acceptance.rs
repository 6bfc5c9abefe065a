//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{dist, orders, solve_manufactured, Toy};
use lavrentiev::commands::{run_forward, run_invert, run_rates};
use lavrentiev::config::{preset_names, Config};
use lavrentiev::experiments::{run_rate_study, RateStudySpec};
use lavrentiev::grids::{dual_dot, primal_dot, DualField, GammaGrid, PrimalField, SpaceGrid, TimeGrid};
use lavrentiev::pde::{cocoercivity_ratio, ForwardConfig};
use lavrentiev::pdsolver::{run, run_observed, Inertia, SolverParams};
use lavrentiev::prox::{prox_sobolev, prox_tv_dual, prox_tv_primal};
use lavrentiev::temporal::{d_gamma, d_gamma_adjoint};
use lavrentiev::tridiag::assemble_helmholtz_neumann;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn desk() -> (SpaceGrid, TimeGrid, GammaGrid) {
    let space = SpaceGrid::new(65).unwrap();
    let time = TimeGrid::new(257).unwrap();
    let gamma = GammaGrid::uniform(16, &time).unwrap();
    (space, time, gamma)
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.sample::<f64, _>(StandardNormal))
}

fn adjoint_identity() -> Outcome {
    let (space, _, gamma) = desk();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let u = PrimalField::new(gaussian(&mut rng, 16, 65)).unwrap();
        let v = DualField::new(gaussian(&mut rng, 15, 65)).unwrap();
        let lhs = dual_dot(&d_gamma(&u, &gamma).unwrap(), &v, &space).unwrap();
        let rhs = primal_dot(&u, &d_gamma_adjoint(&v, &gamma).unwrap(), &gamma, &space).unwrap();
        let nu = primal_dot(&u, &u, &gamma, &space).unwrap().sqrt();
        let nv = dual_dot(&v, &v, &space).unwrap().sqrt();
        worst = worst.max((lhs - rhs).abs() / (nu * nv));
    }
    Outcome::new(worst <= 1e-12, format!("max relative defect {worst:.2e}"))
}

fn moreau_identity() -> Outcome {
    let space = SpaceGrid::new(65).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for lambda in [1e-6, 1e-4, 1.0] {
        for _ in 0..100 {
            let scale = 10f64.powf(rng.random_range(-7.0..1.0));
            let w = DualField::new(gaussian(&mut rng, 15, 65) * scale).unwrap();
            let p = prox_tv_primal(&w, lambda, &space).unwrap();
            let d = prox_tv_dual(&w, lambda, &space).unwrap();
            let defect = (p.values() + d.values() - w.values()).iter().fold(0.0f64, |a, x| a.max(x.abs()));
            worst = worst.max(defect);
        }
    }
    Outcome::new(worst <= 1e-12, format!("max defect {worst:.2e}"))
}

fn helmholtz_optimality() -> Outcome {
    let (space, _, gamma) = desk();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for coeff in [0.0, 1e-6, 1e-3] {
        let op = assemble_helmholtz_neumann(coeff, &space).unwrap();
        for _ in 0..20 {
            let w = PrimalField::new(gaussian(&mut rng, 16, 65)).unwrap();
            let u = prox_sobolev(&w, coeff, &gamma, &space).unwrap();
            for i in 0..16 {
                let r = op.apply(u.row(i)) - w.row(i);
                worst = worst.max(r.iter().fold(0.0f64, |a, x| a.max(x.abs())));
            }
        }
    }
    Outcome::new(worst <= 1e-9, format!("max Euler-Lagrange residual {worst:.2e}"))
}

fn forward_order() -> Outcome {
    let time_sols: Vec<_> = [33, 65, 129, 257, 513].iter().map(|&nt| solve_manufactured(129, nt)).collect();
    let space_sols: Vec<_> = [9, 17, 33, 65].iter().map(|&nx| solve_manufactured(nx, 2049)).collect();
    let pt = orders(&time_sols);
    let px = orders(&space_sols);
    let min_t = pt.iter().cloned().fold(f64::INFINITY, f64::min);
    let min_x = px.iter().cloned().fold(f64::INFINITY, f64::min);
    Outcome::new(min_t >= 1.8 && min_x >= 1.8, format!("time orders {pt:.3?}, space orders {px:.3?}"))
}

/// Smooth random sources: a few spatial sine modes per interval, plus
/// white noise, at amplitudes spanning two decades.
fn random_source(rng: &mut ChaCha8Rng, space: &SpaceGrid, smooth: bool) -> PrimalField {
    let amp = 10f64.powf(rng.random_range(-1.0..1.0));
    let mut u = Array2::zeros((16, space.len()));
    for mut row in u.outer_iter_mut() {
        if smooth {
            let coefs: Vec<f64> = (0..4).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            for (j, x) in row.iter_mut().enumerate() {
                let xj = space.node(j);
                *x = coefs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * PI * xj).sin()).sum::<f64>()
                    + 0.1 * rng.sample::<f64, _>(StandardNormal);
            }
        } else {
            row.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
        }
    }
    PrimalField::new(u * amp).unwrap()
}

fn cocoercivity() -> Outcome {
    let (space, time, gamma) = desk();
    let cfg = ForwardConfig::with_zero_initial(space, time);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let smooth = k % 2 == 0;
        let u = random_source(&mut rng, &space, smooth);
        let v = random_source(&mut rng, &space, smooth);
        worst = worst.min(cocoercivity_ratio(&u, &v, &cfg, &gamma).unwrap());
    }
    let bound = 0.95 * PI * PI;
    Outcome::new(worst >= bound, format!("min ratio {worst:.4} (bound {bound:.4})"))
}

fn toy_convergence() -> Outcome {
    let toy = Toy::standard();
    let (u_exact, _) = toy.exact_solution();
    let mut p = SolverParams::new(toy.cocoercivity(), 0.95 / toy.l_norm_sq(), 5);
    p.tol_update = 0.0;
    p.max_outer = 1_000_000;
    let reference = run(&toy, &p, toy.zeros_u(), toy.zeros_v()).unwrap();
    p.max_outer = 10_000;
    let sol = run(&toy, &p, toy.zeros_u(), toy.zeros_v()).unwrap();
    let d_ref = dist(&sol.u, &reference.u);
    let d_exact = dist(&reference.u, &u_exact);

    let (u_hat, v_hat) = toy.exact_solution();
    p.inertia = Inertia::Off;
    p.max_outer = 10_000;
    let lyap = |u: &Array2<f64>, v: &Array2<f64>| {
        p.beta * p.k_max as f64 * dist(u, &u_hat).powi(2) + p.alpha.powi(2) * dist(v, &v_hat).powi(2)
    };
    let mut prev = lyap(&toy.zeros_u(), &toy.zeros_v());
    let mut worst_increase = f64::NEG_INFINITY;
    run_observed(&toy, &p, toy.zeros_u(), toy.zeros_v(), |s, _| {
        let cur = lyap(&s.u, &s.v);
        worst_increase = worst_increase.max(cur - prev);
        prev = cur;
    })
    .unwrap();
    Outcome::new(
        d_ref <= 1e-6 && worst_increase <= 1e-10,
        format!(
            "distance to reference {d_ref:.2e} (reference vs exact {d_exact:.2e}), max Lyapunov increase {worst_increase:.2e}"
        ),
    )
}

fn fixed_point_certificate() -> Outcome {
    let exp = Config::preset("fig2-u1").unwrap().experiment().unwrap();
    let tol = exp.params.tol_update;
    let rec = exp.reconstruct().unwrap();
    let r = rec.solution.fixed_point_residual;
    Outcome::new(
        rec.solution.converged && r <= 10.0 * tol,
        format!("residual {r:.3e} after {} iterations (limit {:.0e})", rec.solution.iterations, 10.0 * tol),
    )
}

fn frozen_baseline() -> f64 {
    let text = include_str!("baselines/fig2-u1.csv");
    text.lines().nth(1).and_then(|l| l.trim().parse().ok()).expect("baseline file holds rel_error")
}

fn reconstruction_quality() -> Outcome {
    let exp = Config::preset("fig2-u1").unwrap().experiment().unwrap();
    let rec = exp.reconstruct().unwrap();
    let err = rec.rel_error.unwrap();
    let base = frozen_baseline();
    let within = (err - base).abs() <= 0.01 * base;

    let d = d_gamma(&rec.solution.u, &exp.gamma).unwrap();
    let mut jumps: Vec<(f64, f64)> = (0..d.rows())
        .map(|i| (exp.forward.space.norm(d.row(i)).unwrap(), exp.gamma.knots()[i + 1]))
        .collect();
    jumps.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = exp.gamma.intervals() as f64;
    let top: Vec<f64> = jumps[..3].iter().map(|j| j.1).collect();
    let located = top.iter().all(|k| [0.25, 2.0 / 3.0, 0.75].iter().any(|t| (k - t).abs() <= 2.0 / n + 1e-12));
    Outcome::new(
        within && located,
        format!("rel_error {err:.6} (baseline {base:.6}), largest jumps at {top:.4?}"),
    )
}

fn rate_line(name: &str, cfg: &Config, levels: usize) -> (bool, String) {
    let exp = cfg.experiment().unwrap();
    let mut spec: RateStudySpec = cfg.rate_spec().unwrap();
    spec.levels = levels;
    let table = run_rate_study(&exp, &spec).unwrap();
    let e = table.error_fit().unwrap().slope;
    let r = table.residual_fit().unwrap().slope;
    let ok = (0.3..=0.8).contains(&e) && (0.75..=1.25).contains(&r);
    (ok, format!("{name}/{levels}: error slope {e:.3}, residual slope {r:.3}"))
}

fn semi_convergence() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for name in ["fig4-u1", "fig4-u2"] {
        let cfg = Config::preset(name).unwrap();
        for levels in [3, 5] {
            let (ok, d) = rate_line(name, &cfg, levels);
            pass &= ok;
            details.push(d);
        }
    }
    Outcome::new(pass, details.join("; "))
}

fn determinism() -> Outcome {
    let mut mismatched = Vec::new();
    for name in preset_names() {
        let cfg = Config::preset(name).unwrap();
        let runs: [fn(&Config) -> lavrentiev::Result<_>; 3] = [run_forward, run_invert, run_rates];
        let kinds: &[usize] = if name.starts_with("fig4") { &[2] } else if name == "fig1" { &[0] } else { &[1] };
        for &k in kinds {
            let a = runs[k](&cfg).unwrap();
            let b = runs[k](&cfg).unwrap();
            if a != b {
                mismatched.push(name);
            }
        }
    }
    Outcome::new(mismatched.is_empty(), format!("{} presets rerun, mismatches: {mismatched:?}", preset_names().count()))
}

type Check = fn() -> Outcome;

fn main() -> ExitCode {
    let criteria: [(&str, Check, Duration); 10] = [
        ("adjoint identity of D_Γ", adjoint_identity, Duration::from_secs(1)),
        ("Moreau identity of the TV proxes", moreau_identity, Duration::from_secs(1)),
        ("Helmholtz prox optimality", helmholtz_optimality, Duration::from_secs(1)),
        ("forward solver second order in time and space", forward_order, Duration::from_secs(30)),
        ("cocoercivity ratio at least 0.95 π²", cocoercivity, Duration::from_secs(120)),
        ("toy problem convergence and Lyapunov decrease", toy_convergence, Duration::from_secs(60)),
        ("fixed-point certificate on fig2-u1", fixed_point_certificate, Duration::from_secs(600)),
        ("fig2-u1 reconstruction matches frozen baseline", reconstruction_quality, Duration::from_secs(600)),
        ("semi-convergence slopes", semi_convergence, Duration::from_secs(3600)),
        ("byte-identical reruns", determinism, Duration::from_secs(3600)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = check();
        let took = start.elapsed();
        let pass = out.pass && took <= *budget;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {:>2}: {}  {name}: {} [{:.2}s, budget {}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
