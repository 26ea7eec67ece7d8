//! Cost-optimal program duration by simulation.
//!
//! The objective `j(tau)` is the accumulated cost of a full-horizon run in
//! which vaccination stops at `tau` (or earlier, when the stock runs out).
//! The search pre-scans a uniform grid and then refines the best bracket with
//! Brent's bounded minimizer.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{default_indicators, EpidemicIndicators};
use crate::error::{Error, Result};
use crate::integrator::{integrate, Tolerances, Trajectory};
use crate::model::{Resources, Scenario};

pub const DEFAULT_OPT_TOL: f64 = 1e-4;
pub const PRESCAN_POINTS: usize = 64;

/// Interval over which the cost is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostHorizon {
    /// Vaccination cost while the program runs, treatment cost over `[0, T]`.
    #[default]
    Full,
    /// Everything truncated at `tau`.
    ProgramOnly,
}

#[derive(Debug, Clone)]
pub struct ObjectiveEvaluation {
    pub tau: f64,
    pub cost: f64,
    pub trajectory: Trajectory,
    /// False when the stock ran out before `tau`.
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub grid_points: usize,
    pub opt_tol: f64,
    pub horizon: CostHorizon,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            grid_points: PRESCAN_POINTS,
            opt_tol: DEFAULT_OPT_TOL,
            horizon: CostHorizon::Full,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub tau_star: f64,
    pub cost_star: f64,
    pub indicators: EpidemicIndicators,
    pub evaluations: usize,
    /// Upper end of the searched domain.
    pub tau_max: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone)]
pub struct ProcurementPlan {
    pub tau: f64,
    /// Vaccine consumed by the optimal unlimited-stock plan.
    pub vaccine: f64,
    pub optimum: OptimizationResult,
}

pub fn objective(
    tau: f64,
    scenario: &Scenario,
    resources: &Resources,
    tol: &Tolerances,
) -> Result<ObjectiveEvaluation> {
    objective_with(tau, scenario, resources, tol, CostHorizon::Full)
}

pub fn objective_with(
    tau: f64,
    scenario: &Scenario,
    resources: &Resources,
    tol: &Tolerances,
    horizon: CostHorizon,
) -> Result<ObjectiveEvaluation> {
    let trajectory = integrate(scenario, &resources.with_tau(tau), tol)?;
    let cost = match horizon {
        CostHorizon::Full => trajectory.final_state().cost,
        CostHorizon::ProgramOnly => trajectory.state_at(tau)?.cost,
    };
    let feasible = trajectory.exhaustion_time().map_or(true, |te| te >= tau);
    Ok(ObjectiveEvaluation {
        tau,
        cost,
        trajectory,
        feasible,
    })
}

/// Time at which the stock runs out under an always-on program, or `T`.
pub fn feasible_tau_max(scenario: &Scenario, resources: &Resources, tol: &Tolerances) -> Result<f64> {
    resources.validate()?;
    if resources.m <= 0.0 {
        return Ok(0.0);
    }
    if !resources.is_limited() {
        return Ok(scenario.horizon);
    }
    let traj = integrate(scenario, &resources.with_tau(scenario.horizon), tol)?;
    Ok(traj.exhaustion_time().unwrap_or(scenario.horizon))
}

pub fn minimize_tau(
    scenario: &Scenario,
    resources: &Resources,
    tol: &Tolerances,
    opt_tol: f64,
) -> Result<OptimizationResult> {
    let opts = SearchOptions {
        opt_tol,
        ..SearchOptions::default()
    };
    minimize_tau_with(scenario, resources, tol, &opts)
}

pub fn minimize_tau_with(
    scenario: &Scenario,
    resources: &Resources,
    tol: &Tolerances,
    opts: &SearchOptions,
) -> Result<OptimizationResult> {
    if !(opts.opt_tol.is_finite() && opts.opt_tol > 0.0) {
        return Err(Error::invalid("opt_tol", format!("must be > 0, got {}", opts.opt_tol)));
    }
    if opts.grid_points < 2 {
        return Err(Error::invalid("grid_points", "need at least 2 points"));
    }
    let tau_max = feasible_tau_max(scenario, resources, tol)?.min(scenario.horizon);
    let eval = |tau: f64| objective_with(tau, scenario, resources, tol, opts.horizon);

    if tau_max <= 0.0 {
        let best = eval(0.0)?;
        return Ok(finish(best, 1, tau_max));
    }

    let n = opts.grid_points - 1;
    let grid: Vec<f64> = (0..=n)
        .map(|j| if j == n { tau_max } else { tau_max * j as f64 / n as f64 })
        .collect();
    let scanned: Vec<ObjectiveEvaluation> = grid
        .par_iter()
        .map(|&tau| eval(tau))
        .collect::<Result<_>>()?;
    let mut evaluations = scanned.len();

    let best_idx = scanned
        .iter()
        .enumerate()
        .fold(0, |b, (j, e)| if e.cost < scanned[b].cost { j } else { b });
    let lo = grid[best_idx.saturating_sub(1)];
    let hi = grid[(best_idx + 1).min(n)];
    let mut best = scanned.into_iter().nth(best_idx).expect("index in range");

    let mut probe_err = None;
    let refined = bounded_minimize(
        |tau| match eval(tau) {
            Ok(e) => {
                let c = e.cost;
                if c < best.cost {
                    best = e;
                }
                c
            }
            Err(err) => {
                probe_err.get_or_insert(err);
                f64::INFINITY
            }
        },
        lo,
        hi,
        opts.opt_tol,
    );
    if let Some(err) = probe_err {
        return Err(err);
    }
    evaluations += refined.evaluations;
    Ok(finish(best, evaluations, tau_max))
}

fn finish(best: ObjectiveEvaluation, evaluations: usize, tau_max: f64) -> OptimizationResult {
    OptimizationResult {
        tau_star: best.tau,
        cost_star: best.cost,
        indicators: default_indicators(&best.trajectory),
        evaluations,
        tau_max,
        trajectory: best.trajectory,
    }
}

/// Optimal duration with unlimited stock and the vaccine that plan consumes.
pub fn procurement_plan(
    scenario: &Scenario,
    k: f64,
    l: f64,
    tol: &Tolerances,
    opt_tol: f64,
) -> Result<ProcurementPlan> {
    let resources = Resources::unlimited(k, l)?;
    let optimum = minimize_tau(scenario, &resources, tol, opt_tol)?;
    let vaccine = optimum.trajectory.state_at(optimum.tau_star)?.vaccine;
    Ok(ProcurementPlan {
        tau: optimum.tau_star,
        vaccine,
        optimum,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ScalarMinimum {
    pub x: f64,
    pub fx: f64,
    pub evaluations: usize,
}

/// Brent's golden-section / parabolic minimizer on `[a, b]`, stopping once
/// the bracket is resolved to `xtol` (same termination rule as the classic
/// bounded routine: `tol1 = sqrt(eps)|x| + xtol/3`).
pub fn bounded_minimize<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    xtol: f64,
) -> ScalarMinimum {
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let sqrt_eps = f64::EPSILON.sqrt();
    if b <= a {
        let fx = f(a);
        return ScalarMinimum {
            x: a,
            fx,
            evaluations: 1,
        };
    }

    let mut v = a + golden * (b - a);
    let mut w = v;
    let mut x = v;
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut fx = f(x);
    let (mut fv, mut fw) = (fx, fx);
    let mut evaluations = 1;

    let mut xm = 0.5 * (a + b);
    let mut tol1 = sqrt_eps * x.abs() + xtol / 3.0;
    let mut tol2 = 2.0 * tol1;

    while (x - xm).abs() > tol2 - 0.5 * (b - a) {
        let mut use_golden = true;
        if e.abs() > tol1 {
            let mut r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            r = e;
            e = d;
            if p.abs() < (0.5 * q * r).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if (u - a) < tol2 || (b - u) < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                use_golden = false;
            }
        }
        if use_golden {
            e = if x >= xm { a - x } else { b - x };
            d = golden * e;
        }
        let step = if d >= 0.0 { d.abs().max(tol1) } else { -d.abs().max(tol1) };
        let u = x + step;
        let fu = f(u);
        evaluations += 1;

        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
        xm = 0.5 * (a + b);
        tol1 = sqrt_eps * x.abs() + xtol / 3.0;
        tol2 = 2.0 * tol1;
    }
    ScalarMinimum { x, fx, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::disease_free;
    use crate::model::{CostParams, EpidemicParams, SirdState};

    fn baseline() -> Scenario {
        Scenario::new(
            EpidemicParams::new(0.95, 0.05, 10.0, 0.3).unwrap(),
            CostParams::new(5.0, 50.0, 500.0).unwrap(),
            SirdState::new(0.999, 0.001, 0.0, 0.0).unwrap(),
            15.0,
        )
        .unwrap()
    }

    #[test]
    fn brent_on_quadratic_and_quartic() {
        let m = bounded_minimize(|x| (x - 1.3).powi(2) + 2.0, 0.0, 4.0, 1e-6);
        assert!((m.x - 1.3).abs() < 1e-5);
        assert!((m.fx - 2.0).abs() < 1e-10);
        let m = bounded_minimize(|x| (x - 0.7).powi(4) - x, 0.0, 3.0, 1e-8);
        // f' = 4(x - 0.7)^3 - 1 = 0
        let xs = 0.7 + 0.25f64.cbrt();
        assert!((m.x - xs).abs() < 1e-4, "{} vs {xs}", m.x);
    }

    #[test]
    fn brent_respects_bounds() {
        let m = bounded_minimize(|x| x, 2.0, 5.0, 1e-6);
        assert!(m.x >= 2.0 && m.x < 2.0 + 1e-5);
        let m = bounded_minimize(|x| -x, 2.0, 5.0, 1e-6);
        assert!(m.x <= 5.0 && m.x > 5.0 - 1e-5);
        let m = bounded_minimize(|x| x * x, 1.0, 1.0, 1e-6);
        assert_eq!(m.x, 1.0);
    }

    #[test]
    fn disease_free_optimum_is_no_program() {
        let mut sc = baseline();
        sc.initial = disease_free();
        let res = Resources::new(0.1, 0.3, 1.0).unwrap();
        let out = minimize_tau(&sc, &res, &Tolerances::default(), DEFAULT_OPT_TOL).unwrap();
        assert_eq!(out.tau_star, 0.0);
        assert_eq!(out.cost_star, 0.0);
        let zero = objective(0.0, &sc, &res, &Tolerances::default()).unwrap();
        assert_eq!(zero.cost, 0.0);
    }

    #[test]
    fn feasible_tau_max_trivial_cases() {
        let sc = baseline();
        let tol = Tolerances::default();
        assert_eq!(
            feasible_tau_max(&sc, &Resources::new(0.1, 0.3, 0.0).unwrap(), &tol).unwrap(),
            0.0
        );
        assert_eq!(
            feasible_tau_max(&sc, &Resources::unlimited(0.1, 0.3).unwrap(), &tol).unwrap(),
            15.0
        );
        let tiny = feasible_tau_max(&sc, &Resources::new(0.1, 0.3, 0.2).unwrap(), &tol).unwrap();
        assert!((tiny - 2.0).abs() < 1e-8, "{tiny}");
    }

    #[test]
    fn program_only_horizon_truncates_cost() {
        let sc = baseline();
        let res = Resources::unlimited(0.1, 0.3).unwrap();
        let tol = Tolerances::default();
        let full = objective_with(3.0, &sc, &res, &tol, CostHorizon::Full).unwrap();
        let short = objective_with(3.0, &sc, &res, &tol, CostHorizon::ProgramOnly).unwrap();
        assert!(short.cost < full.cost);
        assert_eq!(short.cost, full.trajectory.state_at(3.0).unwrap().cost);
    }

    #[test]
    fn infeasible_flag_when_stock_runs_out_early() {
        let sc = baseline();
        let res = Resources::new(0.1, 0.3, 0.2).unwrap();
        let tol = Tolerances::default();
        assert!(objective(1.5, &sc, &res, &tol).unwrap().feasible);
        assert!(!objective(4.0, &sc, &res, &tol).unwrap().feasible);
    }

    #[test]
    fn capped_domain_when_stock_binds() {
        let sc = baseline();
        let res = Resources::new(0.1, 0.3, 0.2).unwrap();
        let tol = Tolerances::default();
        let out = minimize_tau(&sc, &res, &tol, DEFAULT_OPT_TOL).unwrap();
        assert!(out.tau_star <= out.tau_max + 1e-12);
        assert!((out.tau_max - 2.0).abs() < 1e-8);
        assert!(out.trajectory.final_state().vaccine <= 0.2 + 1e-6);
    }
}
