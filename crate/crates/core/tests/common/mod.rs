//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use vaxplan::{CostParams, EpidemicParams, Resources, Scenario, SirdState};

pub fn baseline_scenario() -> Scenario {
    Scenario::new(
        EpidemicParams::new(0.95, 0.05, 10.0, 0.3).unwrap(),
        CostParams::new(5.0, 50.0, 500.0).unwrap(),
        SirdState::new(0.999, 0.001, 0.0, 0.0).unwrap(),
        15.0,
    )
    .unwrap()
}

pub fn variant1() -> Resources {
    Resources::new(0.1, 0.3, 2.949).unwrap()
}

pub fn variant2() -> Resources {
    Resources::new(0.1, 0.3, 0.5).unwrap()
}

/// Fixed-step classical RK4 on the plain SIRD + quadratures, written from the
/// model equations without any of the library's integration machinery.
/// Vaccination switches are tested per stage.
pub fn rk4_reference(
    sc: &Scenario,
    res: &Resources,
    tau: f64,
    step: f64,
    times: &[f64],
) -> Vec<[f64; 6]> {
    let ep = sc.epidemic;
    let beta_e = -ep.r * (1.0 - ep.eps).ln();
    let w = ep.alpha * sc.cost.b + ep.beta * sc.cost.c;
    let f = |t: f64, y: &[f64; 6], exhausted: bool| -> [f64; 6] {
        let v = if t <= tau && !exhausted {
            res.k.min(res.l * y[0])
        } else {
            0.0
        };
        let inf = y[0] * beta_e * y[1];
        [
            -inf - v,
            inf - ep.alpha * y[1] - ep.beta * y[1],
            ep.alpha * y[1] + v,
            ep.beta * y[1],
            sc.cost.a * v + w * y[1],
            v,
        ]
    };
    let add = |y: &[f64; 6], h: f64, k: &[f64; 6]| {
        let mut o = *y;
        for j in 0..6 {
            o[j] += h * k[j];
        }
        o
    };
    let n = (sc.horizon / step).round() as usize;
    let h = sc.horizon / n as f64;
    let i0 = sc.initial;
    let mut y = [i0.s, i0.i, i0.rho, i0.d, 0.0, 0.0];
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    let mut exhausted = res.m <= 0.0;
    let mut prev_t = 0.0;
    let mut prev_y = y;
    for step_idx in 0..=n {
        let t = step_idx as f64 * h;
        while next < times.len() && times[next] <= t + 1e-12 {
            // Linear interpolation inside an h = 1e-4 step is O(h^2) accurate.
            let tt = times[next];
            let w1 = if t > prev_t { (tt - prev_t) / (t - prev_t) } else { 1.0 };
            let mut yy = [0.0; 6];
            for j in 0..6 {
                yy[j] = prev_y[j] + w1.clamp(0.0, 1.0) * (y[j] - prev_y[j]);
            }
            out.push(yy);
            next += 1;
        }
        if step_idx == n {
            break;
        }
        let k1 = f(t, &y, exhausted);
        let k2 = f(t + h / 2.0, &add(&y, h / 2.0, &k1), exhausted);
        let k3 = f(t + h / 2.0, &add(&y, h / 2.0, &k2), exhausted);
        let k4 = f(t + h, &add(&y, h, &k3), exhausted);
        prev_t = t;
        prev_y = y;
        for j in 0..6 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if y[5] >= res.m {
            // Clip the overshoot of the last step back onto the stock.
            let over = y[5] - res.m;
            y[5] = res.m;
            y[0] += over;
            y[2] -= over;
            exhausted = true;
        }
    }
    out
}

/// A random valid scenario and resource set.
pub fn random_case(rng: &mut impl Rng) -> (Scenario, Resources, f64) {
    let alpha = rng.gen_range(0.5..1.0);
    let ep = EpidemicParams::new(alpha, 1.0 - alpha, rng.gen_range(2.0..20.0), rng.gen_range(0.1..0.6))
        .unwrap();
    let cost = CostParams::new(
        rng.gen_range(0.0..10.0),
        rng.gen_range(0.0..100.0),
        rng.gen_range(0.0..1000.0),
    )
    .unwrap();
    let i0 = rng.gen_range(1e-4..0.05);
    let rho0 = rng.gen_range(0.0..0.2);
    let initial = SirdState::new(1.0 - i0 - rho0, i0, rho0, 0.0).unwrap();
    let horizon = rng.gen_range(5.0..30.0);
    let sc = Scenario::new(ep, cost, initial, horizon).unwrap();
    let m = if rng.gen_bool(0.3) {
        f64::INFINITY
    } else {
        rng.gen_range(0.0..0.8)
    };
    let res = Resources::new(rng.gen_range(0.0..0.3), rng.gen_range(0.0..1.0), m).unwrap();
    let tau = rng.gen_range(0.0..=horizon);
    (sc, res, tau)
}
