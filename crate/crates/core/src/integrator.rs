//! Adaptive Bogacki–Shampine 3(2) integration of the augmented system.
//!
//! The vaccination rate switches between three smooth regimes: off, capacity
//! bound (`v = k`) and willingness bound (`v = l s`). Each regime is
//! integrated as its own piece; the switches (program end, rate kink, supply
//! exhaustion) are located by bisection on the dense output and the
//! integration restarts from the switching state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    derivatives, vaccination_rate, AugmentedState, Scenario, SirdState, VaccinationPolicy,
};

/// Infected fraction below which the epidemic counts as over.
pub const EPIDEMIC_END_THRESHOLD: f64 = 1e-6;

/// Uniform sample count of an emitted trajectory (event times come on top).
pub const SAMPLE_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub event_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-3,
            atol: 1e-6,
            max_step: 0.05,
            event_tol: 1e-10,
        }
    }
}

impl Tolerances {
    /// Default tolerances with `rtol` and `atol` scaled by `factor`.
    pub fn scaled(factor: f64) -> Self {
        let d = Self::default();
        Self {
            rtol: d.rtol * factor,
            atol: d.atol * factor,
            ..d
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("max_step", self.max_step),
            ("event_tol", self.event_tol),
        ] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::invalid(name, format!("must be > 0, got {x}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `t = tau`.
    ProgramEnd,
    /// Rate switches from `k` to `l s`.
    RateKink,
    /// `V = m`.
    SupplyExhausted,
    /// `i` falls below [`EPIDEMIC_END_THRESHOLD`]. Marker only.
    EpidemicEnd,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::ProgramEnd => "program_end",
            EventKind::RateKink => "rate_kink",
            EventKind::SupplyExhausted => "supply_exhausted",
            EventKind::EpidemicEnd => "epidemic_end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub state: AugmentedState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Regime {
    Off,
    Capacity,
    Willingness,
}

/// One accepted step with its endpoint values and slopes.
#[derive(Debug, Clone, Copy)]
struct Segment {
    t0: f64,
    t1: f64,
    y0: [f64; 6],
    y1: [f64; 6],
    f0: [f64; 6],
    f1: [f64; 6],
}

impl Segment {
    fn eval(&self, t: f64) -> [f64; 6] {
        if t == self.t0 {
            return self.y0;
        }
        if t == self.t1 {
            return self.y1;
        }
        let h = self.t1 - self.t0;
        let th = (t - self.t0) / h;
        let th2 = th * th;
        let th3 = th2 * th;
        let h10 = th3 - 2.0 * th2 + th;
        let h01 = -2.0 * th3 + 3.0 * th2;
        let h11 = th3 - th2;
        let mut out = [0.0; 6];
        for j in 0..6 {
            out[j] = self.y0[j]
                + h01 * (self.y1[j] - self.y0[j])
                + h * (h10 * self.f0[j] + h11 * self.f1[j]);
        }
        out
    }
}

/// Densely sampled solution of the augmented system on `[0, T]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<AugmentedState>,
    rates: Vec<f64>,
    events: Vec<Event>,
    segments: Vec<Segment>,
    policy: VaccinationPolicy,
    horizon: f64,
    exhausted_at: Option<f64>,
    steps: usize,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[AugmentedState] {
        &self.states
    }

    /// Vaccination rate at each sample time.
    pub fn vaccination_rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, kind: EventKind) -> Option<&Event> {
        self.events.iter().find(|e| e.kind == kind)
    }

    pub fn policy(&self) -> &VaccinationPolicy {
        &self.policy
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn exhaustion_time(&self) -> Option<f64> {
        self.exhausted_at
    }

    /// Number of accepted integration steps.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn final_state(&self) -> &AugmentedState {
        self.states.last().expect("trajectory has at least one sample")
    }

    /// Interpolated state at `t`, exact at sample times.
    pub fn state_at(&self, t: f64) -> Result<AugmentedState> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        if let Ok(idx) = self.times.binary_search_by(|x| x.total_cmp(&t)) {
            return Ok(self.states[idx]);
        }
        Ok(clamp_state(self.dense(t)))
    }

    /// Vaccination rate applied at time `t`.
    pub fn vaccination_at(&self, t: f64) -> Result<f64> {
        let y = self.state_at(t)?;
        Ok(self.rate_at(t, &y))
    }

    fn rate_at(&self, t: f64, y: &AugmentedState) -> f64 {
        let exhausted = self.exhausted_at.is_some_and(|te| t >= te);
        if self.policy.tau <= 0.0 {
            return 0.0;
        }
        vaccination_rate(t, y.state.s, &self.policy, exhausted)
    }

    fn dense(&self, t: f64) -> [f64; 6] {
        let idx = self
            .segments
            .partition_point(|seg| seg.t1 < t)
            .min(self.segments.len() - 1);
        self.segments[idx].eval(t)
    }
}

fn clamp_state(y: [f64; 6]) -> AugmentedState {
    let mut st = AugmentedState::from_array(y);
    st.state = st.state.clamped();
    st
}

fn clamp_compartments(y: &mut [f64; 6]) {
    for c in y.iter_mut().take(4) {
        *c = c.clamp(0.0, 1.0);
    }
}

struct System<'a> {
    scenario: &'a Scenario,
    policy: &'a VaccinationPolicy,
    weight: f64,
}

impl System<'_> {
    fn rate(&self, regime: Regime, s: f64) -> f64 {
        match regime {
            Regime::Off => 0.0,
            Regime::Capacity => self.policy.k,
            Regime::Willingness => self.policy.l * s,
        }
    }

    fn rhs(&self, regime: Regime, y: &[f64; 6]) -> [f64; 6] {
        derivatives(y, self.rate(regime, y[0]), self.scenario, self.weight)
    }

    fn regime(&self, t: f64, y: &[f64; 6], exhausted: bool) -> Regime {
        let p = self.policy;
        if exhausted || t >= p.tau || p.k <= 0.0 || p.l <= 0.0 {
            Regime::Off
        } else if p.k < p.l * y[0] {
            Regime::Capacity
        } else {
            Regime::Willingness
        }
    }
}

struct Watch {
    kind: EventKind,
    /// Positive before the event, non-positive once it has happened.
    g: fn(&System<'_>, &[f64; 6]) -> f64,
    /// Terminal events end the current piece.
    terminal: bool,
}

fn kink_fn(sys: &System<'_>, y: &[f64; 6]) -> f64 {
    sys.policy.l * y[0] - sys.policy.k
}

fn supply_fn(sys: &System<'_>, y: &[f64; 6]) -> f64 {
    sys.policy.m - y[5]
}

fn epidemic_end_fn(_: &System<'_>, y: &[f64; 6]) -> f64 {
    y[1] - EPIDEMIC_END_THRESHOLD
}

fn scaled_error(err: &[f64; 6], y0: &[f64; 6], y1: &[f64; 6], tol: &Tolerances) -> f64 {
    (0..6)
        .map(|j| err[j].abs() / (tol.atol + tol.rtol * y0[j].abs().max(y1[j].abs())))
        .fold(0.0, f64::max)
}

fn axpy(y: &[f64; 6], h: f64, terms: &[(f64, &[f64; 6])]) -> [f64; 6] {
    let mut out = *y;
    for j in 0..6 {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[j];
        }
        out[j] += h * acc;
    }
    out
}

/// One Bogacki–Shampine step. Returns the third-order solution, its slope and
/// the embedded error estimate.
fn bs23_step(
    sys: &System<'_>,
    regime: Regime,
    y: &[f64; 6],
    f0: &[f64; 6],
    h: f64,
) -> ([f64; 6], [f64; 6], [f64; 6]) {
    let k2 = sys.rhs(regime, &axpy(y, h, &[(0.5, f0)]));
    let k3 = sys.rhs(regime, &axpy(y, h, &[(0.75, &k2)]));
    let y1 = axpy(y, h, &[(2.0 / 9.0, f0), (1.0 / 3.0, &k2), (4.0 / 9.0, &k3)]);
    let k4 = sys.rhs(regime, &y1);
    let mut err = [0.0; 6];
    for j in 0..6 {
        err[j] = h
            * (-5.0 / 72.0 * f0[j] + 1.0 / 12.0 * k2[j] + 1.0 / 9.0 * k3[j] - 0.125 * k4[j]);
    }
    (y1, k4, err)
}

fn initial_step(
    sys: &System<'_>,
    regime: Regime,
    y0: &[f64; 6],
    f0: &[f64; 6],
    span: f64,
    tol: &Tolerances,
) -> f64 {
    let norm = |v: &[f64; 6]| {
        (0..6)
            .map(|j| v[j].abs() / (tol.atol + tol.rtol * y0[j].abs()))
            .fold(0.0, f64::max)
    };
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = axpy(y0, h0, &[(1.0, f0)]);
    let f1 = sys.rhs(regime, &y1);
    let mut diff = [0.0; 6];
    for j in 0..6 {
        diff[j] = f1[j] - f0[j];
    }
    let d2 = norm(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).cbrt()
    };
    (100.0 * h0).min(h1).min(tol.max_step).min(span)
}

struct PieceEnd {
    t: f64,
    y: [f64; 6],
    stopped: Option<EventKind>,
}

struct Integration<'a> {
    sys: System<'a>,
    tol: Tolerances,
    segments: Vec<Segment>,
    events: Vec<Event>,
    epidemic_end_seen: bool,
    steps: usize,
}

impl Integration<'_> {
    fn bisect(&self, seg: &Segment, g: fn(&System<'_>, &[f64; 6]) -> f64) -> f64 {
        let (mut lo, mut hi) = (seg.t0, seg.t1);
        while hi - lo > self.tol.event_tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(&self.sys, &seg.eval(mid)) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn piece(&mut self, t0: f64, y0: [f64; 6], t_end: f64, regime: Regime) -> Result<PieceEnd> {
        let mut watches = Vec::new();
        if regime == Regime::Capacity {
            watches.push(Watch {
                kind: EventKind::RateKink,
                g: kink_fn,
                terminal: true,
            });
        }
        if regime != Regime::Off && self.sys.policy.m.is_finite() {
            watches.push(Watch {
                kind: EventKind::SupplyExhausted,
                g: supply_fn,
                terminal: true,
            });
        }
        if !self.epidemic_end_seen {
            watches.push(Watch {
                kind: EventKind::EpidemicEnd,
                g: epidemic_end_fn,
                terminal: false,
            });
        }

        let mut t = t0;
        let mut y = y0;
        let mut f = self.sys.rhs(regime, &y);
        let mut h = initial_step(&self.sys, regime, &y, &f, t_end - t, &self.tol);

        while t < t_end {
            let remaining = t_end - t;
            let last = h >= remaining;
            let h_try = if last { remaining } else { h };
            let (mut y1, mut f1, err) = bs23_step(&self.sys, regime, &y, &f, h_try);
            let e = scaled_error(&err, &y, &y1, &self.tol);
            if !e.is_finite() || y1.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            if e > 1.0 {
                h = h_try * (0.9 * e.powf(-1.0 / 3.0)).clamp(0.2, 1.0);
                if h < 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow { t, h });
                }
                continue;
            }

            let t1 = if last { t_end } else { t + h_try };
            let raw = y1;
            clamp_compartments(&mut y1);
            if raw != y1 {
                f1 = self.sys.rhs(regime, &y1);
            }
            self.steps += 1;
            let mut seg = Segment {
                t0: t,
                t1,
                y0: y,
                y1,
                f0: f,
                f1,
            };

            let mut first: Option<(f64, EventKind)> = None;
            for w in watches.iter().filter(|w| w.terminal) {
                if (w.g)(&self.sys, &seg.y0) > 0.0 && (w.g)(&self.sys, &seg.y1) <= 0.0 {
                    let te = self.bisect(&seg, w.g);
                    if first.map_or(true, |(t_first, _)| te < t_first) {
                        first = Some((te, w.kind));
                    }
                }
            }
            if let Some((te, _)) = first {
                let mut ye = seg.eval(te);
                clamp_compartments(&mut ye);
                let fe = self.sys.rhs(regime, &ye);
                seg.t1 = te;
                seg.y1 = ye;
                seg.f1 = fe;
            }

            if !self.epidemic_end_seen
                && epidemic_end_fn(&self.sys, &seg.y0) > 0.0
                && epidemic_end_fn(&self.sys, &seg.y1) <= 0.0
            {
                let te = self.bisect(&seg, epidemic_end_fn);
                self.events.push(Event {
                    time: te,
                    kind: EventKind::EpidemicEnd,
                    state: clamp_state(seg.eval(te)),
                });
                self.epidemic_end_seen = true;
            }

            self.segments.push(seg);
            if let Some((te, kind)) = first {
                return Ok(PieceEnd {
                    t: te,
                    y: seg.y1,
                    stopped: Some(kind),
                });
            }

            t = t1;
            y = y1;
            f = f1;
            let grow = if e == 0.0 {
                5.0
            } else {
                (0.9 * e.powf(-1.0 / 3.0)).clamp(0.2, 5.0)
            };
            h = (h_try * grow).min(self.tol.max_step);
        }
        Ok(PieceEnd {
            t: t_end,
            y,
            stopped: None,
        })
    }
}

/// Integrate the augmented system over `[0, T]` under `policy`.
pub fn integrate(
    scenario: &Scenario,
    policy: &VaccinationPolicy,
    tol: &Tolerances,
) -> Result<Trajectory> {
    scenario.validate()?;
    policy.validate()?;
    tol.validate()?;
    let horizon = scenario.horizon;
    if policy.tau > horizon {
        return Err(Error::InvalidPolicy {
            tau: policy.tau,
            horizon,
        });
    }

    let mut run = Integration {
        sys: System {
            scenario,
            policy,
            weight: scenario.treatment_weight(),
        },
        tol: *tol,
        segments: Vec::new(),
        events: Vec::new(),
        epidemic_end_seen: false,
        steps: 0,
    };

    let mut t = 0.0;
    let mut y = AugmentedState::start(scenario.initial).to_array();
    let mut exhausted = false;
    let mut exhausted_at = None;

    let could_vaccinate = policy.k > 0.0 && policy.l > 0.0 && scenario.initial.s > 0.0;
    if policy.m <= 0.0 {
        exhausted = true;
        if could_vaccinate && policy.tau > 0.0 {
            exhausted_at = Some(0.0);
            run.events.push(Event {
                time: 0.0,
                kind: EventKind::SupplyExhausted,
                state: AugmentedState::from_array(y),
            });
        }
    }
    let mut program_end_logged = policy.tau >= horizon;

    while t < horizon {
        if !program_end_logged && t >= policy.tau {
            run.events.push(Event {
                time: t,
                kind: EventKind::ProgramEnd,
                state: clamp_state(y),
            });
            program_end_logged = true;
        }
        let regime = run.sys.regime(t, &y, exhausted);
        let end = if t < policy.tau && policy.tau < horizon {
            policy.tau
        } else {
            horizon
        };
        let out = run.piece(t, y, end, regime)?;
        t = out.t;
        y = out.y;
        if let Some(kind) = out.stopped {
            if kind == EventKind::SupplyExhausted {
                exhausted = true;
                exhausted_at = Some(t);
            }
            run.events.push(Event {
                time: t,
                kind,
                state: clamp_state(y),
            });
        }
    }
    if !program_end_logged {
        run.events.push(Event {
            time: policy.tau,
            kind: EventKind::ProgramEnd,
            state: clamp_state(y),
        });
    }
    run.events
        .sort_by(|a, b| a.time.total_cmp(&b.time));

    if run.segments.is_empty() {
        // Only possible for a degenerate zero-length horizon, rejected above.
        return Err(Error::invalid("T", "empty integration range"));
    }

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        rates: Vec::new(),
        events: run.events,
        segments: run.segments,
        policy: *policy,
        horizon,
        exhausted_at,
        steps: run.steps,
    };
    sample(&mut traj, &AugmentedState::start(scenario.initial));
    Ok(traj)
}

fn sample(traj: &mut Trajectory, initial: &AugmentedState) {
    let horizon = traj.horizon;
    let n = SAMPLE_POINTS - 1;
    let mut grid: Vec<(f64, Option<AugmentedState>)> = (0..=n)
        .map(|j| {
            let t = if j == n {
                horizon
            } else {
                horizon * j as f64 / n as f64
            };
            (t, None)
        })
        .collect();
    grid.extend(traj.events.iter().map(|e| (e.time, Some(e.state))));
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.is_some().cmp(&a.1.is_some())));
    grid.dedup_by(|later, earlier| later.0 == earlier.0);

    let last_seg = *traj.segments.last().expect("non-empty");
    for (t, known) in grid {
        let st = if t == 0.0 {
            *initial
        } else if t == horizon {
            clamp_state(last_seg.y1)
        } else {
            known.unwrap_or_else(|| clamp_state(traj.dense(t)))
        };
        let v = traj.rate_at(t, &st);
        traj.times.push(t);
        traj.states.push(st);
        traj.rates.push(v);
    }
}

/// Convenience: the no-vaccination run of `scenario`.
pub fn integrate_unvaccinated(scenario: &Scenario, tol: &Tolerances) -> Result<Trajectory> {
    let policy = VaccinationPolicy {
        k: 0.0,
        l: 0.0,
        m: 0.0,
        tau: 0.0,
    };
    integrate(scenario, &policy, tol)
}

/// Disease-free starting state `(1, 0, 0, 0)`.
pub fn disease_free() -> SirdState {
    SirdState {
        s: 1.0,
        i: 0.0,
        rho: 0.0,
        d: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CostParams, EpidemicParams};

    fn baseline(horizon: f64) -> Scenario {
        Scenario::new(
            EpidemicParams::new(0.95, 0.05, 10.0, 0.3).unwrap(),
            CostParams::new(5.0, 50.0, 500.0).unwrap(),
            SirdState::new(0.999, 0.001, 0.0, 0.0).unwrap(),
            horizon,
        )
        .unwrap()
    }

    #[test]
    fn hermite_segment_reproduces_cubic() {
        // y = t^3 on [1, 2]
        let c = |t: f64| [t * t * t, 0.0, 0.0, 0.0, 0.0, 0.0];
        let d = |t: f64| [3.0 * t * t, 0.0, 0.0, 0.0, 0.0, 0.0];
        let seg = Segment {
            t0: 1.0,
            t1: 2.0,
            y0: c(1.0),
            y1: c(2.0),
            f0: d(1.0),
            f1: d(2.0),
        };
        for t in [1.0, 1.25, 1.5, 1.9, 2.0] {
            assert!((seg.eval(t)[0] - c(t)[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn bs23_is_third_order() {
        // y' = y, exact e^h; local error must scale like h^4.
        let sc = baseline(1.0);
        let pol = VaccinationPolicy::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let sys = System {
            scenario: &sc,
            policy: &pol,
            weight: 0.0,
        };
        // Use the i-equation with s fixed near 1/R0 * 2 so that di/dt ~ i.
        let r0 = sc.epidemic.transmission_rate();
        let s = 2.0 / r0;
        let y0 = [s, 1e-3, 0.0, 0.0, 0.0, 0.0];
        let f0 = sys.rhs(Regime::Off, &y0);
        let errs: Vec<f64> = [0.02, 0.01]
            .iter()
            .map(|&h| {
                let (fine, _) = (0..64).fold((y0, f0), |(y, f), _| {
                    let (y1, f1, _) = bs23_step(&sys, Regime::Off, &y, &f, h / 64.0);
                    (y1, f1)
                });
                let (coarse, _, _) = bs23_step(&sys, Regime::Off, &y0, &f0, h);
                (coarse[1] - fine[1]).abs()
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn disease_free_stays_constant() {
        let mut sc = baseline(15.0);
        sc.initial = disease_free();
        let pol = VaccinationPolicy::new(0.1, 0.3, 0.0, 0.0).unwrap();
        let traj = integrate(&sc, &pol, &Tolerances::default()).unwrap();
        for st in traj.states() {
            assert_eq!(*st, AugmentedState::start(sc.initial));
        }
        assert_eq!(traj.times()[0], 0.0);
        assert_eq!(*traj.times().last().unwrap(), 15.0);
    }

    #[test]
    fn tau_beyond_horizon_rejected() {
        let sc = baseline(15.0);
        let pol = VaccinationPolicy::new(0.1, 0.3, 1.0, 15.5).unwrap();
        assert!(matches!(
            integrate(&sc, &pol, &Tolerances::default()),
            Err(Error::InvalidPolicy { .. })
        ));
    }

    #[test]
    fn state_at_range_and_exactness() {
        let sc = baseline(15.0);
        let pol = Tolerances::default();
        let traj = integrate(&sc, &VaccinationPolicy::new(0.1, 0.3, 2.949, 15.0).unwrap(), &pol)
            .unwrap();
        assert_eq!(traj.state_at(0.0).unwrap(), AugmentedState::start(sc.initial));
        for (j, &t) in traj.times().iter().enumerate().step_by(97) {
            assert_eq!(traj.state_at(t).unwrap(), traj.states()[j]);
        }
        assert!(matches!(traj.state_at(-0.1), Err(Error::OutOfRange { .. })));
        assert!(matches!(traj.state_at(15.01), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn kink_event_recorded_once() {
        let sc = baseline(15.0);
        let pol = VaccinationPolicy::new(0.1, 0.3, f64::INFINITY, 15.0).unwrap();
        let traj = integrate(&sc, &pol, &Tolerances::default()).unwrap();
        let kinks: Vec<_> = traj
            .events()
            .iter()
            .filter(|e| e.kind == EventKind::RateKink)
            .collect();
        assert_eq!(kinks.len(), 1);
        let e = kinks[0];
        assert!((0.3 * e.state.state.s - 0.1).abs() < 1e-8);
        assert!(traj.event(EventKind::ProgramEnd).is_none());
    }

    #[test]
    fn program_end_switches_vaccination_off() {
        let sc = baseline(15.0);
        let pol = VaccinationPolicy::new(0.1, 0.3, f64::INFINITY, 2.0).unwrap();
        let traj = integrate(&sc, &pol, &Tolerances::default()).unwrap();
        let e = traj.event(EventKind::ProgramEnd).unwrap();
        assert_eq!(e.time, 2.0);
        assert!(traj.event(EventKind::RateKink).is_none());
        let v_end = traj.state_at(2.0).unwrap().vaccine;
        assert!((v_end - 0.2).abs() < 1e-9, "{v_end}");
        assert_eq!(traj.final_state().vaccine, v_end);
        for (t, v) in traj.times().iter().zip(traj.vaccination_rates()) {
            if *t > 2.0 {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn small_stock_exhausts_at_constant_rate() {
        // s stays above k/l for t < 1, so the stock m = 0.1 lasts exactly m/k.
        let sc = baseline(15.0);
        let pol = VaccinationPolicy::new(0.1, 0.3, 0.1, 15.0).unwrap();
        let tol = Tolerances::default();
        let traj = integrate(&sc, &pol, &tol).unwrap();
        let e = traj.event(EventKind::SupplyExhausted).unwrap();
        assert!((e.time - 1.0).abs() < 1e-8, "{}", e.time);
        assert!((e.state.vaccine - 0.1).abs() <= tol.event_tol * pol.k + 1e-15);
        assert!(traj.final_state().vaccine <= 0.1 + 1e-6);
    }

    #[test]
    fn zero_stock_never_vaccinates() {
        let sc = baseline(15.0);
        let pol = VaccinationPolicy::new(0.1, 0.3, 0.0, 15.0).unwrap();
        let traj = integrate(&sc, &pol, &Tolerances::default()).unwrap();
        assert_eq!(traj.exhaustion_time(), Some(0.0));
        assert_eq!(traj.final_state().vaccine, 0.0);
        assert!(traj.vaccination_rates().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn epidemic_end_marker() {
        let sc = baseline(30.0);
        let traj = integrate_unvaccinated(&sc, &Tolerances::default()).unwrap();
        let e = traj.event(EventKind::EpidemicEnd).expect("epidemic ends");
        assert!((e.state.state.i - EPIDEMIC_END_THRESHOLD).abs() < 1e-9);
    }

    #[test]
    fn sample_grid_layout() {
        let sc = baseline(15.0);
        let pol = VaccinationPolicy::new(0.1, 0.3, 0.5, 7.0).unwrap();
        let traj = integrate(&sc, &pol, &Tolerances::default()).unwrap();
        let ts = traj.times();
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
        let interior_events = traj
            .events()
            .iter()
            .filter(|e| e.time > 0.0 && e.time < 15.0)
            .count();
        assert!(ts.len() >= SAMPLE_POINTS && ts.len() <= SAMPLE_POINTS + interior_events);
        for e in traj.events() {
            assert!(ts.contains(&e.time));
        }
    }
}
