//! Epidemic indicators read off a trajectory.

use serde::{Deserialize, Serialize};

use crate::integrator::{Trajectory, EPIDEMIC_END_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicIndicators {
    pub peak_i: f64,
    pub peak_time: f64,
    /// First time after the peak with `i` below the end threshold, or `T`.
    pub duration: f64,
    pub total_deaths: f64,
    pub total_vaccinated: f64,
    pub total_cost: f64,
}

fn infected(traj: &Trajectory, t: f64) -> f64 {
    traj.state_at(t).map(|y| y.state.i).unwrap_or(f64::NEG_INFINITY)
}

fn refine_peak(traj: &Trajectory, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = infected(traj, x1);
    let mut f2 = infected(traj, x2);
    while hi - lo > 1e-10 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = infected(traj, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = infected(traj, x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Peak, end time and totals of `traj`.
pub fn indicators(traj: &Trajectory, end_threshold: f64) -> EpidemicIndicators {
    let times = traj.times();
    let states = traj.states();
    let (k, sample_peak) = states
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bk, bi), (k, st)| {
            if st.state.i > bi {
                (k, st.state.i)
            } else {
                (bk, bi)
            }
        });

    let (mut peak_time, mut peak_i) = (times[k], sample_peak);
    if sample_peak > 0.0 {
        let lo = times[k.saturating_sub(1)];
        let hi = times[(k + 1).min(times.len() - 1)];
        let (t, i) = refine_peak(traj, lo, hi);
        if i > peak_i {
            peak_time = t;
            peak_i = i;
        }
    }

    let duration = if peak_i < end_threshold {
        peak_time
    } else {
        match (k..times.len()).find(|&j| states[j].state.i < end_threshold) {
            None => traj.horizon(),
            Some(j) => {
                let (mut lo, mut hi) = (times[j - 1].max(peak_time), times[j]);
                while hi - lo > 1e-10 {
                    let mid = 0.5 * (lo + hi);
                    if infected(traj, mid) < end_threshold {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                hi
            }
        }
    };

    let last = traj.final_state();
    EpidemicIndicators {
        peak_i,
        peak_time,
        duration,
        total_deaths: last.state.d,
        total_vaccinated: last.vaccine,
        total_cost: last.cost,
    }
}

pub fn default_indicators(traj: &Trajectory) -> EpidemicIndicators {
    indicators(traj, EPIDEMIC_END_THRESHOLD)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{disease_free, integrate, integrate_unvaccinated, Tolerances};
    use crate::model::{CostParams, EpidemicParams, Scenario, SirdState, VaccinationPolicy};

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
    fn disease_free_indicators() {
        let mut sc = baseline(15.0);
        sc.initial = disease_free();
        let traj = integrate_unvaccinated(&sc, &Tolerances::default()).unwrap();
        let ind = default_indicators(&traj);
        assert_eq!(ind.peak_i, 0.0);
        assert_eq!(ind.peak_time, 0.0);
        assert_eq!(ind.duration, 0.0);
        assert_eq!(ind.total_cost, 0.0);
    }

    #[test]
    fn peak_dominates_samples_and_duration_follows_peak() {
        let sc = baseline(30.0);
        let pol = VaccinationPolicy::new(0.1, 0.3, 0.5, 30.0).unwrap();
        let traj = integrate(&sc, &pol, &Tolerances::default()).unwrap();
        let ind = default_indicators(&traj);
        assert!(traj.states().iter().all(|st| st.state.i <= ind.peak_i));
        assert!(ind.peak_time < ind.duration && ind.duration < 30.0);
        let at_end = traj.state_at(ind.duration).unwrap().state.i;
        assert!((at_end - EPIDEMIC_END_THRESHOLD).abs() < 1e-9);
    }

    #[test]
    fn epidemic_that_never_ends_reports_horizon() {
        let sc = baseline(5.0);
        let traj = integrate_unvaccinated(&sc, &Tolerances::default()).unwrap();
        assert_eq!(default_indicators(&traj).duration, 5.0);
    }
}
