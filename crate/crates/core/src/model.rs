//! Normalized SIRD dynamics with a resource-limited vaccination policy.
//!
//! All compartments are population fractions. The augmented state carries two
//! extra quadratures next to the compartments: the accumulated per-capita cost
//! and the accumulated vaccine usage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on compartment bounds before a state counts as corrupted.
pub const STATE_TOL: f64 = 1e-9;

const IDENTITY_TOL: f64 = 1e-12;

fn check_finite(field: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite, got {x}")))
    }
}

fn check_nonneg(field: &str, x: f64) -> Result<()> {
    check_finite(field, x)?;
    if x < 0.0 {
        return Err(Error::invalid(field, format!("must be >= 0, got {x}")));
    }
    Ok(())
}

/// Biological and contact constants of the epidemic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicParams {
    /// Recovery probability per unit time.
    pub alpha: f64,
    /// Death (severe illness) probability per unit time.
    pub beta: f64,
    /// Contacts per unit time.
    pub r: f64,
    /// Infection probability per contact with an infected individual.
    pub eps: f64,
}

impl EpidemicParams {
    pub fn new(alpha: f64, beta: f64, r: f64, eps: f64) -> Result<Self> {
        let p = Self { alpha, beta, r, eps };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonneg("alpha", self.alpha)?;
        check_nonneg("beta", self.beta)?;
        if (self.alpha + self.beta - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::invalid(
                "alpha + beta",
                format!("must equal 1, got {}", self.alpha + self.beta),
            ));
        }
        check_finite("r", self.r)?;
        if self.r <= 0.0 {
            return Err(Error::invalid("r", format!("must be > 0, got {}", self.r)));
        }
        check_finite("eps", self.eps)?;
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::invalid(
                "eps",
                format!("must lie in (0, 1), got {}", self.eps),
            ));
        }
        Ok(())
    }

    /// `-r ln(1 - eps)`: infection intensity per unit infected fraction.
    ///
    /// Because the removal rate is `alpha + beta = 1` this is also the basic
    /// reproduction number.
    pub fn transmission_rate(&self) -> f64 {
        -self.r * (-self.eps).ln_1p()
    }

    pub fn reproduction_number(&self) -> f64 {
        self.transmission_rate() / (self.alpha + self.beta)
    }
}

/// Unit costs entering the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Cost of one vaccine dose.
    pub a: f64,
    /// Cost of treating a mild case.
    pub b: f64,
    /// Cost of treating a severe case or death.
    pub c: f64,
    /// Replaces the per-infected cost rate `alpha*b + beta*c` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment_weight: Option<f64>,
}

impl CostParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        let p = Self {
            a,
            b,
            c,
            treatment_weight: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_treatment_weight(mut self, weight: f64) -> Result<Self> {
        check_nonneg("treatment_weight", weight)?;
        self.treatment_weight = Some(weight);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonneg("a", self.a)?;
        check_nonneg("b", self.b)?;
        check_nonneg("c", self.c)?;
        if let Some(w) = self.treatment_weight {
            check_nonneg("treatment_weight", w)?;
        }
        Ok(())
    }

    /// Cost accrued per unit time per infected fraction.
    pub fn treatment_weight(&self, epidemic: &EpidemicParams) -> f64 {
        self.treatment_weight
            .unwrap_or(epidemic.alpha * self.b + epidemic.beta * self.c)
    }

    /// The alternate `b + c*beta` weighting, for comparison runs.
    pub fn literal_treatment_weight(&self, epidemic: &EpidemicParams) -> f64 {
        self.b + self.c * epidemic.beta
    }
}

/// Capacity, willingness and stock of the vaccination system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resources {
    /// Maximum vaccination rate (fraction of population per unit time).
    pub k: f64,
    /// Probability that a susceptible agrees to be vaccinated.
    pub l: f64,
    /// Available vaccine stock; `f64::INFINITY` means unlimited.
    #[serde(with = "unbounded")]
    pub m: f64,
}

impl Resources {
    pub fn new(k: f64, l: f64, m: f64) -> Result<Self> {
        let r = Self { k, l, m };
        r.validate()?;
        Ok(r)
    }

    pub fn unlimited(k: f64, l: f64) -> Result<Self> {
        Self::new(k, l, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        check_nonneg("k", self.k)?;
        check_finite("l", self.l)?;
        if !(0.0..=1.0).contains(&self.l) {
            return Err(Error::invalid("l", format!("must lie in [0, 1], got {}", self.l)));
        }
        if self.m.is_nan() || self.m < 0.0 {
            return Err(Error::invalid("m", format!("must be >= 0, got {}", self.m)));
        }
        Ok(())
    }

    pub fn is_limited(&self) -> bool {
        self.m.is_finite()
    }

    pub fn with_tau(self, tau: f64) -> VaccinationPolicy {
        VaccinationPolicy {
            k: self.k,
            l: self.l,
            m: self.m,
            tau,
        }
    }
}

/// Resources plus the program duration `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VaccinationPolicy {
    pub k: f64,
    pub l: f64,
    #[serde(with = "unbounded")]
    pub m: f64,
    pub tau: f64,
}

impl VaccinationPolicy {
    pub fn new(k: f64, l: f64, m: f64, tau: f64) -> Result<Self> {
        let p = Self { k, l, m, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.resources().validate()?;
        check_nonneg("tau", self.tau)
    }

    pub fn resources(&self) -> Resources {
        Resources {
            k: self.k,
            l: self.l,
            m: self.m,
        }
    }
}

/// Compartment fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirdState {
    pub s: f64,
    pub i: f64,
    pub rho: f64,
    pub d: f64,
}

impl SirdState {
    pub fn new(s: f64, i: f64, rho: f64, d: f64) -> Result<Self> {
        let st = Self { s, i, rho, d };
        st.validate()?;
        Ok(st)
    }

    pub fn total(&self) -> f64 {
        self.s + self.i + self.rho + self.d
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("s", self.s), ("i", self.i), ("rho", self.rho), ("d", self.d)] {
            check_finite(name, x)?;
            if !(-STATE_TOL..=1.0 + STATE_TOL).contains(&x) {
                return Err(Error::invalid(name, format!("must lie in [0, 1], got {x}")));
            }
        }
        let total = self.total();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "s + i + rho + d",
                format!("must equal 1, got {total}"),
            ));
        }
        Ok(())
    }

    /// Clamp every compartment into [0, 1].
    pub fn clamped(self) -> Self {
        Self {
            s: self.s.clamp(0.0, 1.0),
            i: self.i.clamp(0.0, 1.0),
            rho: self.rho.clamp(0.0, 1.0),
            d: self.d.clamp(0.0, 1.0),
        }
    }
}

/// Compartments plus accumulated cost `J` and accumulated vaccine usage `V`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentedState {
    pub state: SirdState,
    /// Accumulated per-capita cost.
    pub cost: f64,
    /// Accumulated vaccine usage.
    pub vaccine: f64,
}

impl AugmentedState {
    pub fn start(initial: SirdState) -> Self {
        Self {
            state: initial,
            cost: 0.0,
            vaccine: 0.0,
        }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let st = &self.state;
        [st.s, st.i, st.rho, st.d, self.cost, self.vaccine]
    }

    pub fn from_array(y: [f64; 6]) -> Self {
        Self {
            state: SirdState {
                s: y[0],
                i: y[1],
                rho: y[2],
                d: y[3],
            },
            cost: y[4],
            vaccine: y[5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.state.validate()?;
        check_nonneg("J", self.cost)?;
        check_nonneg("V", self.vaccine)
    }
}

/// Time derivative of an [`AugmentedState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub ds: f64,
    pub di: f64,
    pub drho: f64,
    pub dd: f64,
    pub dcost: f64,
    pub dvaccine: f64,
}

impl Rates {
    pub fn compartment_sum(&self) -> f64 {
        self.ds + self.di + self.drho + self.dd
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.ds, self.di, self.drho, self.dd, self.dcost, self.dvaccine]
    }
}

/// Everything that fixes an epidemic run except the vaccination policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub epidemic: EpidemicParams,
    pub cost: CostParams,
    pub initial: SirdState,
    /// Planning horizon `T`.
    pub horizon: f64,
}

impl Scenario {
    pub fn new(
        epidemic: EpidemicParams,
        cost: CostParams,
        initial: SirdState,
        horizon: f64,
    ) -> Result<Self> {
        let s = Self {
            epidemic,
            cost,
            initial,
            horizon,
        };
        s.validate()?;
        Ok(s)
    }

    /// Check all field invariants.
    ///
    /// A zero initial infected fraction is accepted so that the disease-free
    /// equilibrium can be simulated; it is the trivial case of every
    /// operation downstream.
    pub fn validate(&self) -> Result<()> {
        self.epidemic.validate()?;
        self.cost.validate()?;
        self.initial.validate()?;
        check_finite("T", self.horizon)?;
        if self.horizon <= 0.0 {
            return Err(Error::invalid("T", format!("must be > 0, got {}", self.horizon)));
        }
        Ok(())
    }

    /// Per-infected cost rate used by the objective.
    pub fn treatment_weight(&self) -> f64 {
        self.cost.treatment_weight(&self.epidemic)
    }
}

/// Per-susceptible infection rate `-r i ln(1 - eps)`.
pub fn infection_intensity(i: f64, p: &EpidemicParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&i) {
        return Err(Error::Domain(format!(
            "infected fraction must lie in [0, 1], got {i}"
        )));
    }
    Ok(p.transmission_rate() * i)
}

/// Probability of infection during `dt` for a susceptible: `1 - (1-eps)^(r dt i)`.
///
/// Only used to check the linearized intensity; the dynamics never call it.
pub fn exact_infection_probability(i: f64, dt: f64, p: &EpidemicParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&i) {
        return Err(Error::Domain(format!(
            "infected fraction must lie in [0, 1], got {i}"
        )));
    }
    if dt.is_nan() || dt < 0.0 {
        return Err(Error::Domain(format!("time step must be >= 0, got {dt}")));
    }
    let exponent = p.r * dt * i * (-p.eps).ln_1p();
    Ok(-exponent.exp_m1())
}

/// Vaccination rate `min{k, l s}` while the program runs and stock remains.
pub fn vaccination_rate(t: f64, s: f64, policy: &VaccinationPolicy, exhausted: bool) -> f64 {
    if exhausted || t > policy.tau {
        0.0
    } else {
        policy.k.min(policy.l * s.max(0.0))
    }
}

/// Right-hand side given an already evaluated vaccination rate.
///
/// No validation; stage values of the integrator may stray slightly outside
/// the simplex.
pub(crate) fn derivatives(y: &[f64; 6], v: f64, scenario: &Scenario, weight: f64) -> [f64; 6] {
    let ep = &scenario.epidemic;
    let (s, i) = (y[0], y[1]);
    let force = s * ep.transmission_rate() * i;
    let recover = ep.alpha * i;
    let die = ep.beta * i;
    [
        -force - v,
        force - recover - die,
        recover + v,
        die,
        scenario.cost.a * v + weight * i,
        v,
    ]
}

/// Time derivative of the augmented system at `(t, y)`.
pub fn augmented_rhs(
    t: f64,
    y: &AugmentedState,
    scenario: &Scenario,
    policy: &VaccinationPolicy,
    exhausted: bool,
) -> Result<Rates> {
    y.validate()
        .map_err(|e| Error::Domain(format!("state outside bounds: {e}")))?;
    let v = vaccination_rate(t, y.state.s, policy, exhausted);
    let d = derivatives(&y.to_array(), v, scenario, scenario.treatment_weight());
    Ok(Rates {
        ds: d[0],
        di: d[1],
        drho: d[2],
        dd: d[3],
        dcost: d[4],
        dvaccine: d[5],
    })
}

/// Serde adapter mapping `null` to an unlimited (infinite) amount.
mod unbounded {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if m.is_finite() {
            ser.serialize_some(m)
        } else {
            ser.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(de)?.unwrap_or(f64::INFINITY))
    }
}
