//! Time-dependent weights: inertia, individuality, sociality and `vmax`.
//!
//! A [`ParameterSet`] bundles one schedule per weight plus an optional
//! constriction factor and a velocity-clamping policy. The engine resolves it
//! once per time-step into a [`ResolvedParams`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    #[serde(rename = "linear")]
    LinearDecreasing,
    Sigmoid,
    #[serde(rename = "poly_correlated")]
    PolynomialCorrelated,
}

/// A scalar weight as a function of the time-step.
///
/// `PolynomialCorrelated` is only meaningful for the learning weights: their
/// value is half of [`acceleration_from_inertia`] applied to the current
/// inertia weight, and `value_start`/`value_end` are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub value_start: f64,
    pub value_end: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    kind: ScheduleKind,
    value_start: Option<f64>,
    value_end: Option<f64>,
    k: Option<f64>,
}

impl TryFrom<RawSchedule> for ScheduleSpec {
    type Error = Error;

    fn try_from(raw: RawSchedule) -> Result<Self> {
        let need = |v: Option<f64>, field: &str| {
            v.ok_or_else(|| Error::invalid(format!("{:?} schedule needs `{field}`", raw.kind)))
        };
        let spec = match raw.kind {
            ScheduleKind::Constant => {
                let v = need(raw.value_start.or(raw.value_end), "value_start")?;
                ScheduleSpec {
                    kind: raw.kind,
                    value_start: v,
                    value_end: raw.value_end.unwrap_or(v),
                    k: None,
                }
            }
            ScheduleKind::LinearDecreasing => ScheduleSpec::linear(
                need(raw.value_start, "value_start")?,
                need(raw.value_end, "value_end")?,
            ),
            ScheduleKind::Sigmoid => ScheduleSpec::sigmoid(
                need(raw.value_start, "value_start")?,
                need(raw.value_end, "value_end")?,
                need(raw.k, "k")?,
            ),
            ScheduleKind::PolynomialCorrelated => ScheduleSpec::poly_correlated(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl ScheduleSpec {
    pub fn constant(value: f64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Constant,
            value_start: value,
            value_end: value,
            k: None,
        }
    }

    pub fn linear(value_start: f64, value_end: f64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::LinearDecreasing,
            value_start,
            value_end,
            k: None,
        }
    }

    /// Sigmoid decay from `w_max` towards `w_min` with steepness `k`.
    pub fn sigmoid(w_max: f64, w_min: f64, k: f64) -> Self {
        ScheduleSpec {
            kind: ScheduleKind::Sigmoid,
            value_start: w_max,
            value_end: w_min,
            k: Some(k),
        }
    }

    pub fn poly_correlated() -> Self {
        ScheduleSpec {
            kind: ScheduleKind::PolynomialCorrelated,
            value_start: 0.0,
            value_end: 0.0,
            k: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.value_start.is_finite() || !self.value_end.is_finite() {
            return Err(Error::invalid("schedule values must be finite"));
        }
        match self.kind {
            ScheduleKind::Constant if self.value_start != self.value_end => {
                Err(Error::invalid(format!(
                    "constant schedule needs value_start == value_end, got {} and {}",
                    self.value_start, self.value_end
                )))
            }
            ScheduleKind::Sigmoid => match self.k {
                Some(k) if k > 0.0 && k.is_finite() => Ok(()),
                other => Err(Error::invalid(format!(
                    "sigmoid schedule needs a positive steepness k, got {other:?}"
                ))),
            },
            _ => Ok(()),
        }
    }

    /// Value of the schedule at time-step `t` of a search limited to `t_max` steps.
    ///
    /// The sigmoid follows
    /// `(w_max - w_min) / (1 + exp(2 k (t - k) / (t_max - k))) + w_min`
    /// verbatim, so with `k = 10` and a long horizon it starts near the
    /// midpoint of the two values rather than at `w_max`.
    pub fn weight_at(&self, t: u64, t_max: u64) -> Result<f64> {
        self.validate()?;
        check_time(t, t_max)?;
        let (start, end) = (self.value_start, self.value_end);
        match self.kind {
            ScheduleKind::Constant => Ok(start),
            ScheduleKind::LinearDecreasing => Ok(lerp(start, end, t, t_max)),
            ScheduleKind::Sigmoid => {
                let k = self.k.unwrap_or_default();
                let span = t_max as f64 - k;
                if span <= 0.0 {
                    return Err(Error::invalid(format!(
                        "sigmoid schedule needs t_max > k (t_max = {t_max}, k = {k})"
                    )));
                }
                let exponent = 2.0 * k * (t as f64 - k) / span;
                let w = (start - end) / (1.0 + exponent.exp()) + end;
                Ok(w.clamp(start.min(end), start.max(end)))
            }
            ScheduleKind::PolynomialCorrelated => Err(Error::invalid(
                "poly_correlated weights depend on the inertia weight; resolve them through a ParameterSet",
            )),
        }
    }
}

/// Free-function form of [`ScheduleSpec::weight_at`].
pub fn weight_at(schedule: &ScheduleSpec, t: u64, t_max: u64) -> Result<f64> {
    schedule.weight_at(t, t_max)
}

fn check_time(t: u64, t_max: u64) -> Result<()> {
    if t_max == 0 {
        return Err(Error::invalid("t_max must be at least 1"));
    }
    if t > t_max {
        return Err(Error::invalid(format!(
            "time-step {t} exceeds t_max = {t_max}"
        )));
    }
    Ok(())
}

// Monotone in t under IEEE rounding; the clamp absorbs the last-ulp overshoot.
fn lerp(start: f64, end: f64, t: u64, t_max: u64) -> f64 {
    if t >= t_max {
        return end;
    }
    let s = t as f64 / t_max as f64;
    (start + (end - start) * s).clamp(start.min(end), start.max(end))
}

const POLY_COEFFS: [f64; 5] = [-4.142, 12.398, -12.77, 7.803, 2.0];

/// Acceleration weight `aw = iw + sw` that pairs with inertia `w` for fast
/// clustering, from a quartic fit over `w` in `[0, 1]`.
pub fn acceleration_from_inertia(w: f64) -> f64 {
    if !(0.0..=1.0).contains(&w) {
        log::warn!("inertia weight {w} lies outside the fitted range [0, 1]");
    }
    POLY_COEFFS.iter().fold(0.0, |acc, c| acc * w + c)
}

/// Linearly hands weight over from individuality to sociality while keeping
/// `iw + sw = aw`.
pub fn learning_weight_swap(
    t: u64,
    t_max: u64,
    aw: f64,
    iw_start: f64,
    iw_end: f64,
) -> Result<(f64, f64)> {
    check_time(t, t_max)?;
    for (name, v) in [("iw_start", iw_start), ("iw_end", iw_end)] {
        if !(0.0..=aw).contains(&v) {
            return Err(Error::invalid(format!(
                "{name} = {v} must lie in [0, {aw}]"
            )));
        }
    }
    let iw = lerp(iw_start, iw_end, t, t_max);
    Ok((iw, aw - iw))
}

/// Constriction factor for learning weights `iw`, `sw` and `0 < kappa <= 1`.
pub fn constriction_factor(iw: f64, sw: f64, kappa: f64) -> Result<f64> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::invalid(format!(
            "kappa = {kappa} must lie in (0, 1]"
        )));
    }
    if iw < 0.0 || sw < 0.0 {
        return Err(Error::invalid("learning weights must be non-negative"));
    }
    let aw = iw + sw;
    if aw >= 4.0 {
        Ok(2.0 * kappa / (aw - 2.0 + (aw * aw - 4.0 * aw).sqrt()))
    } else {
        Ok(kappa.sqrt())
    }
}

/// Inertia-form weights `(w, iw, sw)` equivalent to a constricted update with
/// factor `chi` and learning weights `iw`, `sw`.
pub fn constriction_as_inertia(chi: f64, iw: f64, sw: f64) -> (f64, f64, f64) {
    (chi, chi * iw, chi * sw)
}

/// How the velocity clamp evolves over the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VmaxPolicy {
    #[default]
    None,
    Constant {
        value: f64,
    },
    #[serde(rename = "linear")]
    LinearDecreasing {
        start: f64,
        end: f64,
    },
    /// Half the width of whatever search box the optimizer runs on.
    HalfRange,
}

impl VmaxPolicy {
    /// `vmax = 0.5 * (upper - lower)` as a fixed value.
    pub fn half_range_of(lower: f64, upper: f64) -> Self {
        VmaxPolicy::Constant {
            value: 0.5 * (upper - lower),
        }
    }

    pub fn vmax_at(&self, t: u64, t_max: u64, lower: f64, upper: f64) -> Result<Option<f64>> {
        if !(lower < upper) {
            return Err(Error::invalid(format!(
                "search box [{lower}, {upper}] is empty"
            )));
        }
        check_time(t, t_max)?;
        let value = match *self {
            VmaxPolicy::None => return Ok(None),
            VmaxPolicy::Constant { value } => value,
            VmaxPolicy::LinearDecreasing { start, end } => {
                if !(start > 0.0 && end > 0.0) {
                    return Err(Error::invalid(format!(
                        "vmax endpoints must be positive, got {start} and {end}"
                    )));
                }
                lerp(start, end, t, t_max)
            }
            VmaxPolicy::HalfRange => 0.5 * (upper - lower),
        };
        if !(value > 0.0) {
            return Err(Error::invalid(format!(
                "vmax must be positive, got {value}"
            )));
        }
        Ok(Some(value))
    }
}

/// Free-function form of [`VmaxPolicy::vmax_at`].
pub fn vmax_at(policy: &VmaxPolicy, t: u64, t_max: u64, bounds: (f64, f64)) -> Result<Option<f64>> {
    policy.vmax_at(t, t_max, bounds.0, bounds.1)
}

/// Constriction of the whole velocity bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constriction {
    /// Factor derived from the learning weights with parameter kappa.
    Kappa(f64),
    /// Factor given directly (e.g. the customary rounded 0.7298).
    Chi(f64),
}

/// One optimizer configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterSet {
    pub inertia_schedule: ScheduleSpec,
    pub individuality_schedule: ScheduleSpec,
    pub sociality_schedule: ScheduleSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constriction: Option<Constriction>,
    #[serde(default)]
    pub vmax_policy: VmaxPolicy,
}

/// Velocity rule chosen for a time-step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VelocityRule {
    Inertia { w: f64 },
    Constricted { chi: f64 },
}

/// A [`ParameterSet`] evaluated at one time-step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub rule: VelocityRule,
    pub iw: f64,
    pub sw: f64,
    pub vmax: Option<f64>,
}

impl ParameterSet {
    /// Constant inertia and learning weights, no velocity clamp.
    pub fn inertia(w: f64, iw: f64, sw: f64) -> Self {
        ParameterSet {
            inertia_schedule: ScheduleSpec::constant(w),
            individuality_schedule: ScheduleSpec::constant(iw),
            sociality_schedule: ScheduleSpec::constant(sw),
            constriction: None,
            vmax_policy: VmaxPolicy::None,
        }
    }

    /// Constricted update with constant learning weights.
    pub fn constricted(constriction: Constriction, iw: f64, sw: f64) -> Self {
        ParameterSet {
            constriction: Some(constriction),
            ..ParameterSet::inertia(1.0, iw, sw)
        }
    }

    /// Inertia schedule `inertia` with both learning weights following the
    /// polynomial inertia/acceleration correlation.
    pub fn poly_correlated(inertia: ScheduleSpec) -> Self {
        ParameterSet {
            inertia_schedule: inertia,
            individuality_schedule: ScheduleSpec::poly_correlated(),
            sociality_schedule: ScheduleSpec::poly_correlated(),
            constriction: None,
            vmax_policy: VmaxPolicy::None,
        }
    }

    /// Learning weights linearly swapping from `iw_start` to `iw_end` with
    /// `iw + sw = aw` throughout.
    pub fn with_learning_swap(mut self, aw: f64, iw_start: f64, iw_end: f64) -> Result<Self> {
        learning_weight_swap(0, 1, aw, iw_start, iw_end)?;
        self.individuality_schedule = ScheduleSpec::linear(iw_start, iw_end);
        self.sociality_schedule = ScheduleSpec::linear(aw - iw_start, aw - iw_end);
        Ok(self)
    }

    pub fn with_inertia_schedule(mut self, schedule: ScheduleSpec) -> Self {
        self.inertia_schedule = schedule;
        self
    }

    pub fn with_vmax(mut self, policy: VmaxPolicy) -> Self {
        self.vmax_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.inertia_schedule.validate()?;
        self.individuality_schedule.validate()?;
        self.sociality_schedule.validate()?;
        if self.inertia_schedule.kind == ScheduleKind::PolynomialCorrelated {
            return Err(Error::invalid(
                "the inertia schedule cannot be poly_correlated",
            ));
        }
        let poly_learning = [self.individuality_schedule, self.sociality_schedule]
            .iter()
            .any(|s| s.kind == ScheduleKind::PolynomialCorrelated);
        match self.constriction {
            Some(_) if poly_learning => Err(Error::invalid(
                "poly_correlated learning weights need an inertia weight and cannot be constricted",
            )),
            Some(Constriction::Kappa(kappa)) if !(kappa > 0.0 && kappa <= 1.0) => Err(
                Error::invalid(format!("kappa = {kappa} must lie in (0, 1]")),
            ),
            Some(Constriction::Chi(chi)) if !chi.is_finite() => {
                Err(Error::invalid("constriction factor must be finite"))
            }
            _ => Ok(()),
        }
    }

    /// Weights in force at time-step `t` of a `t_max`-step search over the
    /// box `[lower, upper]`.
    pub fn resolve(&self, t: u64, t_max: u64, lower: f64, upper: f64) -> Result<ResolvedParams> {
        self.validate()?;
        let vmax = self.vmax_policy.vmax_at(t, t_max, lower, upper)?;
        let w = match self.constriction {
            Some(_) => 1.0,
            None => self.inertia_schedule.weight_at(t, t_max)?,
        };
        let learning = |s: &ScheduleSpec| match s.kind {
            ScheduleKind::PolynomialCorrelated => Ok(acceleration_from_inertia(w) / 2.0),
            _ => s.weight_at(t, t_max),
        };
        let iw = learning(&self.individuality_schedule)?;
        let sw = learning(&self.sociality_schedule)?;
        let rule = match self.constriction {
            None => VelocityRule::Inertia { w },
            Some(Constriction::Kappa(kappa)) => VelocityRule::Constricted {
                chi: constriction_factor(iw, sw, kappa)?,
            },
            Some(Constriction::Chi(chi)) => VelocityRule::Constricted { chi },
        };
        Ok(ResolvedParams { rule, iw, sw, vmax })
    }
}
