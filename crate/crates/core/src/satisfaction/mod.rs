//! Passenger satisfaction: the linear gain model, the learned network, and
//! the proxy objectives used for comparison.
//!
//! Satisfaction lives on a 1-7 Likert scale. A private (solo) ride is the
//! neutral baseline and always scores [`BASELINE_SATISFACTION`].

mod dataset;
mod inference;
mod mlp;
mod train;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::error::{Error, Result};

pub use dataset::{
    generate_synthetic_dataset, ground_truth_mean, label_ride, Dataset, Example, Split,
};
pub use mlp::{DenseLayer, Mlp, MlpGradient};
pub use train::{rmse, train_mlp, TrainConfig, TrainReport};

pub const BASELINE_SATISFACTION: f64 = 4.0;
pub const MIN_SATISFACTION: f64 = 1.0;
pub const MAX_SATISFACTION: f64 = 7.0;

/// Length of the vector produced by [`encode_features`].
pub const FEATURE_COUNT: usize = 12;

/// Economic constants shared by payments, gains, and ride outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconParams {
    /// Value of time, dollars per minute.
    pub alpha: f64,
    /// Weight on money.
    pub beta: f64,
    /// Operating cost per vehicle-minute, dollars.
    pub cost_per_minute: f64,
    /// Km per minute.
    pub speed: f64,
    /// Minutes added to every passenger's door-to-door time.
    pub wait_const: f64,
}

impl Default for EconParams {
    fn default() -> Self {
        EconParams {
            alpha: 0.3,
            beta: 1.0,
            cost_per_minute: 1.0,
            speed: 1.0,
            wait_const: 5.0,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("cost_per_minute", self.cost_per_minute),
            ("speed", self.speed),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.wait_const.is_finite() && self.wait_const >= 0.0) {
            return Err(Error::input(format!(
                "wait_const must be non-negative, got {}",
                self.wait_const
            )));
        }
        Ok(())
    }
}

/// `alpha * time + beta * cost`.
#[inline]
pub fn inconvenience(time: f64, cost: f64, params: &EconParams) -> f64 {
    params.alpha * time + params.beta * cost
}

/// Inconvenience saved by the shared ride relative to a direct private one.
#[inline]
pub fn gain(t_o: f64, c_o: f64, t_p: f64, c_p: f64, params: &EconParams) -> f64 {
    inconvenience(t_o, c_o, params) - inconvenience(t_p, c_p, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Female,
    Male,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Female => "female",
            Gender::Male => "male",
        })
    }
}

impl FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "female" => Ok(Gender::Female),
            "male" => Ok(Gender::Male),
            _ => Err(Error::input(format!("unknown gender `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PassengerProfile {
    pub age: u32,
    pub gender: Gender,
    pub employed: bool,
}

/// Survey demographics: 147 of 257 respondents female, 195 employed.
pub const FEMALE_SHARE: f64 = 147.0 / 257.0;
pub const EMPLOYED_SHARE: f64 = 195.0 / 257.0;
/// Log-normal age model with median 31; `exp(sigma^2 / 2)` puts the mean near 32.3.
pub const AGE_MEDIAN: f64 = 31.0;
pub const AGE_LOG_SIGMA: f64 = 0.28;
pub const AGE_RANGE: (u32, u32) = (19, 67);

impl PassengerProfile {
    /// Draws a profile from the survey marginals.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let gender = if rng.random::<f64>() < FEMALE_SHARE {
            Gender::Female
        } else {
            Gender::Male
        };
        let employed = rng.random::<f64>() < EMPLOYED_SHARE;
        let age_dist = LogNormal::new(AGE_MEDIAN.ln(), AGE_LOG_SIGMA).unwrap();
        let age = age_dist
            .sample(rng)
            .clamp(AGE_RANGE.0 as f64, AGE_RANGE.1 as f64)
            .round() as u32;
        PassengerProfile {
            age,
            gender,
            employed,
        }
    }
}

/// Seats in fill order: the first passenger dropped off rides in front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Seat {
    Front,
    RightBack,
    LeftBack,
    MiddleBack,
}

impl Seat {
    pub const PRIORITY: [Seat; 4] = [
        Seat::Front,
        Seat::RightBack,
        Seat::LeftBack,
        Seat::MiddleBack,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Seat::Front => "front",
            Seat::RightBack => "right_back",
            Seat::LeftBack => "left_back",
            Seat::MiddleBack => "middle_back",
        }
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Seat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Seat::PRIORITY
            .into_iter()
            .find(|seat| seat.name() == s)
            .ok_or_else(|| Error::input(format!("unknown seat `{s}`")))
    }
}

/// One passenger's view of a ride: the private alternative and the shared
/// ride actually offered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RideOffer {
    pub private_time: f64,
    pub private_cost: f64,
    pub shared_time: f64,
    pub shared_cost: f64,
    /// Co-passengers, 0-3.
    pub n_additional: u8,
    pub seat: Seat,
}

impl RideOffer {
    pub fn is_solo(&self) -> bool {
        self.n_additional == 0
    }

    pub fn gain(&self, params: &EconParams) -> f64 {
        gain(
            self.private_time,
            self.private_cost,
            self.shared_time,
            self.shared_cost,
            params,
        )
    }
}

/// A Likert-scale satisfaction value, clamped to `[1, 7]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SatisfactionScore(f64);

impl SatisfactionScore {
    pub const BASELINE: SatisfactionScore = SatisfactionScore(BASELINE_SATISFACTION);

    pub fn new(raw: f64) -> Self {
        SatisfactionScore(raw.clamp(MIN_SATISFACTION, MAX_SATISFACTION))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Fixed-width network input for a (profile, offer) pair.
///
/// Layout: four times/costs divided by 60, co-passengers / 3, a one-hot seat
/// block in [`Seat::PRIORITY`] order, age / 100, gender (male = 1), employed.
pub fn encode_features(profile: &PassengerProfile, offer: &RideOffer) -> [f64; FEATURE_COUNT] {
    let mut f = [0.0; FEATURE_COUNT];
    f[0] = offer.private_time / 60.0;
    f[1] = offer.private_cost / 60.0;
    f[2] = offer.shared_time / 60.0;
    f[3] = offer.shared_cost / 60.0;
    f[4] = offer.n_additional as f64 / 3.0;
    f[5 + offer.seat.index()] = 1.0;
    f[9] = profile.age as f64 / 100.0;
    f[10] = matches!(profile.gender, Gender::Male) as u8 as f64;
    f[11] = profile.employed as u8 as f64;
    f
}

/// Index of the co-passenger feature; zero marks a private ride.
pub(crate) const CO_PASSENGER_FEATURE: usize = 4;

/// Scores one passenger's ride. Objectives are summed over passengers.
pub trait SatisfactionModel: Send + Sync {
    fn score(&self, profile: &PassengerProfile, offer: &RideOffer) -> f64;
}

impl<M: SatisfactionModel + ?Sized> SatisfactionModel for &M {
    fn score(&self, profile: &PassengerProfile, offer: &RideOffer) -> f64 {
        (**self).score(profile, offer)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProxyKind {
    CostOnly,
    TimeOnly,
    Gain,
}

impl ProxyKind {
    pub fn name(self) -> &'static str {
        match self {
            ProxyKind::CostOnly => "cost_only",
            ProxyKind::TimeOnly => "time_only",
            ProxyKind::Gain => "gain_proxy",
        }
    }
}

impl FromStr for ProxyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cost_only" | "cost" => Ok(ProxyKind::CostOnly),
            "time_only" | "time" => Ok(ProxyKind::TimeOnly),
            "gain_proxy" | "gain" => Ok(ProxyKind::Gain),
            _ => Err(Error::input(format!("unknown proxy objective `{s}`"))),
        }
    }
}

pub fn proxy_objective_score(
    kind: ProxyKind,
    t_o: f64,
    c_o: f64,
    t_p: f64,
    c_p: f64,
    params: &EconParams,
) -> f64 {
    match kind {
        ProxyKind::CostOnly => c_o - c_p,
        ProxyKind::TimeOnly => t_o - t_p,
        ProxyKind::Gain => gain(t_o, c_o, t_p, c_p, params),
    }
}

/// A simplified assignment objective. Used to build assignments only; they
/// are always evaluated with the learned model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyObjective {
    pub kind: ProxyKind,
    pub params: EconParams,
}

impl ProxyObjective {
    pub fn new(kind: ProxyKind, params: EconParams) -> Self {
        ProxyObjective { kind, params }
    }
}

impl SatisfactionModel for ProxyObjective {
    fn score(&self, _profile: &PassengerProfile, offer: &RideOffer) -> f64 {
        proxy_objective_score(
            self.kind,
            offer.private_time,
            offer.private_cost,
            offer.shared_time,
            offer.shared_cost,
            &self.params,
        )
    }
}
