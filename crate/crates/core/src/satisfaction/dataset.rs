use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{
    EconParams, Gender, PassengerProfile, RideOffer, Seat, BASELINE_SATISFACTION, MAX_SATISFACTION,
    MIN_SATISFACTION,
};
use crate::error::{Error, Result};

/// Shared-ride time multipliers offered in the survey.
pub const SHARED_TIME_MULTIPLIERS: [f64; 10] = [1.0, 1.1, 1.2, 1.3, 1.4, 1.5, 1.75, 2.0, 3.0, 4.0];
/// Divisors applied to the private price for the shared ride.
pub const SHARED_COST_DIVISORS: [f64; 9] = [1.1, 1.2, 1.3, 1.4, 1.5, 1.75, 2.0, 3.0, 4.0];

const GAIN_WEIGHT: f64 = 0.15;
const CROWD_PENALTY: f64 = 0.2;
const MIDDLE_SEAT_PENALTY: f64 = 0.4;
const LABEL_NOISE_SD: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example {
    pub profile: PassengerProfile,
    pub offer: RideOffer,
    /// Likert level, 1-7.
    pub label: u8,
    pub split: Split,
}

/// Labelled rides with a positional 70/15/15 train/validation/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    examples: Vec<Example>,
}

fn split_sizes(n: usize) -> (usize, usize) {
    let train = (n as f64 * 0.70).round() as usize;
    let validation = ((n as f64 * 0.15).round() as usize).min(n - train);
    (train, validation)
}

impl Dataset {
    /// Assigns splits by position: first 70% train, next 15% validation,
    /// remainder test.
    pub fn from_labelled(rows: Vec<(PassengerProfile, RideOffer, u8)>) -> Result<Self> {
        let (train, validation) = split_sizes(rows.len());
        let examples = rows
            .into_iter()
            .enumerate()
            .map(|(i, (profile, offer, label))| {
                if !(1..=7).contains(&label) {
                    return Err(Error::input(format!("label {label} outside 1..=7")));
                }
                let split = if i < train {
                    Split::Train
                } else if i < train + validation {
                    Split::Validation
                } else {
                    Split::Test
                };
                Ok(Example {
                    profile,
                    offer,
                    label,
                    split,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset { examples })
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Example> {
        self.examples.iter().filter(move |e| e.split == split)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.examples {
            let o = &e.offer;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                e.profile.age,
                e.profile.gender,
                e.profile.employed as u8,
                o.private_time,
                o.private_cost,
                o.shared_time,
                o.shared_cost,
                o.n_additional,
                o.seat,
                e.label
            )
            .unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 10 {
                return Err(Error::parse(
                    line_no,
                    format!("expected 10 fields, got {}", f.len()),
                ));
            }
            let num = |k: usize, what: &str| -> Result<f64> {
                f[k].parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| Error::parse(line_no, format!("invalid {what} `{}`", f[k])))
            };
            let bad =
                |what: &str, raw: &str| Error::parse(line_no, format!("invalid {what} `{raw}`"));
            let profile = PassengerProfile {
                age: f[0].parse().map_err(|_| bad("age", f[0]))?,
                gender: f[1].parse::<Gender>().map_err(|_| bad("gender", f[1]))?,
                employed: match f[2] {
                    "1" => true,
                    "0" => false,
                    raw => return Err(bad("employed flag", raw)),
                },
            };
            let n_additional: u8 = f[7].parse().map_err(|_| bad("co-passenger count", f[7]))?;
            if n_additional > 3 {
                return Err(bad("co-passenger count", f[7]));
            }
            let offer = RideOffer {
                private_time: num(3, "t_o")?,
                private_cost: num(4, "c_o")?,
                shared_time: num(5, "t_P")?,
                shared_cost: num(6, "c_P")?,
                n_additional,
                seat: f[8].parse::<Seat>().map_err(|_| bad("seat", f[8]))?,
            };
            let label: u8 = f[9].parse().map_err(|_| bad("label", f[9]))?;
            if !(1..=7).contains(&label) {
                return Err(bad("label", f[9]));
            }
            rows.push((profile, offer, label));
        }
        Self::from_labelled(rows)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }
}

/// Noise-free synthetic satisfaction before clamping and rounding.
pub fn ground_truth_mean(offer: &RideOffer, params: &EconParams) -> f64 {
    let middle = (offer.seat == Seat::MiddleBack) as u8 as f64;
    BASELINE_SATISFACTION + GAIN_WEIGHT * offer.gain(params)
        - CROWD_PENALTY * (offer.n_additional as f64 - 1.0)
        - MIDDLE_SEAT_PENALTY * middle
}

/// Draws a Likert label for a shared ride.
///
/// A shared ride that is both longer and more expensive than the private
/// one never gets a label above the private baseline; the noise is redrawn
/// until it does not.
pub fn label_ride<R: Rng + ?Sized>(offer: &RideOffer, params: &EconParams, rng: &mut R) -> u8 {
    let noise = Normal::new(0.0, LABEL_NOISE_SD).unwrap();
    let mean = ground_truth_mean(offer, params);
    let dominated =
        offer.shared_cost > offer.private_cost && offer.shared_time > offer.private_time;
    let draw = |rng: &mut R| {
        (mean + noise.sample(rng))
            .clamp(MIN_SATISFACTION, MAX_SATISFACTION)
            .round() as u8
    };
    let mut label = draw(rng);
    let mut attempts = 0;
    while dominated && label as f64 > BASELINE_SATISFACTION {
        attempts += 1;
        if attempts > 1_000 {
            label = BASELINE_SATISFACTION as u8;
            break;
        }
        label = draw(rng);
    }
    label
}

/// Synthetic survey data following the crowdsourcing protocol: private
/// rides of 5-60 minutes at the per-minute price, shared rides stretched by
/// a sampled multiplier and discounted by a sampled divisor, 1-3
/// co-passengers, and a uniformly drawn seat.
pub fn generate_synthetic_dataset(n: usize, params: &EconParams, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::input("dataset size must be at least 1"));
    }
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| {
            let profile = PassengerProfile::sample(&mut rng);
            let private_time = rng.random_range(5.0..=60.0);
            let private_cost = private_time * params.cost_per_minute;
            let offer = RideOffer {
                private_time,
                private_cost,
                shared_time: private_time * SHARED_TIME_MULTIPLIERS.choose(&mut rng).unwrap(),
                shared_cost: private_cost / SHARED_COST_DIVISORS.choose(&mut rng).unwrap(),
                n_additional: rng.random_range(1..=3),
                seat: *Seat::PRIORITY.choose(&mut rng).unwrap(),
            };
            let label = label_ride(&offer, params, &mut rng);
            (profile, offer, label)
        })
        .collect();
    Dataset::from_labelled(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn offer(mult: f64, divisor: f64, n_additional: u8, seat: Seat) -> RideOffer {
        RideOffer {
            private_time: 30.0,
            private_cost: 30.0,
            shared_time: 30.0 * mult,
            shared_cost: 30.0 / divisor,
            n_additional,
            seat,
        }
    }

    #[test]
    fn favourable_offer_expected_above_baseline() {
        let p = EconParams::default();
        // gain = 30 - 7.5 = 22.5, mean = 4 + 3.375
        let o = offer(1.0, 4.0, 1, Seat::Front);
        assert!((ground_truth_mean(&o, &p) - 7.375).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mean: f64 = (0..1000)
            .map(|_| label_ride(&o, &p, &mut rng) as f64)
            .sum::<f64>()
            / 1000.0;
        assert!(mean > 6.0);
    }

    #[test]
    fn dominated_offer_never_above_baseline() {
        let p = EconParams::default();
        // Mildly worse on both counts; without the rule noise would push some labels above 4.
        let o = RideOffer {
            private_time: 30.0,
            private_cost: 30.0,
            shared_time: 30.5,
            shared_cost: 30.5,
            n_additional: 1,
            seat: Seat::Front,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            assert!(label_ride(&o, &p, &mut rng) <= 4);
        }
    }

    #[test]
    fn labels_in_range_and_protocol_respected() {
        let p = EconParams::default();
        let d = generate_synthetic_dataset(2000, &p, 4).unwrap();
        for e in d.examples() {
            assert!((1..=7).contains(&e.label));
            let o = &e.offer;
            assert!((5.0..=60.0).contains(&o.private_time));
            assert_eq!(o.private_cost, o.private_time);
            let mult = o.shared_time / o.private_time;
            assert!(SHARED_TIME_MULTIPLIERS
                .iter()
                .any(|m| (m - mult).abs() < 1e-9));
            let div = o.private_cost / o.shared_cost;
            assert!(SHARED_COST_DIVISORS.iter().any(|m| (m - div).abs() < 1e-9));
            assert!((1..=3).contains(&o.n_additional));
            assert!((19..=67).contains(&e.profile.age));
        }
    }

    #[test]
    fn split_fractions() {
        let d = generate_synthetic_dataset(1000, &EconParams::default(), 1).unwrap();
        assert_eq!(d.split(Split::Train).count(), 700);
        assert_eq!(d.split(Split::Validation).count(), 150);
        assert_eq!(d.split(Split::Test).count(), 150);
        assert!(generate_synthetic_dataset(0, &EconParams::default(), 1).is_err());
    }

    #[test]
    fn deterministic_bytes_and_text_round_trip() {
        let p = EconParams::default();
        let a = generate_synthetic_dataset(300, &p, 42).unwrap();
        let b = generate_synthetic_dataset(300, &p, 42).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert_ne!(
            a.to_text(),
            generate_synthetic_dataset(300, &p, 43).unwrap().to_text()
        );
        assert_eq!(Dataset::parse(&a.to_text()).unwrap(), a);
    }

    #[test]
    fn parse_rejects_bad_rows() {
        let good = "31,female,1,20,20,30,10,1,front,5\n";
        assert_eq!(Dataset::parse(good).unwrap().len(), 1);
        for bad in [
            "31,female,1,20,20,30,10,1,front,8\n",
            "31,other,1,20,20,30,10,1,front,5\n",
            "31,female,2,20,20,30,10,1,front,5\n",
            "31,female,1,20,20,30,10,4,front,5\n",
            "31,female,1,20,20,30,10,1,roof,5\n",
            "31,female,1,20,20,30\n",
        ] {
            assert!(
                matches!(Dataset::parse(bad), Err(Error::Parse { line: 1, .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn mean_shared_label_matches_survey_level() {
        let d = generate_synthetic_dataset(10_000, &EconParams::default(), 2024).unwrap();
        let mean = d.examples().iter().map(|e| e.label as f64).sum::<f64>() / d.len() as f64;
        assert!((4.0..=4.8).contains(&mean), "mean shared label {mean}");
    }
}
