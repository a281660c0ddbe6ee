use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest sinusoid amplitude range a task may use.
pub const AMPLITUDE_BOUNDS: (f64, f64) = (0.1, 5.0);
/// Phase range a sinusoid task may use.
pub const PHASE_BOUNDS: (f64, f64) = (0.0, PI);
/// Allowed input rotations for transformed classification, in degrees.
pub const ROTATIONS: [u32; 4] = [0, 90, 180, 270];
/// Allowed input scales for transformed classification.
pub const SCALES: [f64; 2] = [0.5, 1.0];
/// Bound on each offset coordinate for transformed classification.
pub const OFFSET_BOUND: f64 = 0.1;
/// Classes in the transformed-classification family.
pub const N_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskFamily {
    Sinusoid,
    TransformedClassification,
}

impl TaskFamily {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskFamily::Sinusoid => "sinusoid",
            TaskFamily::TransformedClassification => "transformed-classification",
        }
    }

    pub fn input_dim(self) -> usize {
        match self {
            TaskFamily::Sinusoid => 1,
            TaskFamily::TransformedClassification => 2,
        }
    }

    pub fn output_dim(self) -> usize {
        match self {
            TaskFamily::Sinusoid => 1,
            TaskFamily::TransformedClassification => N_CLASSES,
        }
    }
}

impl fmt::Display for TaskFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sinusoid" => Ok(TaskFamily::Sinusoid),
            "transformed-classification" => Ok(TaskFamily::TransformedClassification),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValueRange {
    pub lo: f64,
    pub hi: f64,
}

impl ValueRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn check(&self, name: &str, bounds: (f64, f64)) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.lo > self.hi {
            return Err(Error::InvalidDistribution(format!(
                "{name} range [{}, {}] is empty",
                self.lo, self.hi
            )));
        }
        if self.lo < bounds.0 || self.hi > bounds.1 {
            return Err(Error::InvalidDistribution(format!(
                "{name} range [{}, {}] leaves [{}, {}]",
                self.lo, self.hi, bounds.0, bounds.1
            )));
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

/// A task distribution `p(T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaskDistribution {
    Sinusoid {
        amplitude: ValueRange,
        phase: ValueRange,
    },
    TransformedClassification {
        rotations: Vec<u32>,
        scales: Vec<f64>,
        offset: ValueRange,
    },
}

impl TaskDistribution {
    pub fn sinusoid() -> Self {
        TaskDistribution::Sinusoid {
            amplitude: ValueRange::new(AMPLITUDE_BOUNDS.0, AMPLITUDE_BOUNDS.1),
            phase: ValueRange::new(PHASE_BOUNDS.0, PHASE_BOUNDS.1),
        }
    }

    pub fn transformed_classification() -> Self {
        TaskDistribution::TransformedClassification {
            rotations: ROTATIONS.to_vec(),
            scales: SCALES.to_vec(),
            offset: ValueRange::new(-OFFSET_BOUND, OFFSET_BOUND),
        }
    }

    /// Default distribution for a family name.
    pub fn named(name: &str) -> Result<Self> {
        Ok(match name.parse::<TaskFamily>()? {
            TaskFamily::Sinusoid => Self::sinusoid(),
            TaskFamily::TransformedClassification => Self::transformed_classification(),
        })
    }

    pub fn family(&self) -> TaskFamily {
        match self {
            TaskDistribution::Sinusoid { .. } => TaskFamily::Sinusoid,
            TaskDistribution::TransformedClassification { .. } => {
                TaskFamily::TransformedClassification
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TaskDistribution::Sinusoid { amplitude, phase } => {
                amplitude.check("amplitude", AMPLITUDE_BOUNDS)?;
                phase.check("phase", PHASE_BOUNDS)
            }
            TaskDistribution::TransformedClassification {
                rotations,
                scales,
                offset,
            } => {
                if rotations.is_empty() || scales.is_empty() {
                    return Err(Error::InvalidDistribution(
                        "rotation and scale sets must be nonempty".into(),
                    ));
                }
                if let Some(r) = rotations.iter().find(|r| !ROTATIONS.contains(r)) {
                    return Err(Error::InvalidDistribution(format!(
                        "rotation {r} not in {ROTATIONS:?}"
                    )));
                }
                if let Some(s) = scales.iter().find(|s| !SCALES.contains(s)) {
                    return Err(Error::InvalidDistribution(format!(
                        "scale {s} not in {SCALES:?}"
                    )));
                }
                offset.check("offset", (-OFFSET_BOUND, OFFSET_BOUND))
            }
        }
    }
}

/// Family-specific task parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum TaskParams {
    Sinusoid {
        amplitude: f64,
        phase: f64,
    },
    TransformedClassification {
        rotation_deg: u32,
        scale: f64,
        offset: [f64; 2],
    },
}

/// One task: family parameters plus the seed of its private data streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    #[serde(flatten)]
    pub params: TaskParams,
    pub seed: u64,
}

impl TaskSpec {
    pub fn sinusoid(amplitude: f64, phase: f64, seed: u64) -> Self {
        Self {
            params: TaskParams::Sinusoid { amplitude, phase },
            seed,
        }
    }

    pub fn family(&self) -> TaskFamily {
        match self.params {
            TaskParams::Sinusoid { .. } => TaskFamily::Sinusoid,
            TaskParams::TransformedClassification { .. } => TaskFamily::TransformedClassification,
        }
    }

    /// Checks parameters against the family's declared ranges.
    pub fn validate(&self) -> Result<()> {
        let within = |v: f64, (lo, hi): (f64, f64)| v.is_finite() && v >= lo && v <= hi;
        match self.params {
            TaskParams::Sinusoid { amplitude, phase } => {
                if !within(amplitude, AMPLITUDE_BOUNDS) || !within(phase, PHASE_BOUNDS) {
                    return Err(Error::InvalidDistribution(format!(
                        "sinusoid task out of range: amplitude {amplitude}, phase {phase}"
                    )));
                }
            }
            TaskParams::TransformedClassification {
                rotation_deg,
                scale,
                offset,
            } => {
                if !ROTATIONS.contains(&rotation_deg)
                    || !SCALES.contains(&scale)
                    || !offset
                        .iter()
                        .all(|&o| within(o, (-OFFSET_BOUND, OFFSET_BOUND)))
                {
                    return Err(Error::InvalidDistribution(format!(
                        "classification task out of range: rotation {rotation_deg}, scale {scale}, offset {offset:?}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws a task with parameters uniform over `dist`'s ranges. The task seed
/// is drawn from `rng` as well.
pub fn sample_task<R: Rng + ?Sized>(dist: &TaskDistribution, rng: &mut R) -> Result<TaskSpec> {
    dist.validate()?;
    let params = match dist {
        TaskDistribution::Sinusoid { amplitude, phase } => TaskParams::Sinusoid {
            amplitude: amplitude.sample(rng),
            phase: phase.sample(rng),
        },
        TaskDistribution::TransformedClassification {
            rotations,
            scales,
            offset,
        } => TaskParams::TransformedClassification {
            rotation_deg: rotations[rng.random_range(0..rotations.len())],
            scale: scales[rng.random_range(0..scales.len())],
            offset: [offset.sample(rng), offset.sample(rng)],
        },
    };
    Ok(TaskSpec {
        params,
        seed: rng.random(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn same_seed_same_task() {
        let dist = TaskDistribution::sinusoid();
        let a = sample_task(&dist, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_task(&dist, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn collapsed_range_is_exact() {
        let dist = TaskDistribution::Sinusoid {
            amplitude: ValueRange::new(2.0, 2.0),
            phase: ValueRange::new(0.0, PI),
        };
        let t = sample_task(&dist, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        match t.params {
            TaskParams::Sinusoid { amplitude, .. } => assert_eq!(amplitude, 2.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn unknown_family_is_an_error() {
        assert!(matches!(
            "omniglot".parse::<TaskFamily>(),
            Err(Error::UnknownFamily(_))
        ));
        assert!(TaskDistribution::named("mnist").is_err());
    }

    #[test]
    fn empty_range_is_an_error() {
        let dist = TaskDistribution::Sinusoid {
            amplitude: ValueRange::new(3.0, 2.0),
            phase: ValueRange::new(0.0, 1.0),
        };
        assert!(sample_task(&dist, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        let dist = TaskDistribution::TransformedClassification {
            rotations: vec![],
            scales: vec![1.0],
            offset: ValueRange::new(0.0, 0.0),
        };
        assert!(sample_task(&dist, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn sampled_tasks_stay_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dist in [
            TaskDistribution::sinusoid(),
            TaskDistribution::transformed_classification(),
        ] {
            for _ in 0..500 {
                sample_task(&dist, &mut rng).unwrap().validate().unwrap();
            }
        }
    }
}
