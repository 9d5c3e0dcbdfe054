use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::OpKind;
use crate::error::{Error, Result};

/// How many augments of each kind every accepted source image receives.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Mix {
    pub rotation: usize,
    pub shift: usize,
    pub stretch: usize,
    pub equalize: usize,
    pub uniform_noise: usize,
    pub random_area_noise: usize,
    /// Augments drawn from `combine_chains`.
    pub combined: usize,
}

impl Mix {
    pub fn total(&self) -> usize {
        self.rotation
            + self.shift
            + self.stretch
            + self.equalize
            + self.uniform_noise
            + self.random_area_noise
            + self.combined
    }

    fn single(&self, kind: OpKind) -> usize {
        match kind {
            OpKind::Rotation => self.rotation,
            OpKind::Shift => self.shift,
            OpKind::Stretch => self.stretch,
            OpKind::Equalize => self.equalize,
            OpKind::UniformNoise => self.uniform_noise,
            OpKind::RandomAreaNoise => self.random_area_noise,
        }
    }
}

fn default_noise_fraction_max() -> f64 {
    0.30
}

fn default_random_area_share() -> f64 {
    0.60
}

/// Per-source-image augmentation recipe.
///
/// Augment indices are assigned in a fixed order: the single-operation kinds
/// in [`OpKind::ALL`] order, then `combined` entries cycling through
/// `combine_chains`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentPlan {
    pub name: String,
    pub per_image_count: usize,
    pub mix: Mix,
    #[serde(default)]
    pub combine_chains: Vec<Vec<OpKind>>,
    #[serde(default = "default_noise_fraction_max")]
    pub noise_fraction_max: f64,
    #[serde(default = "default_random_area_share")]
    pub random_area_share: f64,
}

const BASE_COMBINATIONS: [&[OpKind]; 4] = [
    &[OpKind::Rotation, OpKind::Shift],
    &[OpKind::Rotation, OpKind::Stretch],
    &[OpKind::Shift, OpKind::Equalize],
    &[OpKind::Rotation, OpKind::Shift, OpKind::Stretch],
];

/// `dataset1`, `dataset2` or `dataset3`.
pub fn preset_plan(name: &str) -> Result<AugmentPlan> {
    let base = |i: usize| BASE_COMBINATIONS[i % BASE_COMBINATIONS.len()].to_vec();
    let plan = match name {
        // 50 single-method augments, 10 of them noisy, 6 of those random-area
        "dataset1" => AugmentPlan {
            name: name.into(),
            per_image_count: 50,
            mix: Mix {
                rotation: 14,
                shift: 14,
                stretch: 6,
                equalize: 6,
                uniform_noise: 4,
                random_area_noise: 6,
                combined: 0,
            },
            combine_chains: Vec::new(),
            noise_fraction_max: default_noise_fraction_max(),
            random_area_share: default_random_area_share(),
        },
        "dataset2" => AugmentPlan {
            name: name.into(),
            per_image_count: 30,
            mix: Mix {
                combined: 30,
                ..Mix::default()
            },
            combine_chains: (0..4).map(base).collect(),
            noise_fraction_max: default_noise_fraction_max(),
            random_area_share: default_random_area_share(),
        },
        // dataset2's combinations, 10 of 30 with noise added, 6 of those
        // random-area; noisy items spread evenly over the index range
        "dataset3" => {
            let mut chains = Vec::with_capacity(30);
            let mut noisy = 0;
            for i in 0..30 {
                let mut chain = base(i);
                if i % 3 == 2 {
                    chain.push(if noisy % 5 == 1 || noisy % 5 == 3 {
                        OpKind::UniformNoise
                    } else {
                        OpKind::RandomAreaNoise
                    });
                    noisy += 1;
                }
                chains.push(chain);
            }
            AugmentPlan {
                name: name.into(),
                per_image_count: 30,
                mix: Mix {
                    combined: 30,
                    ..Mix::default()
                },
                combine_chains: chains,
                noise_fraction_max: default_noise_fraction_max(),
                random_area_share: default_random_area_share(),
            }
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    debug_assert!(plan.validate().is_ok());
    Ok(plan)
}

impl AugmentPlan {
    /// The operation kinds for each augment index.
    pub fn recipes(&self) -> Vec<Vec<OpKind>> {
        let mut out = Vec::with_capacity(self.per_image_count);
        for kind in OpKind::ALL {
            out.extend(std::iter::repeat_n(vec![kind], self.mix.single(kind)));
        }
        out.extend(
            self.combine_chains
                .iter()
                .cycle()
                .take(self.mix.combined)
                .cloned(),
        );
        out
    }

    pub fn noisy_count(&self) -> usize {
        self.recipes()
            .iter()
            .filter(|r| r.iter().any(|k| k.is_noise()))
            .count()
    }

    pub fn random_area_count(&self) -> usize {
        self.recipes()
            .iter()
            .filter(|r| r.contains(&OpKind::RandomAreaNoise))
            .count()
    }

    /// Checks the counts add up and the noise composition stays within the
    /// plan's own ratios (noisy share at most `noise_fraction_max` plus one
    /// item of rounding slack, random-area count equal to the rounded share
    /// of the noisy ones).
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidParams(format!("plan `{}`: {msg}", self.name)));
        if self.per_image_count == 0 {
            return fail("per_image_count must be positive".into());
        }
        if self.mix.total() != self.per_image_count {
            return fail(format!(
                "mix adds up to {} instead of {}",
                self.mix.total(),
                self.per_image_count
            ));
        }
        if self.mix.combined > 0 && self.combine_chains.is_empty() {
            return fail("combined augments need at least one combine chain".into());
        }
        for chain in &self.combine_chains {
            if chain.is_empty() {
                return fail("empty combine chain".into());
            }
            let mut sorted = chain.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != chain.len() {
                return fail(format!("combine chain {chain:?} repeats an operation"));
            }
        }
        if !(0.0..=1.0).contains(&self.noise_fraction_max)
            || !(0.0..=1.0).contains(&self.random_area_share)
        {
            return fail("ratios must lie in [0, 1]".into());
        }
        let noisy = self.noisy_count();
        let cap = self.noise_fraction_max * self.per_image_count as f64 + 1.0;
        if noisy as f64 > cap + 1e-9 {
            return fail(format!(
                "{noisy} of {} augments are noisy, above the {:.0}% cap",
                self.per_image_count,
                self.noise_fraction_max * 100.0
            ));
        }
        let expected_area = (self.random_area_share * noisy as f64).round() as usize;
        if self.random_area_count() != expected_area {
            return fail(format!(
                "{} random-area augments, expected {expected_area} of {noisy} noisy",
                self.random_area_count()
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let plan: AugmentPlan =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("plan: {e}")))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plans always serialize")
    }
}
