//! Synthetic triage-style data: 17 features with class-conditional vitals,
//! stand-in for data that cannot ship with the repository.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Dataset, FeatureKind, FeatureSchema};

/// Per-feature missing fraction, aligned with [`synth_schema`] order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MissingProfile(pub Vec<f64>);

impl MissingProfile {
    pub fn none() -> Self {
        MissingProfile(vec![0.0; SYNTH_FEATURES.len()])
    }

    /// Vitals-heavy missingness mirroring what triage data looks like in the
    /// wild: ~26-27% on vitals, a trace on zip code, none elsewhere.
    pub fn triage_default() -> Self {
        let mut p = Self::none();
        p.set("respiratory_rate", 0.272);
        p.set("o2_saturation", 0.269);
        p.set("bmi", 0.257);
        p.set("systolic_bp", 0.257);
        p.set("diastolic_bp", 0.257);
        p.set("pulse_rate", 0.257);
        p.set("temperature_f", 0.257);
        p.set("zip_code", 0.002);
        p
    }

    pub fn set(&mut self, feature: &str, fraction: f64) {
        if let Some(i) = SYNTH_FEATURES.iter().position(|f| f.0 == feature) {
            self.0[i] = fraction;
        }
    }

    fn validate(&self) -> Result<()> {
        if self.0.len() != SYNTH_FEATURES.len() {
            return Err(Error::Shape(format!(
                "missing profile has {} entries, schema has {}",
                self.0.len(),
                SYNTH_FEATURES.len()
            )));
        }
        if self.0.iter().any(|&f| !(0.0..=1.0).contains(&f)) {
            return Err(Error::Domain("missing fraction outside [0,1]".into()));
        }
        Ok(())
    }
}

enum Gen {
    /// (admitted mean, admitted sd, discharged mean, discharged sd, min, max)
    Vital(f64, f64, f64, f64, f64, f64),
    /// Uniform over `n` codes, class-independent.
    Uniform(u32),
    /// Admitted rows drawn from a front-loaded (roughly geometric) code
    /// distribution, discharged rows uniform.
    Skewed(u32),
}

struct SynthFeature(&'static str, FeatureKind, Gen);

use FeatureKind::{Categorical, Numeric};

/// The 17 triage features: sex, location, arrival hour, zip, ethnicity,
/// smoking status, month, day, chief complaint, and eight vitals. Admitted
/// patients (label 0) draw from shifted vital distributions so the classes
/// are learnably separable but overlapping.
static SYNTH_FEATURES: &[SynthFeature] = &[
    SynthFeature("patient_sex", Categorical, Gen::Uniform(2)),
    SynthFeature("ed_location_id", Categorical, Gen::Uniform(3)),
    SynthFeature("arrival_hour", Categorical, Gen::Uniform(24)),
    SynthFeature("zip_code", Categorical, Gen::Uniform(40)),
    SynthFeature("ethnicity", Categorical, Gen::Uniform(5)),
    SynthFeature("smoking_status", Categorical, Gen::Uniform(3)),
    SynthFeature("month_of_year", Categorical, Gen::Uniform(12)),
    SynthFeature("day_of_week", Categorical, Gen::Uniform(7)),
    SynthFeature("chief_complaint", Categorical, Gen::Skewed(30)),
    SynthFeature("bmi", Numeric, Gen::Vital(29.0, 6.0, 27.0, 5.0, 12.0, 60.0)),
    SynthFeature("age_years", Numeric, Gen::Vital(58.0, 17.0, 40.0, 17.0, 0.0, 105.0)),
    SynthFeature("diastolic_bp", Numeric, Gen::Vital(79.0, 12.0, 76.0, 10.0, 30.0, 140.0)),
    SynthFeature("temperature_f", Numeric, Gen::Vital(99.1, 1.2, 98.4, 0.8, 93.0, 106.0)),
    SynthFeature("respiratory_rate", Numeric, Gen::Vital(20.5, 4.0, 16.5, 2.8, 6.0, 45.0)),
    SynthFeature("pulse_rate", Numeric, Gen::Vital(94.0, 15.0, 84.0, 13.0, 30.0, 200.0)),
    SynthFeature("systolic_bp", Numeric, Gen::Vital(136.0, 19.0, 125.0, 15.0, 60.0, 250.0)),
    SynthFeature("o2_saturation", Numeric, Gen::Vital(93.0, 3.5, 97.0, 2.0, 60.0, 100.0)),
];

pub fn synth_schema() -> Vec<FeatureSchema> {
    SYNTH_FEATURES
        .iter()
        .map(|f| match f.1 {
            Numeric => FeatureSchema::numeric(f.0),
            Categorical => {
                let n = match f.2 {
                    Gen::Uniform(n) | Gen::Skewed(n) => n,
                    Gen::Vital(..) => unreachable!(),
                };
                FeatureSchema {
                    name: f.0.to_string(),
                    kind: Categorical,
                    categories: Some((0..n).map(|c| c.to_string()).collect()),
                }
            }
        })
        .collect()
}

/// Generate `n` rows. `admit_fraction` is the probability of label 0
/// (admitted); missingness is injected per `profile` after generation.
pub fn synth_generate(
    n: usize,
    profile: &MissingProfile,
    admit_fraction: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Size("synth_generate: n must be positive".into()));
    }
    if !(admit_fraction > 0.0 && admit_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "admit_fraction {admit_fraction} outside (0,1)"
        )));
    }
    profile.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let admitted = rng.random::<f64>() < admit_fraction;
        labels.push(u8::from(!admitted));
        let mut row = Vec::with_capacity(SYNTH_FEATURES.len());
        for f in SYNTH_FEATURES {
            let v = match &f.2 {
                Gen::Uniform(k) => rng.random_range(0..*k) as f64,
                Gen::Skewed(k) => {
                    if admitted {
                        // Front-loaded codes: repeated halving until a coin
                        // comes up heads, capped at k-1.
                        let mut code = 0u32;
                        while code + 1 < *k && rng.random::<f64>() < 0.72 {
                            code += 1;
                            if rng.random::<f64>() < 0.35 {
                                break;
                            }
                        }
                        code as f64
                    } else {
                        rng.random_range(0..*k) as f64
                    }
                }
                Gen::Vital(am, asd, dm, dsd, lo, hi) => {
                    let (mean, sd) = if admitted { (*am, *asd) } else { (*dm, *dsd) };
                    let v = Normal::new(mean, sd).unwrap().sample(&mut rng);
                    v.clamp(*lo, *hi)
                }
            };
            row.push(Some(v));
        }
        rows.push(row);
    }

    // Missingness pass, independent per cell.
    for row in rows.iter_mut() {
        for (c, frac) in profile.0.iter().enumerate() {
            if *frac > 0.0 && rng.random::<f64>() < *frac {
                row[c] = None;
            }
        }
    }

    Dataset::new(synth_schema(), rows, labels)
}
