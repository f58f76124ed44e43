//! Basic-emotion scoring: normalized weighted sums of the 20 AU channels.
//!
//! Each emotion row mixes positive weights on its prototype AUs with negative
//! weights on opposite AUs that suppress false positives. The normalizer is
//! the sum of positive weights, so a prototype pattern at full activation
//! scores exactly 100. Neutral is derived from the absence of all seven.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::au::{Au, AuScores};
use crate::error::{Error, Result};

/// The seven basic emotions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
#[allow(missing_docs)]
pub enum Emotion {
    Anger,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Contempt,
}

pub const ALL_EMOTIONS: [Emotion; 7] = [
    Emotion::Anger,
    Emotion::Disgust,
    Emotion::Fear,
    Emotion::Joy,
    Emotion::Sadness,
    Emotion::Surprise,
    Emotion::Contempt,
];

impl Emotion {
    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Contempt => "contempt",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Signed AU weights per emotion.
///
/// Validated on load: every emotion needs at least one positive weight and a
/// positive normalization denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmotionWeightTable {
    weights: BTreeMap<Emotion, BTreeMap<Au, f64>>,
}

impl EmotionWeightTable {
    pub fn new(weights: BTreeMap<Emotion, BTreeMap<Au, f64>>) -> Result<Self> {
        let table = EmotionWeightTable { weights };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        for emotion in ALL_EMOTIONS {
            let row = self
                .weights
                .get(&emotion)
                .ok_or_else(|| Error::Config(format!("emotion table is missing {emotion}")))?;
            for (&au, &w) in row {
                if !w.is_finite() {
                    return Err(Error::Config(format!(
                        "emotion {emotion}: non-finite weight for {au}"
                    )));
                }
            }
            let positive: f64 = row.values().filter(|w| **w > 0.0).sum();
            if positive <= 0.0 {
                return Err(Error::Config(format!(
                    "emotion {emotion}: positive weights must sum above zero"
                )));
            }
        }
        Ok(())
    }

    pub fn row(&self, emotion: Emotion) -> &BTreeMap<Au, f64> {
        &self.weights[&emotion]
    }
}

impl Default for EmotionWeightTable {
    /// Prototype AU rows with unit positive weights and unit suppressors on
    /// opposite expressions. Only the anger row's content is fixed by the
    /// underlying coding system; the remaining rows are illustrative defaults
    /// meant to be overridden from configuration.
    fn default() -> Self {
        fn row(entries: &[(Au, f64)]) -> BTreeMap<Au, f64> {
            entries.iter().copied().collect()
        }
        let weights = BTreeMap::from([
            (
                Emotion::Anger,
                row(&[
                    (Au::Au4, 1.0),
                    (Au::Au15, 1.0),
                    (Au::Au24, 1.0),
                    (Au::Au1, -1.0),
                    (Au::Au2, -1.0),
                    (Au::Au12, -1.0),
                ]),
            ),
            (
                Emotion::Disgust,
                row(&[(Au::Au9, 1.0), (Au::Au10, 1.0), (Au::Au12, -1.0)]),
            ),
            (
                Emotion::Fear,
                row(&[
                    (Au::Au1, 1.0),
                    (Au::Au2, 1.0),
                    (Au::Au4, 1.0),
                    (Au::Au5, 1.0),
                    (Au::Au20, 1.0),
                    (Au::Au12, -1.0),
                ]),
            ),
            (
                Emotion::Joy,
                row(&[(Au::Au6, 1.0), (Au::Au12, 1.0), (Au::Au15, -1.0)]),
            ),
            (
                Emotion::Sadness,
                row(&[(Au::Au1, 1.0), (Au::Au15, 1.0), (Au::Au12, -1.0)]),
            ),
            (
                Emotion::Surprise,
                row(&[
                    (Au::Au1, 1.0),
                    (Au::Au2, 1.0),
                    (Au::Au5, 1.0),
                    (Au::Au26, 1.0),
                    (Au::Au4, -1.0),
                ]),
            ),
            (
                Emotion::Contempt,
                row(&[(Au::Smirk, 1.0), (Au::Au12, -1.0)]),
            ),
        ]);
        EmotionWeightTable { weights }
    }
}

/// Scores for the seven emotions plus neutral, each in `[0, 100]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores {
    pub anger: f64,
    pub disgust: f64,
    pub fear: f64,
    pub joy: f64,
    pub sadness: f64,
    pub surprise: f64,
    pub contempt: f64,
    pub neutral: f64,
}

impl EmotionScores {
    pub fn get(&self, emotion: Emotion) -> f64 {
        match emotion {
            Emotion::Anger => self.anger,
            Emotion::Disgust => self.disgust,
            Emotion::Fear => self.fear,
            Emotion::Joy => self.joy,
            Emotion::Sadness => self.sadness,
            Emotion::Surprise => self.surprise,
            Emotion::Contempt => self.contempt,
        }
    }

    /// Maximum over the seven basic emotions (neutral excluded).
    pub fn max_basic(&self) -> f64 {
        ALL_EMOTIONS
            .iter()
            .map(|&e| self.get(e))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Score one emotion: clamp(Σ w·au / Σ_{w>0} w, 0, 100).
fn weighted_score(au: &AuScores, row: &BTreeMap<Au, f64>) -> f64 {
    let mut sum = 0.0;
    let mut positive = 0.0;
    for (&channel, &w) in row {
        sum += w * au.get(channel);
        if w > 0.0 {
            positive += w;
        }
    }
    (sum / positive).clamp(0.0, 100.0)
}

/// Compute the seven basic emotions and neutral for one frame.
///
/// `theta_e` is the activation threshold on the 0–100 scale: neutral is
/// active exactly when every basic emotion sits below it.
pub fn emotion_scores(au: &AuScores, table: &EmotionWeightTable, theta_e: f64) -> EmotionScores {
    let mut scores = EmotionScores {
        anger: 0.0,
        disgust: 0.0,
        fear: 0.0,
        joy: 0.0,
        sadness: 0.0,
        surprise: 0.0,
        contempt: 0.0,
        neutral: 0.0,
    };
    for emotion in ALL_EMOTIONS {
        let value = weighted_score(au, table.row(emotion));
        match emotion {
            Emotion::Anger => scores.anger = value,
            Emotion::Disgust => scores.disgust = value,
            Emotion::Fear => scores.fear = value,
            Emotion::Joy => scores.joy = value,
            Emotion::Sadness => scores.sadness = value,
            Emotion::Surprise => scores.surprise = value,
            Emotion::Contempt => scores.contempt = value,
        }
    }
    let (neutral, _) = neutral_score(&scores, theta_e);
    scores.neutral = neutral;
    scores
}

/// Neutral score and activation: active iff all basic emotions are below
/// `theta_e`; the score is `100 - max(emotions)`.
pub fn neutral_score(emotions: &EmotionScores, theta_e: f64) -> (f64, bool) {
    debug_assert!(theta_e > 0.0 && theta_e < 100.0);
    let max = emotions.max_basic();
    ((100.0 - max).clamp(0.0, 100.0), max < theta_e)
}
