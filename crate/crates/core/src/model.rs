//! Versioned JSON model files for strong classifiers and cascades.
//!
//! Haar-feature models record the `(kind, x, y, w, h)` of every feature
//! index a stump refers to, so a model stays meaningful even if the
//! enumeration order were to change.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::booster::StrongClassifier;
use crate::cascade::{CascadeMethod, MultiExitCascade};
use crate::data::{Dataset, Label, Samples};
use crate::error::{Error, Result};
use crate::haar::HaarFeature;
use crate::stump::Stump;

pub const MODEL_FORMAT: &str = "lacboost-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureSpace {
    Vector {
        dim: usize,
    },
    Haar {
        window_width: usize,
        window_height: usize,
        /// Geometry of every feature index in use, sorted by index.
        features: Vec<HaarEntry>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarEntry {
    pub index: usize,
    pub feature: HaarFeature,
}

impl FeatureSpace {
    /// Describe `data`'s features, recording only those `stumps` use.
    pub fn describe(data: &Dataset, stumps: &[Stump]) -> Self {
        match data.samples() {
            Samples::Features(f) => FeatureSpace::Vector { dim: f.cols() },
            Samples::Images(set) => {
                let mut used: Vec<usize> = stumps.iter().map(|s| s.feature_index).collect();
                used.sort_unstable();
                used.dedup();
                FeatureSpace::Haar {
                    window_width: set.width(),
                    window_height: set.height(),
                    features: used
                        .into_iter()
                        .map(|index| HaarEntry {
                            index,
                            feature: set.features()[index],
                        })
                        .collect(),
                }
            }
        }
    }

    pub fn check(&self, data: &Dataset) -> Result<()> {
        match (self, data.samples()) {
            (FeatureSpace::Vector { dim }, Samples::Features(f)) => {
                if *dim != f.cols() {
                    return Err(Error::DimensionMismatch {
                        what: "dataset feature dimension",
                        expected: *dim,
                        found: f.cols(),
                    });
                }
                Ok(())
            }
            (
                FeatureSpace::Haar {
                    window_width,
                    window_height,
                    features,
                },
                Samples::Images(set),
            ) => {
                if (*window_width, *window_height) != (set.width(), set.height()) {
                    return Err(Error::invalid(format!(
                        "model expects {window_width}x{window_height} windows, dataset has {}x{}",
                        set.width(),
                        set.height()
                    )));
                }
                for HaarEntry {
                    index: idx,
                    feature: f,
                } in features
                {
                    if set.features().get(*idx) != Some(f) {
                        return Err(Error::invalid(format!(
                            "Haar feature {idx} does not match the model's recorded geometry"
                        )));
                    }
                }
                Ok(())
            }
            (FeatureSpace::Vector { .. }, Samples::Images(_)) => Err(Error::invalid(
                "model was trained on feature vectors but the dataset holds images",
            )),
            (FeatureSpace::Haar { .. }, Samples::Features(_)) => Err(Error::invalid(
                "model was trained on images but the dataset holds feature vectors",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelBody {
    Strong(StrongClassifier),
    Cascade(MultiExitCascade),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub method: CascadeMethod,
    /// The configuration the model was trained with, echoed verbatim.
    pub config: serde_json::Value,
    pub feature_space: FeatureSpace,
    pub body: ModelBody,
}

#[derive(Deserialize)]
struct Header {
    format: Option<String>,
    version: Option<u32>,
}

impl ModelFile {
    pub fn new(
        method: CascadeMethod,
        config: serde_json::Value,
        data: &Dataset,
        body: ModelBody,
    ) -> Self {
        let stumps = match &body {
            ModelBody::Strong(c) => &c.stumps,
            ModelBody::Cascade(c) => &c.stumps,
        };
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            method,
            config,
            feature_space: FeatureSpace::describe(data, stumps),
            body,
        }
    }

    /// The model as a cascade (a strong classifier becomes one exit).
    pub fn as_cascade(&self) -> MultiExitCascade {
        match &self.body {
            ModelBody::Strong(c) => {
                MultiExitCascade::from_strong(c, self.method, Default::default())
            }
            ModelBody::Cascade(c) => c.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let header: Header = serde_json::from_str(text)?;
        if header.format.as_deref() != Some(MODEL_FORMAT) {
            return Err(Error::invalid(format!(
                "not a model file: format is {:?}, expected {MODEL_FORMAT:?}",
                header.format
            )));
        }
        let found = header.version.unwrap_or(0);
        if found != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                found,
                expected: MODEL_VERSION,
            });
        }
        let model: ModelFile = serde_json::from_str(text)?;
        if let ModelBody::Cascade(c) = &model.body {
            c.validate()?;
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Per-example decision values of the final stage (`F(x)` for a strong
    /// classifier; the final exit's `F(x)` for examples reaching it and
    /// `−∞` for examples rejected earlier).
    pub fn scores(&self, data: &Dataset) -> Result<Vec<f64>> {
        self.feature_space.check(data)?;
        Ok(match &self.body {
            ModelBody::Strong(c) => (0..data.len()).map(|i| c.decision(data, i)).collect(),
            ModelBody::Cascade(c) => {
                let last = c.exits.last().map_or(0.0, |e| e.offset);
                (0..data.len())
                    .map(|i| {
                        let t = c.trace_example(data, i);
                        t.final_score.map_or(f64::NEG_INFINITY, |s| s - last)
                    })
                    .collect()
            }
        })
    }

    pub fn predict(&self, data: &Dataset) -> Result<Vec<Label>> {
        self.feature_space.check(data)?;
        Ok(match &self.body {
            ModelBody::Strong(c) => (0..data.len()).map(|i| c.predict(data, i)).collect(),
            ModelBody::Cascade(c) => (0..data.len()).map(|i| c.predict(data, i)).collect(),
        })
    }
}
