use serde::Serialize;

use super::model::ModelGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Layout {
    /// Ciphertext j holds feature j of every sample; slot i is sample i.
    FeatureMajor,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingPlan {
    pub layout: Layout,
    pub batch: usize,
    pub slot_count: usize,
    /// feature index -> input ciphertext index
    pub feature_to_ciphertext: Vec<usize>,
    /// Ciphertexts live at every layer boundary, input first.
    pub layer_widths: Vec<usize>,
}

impl PackingPlan {
    pub fn feature_count(&self) -> usize {
        self.feature_to_ciphertext.len()
    }

    pub fn max_ciphertexts(&self) -> usize {
        self.layer_widths.iter().copied().max().unwrap_or(0)
    }

    pub fn output_count(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }

    pub fn slot_utilization(&self) -> f64 {
        self.batch as f64 / self.slot_count as f64
    }
}

pub fn plan_packing(model: &ModelGraph, batch: usize, slot_count: usize) -> Result<PackingPlan> {
    if batch == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if batch > slot_count {
        return Err(Error::TooManyValues {
            got: batch,
            slots: slot_count,
        });
    }
    let layer_widths = model.widths()?;
    Ok(PackingPlan {
        layout: Layout::FeatureMajor,
        batch,
        slot_count,
        feature_to_ciphertext: (0..layer_widths[0]).collect(),
        layer_widths,
    })
}
