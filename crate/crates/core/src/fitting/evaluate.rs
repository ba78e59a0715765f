use serde::{Deserialize, Serialize};

use super::ga::FitResult;
use crate::error::Result;
use crate::model::MaterialDb;
use crate::properties::{mape, GapCharacter};
use crate::superlattice::{sl_gap, KSampling, LayerStack, SlOptions};

/// A superlattice left out of the fit and its measured gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Holdout {
    pub stack: LayerStack,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoldoutRow {
    pub stack: String,
    pub predicted: f64,
    pub character: GapCharacter,
    pub experimental: f64,
    pub abs_error: f64,
    pub percent_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoldoutReport {
    pub rows: Vec<HoldoutRow>,
    /// `None` for an empty holdout.
    pub mape_percent: Option<f64>,
}

/// Predicts every holdout gap with the fitted parameters.
pub fn evaluate_fit(
    result: &FitResult,
    holdout: &[Holdout],
    base: &MaterialDb,
    options: &SlOptions,
    sampling: &KSampling,
) -> Result<HoldoutReport> {
    let db = result.material_db(base);
    let rows = holdout
        .iter()
        .map(|h| {
            let r = sl_gap(&h.stack, &db, options, sampling)?;
            Ok(HoldoutRow {
                stack: h.stack.to_string(),
                predicted: r.gap,
                character: r.character,
                experimental: h.gap,
                abs_error: (r.gap - h.gap).abs(),
                percent_error: 100.0 * ((r.gap - h.gap) / h.gap).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (p, t): (Vec<f64>, Vec<Option<f64>>) = rows.iter().map(|r| (r.predicted, Some(r.experimental))).unzip();
    Ok(HoldoutReport { mape_percent: mape(&p, &t)?, rows })
}
