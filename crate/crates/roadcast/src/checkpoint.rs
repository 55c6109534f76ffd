//! Model checkpoint file: a self-describing, versioned JSON container
//! holding the variant metadata, layer dims, training seed, the dataset
//! hash it was trained against, the normalization statistics of its split,
//! and the flattened parameter vector (see the flattening order documented
//! in the network module). Floats serialize with shortest-roundtrip
//! formatting, so save/load is bit-exact.
//!
//! Embedding the normalizer and encoding mode means prediction and
//! evaluation cannot silently run with mismatched preprocessing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{CalendarContext, EncodingMode, Normalizer};
use crate::network::{forward, ModelDims, ModelKind, ModelParams, LAG_STEPS};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub kind: ModelKind,
    pub encoding: EncodingMode,
    pub interval_minutes: u32,
    pub dims: ModelDims,
    pub seed: u64,
    /// 0-based index of the cross-validation split this model was trained
    /// on.
    pub split: usize,
    /// SHA-256 of the `windows.csv` this model was trained against.
    pub dataset_sha256: String,
    pub normalizer: Normalizer,
    /// Flattened parameters in the documented order.
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(
        params: &ModelParams,
        encoding: EncodingMode,
        interval_minutes: u32,
        seed: u64,
        split: usize,
        dataset_sha256: String,
        normalizer: Normalizer,
    ) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            kind: params.kind(),
            encoding,
            interval_minutes,
            dims: params.dims,
            seed,
            split,
            dataset_sha256,
            normalizer,
            params: params.flatten(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        if ckpt.dims.exo_dim != ckpt.encoding.exo_dim() {
            return Err(Error::Data(format!(
                "checkpoint exo dim {} inconsistent with {} encoding",
                ckpt.dims.exo_dim, ckpt.encoding
            )));
        }
        Ok(ckpt)
    }

    pub fn to_model_params(&self) -> Result<ModelParams> {
        ModelParams::from_flat(self.kind, self.dims, &self.params)
    }

    /// Predicts the next interval from raw inputs: five lagged
    /// (volume, speed) pairs and the reverse pair in vehicles/hour and
    /// km/h, plus the calendar context of the predicted interval. Returns
    /// the denormalized (volume, speed).
    pub fn predict_raw(
        &self,
        lags: &[[f64; 2]; LAG_STEPS],
        reverse: (f64, f64),
        ctx: &CalendarContext,
    ) -> Result<(f64, f64)> {
        let params = self.to_model_params()?;
        let window = crate::dataset::raw_to_model(
            &crate::dataset::RawWindow {
                timestamp: chrono::NaiveDateTime::default(),
                lags: *lags,
                reverse,
                target: [self.normalizer.volume.min, self.normalizer.speed.min],
                ctx: *ctx,
            },
            &self.normalizer,
            self.encoding,
        )?;
        let (preds, _) = forward(&window, &params)?;
        Ok((
            self.normalizer.volume.invert(preds[0]),
            self.normalizer.speed.invert(preds[1]),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Channel, HolidayClass, Weather};
    use crate::network::ModelVariant;

    fn normalizer() -> Normalizer {
        Normalizer {
            volume: Channel { min: 0.0, max: 2000.0 },
            speed: Channel { min: 10.0, max: 110.0 },
            volume_reverse: Channel { min: 0.0, max: 1800.0 },
            speed_reverse: Channel { min: 10.0, max: 105.0 },
        }
    }

    fn sample() -> Checkpoint {
        let variant = ModelVariant::new(ModelKind::ALstm, EncodingMode::Cyclic, 15).unwrap();
        let params = crate::network::init_params(variant, 3);
        Checkpoint::new(&params, EncodingMode::Cyclic, 15, 3, 1, "abc123".into(), normalizer())
    }

    #[test]
    fn save_load_is_bit_exact() {
        let ckpt = sample();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ckpt.save(&path).unwrap();
        let loaded = Checkpoint::load(&path).unwrap();
        assert_eq!(ckpt.params, loaded.params);
        assert_eq!(ckpt.normalizer, loaded.normalizer);
        assert_eq!(ckpt.kind, loaded.kind);

        // Re-saving produces identical bytes.
        let path2 = dir.path().join("model2.json");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn predict_raw_stays_inside_train_range() {
        let ckpt = sample();
        let ts = chrono::NaiveDate::from_ymd_opt(2018, 5, 7)
            .unwrap()
            .and_hms_opt(16, 0, 0)
            .unwrap();
        let ctx = CalendarContext::from_timestamp(ts, HolidayClass::NotHoliday, Weather::Sunny, false, false);
        // All-minimum inputs: the sigmoid head keeps predictions in (0,1),
        // so the denormalized outputs sit inside the fitted min/max range.
        let lags = [[0.0, 10.0]; LAG_STEPS];
        let (v, s) = ckpt.predict_raw(&lags, (0.0, 10.0), &ctx).unwrap();
        assert!(v > 0.0 && v < 2000.0);
        assert!(s > 10.0 && s < 110.0);
    }

    #[test]
    fn inconsistent_dims_rejected_on_load() {
        let mut ckpt = sample();
        ckpt.dims.exo_dim = 7;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        ckpt.save(&path).unwrap();
        assert!(Checkpoint::load(&path).is_err());
    }
}
