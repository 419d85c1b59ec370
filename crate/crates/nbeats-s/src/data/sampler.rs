//! Training-batch construction.
//!
//! A sample is anchored at a forecasting origin `t` — the index of the first
//! period being forecast. It carries the input/output pair at `t` plus the
//! pair one step earlier, so the loss can compare the two overlapping
//! forecasts. All indices of both windows stay strictly inside the training
//! segment.
//!
//! Each series contributes its most recent origins that produce complete
//! windows with a usable (non-constant) lookback, capped at the configured
//! origin-range length. Batches draw a series uniformly at random, then an
//! origin uniformly from that series' range.

use crate::data::series::Dataset;
use crate::error::{Error, Result};
use crate::losses::squared_diff_scale;
use crate::model::ModelConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub batch_size: usize,
    /// Maximum number of recent origins per series.
    pub origin_range: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.origin_range == 0 {
            return Err(Error::Config(
                "batch_size and origin_range must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One training sample: windows at origin `t` and at origin `t−1`, plus the
/// in-sample scale shared by all its loss terms.
#[derive(Debug, Clone, PartialEq)]
pub struct DualOriginSample {
    /// Index into the dataset's entries.
    pub series_index: usize,
    /// First forecast period of the newer origin.
    pub origin: usize,
    pub input_t: Vec<f64>,
    pub target_t: Vec<f64>,
    pub input_tm1: Vec<f64>,
    pub target_tm1: Vec<f64>,
    /// Mean squared first difference of `input_t`; strictly positive.
    pub scale: f64,
}

/// Seeded batch sampler over the training segments of a dataset.
pub struct Sampler {
    /// (dataset entry index, valid origins ascending) per usable series.
    pools: Vec<(usize, Vec<usize>)>,
    excluded: Vec<String>,
    rng: ChaCha8Rng,
    batch_size: usize,
    lookback: usize,
    horizon: usize,
    /// Highest series index any emitted window has touched.
    max_index_used: usize,
}

impl Sampler {
    pub fn new(
        dataset: &Dataset,
        model: &ModelConfig,
        config: &SamplerConfig,
        fallback_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        model.validate()?;
        let (t_len, h) = (model.lookback_length, model.horizon);
        let mut pools = Vec::new();
        let mut excluded = Vec::new();

        for (idx, entry) in dataset.entries().iter().enumerate() {
            let values = entry.series.values();
            let train_end = entry.split.train_end;
            // origin t needs: the t−1 input to start at or after 0
            // (t ≥ T+1) and the newer output to end inside the training
            // segment (t+h ≤ train_end)
            let mut origins = Vec::new();
            if train_end >= t_len + h + 1 {
                for t in (t_len + 1)..=(train_end - h) {
                    let window = &values[t - t_len..t];
                    if squared_diff_scale(window)? > 0.0 {
                        origins.push(t);
                    }
                }
            }
            if origins.len() > config.origin_range {
                origins.drain(..origins.len() - config.origin_range);
            }
            if origins.is_empty() {
                log::info!(
                    "series {} has no valid training origin (train_end {train_end}, lookback {t_len}, horizon {h})",
                    entry.series.id()
                );
                excluded.push(entry.series.id().to_string());
            } else {
                pools.push((idx, origins));
            }
        }

        if pools.is_empty() {
            return Err(Error::Contract(
                "no series admits a single valid training origin".into(),
            ));
        }
        Ok(Sampler {
            pools,
            excluded,
            rng: ChaCha8Rng::seed_from_u64(config.seed.unwrap_or(fallback_seed)),
            batch_size: config.batch_size,
            lookback: t_len,
            horizon: h,
            max_index_used: 0,
        })
    }

    /// Series dropped because they have no usable origin.
    pub fn excluded_series(&self) -> &[String] {
        &self.excluded
    }

    /// Valid origins for one pooled series, ascending.
    pub fn pools(&self) -> &[(usize, Vec<usize>)] {
        &self.pools
    }

    /// Highest series index any emitted sample has read so far.
    pub fn max_index_used(&self) -> usize {
        self.max_index_used
    }

    /// Smallest gap, over all pooled series, between the last index a sample
    /// could read and the series' training boundary. Zero means some series
    /// trains right up to the boundary; it can never be negative.
    pub fn min_leak_headroom(&self, dataset: &Dataset) -> usize {
        self.pools
            .iter()
            .map(|(idx, origins)| {
                let train_end = dataset.entries()[*idx].split.train_end;
                let last_read = origins.last().expect("pools are non-empty") + self.horizon - 1;
                train_end - 1 - last_read
            })
            .min()
            .unwrap_or(0)
    }

    fn build_sample(&self, dataset: &Dataset, series_index: usize, origin: usize) -> DualOriginSample {
        let values = dataset.entries()[series_index].series.values();
        let (t_len, h, t) = (self.lookback, self.horizon, origin);
        let input_t = values[t - t_len..t].to_vec();
        let target_t = values[t..t + h].to_vec();
        let input_tm1 = values[t - t_len - 1..t - 1].to_vec();
        let target_tm1 = values[t - 1..t + h - 1].to_vec();
        let scale = squared_diff_scale(&input_t).expect("pool guarantees window length");
        DualOriginSample {
            series_index,
            origin: t,
            input_t,
            target_t,
            input_tm1,
            target_tm1,
            scale,
        }
    }

    /// Draw one batch of dual-origin samples.
    pub fn sample_batch(&mut self, dataset: &Dataset) -> Vec<DualOriginSample> {
        let mut batch = Vec::with_capacity(self.batch_size);
        for _ in 0..self.batch_size {
            let (series_index, origins) = &self.pools[self.rng.gen_range(0..self.pools.len())];
            let origin = origins[self.rng.gen_range(0..origins.len())];
            self.max_index_used = self.max_index_used.max(origin + self.horizon - 1);
            batch.push(self.build_sample(dataset, *series_index, origin));
        }
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::series::{SplitMode, SplitSpec, TimeSeries};
    use crate::data::synthetic::{synthesize, SynthSpec};

    fn model(t: usize, h: usize) -> ModelConfig {
        ModelConfig {
            num_blocks: 1,
            lookback_length: t,
            horizon: h,
            hidden_width: 4,
            trunk_depth: 1,
        }
    }

    fn synth_dataset(n_series: usize, length: usize, seed: u64) -> Dataset {
        let series = synthesize(&SynthSpec {
            num_series: n_series,
            length,
            seed,
            noise_scale: 1.0,
        })
        .unwrap();
        Dataset::new(series, SplitSpec::default(), SplitMode::Tuning)
    }

    #[test]
    fn samples_respect_window_layout() {
        let dataset = synth_dataset(4, 96, 5);
        let cfg = SamplerConfig {
            batch_size: 64,
            origin_range: 24,
            seed: Some(1),
        };
        let mut sampler = Sampler::new(&dataset, &model(12, 6), &cfg, 0).unwrap();
        let batch = sampler.sample_batch(&dataset);
        assert_eq!(batch.len(), 64);
        for s in &batch {
            assert_eq!(s.input_t.len(), 12);
            assert_eq!(s.target_t.len(), 6);
            assert_eq!(s.input_tm1.len(), 12);
            assert_eq!(s.target_tm1.len(), 6);
            assert!(s.scale > 0.0);
            // the t−1 input is the t input shifted one step into history
            assert_eq!(s.input_tm1[1..], s.input_t[..11]);
            // the two target windows name the same periods on the overlap
            for i in 0..5 {
                assert_eq!(s.target_tm1[i + 1], s.target_t[i]);
            }
        }
    }

    #[test]
    fn no_window_crosses_the_training_boundary() {
        let dataset = synth_dataset(6, 80, 9);
        let cfg = SamplerConfig {
            batch_size: 256,
            origin_range: 1000,
            seed: Some(2),
        };
        let mut sampler = Sampler::new(&dataset, &model(12, 6), &cfg, 0).unwrap();
        for _ in 0..20 {
            for s in sampler.sample_batch(&dataset) {
                let train_end = dataset.entries()[s.series_index].split.train_end;
                assert!(s.origin + 6 <= train_end, "output leaks past training");
                assert!(s.origin >= 13, "t−1 input would start before index 0");
                // cross-check the values against the raw series
                let values = dataset.entries()[s.series_index].series.values();
                assert_eq!(s.target_t, values[s.origin..s.origin + 6].to_vec());
                assert_eq!(
                    s.input_tm1,
                    values[s.origin - 13..s.origin - 1].to_vec()
                );
            }
        }
        assert!(sampler.max_index_used() < 80 - 36);
    }

    #[test]
    fn origin_range_one_pins_the_latest_origin() {
        let dataset = synth_dataset(3, 96, 13);
        let cfg = SamplerConfig {
            batch_size: 32,
            origin_range: 1,
            seed: Some(3),
        };
        let mut sampler = Sampler::new(&dataset, &model(12, 6), &cfg, 0).unwrap();
        for (idx, origins) in sampler.pools() {
            assert_eq!(origins.len(), 1);
            let train_end = dataset.entries()[*idx].split.train_end;
            assert_eq!(origins[0], train_end - 6);
        }
        let batch = sampler.sample_batch(&dataset);
        for s in &batch {
            let train_end = dataset.entries()[s.series_index].split.train_end;
            assert_eq!(s.origin, train_end - 6);
        }
    }

    #[test]
    fn origin_range_caps_keep_the_most_recent() {
        let dataset = synth_dataset(1, 120, 21);
        let unlimited = SamplerConfig {
            batch_size: 1,
            origin_range: 10_000,
            seed: Some(4),
        };
        let capped = SamplerConfig {
            batch_size: 1,
            origin_range: 5,
            seed: Some(4),
        };
        let m = model(12, 6);
        let all = Sampler::new(&dataset, &m, &unlimited, 0).unwrap();
        let few = Sampler::new(&dataset, &m, &capped, 0).unwrap();
        let full_pool = &all.pools()[0].1;
        let capped_pool = &few.pools()[0].1;
        assert_eq!(capped_pool.len(), 5);
        assert_eq!(capped_pool[..], full_pool[full_pool.len() - 5..]);
    }

    #[test]
    fn series_are_drawn_uniformly() {
        let dataset = synth_dataset(2, 96, 17);
        let cfg = SamplerConfig {
            batch_size: 10_000,
            origin_range: 24,
            seed: Some(5),
        };
        let mut sampler = Sampler::new(&dataset, &model(12, 6), &cfg, 0).unwrap();
        let batch = sampler.sample_batch(&dataset);
        let first = batch.iter().filter(|s| s.series_index == 0).count();
        assert!(
            (4800..=5200).contains(&first),
            "series 0 drawn {first} times out of 10,000"
        );
    }

    #[test]
    fn constant_windows_are_excluded() {
        // constant training segment: no origin has a usable scale
        let mut flat = vec![5.0; 60];
        for (i, v) in flat.iter_mut().enumerate().skip(24) {
            *v = 5.0 + (i as f64 * 0.7).sin().abs() + 0.1; // tail variation (validation/test region)
        }
        let constant_head = TimeSeries::new("flat", flat).unwrap();
        let varied = synthesize(&SynthSpec {
            num_series: 1,
            length: 60,
            seed: 23,
            noise_scale: 1.0,
        })
        .unwrap()
        .remove(0);
        let dataset = Dataset::new(
            vec![constant_head, varied],
            SplitSpec::default(),
            SplitMode::Tuning,
        );
        let cfg = SamplerConfig {
            batch_size: 8,
            origin_range: 100,
            seed: Some(6),
        };
        // train_end = 24 for length-60 series; lookback 12 + horizon 6 fit,
        // but the flat series' windows are all constant
        let sampler = Sampler::new(&dataset, &model(12, 6), &cfg, 0).unwrap();
        assert_eq!(sampler.excluded_series(), &["flat".to_string()]);
        assert_eq!(sampler.pools().len(), 1);
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let dataset = synth_dataset(4, 96, 29);
        let cfg = SamplerConfig {
            batch_size: 16,
            origin_range: 24,
            seed: Some(7),
        };
        let m = model(12, 6);
        let a = Sampler::new(&dataset, &m, &cfg, 0)
            .unwrap()
            .sample_batch(&dataset);
        let b = Sampler::new(&dataset, &m, &cfg, 99)
            .unwrap()
            .sample_batch(&dataset);
        assert_eq!(a, b);
        let mut no_seed = cfg.clone();
        no_seed.seed = None;
        let c = Sampler::new(&dataset, &m, &no_seed, 123)
            .unwrap()
            .sample_batch(&dataset);
        let d = Sampler::new(&dataset, &m, &no_seed, 123)
            .unwrap()
            .sample_batch(&dataset);
        assert_eq!(c, d);
    }

    #[test]
    fn all_series_too_short_is_an_error() {
        let dataset = synth_dataset(2, 48, 31); // train_end = 12 < T+h+1
        let cfg = SamplerConfig {
            batch_size: 4,
            origin_range: 10,
            seed: None,
        };
        assert!(Sampler::new(&dataset, &model(12, 6), &cfg, 0).is_err());
    }
}
