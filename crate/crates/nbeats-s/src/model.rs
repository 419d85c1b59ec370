//! Generic doubly residual forecaster.
//!
//! The network is a stack of `K` identical-shaped blocks. Each block runs the
//! current residual input through a fully connected ReLU trunk and two linear
//! heads: a backcast (what the block explains about the input) and a partial
//! forecast. Block `k+1` sees `x_k − x̂_k`, and the model forecast is the sum
//! of all partial forecasts. Blocks share a shape but never weights.
//!
//! There is no input normalization anywhere — the scaled training losses make
//! the whole pipeline indifferent to the level of the series.

use crate::autodiff::tensor::{add_row_vec, matmul, relu};
use crate::autodiff::{ParameterSet, Tape, Tensor, VarId};
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufReader, BufWriter};
use std::path::Path;

/// Network shape. `lookback_length` is the input window `T`, `horizon` the
/// forecast length `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub num_blocks: usize,
    pub lookback_length: usize,
    pub horizon: usize,
    pub hidden_width: usize,
    #[serde(default = "default_trunk_depth")]
    pub trunk_depth: usize,
}

fn default_trunk_depth() -> usize {
    4
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_blocks < 1 {
            return Err(Error::Config("num_blocks must be at least 1".into()));
        }
        if self.lookback_length < 2 {
            // the error scale uses T−1 first differences
            return Err(Error::Config("lookback_length must be at least 2".into()));
        }
        if self.horizon < 2 {
            // the stability terms need h−1 overlapping periods
            return Err(Error::Config("horizon must be at least 2".into()));
        }
        if self.hidden_width < 1 || self.trunk_depth < 1 {
            return Err(Error::Config(
                "hidden_width and trunk_depth must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Layer names inside block `k`, in parameter layout order.
fn layer_dims(config: &ModelConfig) -> Vec<(String, usize, usize)> {
    let (t, h, w) = (
        config.lookback_length,
        config.horizon,
        config.hidden_width,
    );
    let mut dims = Vec::new();
    for l in 0..config.trunk_depth {
        let fan_in = if l == 0 { t } else { w };
        dims.push((format!("fc{}", l + 1), fan_in, w));
    }
    dims.push(("backcast".to_string(), w, t));
    dims.push(("forecast".to_string(), w, h));
    dims
}

/// Initialize all weights and biases uniformly in ±1/√fan_in, using the
/// caller's RNG so runs are reproducible.
pub fn init_params<R: Rng>(config: &ModelConfig, rng: &mut R) -> Result<ParameterSet> {
    config.validate()?;
    let mut params = ParameterSet::new();
    for k in 0..config.num_blocks {
        for (name, fan_in, fan_out) in layer_dims(config) {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.gen_range(-bound..bound))
                .collect();
            let b: Vec<f64> = (0..fan_out).map(|_| rng.gen_range(-bound..bound)).collect();
            params.insert(
                format!("block{k}.{name}.weight"),
                Tensor::new(vec![fan_in, fan_out], w)?,
            )?;
            params.insert(
                format!("block{k}.{name}.bias"),
                Tensor::new(vec![1, fan_out], b)?,
            )?;
        }
    }
    Ok(params)
}

/// Tape-resident handles to one block's parameters.
struct BlockVars {
    trunk: Vec<(VarId, VarId)>,
    backcast: (VarId, VarId),
    forecast: (VarId, VarId),
}

/// The model's forward pass recorded on a tape, exposing what the trainer
/// needs to build loss graphs on top.
pub struct TapedForward {
    pub input: VarId,
    pub forecast: VarId,
    /// Per-block partial forecasts, for diagnostics and tests.
    pub partial_forecasts: Vec<VarId>,
    /// Tape leaf for every named parameter, in `ParameterSet` order.
    pub param_vars: Vec<(String, VarId)>,
}

fn block_param_vars(
    tape: &mut Tape,
    params: &ParameterSet,
    config: &ModelConfig,
    k: usize,
    out: &mut Vec<(String, VarId)>,
) -> Result<BlockVars> {
    let mut fetch = |name: String| -> Result<VarId> {
        let tensor = params
            .get(&name)
            .ok_or_else(|| Error::Contract(format!("missing parameter {name:?}")))?;
        let id = tape.leaf_tensor(tensor)?;
        out.push((name, id));
        Ok(id)
    };
    let mut trunk = Vec::with_capacity(config.trunk_depth);
    for l in 0..config.trunk_depth {
        let w = fetch(format!("block{k}.fc{}.weight", l + 1))?;
        let b = fetch(format!("block{k}.fc{}.bias", l + 1))?;
        trunk.push((w, b));
    }
    let backcast = (
        fetch(format!("block{k}.backcast.weight"))?,
        fetch(format!("block{k}.backcast.bias"))?,
    );
    let forecast = (
        fetch(format!("block{k}.forecast.weight"))?,
        fetch(format!("block{k}.forecast.bias"))?,
    );
    Ok(BlockVars {
        trunk,
        backcast,
        forecast,
    })
}

/// Record the full forward pass for a batch of lookback windows on `tape`.
/// Differentiable end to end; the caller attaches loss nodes afterwards.
pub fn forward_on_tape(
    tape: &mut Tape,
    x: &Tensor,
    params: &ParameterSet,
    config: &ModelConfig,
) -> Result<TapedForward> {
    config.validate()?;
    let (_batch, cols) = x.dims2()?;
    if cols != config.lookback_length {
        return Err(Error::Dimension(format!(
            "input has {cols} columns, model expects lookback {}",
            config.lookback_length
        )));
    }
    let input = tape.leaf_tensor(x)?;
    let mut param_vars = Vec::new();
    let mut residual = input;
    let mut partial_forecasts = Vec::with_capacity(config.num_blocks);
    let mut total: Option<VarId> = None;

    for k in 0..config.num_blocks {
        let vars = block_param_vars(tape, params, config, k, &mut param_vars)?;
        let mut hidden = residual;
        for (w, b) in &vars.trunk {
            let a = tape.affine(hidden, *w, *b)?;
            hidden = tape.relu(a);
        }
        let backcast = tape.affine(hidden, vars.backcast.0, vars.backcast.1)?;
        let partial = tape.affine(hidden, vars.forecast.0, vars.forecast.1)?;
        partial_forecasts.push(partial);
        residual = tape.sub(residual, backcast)?;
        total = Some(match total {
            None => partial,
            Some(acc) => tape.add(acc, partial)?,
        });
    }

    Ok(TapedForward {
        input,
        forecast: total.expect("num_blocks >= 1"),
        partial_forecasts,
        param_vars,
    })
}

/// Plain (tape-free) forward pass for inference. Runs the same kernels in the
/// same order as [`forward_on_tape`], so results are bit-identical.
pub fn forward(x: &Tensor, params: &ParameterSet, config: &ModelConfig) -> Result<Tensor> {
    config.validate()?;
    let (batch, cols) = x.dims2()?;
    if cols != config.lookback_length {
        return Err(Error::Dimension(format!(
            "input has {cols} columns, model expects lookback {}",
            config.lookback_length
        )));
    }
    let t = config.lookback_length;
    let h = config.horizon;
    let mut residual = x.values().to_vec();
    let mut total = vec![0.0; batch * h];

    let get = |name: &str| -> Result<&Tensor> {
        params
            .get(name)
            .ok_or_else(|| Error::Contract(format!("missing parameter {name:?}")))
    };

    for k in 0..config.num_blocks {
        let mut hidden = residual.clone();
        let mut width = t;
        for l in 0..config.trunk_depth {
            let w = get(&format!("block{k}.fc{}.weight", l + 1))?;
            let b = get(&format!("block{k}.fc{}.bias", l + 1))?;
            let (fan_in, fan_out) = w.dims2()?;
            if fan_in != width {
                return Err(Error::Dimension(format!(
                    "block{k} fc{} expects {fan_in} inputs, got {width}",
                    l + 1
                )));
            }
            let pre = matmul(&hidden, w.values(), batch, fan_in, fan_out);
            hidden = relu(&add_row_vec(&pre, b.values(), batch, fan_out));
            width = fan_out;
        }
        let bw = get(&format!("block{k}.backcast.weight"))?;
        let bb = get(&format!("block{k}.backcast.bias"))?;
        let backcast = add_row_vec(
            &matmul(&hidden, bw.values(), batch, width, t),
            bb.values(),
            batch,
            t,
        );
        let fw = get(&format!("block{k}.forecast.weight"))?;
        let fb = get(&format!("block{k}.forecast.bias"))?;
        let partial = add_row_vec(
            &matmul(&hidden, fw.values(), batch, width, h),
            fb.values(),
            batch,
            h,
        );
        for (r, b) in residual.iter_mut().zip(&backcast) {
            *r -= b;
        }
        for (acc, p) in total.iter_mut().zip(&partial) {
            *acc += p;
        }
    }
    Tensor::new(vec![batch, h], total)
}

/// Config plus parameters, as persisted to disk.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ParameterSet,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let ckpt: Checkpoint = serde_json::from_reader(BufReader::new(file))?;
        ckpt.config.validate()?;
        Ok(ckpt)
    }
}
