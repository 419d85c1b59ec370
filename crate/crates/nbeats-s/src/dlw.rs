//! Dynamic loss-weighting policies.
//!
//! Each training iteration the trainer hands the policy the two loss values,
//! the two task gradients, and their cosine similarity; the policy answers
//! with the mixing weight λᵢ ∈ [0,1] used to combine the gradients as
//! (1−λᵢ)·g_error + λᵢ·g_instability. Policies range from a constant to
//! schemes that adapt internal state (GradNorm task weights, learned
//! uncertainty log-variances).
//!
//! Ordering contract: λᵢ is always emitted from the state as it stands, and
//! only then does the policy adapt for the next iteration.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Cosine similarity of two flat vectors, `None` when either norm is zero.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na <= 0.0 || nb <= 0.0 {
        return None;
    }
    Some(dot / (na.sqrt() * nb.sqrt()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sign with the convention sign(0) = 0 (unlike `f64::signum`).
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Policy selection and its hyperparameters, as written in experiment
/// configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", deny_unknown_fields)]
pub enum DlwConfig {
    /// λᵢ = λ at every iteration.
    #[serde(rename = "static")]
    Static { lambda: f64 },
    /// λᵢ ~ U(0,1), independent across iterations.
    #[serde(rename = "random")]
    Random {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Task-aware random weighting: λᵢ ~ U(0,κ) with κ fixed for the run.
    #[serde(rename = "tarw")]
    Tarw {
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Gradient cosine similarity, thresholded: λᵢ = 0.5 when the task
    /// gradients point the same way (cos > 0), else 0.
    #[serde(rename = "gcossim")]
    GCosSim,
    /// λᵢ = max(0, cos)/2 — the graded variant of `gcossim`.
    #[serde(rename = "weighted_gcossim")]
    WeightedGCosSim,
    /// Norm-balancing task weights à la GradNorm.
    #[serde(rename = "gradnorm")]
    GradNorm { alpha: f64, lambda0: f64 },
    /// Learned homoscedastic uncertainty per task.
    #[serde(rename = "uncertainty")]
    Uncertainty,
}

impl DlwConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            DlwConfig::Static { lambda } => {
                if !(0.0..=1.0).contains(lambda) {
                    return Err(Error::Config(format!(
                        "static lambda {lambda} outside [0,1]"
                    )));
                }
            }
            DlwConfig::Tarw { kappa, .. } => {
                if !(*kappa > 0.0 && *kappa <= 1.0) {
                    return Err(Error::Config(format!("tarw kappa {kappa} outside (0,1]")));
                }
            }
            DlwConfig::GradNorm { alpha, lambda0 } => {
                if *alpha < 0.0 {
                    return Err(Error::Config(format!("gradnorm alpha {alpha} negative")));
                }
                if !(0.0..=1.0).contains(lambda0) {
                    return Err(Error::Config(format!(
                        "gradnorm lambda0 {lambda0} outside [0,1]"
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            DlwConfig::Static { .. } => "static",
            DlwConfig::Random { .. } => "random",
            DlwConfig::Tarw { .. } => "tarw",
            DlwConfig::GCosSim => "gcossim",
            DlwConfig::WeightedGCosSim => "weighted_gcossim",
            DlwConfig::GradNorm { .. } => "gradnorm",
            DlwConfig::Uncertainty => "uncertainty",
        }
    }
}

/// What the trainer knows at one iteration, as seen by the policy.
pub struct DlwInputs<'a> {
    /// 1-based iteration index.
    pub iteration: usize,
    pub l_error: f64,
    pub l_instability: f64,
    pub g_error: &'a [f64],
    pub g_instability: &'a [f64],
    /// Cosine similarity of the two gradients, `None` if either is zero.
    pub cosine: Option<f64>,
    /// The network learning rate (GradNorm reuses it for its weight step).
    pub learning_rate: f64,
}

/// One logged iteration of the λ schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub iteration: usize,
    pub lambda: f64,
    pub cosine: Option<f64>,
    pub l_error: f64,
    pub l_instability: f64,
}

enum PolicyKind {
    Static {
        lambda: f64,
    },
    Random {
        rng: ChaCha8Rng,
    },
    Tarw {
        kappa: f64,
        rng: ChaCha8Rng,
    },
    GCosSim,
    WeightedGCosSim,
    GradNorm {
        alpha: f64,
        w_error: f64,
        w_instability: f64,
        initial_losses: Option<(f64, f64)>,
    },
    Uncertainty {
        s_error: f64,
        s_instability: f64,
    },
}

/// Live policy state for one training run.
pub struct DlwState {
    kind: PolicyKind,
    name: &'static str,
    trajectory: Vec<TrajectoryPoint>,
}

impl DlwState {
    /// Build the state. Policies that draw random numbers use the seed from
    /// the config when present, otherwise `fallback_seed` (the trainer
    /// derives one from its master seed so runs stay reproducible).
    pub fn new(config: &DlwConfig, fallback_seed: u64) -> Result<Self> {
        config.validate()?;
        let kind = match config {
            DlwConfig::Static { lambda } => PolicyKind::Static { lambda: *lambda },
            DlwConfig::Random { seed } => PolicyKind::Random {
                rng: ChaCha8Rng::seed_from_u64(seed.unwrap_or(fallback_seed)),
            },
            DlwConfig::Tarw { kappa, seed } => PolicyKind::Tarw {
                kappa: *kappa,
                rng: ChaCha8Rng::seed_from_u64(seed.unwrap_or(fallback_seed)),
            },
            DlwConfig::GCosSim => PolicyKind::GCosSim,
            DlwConfig::WeightedGCosSim => PolicyKind::WeightedGCosSim,
            DlwConfig::GradNorm { alpha, lambda0 } => PolicyKind::GradNorm {
                alpha: *alpha,
                w_error: 1.0 - lambda0,
                w_instability: *lambda0,
                initial_losses: None,
            },
            DlwConfig::Uncertainty => PolicyKind::Uncertainty {
                s_error: 0.0,
                s_instability: 0.0,
            },
        };
        Ok(DlwState {
            kind,
            name: config.name(),
            trajectory: Vec::new(),
        })
    }

    pub fn policy_name(&self) -> &'static str {
        self.name
    }

    /// Emit λᵢ for this iteration, then adapt any internal state.
    pub fn next_lambda(&mut self, inputs: &DlwInputs) -> Result<f64> {
        let lambda = match &mut self.kind {
            PolicyKind::Static { lambda } => *lambda,
            PolicyKind::Random { rng } => rng.gen_range(0.0..1.0),
            PolicyKind::Tarw { kappa, rng } => rng.gen_range(0.0..*kappa),
            PolicyKind::GCosSim => match inputs.cosine {
                Some(c) if c > 0.0 => 0.5,
                Some(_) => 0.0,
                None => {
                    log::warn!(
                        "iteration {}: zero-norm gradient, cosine undefined, using lambda 0",
                        inputs.iteration
                    );
                    0.0
                }
            },
            PolicyKind::WeightedGCosSim => match inputs.cosine {
                Some(c) => c.max(0.0) / 2.0,
                None => {
                    log::warn!(
                        "iteration {}: zero-norm gradient, cosine undefined, using lambda 0",
                        inputs.iteration
                    );
                    0.0
                }
            },
            PolicyKind::GradNorm {
                alpha,
                w_error,
                w_instability,
                initial_losses,
            } => {
                if initial_losses.is_none() {
                    *initial_losses = Some((inputs.l_error, inputs.l_instability));
                }
                let emitted = *w_instability;

                // adapt: pull per-task gradient magnitudes toward a shared
                // target scaled by relative inverse training rates
                let (l0_e, l0_s) = initial_losses.expect("just recorded");
                let ratio = |l: f64, l0: f64| -> f64 {
                    if l0 > 0.0 {
                        l / l0
                    } else {
                        log::warn!(
                            "iteration {}: initial loss is zero, training-rate ratio set to 1",
                            inputs.iteration
                        );
                        1.0
                    }
                };
                let ratio_e = ratio(inputs.l_error, l0_e);
                let ratio_s = ratio(inputs.l_instability, l0_s);
                let mean_ratio = (ratio_e + ratio_s) / 2.0;
                let (r_e, r_s) = if mean_ratio > 0.0 {
                    (ratio_e / mean_ratio, ratio_s / mean_ratio)
                } else {
                    (1.0, 1.0)
                };

                let norm_e = l2_norm(inputs.g_error);
                let norm_s = l2_norm(inputs.g_instability);
                let g_e = *w_error * norm_e;
                let g_s = *w_instability * norm_s;
                let g_bar = (g_e + g_s) / 2.0;

                // one descent step on Σ|G_k − Ḡ·r_k^α| with the targets held
                // constant: d/dw_k = sign(G_k − T_k)·‖g_k‖
                let eta = inputs.learning_rate;
                let mut new_e = *w_error - eta * sign(g_e - g_bar * r_e.powf(*alpha)) * norm_e;
                let mut new_s =
                    *w_instability - eta * sign(g_s - g_bar * r_s.powf(*alpha)) * norm_s;
                new_e = new_e.max(1e-8);
                new_s = new_s.max(1e-8);
                let total = new_e + new_s;
                *w_error = new_e / total;
                *w_instability = new_s / total;

                emitted
            }
            PolicyKind::Uncertainty {
                s_error,
                s_instability,
            } => {
                // precision-normalized mixing weight; the s values themselves
                // adapt through the optimizer (see extra_grads)
                let p_e = (-*s_error).exp();
                let p_s = (-*s_instability).exp();
                p_s / (p_e + p_s)
            }
        };

        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Contract(format!(
                "policy {} produced lambda {lambda} outside [0,1]",
                self.name
            )));
        }
        self.trajectory.push(TrajectoryPoint {
            iteration: inputs.iteration,
            lambda,
            cosine: inputs.cosine,
            l_error: inputs.l_error,
            l_instability: inputs.l_instability,
        });
        Ok(lambda)
    }

    /// Number of policy parameters that ride the network optimizer (the two
    /// uncertainty log-variances; zero for every other policy).
    pub fn extra_param_count(&self) -> usize {
        match self.kind {
            PolicyKind::Uncertainty { .. } => 2,
            _ => 0,
        }
    }

    /// Current values of the optimizer-managed policy parameters.
    pub fn extra_params(&self) -> Vec<f64> {
        match self.kind {
            PolicyKind::Uncertainty {
                s_error,
                s_instability,
            } => vec![s_error, s_instability],
            _ => Vec::new(),
        }
    }

    /// Gradients of the uncertainty objective Σ_k [exp(−s_k)·L_k + s_k/2]
    /// w.r.t. the log-variances, in [`extra_params`](Self::extra_params)
    /// order.
    pub fn extra_grads(&self, l_error: f64, l_instability: f64) -> Vec<f64> {
        match self.kind {
            PolicyKind::Uncertainty {
                s_error,
                s_instability,
            } => vec![
                -(-s_error).exp() * l_error + 0.5,
                -(-s_instability).exp() * l_instability + 0.5,
            ],
            _ => Vec::new(),
        }
    }

    /// Write back optimizer-updated policy parameters.
    pub fn sync_extra_params(&mut self, values: &[f64]) -> Result<()> {
        match &mut self.kind {
            PolicyKind::Uncertainty {
                s_error,
                s_instability,
            } => {
                if values.len() != 2 {
                    return Err(Error::Dimension(format!(
                        "uncertainty policy expects 2 values, got {}",
                        values.len()
                    )));
                }
                *s_error = values[0];
                *s_instability = values[1];
                Ok(())
            }
            _ => {
                if values.is_empty() {
                    Ok(())
                } else {
                    Err(Error::Contract(format!(
                        "policy {} has no optimizer-managed parameters",
                        self.name
                    )))
                }
            }
        }
    }

    pub fn last_lambda(&self) -> Option<f64> {
        self.trajectory.last().map(|p| p.lambda)
    }

    /// The current (error, instability) task-weight pair for policies that
    /// maintain one internally (norm-balancing), `None` for the rest.
    pub fn task_weights(&self) -> Option<(f64, f64)> {
        match &self.kind {
            PolicyKind::GradNorm {
                w_error,
                w_instability,
                ..
            } => Some((*w_error, *w_instability)),
            _ => None,
        }
    }

    pub fn trajectory(&self) -> &[TrajectoryPoint] {
        &self.trajectory
    }

    /// Export the λ schedule as CSV for diagnostics plotting.
    pub fn write_trajectory_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trajectory_csv(&self.trajectory, out)
    }
}

/// Write λ-schedule points as CSV (`cosine_similarity` empty where the
/// similarity was undefined).
pub fn write_trajectory_csv<W: Write>(points: &[TrajectoryPoint], mut out: W) -> Result<()> {
    writeln!(
        out,
        "iteration,lambda,cosine_similarity,l_error,l_instability"
    )?;
    for p in points {
        let cos = p.cosine.map(|c| c.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            p.iteration, p.lambda, cos, p.l_error, p.l_instability
        )?;
    }
    Ok(())
}
