use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqnn_core::gradients::finite_diff_grad;
use sqnn_core::training::{loss, Classifier};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

#[derive(Debug, Clone)]
pub struct GradCheckOptions {
    pub config: ExperimentConfig,
    pub trials: usize,
    pub tolerance: f64,
    pub eps: f64,
    pub seed: u64,
}

impl GradCheckOptions {
    pub fn new(config: ExperimentConfig) -> Self {
        GradCheckOptions {
            config,
            trials: 10,
            tolerance: 1e-6,
            eps: 1e-5,
            seed: 0,
        }
    }
}

/// The parameter with the largest analytic/numeric disagreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Worst {
    pub trial: usize,
    pub group: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl Worst {
    pub fn error(&self) -> f64 {
        (self.analytic - self.numeric).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub trials: usize,
    pub checked: usize,
    pub worst: Worst,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let w = &self.worst;
        write!(
            f,
            "{} trials, {} parameters; max |analytic - numeric| = {:.3e} (trial {}, group {}, parameter {}: {:.12} vs {:.12})",
            self.trials,
            self.checked,
            w.error(),
            w.trial,
            w.group,
            w.index,
            w.analytic,
            w.numeric
        )
    }
}

/// Compares backpropagated loss gradients against central differences on
/// freshly initialized models and random inputs.
pub fn run(opts: &GradCheckOptions) -> Result<GradCheckReport> {
    if opts.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(opts.tolerance.is_finite() && opts.tolerance >= 0.0) {
        return Err(CliError::Usage("--tolerance must be a non-negative number".into()));
    }
    let kind = opts.config.training.loss;
    let (h, w) = opts.config.image_shape();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checked = 0;
    let mut worst: Option<Worst> = None;
    for trial in 0..opts.trials {
        let mut config = opts.config.clone();
        config.training.seed = rng.gen();
        let (model, _) = config.build_model()?;
        let sample: Vec<f64> = (0..h * w).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let label = if rng.gen::<bool>() { 1.0 } else { -1.0 };

        let (cache, y) = model.forward(&sample)?;
        let (_, dl_dy) = loss(kind, y, label)?;
        let grads = model.backward(&sample, &cache, dl_dy)?;
        for (g, group) in grads.iter().enumerate() {
            let base = model.param_groups()[g].to_vec();
            for (i, &analytic) in group.iter().enumerate() {
                let numeric = finite_diff_grad(
                    |p: &[f64]| {
                        let mut m = model.clone();
                        m.param_groups_mut()[g].copy_from_slice(p);
                        m.score(&sample)
                            .and_then(|y| loss(kind, y, label))
                            .map_or(f64::NAN, |(l, _)| l)
                    },
                    &base,
                    i,
                    opts.eps,
                )?;
                if !numeric.is_finite() {
                    return Err(CliError::GradCheck(format!("loss is not finite near trial {trial}")));
                }
                checked += 1;
                let candidate = Worst {
                    trial,
                    group: g,
                    index: i,
                    analytic,
                    numeric,
                };
                if worst.is_none_or(|w| candidate.error() > w.error()) {
                    worst = Some(candidate);
                }
            }
        }
    }
    let report = GradCheckReport {
        trials: opts.trials,
        checked,
        worst: worst.ok_or_else(|| CliError::Usage("model has no parameters".into()))?,
    };
    if report.worst.error() > opts.tolerance {
        return Err(CliError::GradCheck(format!(
            "{report} exceeds tolerance {:e}",
            opts.tolerance
        )));
    }
    Ok(report)
}
