//! Losses, SGD and the seeded mini-batch training loop.

use alloc::vec::Vec;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::ImageSet;
use crate::error::{check_len, Error, Result};
use crate::exec::Executor;
use crate::gradients::GradientVector;
use crate::vqc::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum LossKind {
    #[default]
    Mse,
    Hinge,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mse" => Ok(LossKind::Mse),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(Error::Config(alloc::format!(
                "unknown loss `{other}` (expected mse or hinge)"
            ))),
        }
    }
}

/// `(L, ∂L/∂y′)` for prediction `y_pred` and label `y ∈ {−1, +1}`.
pub fn loss(kind: LossKind, y_pred: f64, y: f64) -> Result<(f64, f64)> {
    if y != 1.0 && y != -1.0 {
        return Err(Error::Validation(alloc::format!("label {y} is not -1 or +1")));
    }
    Ok(match kind {
        LossKind::Mse => ((y_pred - y) * (y_pred - y), 2.0 * (y_pred - y)),
        LossKind::Hinge => {
            let margin = y * y_pred;
            if margin < 1.0 {
                (1.0 - margin, -y)
            } else {
                (0.0, 0.0)
            }
        }
    })
}

/// `θ − r·g`.
pub fn sgd_step(params: &ParamVector, grads: &GradientVector, learning_rate: f64) -> Result<ParamVector> {
    check_len("gradient", params.len(), grads.len())?;
    ParamVector::new(
        params
            .iter()
            .zip(grads.iter())
            .map(|(t, g)| t - learning_rate * g)
            .collect(),
    )
}

/// Class decided by the sign of the score; a zero score counts as `+1`.
pub fn classify(y_pred: f64) -> f64 {
    if y_pred >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(default, deny_unknown_fields)
)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.02,
            batch_size: 32,
            epochs: 10,
            loss: LossKind::Mse,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(alloc::format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// A model trainable by the loop below: a score function with
/// per-parameter-group gradients.
pub trait Classifier {
    /// Whatever the forward pass keeps for the backward pass.
    type Cache;

    fn forward(&self, sample: &[f64]) -> Result<(Self::Cache, f64)>;

    /// `∂L/∂θ` for every parameter group given `∂L/∂y′`, in
    /// [`param_groups`](Classifier::param_groups) order.
    fn backward(&self, sample: &[f64], cache: &Self::Cache, dl_dy: f64) -> Result<Vec<GradientVector>>;

    fn param_groups(&self) -> Vec<&ParamVector>;

    fn param_groups_mut(&mut self) -> Vec<&mut ParamVector>;

    fn score(&self, sample: &[f64]) -> Result<f64> {
        self.forward(sample).map(|(_, y)| y)
    }
}

/// Batch-mean loss and batch-mean gradient per group, summed in index order.
pub fn batch_gradients<M, E>(
    model: &M,
    exec: &E,
    samples: &[&[f64]],
    labels: &[f64],
    kind: LossKind,
) -> Result<(f64, Vec<GradientVector>)>
where
    M: Classifier + Sync,
    E: Executor,
{
    check_len("batch labels", samples.len(), labels.len())?;
    if samples.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    let per_sample = exec.map(samples.len(), |i| -> Result<(f64, Vec<GradientVector>)> {
        let (cache, y_pred) = model.forward(samples[i])?;
        let (l, dl) = loss(kind, y_pred, labels[i])?;
        Ok((l, model.backward(samples[i], &cache, dl)?))
    });
    let mut total = 0.0;
    let mut sum: Vec<GradientVector> = model
        .param_groups()
        .iter()
        .map(|p| GradientVector::zeros(p.len()))
        .collect();
    for r in per_sample {
        let (l, grads) = r?;
        total += l;
        check_len("gradient groups", sum.len(), grads.len())?;
        for (acc, g) in sum.iter_mut().zip(&grads) {
            acc.accumulate(g)?;
        }
    }
    let inv = 1.0 / samples.len() as f64;
    Ok((total * inv, sum.into_iter().map(|g| g.scaled(inv)).collect()))
}

/// One SGD step on the batch-mean gradient; returns the batch-mean loss.
pub fn train_batch<M, E>(
    model: &mut M,
    exec: &E,
    samples: &[&[f64]],
    labels: &[f64],
    config: &TrainConfig,
) -> Result<f64>
where
    M: Classifier + Sync,
    E: Executor,
{
    let (mean_loss, grads) = batch_gradients(model, exec, samples, labels, config.loss)?;
    for (params, g) in model.param_groups_mut().into_iter().zip(&grads) {
        *params = sgd_step(params, g, config.learning_rate)?;
    }
    Ok(mean_loss)
}

/// Fraction of samples whose classified score equals the label.
pub fn evaluate_accuracy<M, E>(model: &M, exec: &E, set: &ImageSet) -> Result<f64>
where
    M: Classifier + Sync,
    E: Executor,
{
    if set.is_empty() {
        return Err(Error::Validation("cannot evaluate accuracy on an empty set".into()));
    }
    let hits = exec.map(set.len(), |i| {
        model.score(&set.images()[i]).map(|y| classify(y) == set.labels()[i])
    });
    let mut correct = 0usize;
    for h in hits {
        correct += usize::from(h?);
    }
    Ok(correct as f64 / set.len() as f64)
}

/// Source of elapsed wall-clock seconds for the metrics.
pub trait Clock {
    fn now(&self) -> f64;
}

/// A clock that never advances; timings come out as zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrozenClock;

impl Clock for FrozenClock {
    fn now(&self) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochMetrics {
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub val_accuracy: f64,
    pub seconds: f64,
}

/// Everything needed to continue an interrupted run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainProgress<R> {
    pub epochs_done: usize,
    pub best_accuracy: Option<f64>,
    pub history: Vec<EpochMetrics>,
    /// Drives the per-epoch shuffles.
    pub rng: R,
}

impl<R> TrainProgress<R> {
    pub fn new(rng: R) -> Self {
        TrainProgress {
            epochs_done: 0,
            best_accuracy: None,
            history: Vec::new(),
            rng,
        }
    }
}

/// Runs the remaining epochs of `config`.
///
/// After each epoch `on_epoch(model, progress, improved)` is called; `improved`
/// is true when the validation accuracy beat every earlier epoch.
#[allow(clippy::too_many_arguments)]
pub fn train<M, E, R, C, F>(
    model: &mut M,
    train_set: &ImageSet,
    val_set: &ImageSet,
    config: &TrainConfig,
    exec: &E,
    clock: &C,
    progress: &mut TrainProgress<R>,
    mut on_epoch: F,
) -> Result<()>
where
    M: Classifier + Sync,
    E: Executor,
    R: Rng,
    C: Clock,
    F: FnMut(&M, &TrainProgress<R>, bool) -> Result<()>,
{
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Validation("empty training set".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Validation("empty validation set".into()));
    }
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    while progress.epochs_done < config.epochs {
        let start = clock.now();
        order.sort_unstable();
        order.shuffle(&mut progress.rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let samples: Vec<&[f64]> = chunk.iter().map(|&i| train_set.images()[i].as_slice()).collect();
            let labels: Vec<f64> = chunk.iter().map(|&i| train_set.labels()[i]).collect();
            loss_sum += train_batch(model, exec, &samples, &labels, config)? * chunk.len() as f64;
        }
        let val_accuracy = evaluate_accuracy(model, exec, val_set)?;
        progress.epochs_done += 1;
        let metrics = EpochMetrics {
            epoch: progress.epochs_done,
            mean_train_loss: loss_sum / train_set.len() as f64,
            val_accuracy,
            seconds: clock.now() - start,
        };
        progress.history.push(metrics);
        let improved = progress.best_accuracy.is_none_or(|b| val_accuracy > b);
        if improved {
            progress.best_accuracy = Some(val_accuracy);
        }
        on_epoch(model, progress, improved)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::AngleEncodingConfig;
    use crate::exec::Sequential;
    use crate::gates::Axis;
    use crate::gradients::{finite_diff_grad, DEFAULT_EPS};
    use crate::orchestrator::{CircuitShape, SqnnModel};
    use crate::partition::{DeviceSpec, PartitionStrategy, Role};
    use crate::vqc::ReadoutPrep;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Always outputs a fixed score; one dummy parameter.
    struct Constant(f64, ParamVector);

    impl Classifier for Constant {
        type Cache = ();

        fn forward(&self, _: &[f64]) -> Result<((), f64)> {
            Ok(((), self.0))
        }

        fn backward(&self, _: &[f64], _: &(), _: f64) -> Result<Vec<GradientVector>> {
            Ok(alloc::vec![GradientVector::zeros(1)])
        }

        fn param_groups(&self) -> Vec<&ParamVector> {
            alloc::vec![&self.1]
        }

        fn param_groups_mut(&mut self) -> Vec<&mut ParamVector> {
            alloc::vec![&mut self.1]
        }
    }

    fn toy_model(seed: u64) -> SqnnModel {
        let devices = [
            DeviceSpec::new("e0", 1, Role::Extractor),
            DeviceSpec::new("e1", 1, Role::Extractor),
            DeviceSpec::new("p", 2, Role::Predictor),
        ];
        let shape = CircuitShape {
            blocks: 3,
            axes: alloc::vec![Axis::X, Axis::Z, Axis::Y],
            readout: ReadoutPrep::PlusState,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SqnnModel::initialize(
            (1, 2),
            &devices,
            PartitionStrategy::EvenNoOverlap,
            &shape,
            &shape,
            AngleEncodingConfig::default(),
            &mut rng,
        )
        .unwrap()
    }

    fn toy_set() -> ImageSet {
        // class +1 is brighter on the left pixel
        let images = alloc::vec![
            alloc::vec![0.9, 0.1],
            alloc::vec![0.8, 0.3],
            alloc::vec![0.7, 0.2],
            alloc::vec![0.1, 0.9],
            alloc::vec![0.3, 0.7],
            alloc::vec![0.2, 0.8],
        ];
        ImageSet::new((1, 2), images, alloc::vec![1.0, 1.0, 1.0, -1.0, -1.0, -1.0], (3, 6)).unwrap()
    }

    #[test]
    fn loss_examples() {
        assert_eq!(loss(LossKind::Mse, 1.0, 1.0).unwrap(), (0.0, 0.0));
        assert_eq!(loss(LossKind::Mse, 0.0, 1.0).unwrap(), (1.0, -2.0));
        assert_eq!(loss(LossKind::Hinge, 0.5, 1.0).unwrap(), (0.5, -1.0));
        assert_eq!(loss(LossKind::Hinge, -0.5, -1.0).unwrap(), (0.5, 1.0));
        assert_eq!(loss(LossKind::Hinge, 1.0, 1.0).unwrap(), (0.0, 0.0));
        assert!(matches!(loss(LossKind::Mse, 0.0, 0.0), Err(Error::Validation(_))));
        assert!(matches!("l1".parse::<LossKind>(), Err(Error::Config(_))));
        assert_eq!("hinge".parse::<LossKind>().unwrap(), LossKind::Hinge);
    }

    #[test]
    fn loss_derivatives_match_finite_differences() {
        for kind in [LossKind::Mse, LossKind::Hinge] {
            for y in [-1.0, 1.0] {
                for yp in [-0.9, -0.4, 0.2, 0.75] {
                    let (_, d) = loss(kind, yp, y).unwrap();
                    let fd = finite_diff_grad(|v| loss(kind, v[0], y).unwrap().0, &[yp], 0, DEFAULT_EPS).unwrap();
                    assert!((d - fd).abs() < 1e-8, "{kind:?} y={y} y'={yp}");
                }
            }
        }
    }

    #[test]
    fn sgd_examples() {
        let p = ParamVector::new(alloc::vec![1.0]).unwrap();
        assert_eq!(
            *sgd_step(&p, &GradientVector::from(alloc::vec![0.5]), 0.1).unwrap(),
            [0.95]
        );
        assert_eq!(sgd_step(&p, &GradientVector::zeros(1), 0.1).unwrap(), p);
        let g = GradientVector::from(alloc::vec![0.3]);
        let h = GradientVector::from(alloc::vec![-1.1]);
        let two = sgd_step(&sgd_step(&p, &g, 0.1).unwrap(), &h, 0.1).unwrap();
        let one = sgd_step(&p, &GradientVector::from(alloc::vec![0.3 - 1.1]), 0.1).unwrap();
        assert!((two[0] - one[0]).abs() < 1e-15);
        assert!(matches!(
            sgd_step(&p, &GradientVector::zeros(2), 0.1),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn classification_rule() {
        assert_eq!(classify(-0.3), -1.0);
        assert_eq!(classify(0.3), 1.0);
        assert_eq!(classify(0.0), 1.0);
    }

    #[test]
    fn config_invariants() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: f64::NAN,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn accuracy_examples() {
        let set = toy_set();
        let positive = ImageSet::new(
            (1, 2),
            alloc::vec![alloc::vec![0.0, 0.0]; 3],
            alloc::vec![1.0; 3],
            (3, 6),
        )
        .unwrap();
        let c = Constant(1.0, ParamVector::zeros(1));
        assert_eq!(evaluate_accuracy(&c, &Sequential, &positive).unwrap(), 1.0);
        assert_eq!(evaluate_accuracy(&c, &Sequential, &set).unwrap(), 0.5);
        assert!(matches!(
            evaluate_accuracy(&c, &Sequential, &set.take(0)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn batch_gradient_is_mean_of_sample_gradients() {
        let model = toy_model(1);
        let set = toy_set();
        let samples: Vec<&[f64]> = set.images().iter().map(|v| v.as_slice()).collect();
        let (_, mean) = batch_gradients(&model, &Sequential, &samples, set.labels(), LossKind::Mse).unwrap();
        let mut manual: Vec<Vec<f64>> = mean.iter().map(|g| alloc::vec![0.0; g.len()]).collect();
        for (s, &y) in samples.iter().zip(set.labels()) {
            let (_, g) = batch_gradients(&model, &Sequential, &[*s], &[y], LossKind::Mse).unwrap();
            for (m, gi) in manual.iter_mut().zip(&g) {
                m.iter_mut()
                    .zip(gi.iter())
                    .for_each(|(a, b)| *a += b / samples.len() as f64);
            }
        }
        for (m, g) in manual.iter().zip(&mean) {
            for (a, b) in m.iter().zip(g.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_sample_equals_single_update() {
        let set = toy_set();
        let x = set.images()[0].as_slice();
        let config = TrainConfig::default();
        let mut once = toy_model(2);
        let mut twice = once.clone();
        train_batch(&mut once, &Sequential, &[x], &[1.0], &config).unwrap();
        train_batch(&mut twice, &Sequential, &[x, x], &[1.0, 1.0], &config).unwrap();
        for (a, b) in once.param_groups().iter().zip(twice.param_groups()) {
            for (u, v) in a.iter().zip(b.iter()) {
                assert!((u - v).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn loss_decreases_on_separable_toy_problem() {
        let mut model = toy_model(3);
        let set = toy_set();
        let samples: Vec<&[f64]> = set.images().iter().map(|v| v.as_slice()).collect();
        let config = TrainConfig {
            learning_rate: 0.2,
            batch_size: 6,
            ..Default::default()
        };
        let initial = batch_gradients(&model, &Sequential, &samples, set.labels(), LossKind::Mse)
            .unwrap()
            .0;
        for _ in 0..50 {
            train_batch(&mut model, &Sequential, &samples, set.labels(), &config).unwrap();
        }
        let last = batch_gradients(&model, &Sequential, &samples, set.labels(), LossKind::Mse)
            .unwrap()
            .0;
        assert!(last < initial, "{last} >= {initial}");
    }

    #[test]
    fn training_is_deterministic_and_tracks_best() {
        let set = toy_set();
        let config = TrainConfig {
            learning_rate: 0.1,
            batch_size: 4,
            epochs: 4,
            seed: 9,
            ..Default::default()
        };
        let run = || {
            let mut model = toy_model(config.seed);
            let mut progress = TrainProgress::new(ChaCha8Rng::seed_from_u64(config.seed));
            let mut improvements = 0;
            train(
                &mut model,
                &set,
                &set,
                &config,
                &Sequential,
                &FrozenClock,
                &mut progress,
                |_, _, better| {
                    improvements += usize::from(better);
                    Ok(())
                },
            )
            .unwrap();
            (model, progress, improvements)
        };
        let (m1, p1, n1) = run();
        let (m2, p2, _) = run();
        assert_eq!(m1, m2);
        assert_eq!(p1.history, p2.history);
        assert_eq!(p1.history.len(), 4);
        assert!(n1 >= 1);
        let best = p1.best_accuracy.unwrap();
        assert!(p1.history.iter().all(|m| m.val_accuracy <= best && m.seconds == 0.0));
    }

    #[test]
    fn resuming_matches_uninterrupted_run() {
        let set = toy_set();
        let full = TrainConfig {
            learning_rate: 0.1,
            batch_size: 4,
            epochs: 4,
            seed: 5,
            ..Default::default()
        };
        let half = TrainConfig { epochs: 2, ..full };
        let mut a = toy_model(5);
        let mut pa = TrainProgress::new(ChaCha8Rng::seed_from_u64(5));
        train(
            &mut a,
            &set,
            &set,
            &full,
            &Sequential,
            &FrozenClock,
            &mut pa,
            |_, _, _| Ok(()),
        )
        .unwrap();
        let mut b = toy_model(5);
        let mut pb = TrainProgress::new(ChaCha8Rng::seed_from_u64(5));
        train(
            &mut b,
            &set,
            &set,
            &half,
            &Sequential,
            &FrozenClock,
            &mut pb,
            |_, _, _| Ok(()),
        )
        .unwrap();
        let mut pb2 = pb.clone();
        train(
            &mut b,
            &set,
            &set,
            &full,
            &Sequential,
            &FrozenClock,
            &mut pb2,
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(pa.history, pb2.history);
    }
}
