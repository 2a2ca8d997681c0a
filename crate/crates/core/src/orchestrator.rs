//! Multi-device SQNN: feature extractors, predictor, and the gradient routing
//! between them.
//!
//! Each extractor device angle-encodes its image segment, runs its own
//! circuit and reports one feature `f_i = ⟨Z⟩ ∈ [−1, 1]` over the classical
//! channel. The predictor encodes `feature_to_angle(f_i)` on its data qubits
//! and outputs `y′`. Backpropagation multiplies `∂L/∂y′` by `∂y′/∂f_i`
//! (shift rule on the predictor's encoding rotation, times `π/2`) and by the
//! extractor's own parameter-shift gradient.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Deref;

use rand::Rng;

use crate::encoding::{angle_encode_product, feature_to_angle, AngleEncodingConfig, FEATURE_ANGLE_SLOPE};
use crate::error::{check_index, check_len, Error, Result};
use crate::exec::{Executor, Sequential};
use crate::gates::Axis;
use crate::gradients::{full_gradient, input_gradient, GradientVector};
use crate::partition::{make_partition, DeviceSpec, PartitionPlan, PartitionStrategy, Role};
use crate::product::ProductState;
use crate::training::Classifier;
use crate::vqc::{build_basic_model, CircuitSpec, ParamVector, ReadoutPrep};

/// A simulated device together with the circuit it runs and that circuit's parameters.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Device {
    pub spec: DeviceSpec,
    pub circuit: CircuitSpec,
    pub params: ParamVector,
}

impl Device {
    fn check(&self) -> Result<()> {
        self.circuit.validate()?;
        check_len("device parameters", self.circuit.num_params(), self.params.len())?;
        if self.circuit.num_data_qubits() > self.spec.data_qubit_capacity {
            return Err(Error::Capacity {
                requested: self.circuit.num_data_qubits(),
                limit: self.spec.data_qubit_capacity,
            });
        }
        Ok(())
    }

    fn output(&self, input: &ProductState) -> Result<f64> {
        self.circuit.evaluate_product(&self.params, input)
    }
}

/// Block layout of one device circuit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct CircuitShape {
    pub blocks: usize,
    pub axes: Vec<Axis>,
    pub readout: ReadoutPrep,
}

impl CircuitShape {
    pub fn build(&self, n_data: usize) -> Result<CircuitSpec> {
        Ok(build_basic_model(n_data, self.blocks, &self.axes)?.with_readout(self.readout))
    }
}

/// Extracted features, one per extractor, each in `[−1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::Validation(alloc::format!("feature {v} outside [-1, 1]")));
        }
        Ok(FeatureVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// A feature in transit from an extractor to the predictor.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureRecord {
    pub device_id: String,
    pub sample_id: u64,
    pub feature: f64,
}

/// What the classical side keeps about one circuit run on a shared device.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionRecord {
    pub device_id: String,
    pub role: Role,
    /// Extractor index for extractor runs, `p` for the predictor run.
    pub slot: usize,
    pub circuit: CircuitSpec,
    pub params: ParamVector,
    pub output: f64,
}

/// Result of a forward pass, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub features: FeatureVector,
    pub output: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqnnGradients {
    pub predictor: GradientVector,
    pub extractors: Vec<GradientVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialRun {
    pub features: FeatureVector,
    pub output: f64,
    pub channel: Vec<FeatureRecord>,
    pub log: Vec<ExecutionRecord>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SqnnModel {
    extractors: Vec<Device>,
    predictor: Device,
    partition: PartitionPlan,
    encoding: AngleEncodingConfig,
}

impl SqnnModel {
    pub fn new(
        extractors: Vec<Device>,
        predictor: Device,
        partition: PartitionPlan,
        encoding: AngleEncodingConfig,
    ) -> Result<Self> {
        let model = SqnnModel {
            extractors,
            predictor,
            partition,
            encoding,
        };
        model.validate()?;
        Ok(model)
    }

    /// Checks every structural invariant; run this on deserialized models.
    pub fn validate(&self) -> Result<()> {
        self.encoding.validate()?;
        self.partition.validate()?;
        let p = self.extractors.len();
        check_len("partition segments", p, self.partition.num_segments())?;
        if self.predictor.spec.role != Role::Predictor {
            return Err(Error::Config(alloc::format!(
                "device {} is used as predictor but has role {:?}",
                self.predictor.spec.device_id,
                self.predictor.spec.role
            )));
        }
        self.predictor.check()?;
        check_len("predictor data qubits", p, self.predictor.circuit.num_data_qubits())?;
        for (dev, seg) in self.extractors.iter().zip(self.partition.segments()) {
            if dev.spec.role != Role::Extractor {
                return Err(Error::Config(alloc::format!(
                    "device {} is used as extractor but has role {:?}",
                    dev.spec.device_id,
                    dev.spec.role
                )));
            }
            dev.check()?;
            check_len("extractor data qubits", seg.len(), dev.circuit.num_data_qubits())?;
        }
        Ok(())
    }

    /// Partitions the image over the extractor devices and draws every
    /// parameter from `U[−π, π)`: extractors in device order, then the predictor.
    #[allow(clippy::too_many_arguments)]
    pub fn initialize<R: Rng + ?Sized>(
        image_shape: (usize, usize),
        devices: &[DeviceSpec],
        strategy: PartitionStrategy,
        extractor_shape: &CircuitShape,
        predictor_shape: &CircuitShape,
        encoding: AngleEncodingConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let partition = make_partition(image_shape, devices, strategy)?;
        let mut predictors = devices.iter().filter(|d| d.role == Role::Predictor);
        let predictor_spec = match (predictors.next(), predictors.next()) {
            (Some(d), None) => d.clone(),
            (None, _) => {
                return Err(Error::Config(
                    "an SQNN needs exactly one predictor device, found none".into(),
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "an SQNN needs exactly one predictor device, found several".into(),
                ))
            }
        };
        let mut extractors = Vec::new();
        for (spec, seg) in devices
            .iter()
            .filter(|d| d.role == Role::Extractor)
            .zip(partition.segments())
        {
            let circuit = extractor_shape.build(seg.len())?;
            let params = ParamVector::random_uniform(circuit.num_params(), rng);
            extractors.push(Device {
                spec: spec.clone(),
                circuit,
                params,
            });
        }
        let p = extractors.len();
        if predictor_spec.data_qubit_capacity < p {
            return Err(Error::Capacity {
                requested: p,
                limit: predictor_spec.data_qubit_capacity,
            });
        }
        let circuit = predictor_shape.build(p)?;
        let params = ParamVector::random_uniform(circuit.num_params(), rng);
        let predictor = Device {
            spec: predictor_spec,
            circuit,
            params,
        };
        Self::new(extractors, predictor, partition, encoding)
    }

    pub fn extractors(&self) -> &[Device] {
        &self.extractors
    }

    pub fn predictor(&self) -> &Device {
        &self.predictor
    }

    pub fn partition(&self) -> &PartitionPlan {
        &self.partition
    }

    pub fn encoding(&self) -> &AngleEncodingConfig {
        &self.encoding
    }

    pub fn num_extractors(&self) -> usize {
        self.extractors.len()
    }

    fn segment_input(&self, sample: &[f64], i: usize) -> Result<ProductState> {
        angle_encode_product(&self.partition.gather(sample, i)?, &self.encoding)
    }

    fn predictor_angles(&self, features: &[f64]) -> Result<Vec<f64>> {
        check_len("feature vector", self.extractors.len(), features.len())?;
        Ok(features.iter().map(|&f| feature_to_angle(f)).collect())
    }

    /// Feature of extractor `i` for `sample`.
    pub fn extract_feature(&self, sample: &[f64], i: usize) -> Result<f64> {
        check_index(i, self.extractors.len())?;
        self.extractors[i].output(&self.segment_input(sample, i)?)
    }

    /// Runs every extractor on its segment; each sends one record over the
    /// classical channel.
    pub fn extractor_messages<E: Executor>(
        &self,
        exec: &E,
        sample: &[f64],
        sample_id: u64,
    ) -> Result<Vec<FeatureRecord>> {
        check_len("image pixels", self.partition.num_pixels(), sample.len())?;
        exec.map(self.extractors.len(), |i| {
            self.extract_feature(sample, i).map(|feature| FeatureRecord {
                device_id: self.extractors[i].spec.device_id.clone(),
                sample_id,
                feature,
            })
        })
        .into_iter()
        .collect()
    }

    /// Predictor-side collection: orders the records by extractor.
    pub fn collect_features(&self, records: &[FeatureRecord]) -> Result<FeatureVector> {
        check_len("feature records", self.extractors.len(), records.len())?;
        let sample_id = records.first().map(|r| r.sample_id);
        let values = self
            .extractors
            .iter()
            .map(|dev| {
                records
                    .iter()
                    .find(|r| r.device_id == dev.spec.device_id && Some(r.sample_id) == sample_id)
                    .map(|r| r.feature)
                    .ok_or_else(|| Error::Validation(alloc::format!("no feature from device {}", dev.spec.device_id)))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureVector::new(values)
    }

    pub fn extract_features(&self, sample: &[f64]) -> Result<FeatureVector> {
        self.extract_features_with(&Sequential, sample)
    }

    pub fn extract_features_with<E: Executor>(&self, exec: &E, sample: &[f64]) -> Result<FeatureVector> {
        self.collect_features(&self.extractor_messages(exec, sample, 0)?)
    }

    /// `y′` from the predictor circuit on angle-encoded features.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        let input = ProductState::from_angles(&self.predictor_angles(features)?, self.encoding.axis)?;
        self.predictor.output(&input)
    }

    pub fn forward(&self, sample: &[f64]) -> Result<Forward> {
        let features = self.extract_features(sample)?;
        let output = self.predict(&features)?;
        Ok(Forward { features, output })
    }

    /// `∂y′/∂f_i` for every feature.
    pub fn feature_sensitivity(&self, features: &[f64]) -> Result<GradientVector> {
        let angles = self.predictor_angles(features)?;
        let g = input_gradient(
            &self.predictor.circuit,
            &self.predictor.params,
            &angles,
            self.encoding.axis,
        )?;
        Ok(g.scaled(FEATURE_ANGLE_SLOPE))
    }

    /// Loss gradients for every parameter group given `∂L/∂y′`.
    pub fn backward(&self, sample: &[f64], forward: &Forward, dl_dy: f64) -> Result<SqnnGradients> {
        let angles = self.predictor_angles(&forward.features)?;
        let pred_input = ProductState::from_angles(&angles, self.encoding.axis)?;
        let predictor = full_gradient(&self.predictor.circuit, &self.predictor.params, &pred_input)?.scaled(dl_dy);
        let dy_df = self.feature_sensitivity(&forward.features)?;
        let extractors = self
            .extractors
            .iter()
            .enumerate()
            .map(|(i, dev)| {
                let input = self.segment_input(sample, i)?;
                Ok(full_gradient(&dev.circuit, &dev.params, &input)?.scaled(dl_dy * dy_df[i]))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SqnnGradients { predictor, extractors })
    }

    /// The whole forward pass on one physical device that plays each
    /// extractor role in turn and then the predictor role. The classical
    /// side logs every run.
    pub fn run_sequential(&self, device: &DeviceSpec, sample: &[f64], sample_id: u64) -> Result<SequentialRun> {
        let needed = self
            .extractors
            .iter()
            .map(|d| d.circuit.num_data_qubits())
            .chain(core::iter::once(self.predictor.circuit.num_data_qubits()))
            .max()
            .unwrap_or(0);
        if device.data_qubit_capacity < needed {
            return Err(Error::Capacity {
                requested: needed,
                limit: device.data_qubit_capacity,
            });
        }
        check_len("image pixels", self.partition.num_pixels(), sample.len())?;
        let mut channel = Vec::with_capacity(self.extractors.len());
        let mut log = Vec::with_capacity(self.extractors.len() + 1);
        for (i, role) in self.extractors.iter().enumerate() {
            let feature = role.output(&self.segment_input(sample, i)?)?;
            log.push(ExecutionRecord {
                device_id: device.device_id.clone(),
                role: Role::Extractor,
                slot: i,
                circuit: role.circuit.clone(),
                params: role.params.clone(),
                output: feature,
            });
            channel.push(FeatureRecord {
                device_id: role.spec.device_id.clone(),
                sample_id,
                feature,
            });
        }
        let features = self.collect_features(&channel)?;
        let output = self.predict(&features)?;
        log.push(ExecutionRecord {
            device_id: device.device_id.clone(),
            role: Role::Predictor,
            slot: self.extractors.len(),
            circuit: self.predictor.circuit.clone(),
            params: self.predictor.params.clone(),
            output,
        });
        Ok(SequentialRun {
            features,
            output,
            channel,
            log,
        })
    }
}

/// A single-device classifier on the whole (downscaled) image.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QnnModel {
    device: Device,
    image_shape: (usize, usize),
    encoding: AngleEncodingConfig,
}

impl QnnModel {
    pub fn new(device: Device, image_shape: (usize, usize), encoding: AngleEncodingConfig) -> Result<Self> {
        let model = QnnModel {
            device,
            image_shape,
            encoding,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.encoding.validate()?;
        self.device.check()?;
        check_len(
            "data qubits",
            self.image_shape.0 * self.image_shape.1,
            self.device.circuit.num_data_qubits(),
        )
    }

    pub fn initialize<R: Rng + ?Sized>(
        image_shape: (usize, usize),
        device: DeviceSpec,
        shape: &CircuitShape,
        encoding: AngleEncodingConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let pixels = image_shape.0 * image_shape.1;
        if device.data_qubit_capacity < pixels {
            return Err(Error::Capacity {
                requested: pixels,
                limit: device.data_qubit_capacity,
            });
        }
        let circuit = shape.build(pixels)?;
        let params = ParamVector::random_uniform(circuit.num_params(), rng);
        Self::new(
            Device {
                spec: device,
                circuit,
                params,
            },
            image_shape,
            encoding,
        )
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn image_shape(&self) -> (usize, usize) {
        self.image_shape
    }

    pub fn encoding(&self) -> &AngleEncodingConfig {
        &self.encoding
    }

    fn input(&self, sample: &[f64]) -> Result<ProductState> {
        check_len("image pixels", self.image_shape.0 * self.image_shape.1, sample.len())?;
        angle_encode_product(sample, &self.encoding)
    }

    pub fn forward(&self, sample: &[f64]) -> Result<f64> {
        self.device.output(&self.input(sample)?)
    }

    pub fn backward(&self, sample: &[f64], dl_dy: f64) -> Result<GradientVector> {
        Ok(full_gradient(&self.device.circuit, &self.device.params, &self.input(sample)?)?.scaled(dl_dy))
    }
}

/// Either kind of classifier, as built from an experiment configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Model {
    Qnn(QnnModel),
    Sqnn(SqnnModel),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Qnn(m) => m.validate(),
            Model::Sqnn(m) => m.validate(),
        }
    }

    pub fn image_shape(&self) -> (usize, usize) {
        match self {
            Model::Qnn(m) => m.image_shape(),
            Model::Sqnn(m) => m.partition().image_shape(),
        }
    }

    pub fn devices(&self) -> Vec<&Device> {
        match self {
            Model::Qnn(m) => alloc::vec![&m.device],
            Model::Sqnn(m) => m.extractors.iter().chain(core::iter::once(&m.predictor)).collect(),
        }
    }
}

impl Classifier for QnnModel {
    type Cache = ();

    fn forward(&self, sample: &[f64]) -> Result<((), f64)> {
        Ok(((), QnnModel::forward(self, sample)?))
    }

    fn backward(&self, sample: &[f64], _cache: &(), dl_dy: f64) -> Result<Vec<GradientVector>> {
        Ok(alloc::vec![QnnModel::backward(self, sample, dl_dy)?])
    }

    fn param_groups(&self) -> Vec<&ParamVector> {
        alloc::vec![&self.device.params]
    }

    fn param_groups_mut(&mut self) -> Vec<&mut ParamVector> {
        alloc::vec![&mut self.device.params]
    }
}

impl Classifier for SqnnModel {
    type Cache = Forward;

    fn forward(&self, sample: &[f64]) -> Result<(Forward, f64)> {
        let fwd = SqnnModel::forward(self, sample)?;
        let y = fwd.output;
        Ok((fwd, y))
    }

    /// Groups are the extractors in order, then the predictor.
    fn backward(&self, sample: &[f64], cache: &Forward, dl_dy: f64) -> Result<Vec<GradientVector>> {
        let g = SqnnModel::backward(self, sample, cache, dl_dy)?;
        let mut groups = g.extractors;
        groups.push(g.predictor);
        Ok(groups)
    }

    fn param_groups(&self) -> Vec<&ParamVector> {
        self.extractors
            .iter()
            .map(|d| &d.params)
            .chain(core::iter::once(&self.predictor.params))
            .collect()
    }

    fn param_groups_mut(&mut self) -> Vec<&mut ParamVector> {
        self.extractors
            .iter_mut()
            .map(|d| &mut d.params)
            .chain(core::iter::once(&mut self.predictor.params))
            .collect()
    }
}

impl Classifier for Model {
    type Cache = Option<Forward>;

    fn forward(&self, sample: &[f64]) -> Result<(Option<Forward>, f64)> {
        match self {
            Model::Qnn(m) => Ok((None, QnnModel::forward(m, sample)?)),
            Model::Sqnn(m) => {
                let (fwd, y) = Classifier::forward(m, sample)?;
                Ok((Some(fwd), y))
            }
        }
    }

    fn backward(&self, sample: &[f64], cache: &Option<Forward>, dl_dy: f64) -> Result<Vec<GradientVector>> {
        match (self, cache) {
            (Model::Qnn(m), _) => Classifier::backward(m, sample, &(), dl_dy),
            (Model::Sqnn(m), Some(fwd)) => Classifier::backward(m, sample, fwd, dl_dy),
            (Model::Sqnn(_), None) => Err(Error::Validation("SQNN backward needs its forward cache".into())),
        }
    }

    fn param_groups(&self) -> Vec<&ParamVector> {
        match self {
            Model::Qnn(m) => m.param_groups(),
            Model::Sqnn(m) => m.param_groups(),
        }
    }

    fn param_groups_mut(&mut self) -> Vec<&mut ParamVector> {
        match self {
            Model::Qnn(m) => m.param_groups_mut(),
            Model::Sqnn(m) => m.param_groups_mut(),
        }
    }
}
