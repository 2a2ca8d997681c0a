use sqnn_core::partition::{make_partition, DeviceSpec, PartitionStrategy, Role};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Tile layout of an experiment's image partition.
pub fn from_config(config: &ExperimentConfig) -> Result<String> {
    let plan = config.partition_plan().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(plan.render())
}

/// Tile layout for an ad-hoc geometry.
pub fn from_geometry(image: (usize, usize), capacities: &[usize], strategy: PartitionStrategy) -> Result<String> {
    let devices: Vec<DeviceSpec> = capacities
        .iter()
        .enumerate()
        .map(|(i, &c)| DeviceSpec::new(format!("extractor-{i}"), c, Role::Extractor))
        .collect();
    let plan = make_partition(image, &devices, strategy).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(plan.render())
}
