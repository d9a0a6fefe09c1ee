//! Tensor, config, and report I/O.
//!
//! Tensors travel as NPY v1.0 (little-endian float32/float64, C order) or
//! plain numeric CSV, picked by file extension. Configs are TOML, reports
//! are JSON; both have stable schemas documented on their types.

mod csv;
pub mod npy;

pub mod config;
pub mod report;

pub use config::{
    load_config, parse_config, ActivationSource, ExperimentConfig, OrderMode, ProfileSpec,
};
pub use report::{
    read_report, write_report, ComparisonBlock, ErrorMetrics, LayerComparison, LayerErrors,
    ReportDocument,
};

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::quant::FloatTensor;

fn extension(path: &Path) -> Result<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .ok_or_else(|| {
            Error::Unsupported(format!(
                "cannot infer tensor format of {} (expected .npy or .csv)",
                path.display()
            ))
        })
}

/// Wraps an io error with the path it happened on.
pub(crate) fn named_io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(
        e.kind(),
        format!("{}: {e}", path.display()),
    ))
}

/// Loads a tensor, choosing the format from the file extension.
pub fn load_tensor(path: &Path) -> Result<FloatTensor> {
    let file = File::open(path).map_err(|e| named_io(path, e))?;
    let mut reader = BufReader::new(file);
    match extension(path)?.as_str() {
        "npy" => npy::read_npy(&mut reader),
        "csv" => csv::read_csv(&mut reader),
        other => Err(Error::Unsupported(format!(
            "unknown tensor extension .{other} (expected .npy or .csv)"
        ))),
    }
}

/// Saves a tensor, choosing the format from the file extension.
pub fn save_tensor(t: &FloatTensor, path: &Path) -> Result<()> {
    let ext = extension(path)?;
    let file = File::create(path).map_err(|e| named_io(path, e))?;
    let mut writer = BufWriter::new(file);
    match ext.as_str() {
        "npy" => npy::write_npy(&mut writer, t),
        "csv" => csv::write_csv(&mut writer, t),
        other => Err(Error::Unsupported(format!(
            "unknown tensor extension .{other} (expected .npy or .csv)"
        ))),
    }
}

/// Draws an i.i.d. `N(0, sigma)` tensor from a seeded ChaCha stream.
pub fn synthetic_gaussian(sigma: f64, shape: &[usize], seed: u64) -> Result<FloatTensor> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive and finite, got {sigma}"
        )));
    }
    let n: usize = shape.iter().product();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            z * sigma
        })
        .collect();
    FloatTensor::new(shape.to_vec(), values)
}
