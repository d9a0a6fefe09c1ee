//! Functional simulator for bit-sliced compute-in-memory (CIM) crossbars.
//!
//! Weight matrices are quantized to sign/magnitude fixed point, sliced one
//! bit per crossbar column, and partitioned into fixed-height row sections.
//! Sections can be laid out in the original row order or with sorted weight
//! sectioning (SWS): rows sorted by magnitude so that low-magnitude sections
//! leave high-order columns empty and zero weights compact into sections that
//! are never programmed. Only columns that hold at least one set bit need an
//! analog-to-digital conversion, so sorting cuts ADC energy.
//!
//! The crate covers the full pipeline:
//!
//! - [`quant`]: float -> sign/magnitude codes, bit-slicing, magnitude pruning
//! - [`mapper`]: section layouts, activation permutation, overhead estimates
//! - [`xbar`]: per-column analog sums, ADC quantization, shift-add, and an
//!   exact integer reference for the same dot products
//! - [`energy`]: conversion counting and ADC/driver/mux energy models
//! - [`theory`]: Gaussian bit-statistics behind the sorted layout, with
//!   Monte Carlo validation
//! - [`io`]: NPY/CSV tensors, experiment configs, and report documents

pub mod energy;
pub mod error;
pub mod io;
pub mod mapper;
pub mod quant;
pub mod theory;
pub mod xbar;

pub use error::{Error, Result};
