//! Analytic memory estimate for the integer inference path on a device.
//!
//! Parameter bytes are the sizes of the exported arrays. Working buffers are
//! what the inference loop needs at once: the scaled input window, one
//! convolution output row, the per-feature values and the class scores, all
//! at accumulator width.

use crate::error::Result;
use crate::quant::QuantizedModel;

use super::export::{firmware_arrays, CType};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FootprintReport {
    pub parameter_bytes: usize,
    pub working_bytes: usize,
    pub parameters: Vec<(&'static str, usize)>,
    pub buffers: Vec<(&'static str, usize)>,
}

pub fn footprint(q: &QuantizedModel) -> Result<FootprintReport> {
    let parameters: Vec<(&'static str, usize)> =
        firmware_arrays(q)?.iter().map(|a| (a.name, a.bytes())).collect();
    let acc = CType::accumulator(q.calibration.bit_width).size();
    let s = &q.kernels.structure;
    let buffers = vec![
        ("scaled_input", s.channels * s.window_length * acc),
        ("convolution", s.window_length * acc),
        ("features", q.feature_count() * acc),
        ("scores", q.class_count() * acc),
    ];
    Ok(FootprintReport {
        parameter_bytes: parameters.iter().map(|p| p.1).sum(),
        working_bytes: buffers.iter().map(|b| b.1).sum(),
        parameters,
        buffers,
    })
}
