//! Static C array export of a quantized model.
//!
//! The layout is fixed so firmware builds are reproducible:
//!
//! | name | type | length |
//! |---|---|---|
//! | `rkl_patterns` | `uint8_t` | 84 × 3, tap indices weighted +2 |
//! | `rkl_pair_kernel` | `uint8_t` | P |
//! | `rkl_pair_dilation` | `uint16_t` | P |
//! | `rkl_pair_padding` | `uint8_t` | P |
//! | `rkl_pair_channel_start` | `uint16_t` | P + 1, offsets into `rkl_channels` |
//! | `rkl_pair_feature_count` | `uint16_t` | P |
//! | `rkl_channels` | `uint8_t` | Σ channels per pair |
//! | `rkl_biases_q` | acc | T |
//! | `rkl_comparison_counts` | `uint16_t` | T |
//! | `rkl_weights_q` | acc | T × K, row-major |
//! | `rkl_class_biases_q` | acc | K |
//!
//! `acc` is `int32_t` for bit widths up to 32 and `int64_t` above. Scalars
//! (`RKL_S1`, `RKL_S2`, `RKL_INPUT_CLAMP`, shapes) are emitted as macros.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::transform::build_kernels;

use super::bundle::ModelBundle;
use crate::quant::QuantizedModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CType {
    U8,
    U16,
    I32,
    I64,
}

impl CType {
    pub fn name(self) -> &'static str {
        match self {
            CType::U8 => "uint8_t",
            CType::U16 => "uint16_t",
            CType::I32 => "int32_t",
            CType::I64 => "int64_t",
        }
    }

    pub fn size(self) -> usize {
        match self {
            CType::U8 => 1,
            CType::U16 => 2,
            CType::I32 => 4,
            CType::I64 => 8,
        }
    }

    fn range(self) -> (i128, i128) {
        match self {
            CType::U8 => (0, u8::MAX as i128),
            CType::U16 => (0, u16::MAX as i128),
            CType::I32 => (i32::MIN as i128, i32::MAX as i128),
            CType::I64 => (i64::MIN as i128, i64::MAX as i128),
        }
    }

    /// Accumulator type for a bit width.
    pub fn accumulator(bits: u32) -> Self {
        if bits <= 32 {
            CType::I32
        } else {
            CType::I64
        }
    }
}

/// One exported array.
#[derive(Debug, Clone, PartialEq)]
pub struct CArray {
    pub name: &'static str,
    pub ctype: CType,
    /// Inner dimension for 2-D arrays.
    pub columns: Option<usize>,
    pub values: Vec<i64>,
}

impl CArray {
    pub fn bytes(&self) -> usize {
        self.values.len() * self.ctype.size()
    }
}

fn array(name: &'static str, ctype: CType, columns: Option<usize>, values: Vec<i64>) -> Result<CArray> {
    let (lo, hi) = ctype.range();
    if let Some(v) = values.iter().find(|&&v| (v as i128) < lo || (v as i128) > hi) {
        return Err(Error::QuantizationOverflow(format!(
            "{name}: value {v} does not fit {}",
            ctype.name()
        )));
    }
    Ok(CArray {
        name,
        ctype,
        columns,
        values,
    })
}

/// The exported arrays in emission order.
pub fn firmware_arrays(q: &QuantizedModel) -> Result<Vec<CArray>> {
    let pairs = &q.kernels.structure.pairs;
    let acc = CType::accumulator(q.calibration.bit_width);
    let patterns = build_kernels()
        .iter()
        .flat_map(|p| p.taps.iter().map(|&t| t as i64))
        .collect();
    let mut starts = vec![0i64];
    let mut channels = Vec::new();
    for p in pairs {
        channels.extend(p.channels.iter().map(|&c| c as i64));
        starts.push(channels.len() as i64);
    }
    let field = |f: fn(&crate::transform::KernelDilation) -> i64| pairs.iter().map(f).collect::<Vec<_>>();
    Ok(vec![
        array("rkl_patterns", CType::U8, Some(3), patterns)?,
        array("rkl_pair_kernel", CType::U8, None, field(|p| p.kernel as i64))?,
        array("rkl_pair_dilation", CType::U16, None, field(|p| p.dilation as i64))?,
        array("rkl_pair_padding", CType::U8, None, field(|p| p.padding as i64))?,
        array("rkl_pair_channel_start", CType::U16, None, starts)?,
        array("rkl_pair_feature_count", CType::U16, None, field(|p| p.feature_count as i64))?,
        array("rkl_channels", CType::U8, None, channels)?,
        array("rkl_biases_q", acc, None, q.biases_q.clone())?,
        array(
            "rkl_comparison_counts",
            CType::U16,
            None,
            q.comparison_counts.iter().map(|&c| c as i64).collect(),
        )?,
        array("rkl_weights_q", acc, Some(q.class_count()), q.weights_q.clone())?,
        array("rkl_class_biases_q", acc, None, q.class_biases_q.clone())?,
    ])
}

fn literal(v: i64, ctype: CType) -> String {
    match ctype {
        CType::I64 if v == i64::MIN => "(-9223372036854775807LL - 1)".to_string(),
        CType::I64 => format!("{v}LL"),
        CType::I32 if v == i32::MIN as i64 => "(-2147483647 - 1)".to_string(),
        _ => v.to_string(),
    }
}

/// Renders the quantized model as a C header. Output depends only on the
/// model, so repeated exports are byte-identical.
pub fn export_static_arrays(bundle: &ModelBundle) -> Result<String> {
    let q = bundle.quantized.as_ref().ok_or(Error::NotQuantized)?;
    let c = &q.calibration;
    let s = &q.kernels.structure;
    let mut out = String::new();
    out.push_str("/* Generated model parameters. Do not edit. */\n");
    out.push_str("#ifndef RKL_MODEL_H\n#define RKL_MODEL_H\n\n#include <stdint.h>\n\n");
    let acc = CType::accumulator(c.bit_width);
    let macros: [(&str, String); 10] = [
        ("RKL_WINDOW_LEN", s.window_length.to_string()),
        ("RKL_CHANNELS", s.channels.to_string()),
        ("RKL_FEATURES", q.feature_count().to_string()),
        ("RKL_CLASSES", q.class_count().to_string()),
        ("RKL_PAIRS", s.pairs.len().to_string()),
        ("RKL_KERNEL_LENGTH", "9".to_string()),
        ("RKL_BIT_WIDTH", c.bit_width.to_string()),
        ("RKL_S1", literal(c.s1, acc)),
        ("RKL_S2", literal(c.s2, acc)),
        ("RKL_INPUT_CLAMP", c.input_clamp.to_string()),
    ];
    for (name, value) in macros {
        let _ = writeln!(out, "#define {name} {value}");
    }
    out.push('\n');
    for (k, label) in q.class_labels.iter().enumerate() {
        let ident: String = label
            .chars()
            .map(|ch| if ch.is_ascii_alphanumeric() { ch.to_ascii_uppercase() } else { '_' })
            .collect();
        let _ = writeln!(out, "#define RKL_CLASS_{ident} {k}");
    }
    out.push('\n');
    for a in firmware_arrays(q)? {
        let dims = match a.columns {
            Some(cols) => format!("[{}][{cols}]", a.values.len() / cols),
            None => format!("[{}]", a.values.len()),
        };
        let _ = writeln!(out, "static const {} {}{} = {{", a.ctype.name(), a.name, dims);
        let per_line = a.columns.unwrap_or(12);
        for chunk in a.values.chunks(per_line.max(1)) {
            let items: Vec<String> = chunk.iter().map(|&v| literal(v, a.ctype)).collect();
            match a.columns {
                Some(_) => {
                    let _ = writeln!(out, "    {{{}}},", items.join(", "));
                }
                None => {
                    let _ = writeln!(out, "    {},", items.join(", "));
                }
            }
        }
        out.push_str("};\n\n");
    }
    out.push_str("#endif /* RKL_MODEL_H */\n");
    Ok(out)
}
