//! Versioned plain-text weight files.
//!
//! Layout: a magic/version line, the four dimensions, the input statistics,
//! then every tensor in the fixed parameter order as a `tensor <name>
//! <rows> <cols>` line followed by one row per line, row-major, 17
//! significant digits. A final `end` line guards against truncation.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{fmt_f64, ChannelStats, CHANNELS};

use super::{LstmError, LstmNetwork, OUTPUTS};

const MAGIC: &str = "ahrs-lstm-weights";
const VERSION: &str = "v1";

fn tensor_names() -> Vec<String> {
    let mut names = Vec::with_capacity(26);
    for layer in ["layer1", "layer2"] {
        for gate in ["input_gate", "forget_gate", "candidate", "output_gate"] {
            for part in ["w", "u", "b"] {
                names.push(format!("{layer}.{gate}.{part}"));
            }
        }
    }
    names.push("head.w".into());
    names.push("head.b".into());
    names
}

pub fn save_weights(net: &LstmNetwork, path: impl AsRef<Path>) -> Result<(), LstmError> {
    net.validate()?;
    let mut out = String::new();
    out.push_str(&format!("{MAGIC} {VERSION}\n"));
    out.push_str(&format!("input {}\n", net.input_size()));
    out.push_str(&format!("hidden1 {}\n", net.hidden1()));
    out.push_str(&format!("hidden2 {}\n", net.hidden2()));
    out.push_str(&format!("output {OUTPUTS}\n"));
    out.push_str(&format!("stats_mean {}\n", join_floats(&net.input_stats.mean)));
    out.push_str(&format!(
        "stats_stddev {}\n",
        join_floats(&net.input_stats.stddev)
    ));
    let names = tensor_names();
    for (name, slice_dims) in names.iter().zip(tensor_views(net)) {
        let (rows, cols, data) = slice_dims;
        out.push_str(&format!("tensor {name} {rows} {cols}\n"));
        for r in 0..rows {
            let row: Vec<String> = (0..cols)
                .map(|c| fmt_f64(data[c * rows + r])) // column-major storage
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    fs::write(path, out)?;
    Ok(())
}

fn tensor_views(net: &LstmNetwork) -> Vec<(usize, usize, &[f64])> {
    let mut out = Vec::with_capacity(26);
    for layer in [&net.layer1, &net.layer2] {
        for gate in layer.gates() {
            out.push((gate.w.nrows(), gate.w.ncols(), gate.w.as_slice()));
            out.push((gate.u.nrows(), gate.u.ncols(), gate.u.as_slice()));
            out.push((gate.b.len(), 1, gate.b.as_slice()));
        }
    }
    out.push((net.head_w.nrows(), net.head_w.ncols(), net.head_w.as_slice()));
    out.push((net.head_b.len(), 1, net.head_b.as_slice()));
    out
}

fn join_floats(xs: &[f64]) -> String {
    xs.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<LstmNetwork, LstmError> {
    let text = fs::read_to_string(path)?;
    parse_weights(&text)
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<&'a str, LstmError> {
        self.line_no += 1;
        self.lines.next().ok_or(LstmError::Corrupt {
            line: self.line_no,
            message: "unexpected end of file".into(),
        })
    }

    fn corrupt(&self, message: impl Into<String>) -> LstmError {
        LstmError::Corrupt {
            line: self.line_no,
            message: message.into(),
        }
    }
}

pub fn parse_weights(text: &str) -> Result<LstmNetwork, LstmError> {
    let mut reader = LineReader {
        lines: text.lines(),
        line_no: 0,
    };
    let header = reader.next()?;
    match header.split_once(' ') {
        Some((MAGIC, VERSION)) => {}
        Some((MAGIC, other)) => {
            return Err(LstmError::Version {
                found: other.to_string(),
            })
        }
        _ => return Err(reader.corrupt("not a weight file")),
    }
    let input = parse_dim(&mut reader, "input")?;
    let hidden1 = parse_dim(&mut reader, "hidden1")?;
    let hidden2 = parse_dim(&mut reader, "hidden2")?;
    let output = parse_dim(&mut reader, "output")?;
    if output != OUTPUTS {
        return Err(LstmError::Shape(format!(
            "weight file declares {output} outputs, this network has {OUTPUTS}"
        )));
    }
    let mean = parse_stats(&mut reader, "stats_mean")?;
    let stddev = parse_stats(&mut reader, "stats_stddev")?;

    let mut net = LstmNetwork::new(input, hidden1, hidden2, 0);
    net.input_stats = ChannelStats { mean, stddev };

    let names = tensor_names();
    let expected_dims = expected_shapes(input, hidden1, hidden2);
    for (name, (rows, cols)) in names.iter().zip(expected_dims) {
        let header = reader.next()?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("tensor") {
            return Err(reader.corrupt(format!("expected tensor header for {name}")));
        }
        if parts.next() != Some(name.as_str()) {
            return Err(reader.corrupt(format!("expected tensor {name}, found {header:?}")));
        }
        let r: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| reader.corrupt("bad tensor rows"))?;
        let c: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| reader.corrupt("bad tensor cols"))?;
        if (r, c) != (rows, cols) {
            return Err(LstmError::Shape(format!(
                "tensor {name} is {r}×{c}, the declared dimensions require {rows}×{cols}"
            )));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = reader.next()?;
            let row: Result<Vec<f64>, _> = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect();
            let row = row.map_err(|e| reader.corrupt(format!("bad value: {e}")))?;
            if row.len() != cols {
                return Err(reader.corrupt(format!(
                    "tensor {name}: row has {} values, expected {cols}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        store_tensor(&mut net, name, rows, cols, &values);
    }
    if reader.next()? != "end" {
        return Err(reader.corrupt("missing end marker"));
    }
    net.validate()?;
    Ok(net)
}

fn expected_shapes(input: usize, hidden1: usize, hidden2: usize) -> Vec<(usize, usize)> {
    let mut dims = Vec::with_capacity(26);
    for (hidden, inp) in [(hidden1, input), (hidden2, hidden1)] {
        for _ in 0..4 {
            dims.push((hidden, inp));
            dims.push((hidden, hidden));
            dims.push((hidden, 1));
        }
    }
    dims.push((OUTPUTS, hidden2));
    dims.push((OUTPUTS, 1));
    dims
}

fn store_tensor(net: &mut LstmNetwork, name: &str, rows: usize, cols: usize, row_major: &[f64]) {
    let matrix = DMatrix::from_row_slice(rows, cols, row_major);
    let (layer, rest) = match name.split_once('.') {
        Some(("head", part)) => {
            match part {
                "w" => net.head_w = matrix,
                _ => net.head_b = DVector::from_row_slice(row_major),
            }
            return;
        }
        Some((layer, rest)) => (layer, rest),
        None => unreachable!("tensor names are dotted"),
    };
    let layer = if layer == "layer1" {
        &mut net.layer1
    } else {
        &mut net.layer2
    };
    let (gate_name, part) = rest.split_once('.').expect("gate.part");
    let gate = match gate_name {
        "input_gate" => &mut layer.input_gate,
        "forget_gate" => &mut layer.forget_gate,
        "candidate" => &mut layer.candidate,
        _ => &mut layer.output_gate,
    };
    match part {
        "w" => gate.w = matrix,
        "u" => gate.u = matrix,
        _ => gate.b = DVector::from_row_slice(row_major),
    }
}

fn parse_dim(reader: &mut LineReader, key: &str) -> Result<usize, LstmError> {
    let line = reader.next()?;
    match line.split_once(' ') {
        Some((k, v)) if k == key => v
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| reader.corrupt(format!("bad {key} value {v:?}"))),
        _ => Err(reader.corrupt(format!("expected `{key} <n>`, found {line:?}"))),
    }
}

fn parse_stats(reader: &mut LineReader, key: &str) -> Result<[f64; CHANNELS], LstmError> {
    let line = reader.next()?;
    let (k, rest) = line
        .split_once(' ')
        .ok_or_else(|| reader.corrupt(format!("expected `{key} ...`")))?;
    if k != key {
        return Err(reader.corrupt(format!("expected {key}, found {k}")));
    }
    let values: Result<Vec<f64>, _> = rest.split_whitespace().map(|v| v.parse()).collect();
    let values = values.map_err(|e| reader.corrupt(format!("bad value: {e}")))?;
    if values.len() != CHANNELS {
        return Err(reader.corrupt(format!(
            "{key} needs {CHANNELS} values, found {}",
            values.len()
        )));
    }
    let mut out = [0.0; CHANNELS];
    out.copy_from_slice(&values);
    Ok(out)
}
