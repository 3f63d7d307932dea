//! Plain-text parameter checkpoints.
//!
//! ```text
//! rpinn-checkpoint 1
//! input_dim 2
//! hidden_layers 7
//! hidden_width 20
//! activation tanh
//! n_lambda 0
//! n_params 2601
//! -1.23456789012345678e-01
//! ...
//! ```
//!
//! Header keys appear in exactly this order. `n_params` counts network and
//! PDE parameters together; exactly that many values follow, one per line, in
//! [`super::Layout`] order, written with 17 significant digits so that reading
//! restores every value bit for bit.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{Activation, MlpSpec, ParamVector};
use crate::{Error, Result};

const MAGIC: &str = "rpinn-checkpoint";
const VERSION: u32 = 1;
const MAX_PARAMS: usize = 1 << 26;

pub fn write_checkpoint<W: Write>(mut w: W, spec: &MlpSpec, params: &ParamVector) -> Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "input_dim {}", spec.input_dim)?;
    writeln!(w, "hidden_layers {}", spec.hidden_layers)?;
    writeln!(w, "hidden_width {}", spec.hidden_width)?;
    writeln!(w, "activation tanh")?;
    writeln!(w, "n_lambda {}", params.layout().n_lambda())?;
    writeln!(w, "n_params {}", params.len())?;
    for v in params.values() {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

pub fn save_checkpoint(path: &Path, spec: &MlpSpec, params: &ParamVector) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, spec, params)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(MlpSpec, ParamVector)> {
    let text = fs::read_to_string(path)?;
    parse_checkpoint(&text)
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn header_value<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    key: &str,
) -> Result<(usize, &'a str)> {
    let (no, line) = lines
        .next()
        .ok_or_else(|| parse_err(0, format!("missing header `{key}`")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some(k), Some(v), None) if k == key => Ok((no, v)),
        _ => Err(parse_err(no, format!("expected `{key} <value>`"))),
    }
}

fn header_usize<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<usize> {
    let (no, v) = header_value(lines, key)?;
    v.parse()
        .map_err(|_| parse_err(no, format!("`{key}` is not a non-negative integer")))
}

/// Parses checkpoint text; never panics on malformed input.
pub fn parse_checkpoint(text: &str) -> Result<(MlpSpec, ParamVector)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (no, version) = header_value(&mut lines, MAGIC)?;
    if version != VERSION.to_string() {
        return Err(parse_err(no, format!("unsupported version {version}")));
    }
    let input_dim = header_usize(&mut lines, "input_dim")?;
    let hidden_layers = header_usize(&mut lines, "hidden_layers")?;
    let hidden_width = header_usize(&mut lines, "hidden_width")?;
    let (no, act) = header_value(&mut lines, "activation")?;
    if act != "tanh" {
        return Err(parse_err(no, format!("unsupported activation `{act}`")));
    }
    let n_lambda = header_usize(&mut lines, "n_lambda")?;
    let n_params = header_usize(&mut lines, "n_params")?;

    let spec = MlpSpec {
        input_dim,
        hidden_layers,
        hidden_width,
        activation: Activation::Tanh,
    };
    spec.validate().map_err(|e| parse_err(2, e.to_string()))?;
    let expected = hidden_width
        .checked_mul(hidden_width)
        .and_then(|ww| ww.checked_mul(hidden_layers))
        .filter(|&n| n <= MAX_PARAMS && n_lambda <= MAX_PARAMS)
        .map(|_| spec.n_network_params() + n_lambda);
    if expected != Some(n_params) {
        return Err(parse_err(
            7,
            format!("n_params {n_params} does not match the network shape"),
        ));
    }

    let mut values = Vec::with_capacity(n_params);
    for (no, line) in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if values.len() == n_params {
            return Err(parse_err(no, "trailing data after the last parameter"));
        }
        let v: f64 = t
            .parse()
            .map_err(|_| parse_err(no, format!("`{t}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(no, "non-finite parameter"));
        }
        values.push(v);
    }
    if values.len() != n_params {
        return Err(parse_err(
            0,
            format!("expected {n_params} parameters, found {}", values.len()),
        ));
    }
    let params = ParamVector::from_values(&spec, n_lambda, values)?;
    Ok((spec, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::init_params;

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = MlpSpec::new(2, 3, 4).unwrap();
        let p = init_params(&spec, 17, &[0.25, -3.5]);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &spec, &p).unwrap();
        let (spec2, p2) = parse_checkpoint(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(p2.layout().n_lambda(), 2);
        for (a, b) in p.values().iter().zip(p2.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn malformed_inputs_are_errors() {
        let good = {
            let spec = MlpSpec::new(1, 1, 1).unwrap();
            let p = init_params(&spec, 1, &[]);
            let mut buf = Vec::new();
            write_checkpoint(&mut buf, &spec, &p).unwrap();
            String::from_utf8(buf).unwrap()
        };
        assert!(parse_checkpoint(&good).is_ok());
        let cases = [
            String::new(),
            good.replace("rpinn-checkpoint 1", "rpinn-checkpoint 2"),
            good.replace("activation tanh", "activation relu"),
            good.replace("n_params 4", "n_params 5"),
            good.replace("input_dim 1", "input_dim 9"),
            format!("{good}1.0\n"),
            good.lines().take(9).collect::<Vec<_>>().join("\n"),
            good.replacen("\n0.0", "\nNaN", 1),
            good.replace("hidden_width 1", "hidden_width 99999999999"),
        ];
        for (k, c) in cases.iter().enumerate() {
            assert!(parse_checkpoint(c).is_err(), "case {k} accepted");
        }
    }
}
