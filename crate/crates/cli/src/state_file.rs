//! Single-mode state files. Accepted shapes, tried in order:
//! a serialized `StateVector`, an optimizer result (its `coefficients`),
//! `{"coefficients": [[re, im], ...]}`, or a bare `[[re, im], ...]` list.

use std::path::Path;

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;

use cubist::ancilla::AncillaOptimum;
use cubist::fock::StateVector;
use cubist::C64;

#[derive(Deserialize)]
struct Coefficients {
    coefficients: Vec<[f64; 2]>,
}

pub fn load(path: &Path) -> anyhow::Result<StateVector> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read state file {}", path.display()))?;
    parse(&text).with_context(|| format!("bad state file {}", path.display()))
}

pub fn parse(text: &str) -> anyhow::Result<StateVector> {
    let state = if let Ok(s) = serde_json::from_str::<StateVector>(text) {
        s
    } else if let Ok(o) = serde_json::from_str::<AncillaOptimum>(text) {
        o.state()?
    } else {
        let pairs = match serde_json::from_str::<Coefficients>(text) {
            Ok(c) => c.coefficients,
            Err(_) => serde_json::from_str::<Vec<[f64; 2]>>(text)
                .map_err(|e| anyhow!("not a recognised state format: {e}"))?,
        };
        let coeffs: Vec<C64> = pairs.iter().map(|p| C64::new(p[0], p[1])).collect();
        StateVector::from_coefficients(&coeffs)?
    };
    if state.n_modes() != 1 {
        bail!("expected a single-mode state, got {} modes", state.n_modes());
    }
    if !state.is_normalized() {
        return Ok(state.normalized()?);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        let bare = parse("[[1, 0], [0, 0]]").unwrap();
        assert_eq!(bare.dim(), 2);
        let obj = parse(r#"{"coefficients": [[0, 0], [0, 2]]}"#).unwrap();
        assert!((obj.amplitudes()[1].im - 1.0).abs() < 1e-15);
        let sv = serde_json::to_string(&StateVector::fock(4, 2).unwrap()).unwrap();
        assert_eq!(parse(&sv).unwrap(), StateVector::fock(4, 2).unwrap());
        assert!(parse("{}").is_err());
        assert!(parse("[[0, 0]]").is_err());
    }
}
