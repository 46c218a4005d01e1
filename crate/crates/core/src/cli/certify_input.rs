//! `key = value` input for the certification command.
//!
//! ```text
//! # measured parity contrast and aligned populations
//! contrast = 0.49
//! contrast_se = 0.04
//! p_upup = 0.071
//! p_upup_se = 0.014
//! p_dndn = 0.016
//! p_dndn_se = 0.005
//! ap_success_f = 0.69      # optional
//! ap_success_f_se = 0.02   # optional
//! ```

use std::collections::BTreeMap;

use super::CliError;
use crate::witness::{CertificationInput, Measured};

const KNOWN: [&str; 8] =
    ["contrast", "contrast_se", "p_upup", "p_upup_se", "p_dndn", "p_dndn_se", "ap_success_f", "ap_success_f_se"];

pub fn parse_certification_input(text: &str) -> Result<CertificationInput, CliError> {
    let mut values = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim();
        if !KNOWN.contains(&key) {
            return Err(CliError::Input(format!("line {}: unknown field `{key}`", n + 1)));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Input(format!("line {}: `{key}` is not a number", n + 1)))?;
        if values.insert(key, value).is_some() {
            return Err(CliError::Input(format!("line {}: duplicate field `{key}`", n + 1)));
        }
    }
    let get = |k: &str| values.get(k).copied().ok_or_else(|| CliError::MissingField(k.to_string()));
    let ap_success_f = match (values.get("ap_success_f"), values.get("ap_success_f_se")) {
        (Some(&f), se) => Some(Measured::new(f, se.copied().unwrap_or(0.0))),
        (None, Some(_)) => return Err(CliError::MissingField("ap_success_f".into())),
        (None, None) => None,
    };
    let input = CertificationInput {
        contrast: Measured::new(get("contrast")?, get("contrast_se")?),
        p_upup: Measured::new(get("p_upup")?, get("p_upup_se")?),
        p_dndn: Measured::new(get("p_dndn")?, get("p_dndn_se")?),
        ap_success_f,
    };
    input.validate()?;
    Ok(input)
}
