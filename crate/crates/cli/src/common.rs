use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use mcn_core::analysis::{Property, Tolerances};
use mcn_core::model::{validate, validate_faults, FaultSet, McnDescription};

use crate::Common;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 2;
pub const EXIT_FROZEN: u8 = 3;

pub fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FaultSelection {
    None,
    All,
    Indices(Vec<usize>),
}

impl FromStr for FaultSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "none" => Ok(Self::None),
            "all" => Ok(Self::All),
            list => list
                .split(',')
                .map(|p| p.trim().parse::<usize>().map_err(|_| format!("bad fault index `{p}`")))
                .collect::<Result<Vec<_>, _>>()
                .map(Self::Indices),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropertyArg(pub Property);

impl FromStr for PropertyArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.parse::<Property>().map(PropertyArg).map_err(|e| e.to_string())
    }
}

/// A validated description with the selected faults and tolerances.
pub struct Loaded {
    pub description: McnDescription,
    pub faults: FaultSet,
    pub tolerances: Tolerances,
}

pub fn load(common: &Common) -> Result<Loaded> {
    let mut description = McnDescription::from_path(&common.input)?;
    if common.equal_weights {
        description.mcn = description.mcn.with_equal_weights();
    }
    let report = validate(&description.mcn);
    if !report.is_valid() {
        bail!("invalid MCN {}:\n{report}", common.input.display());
    }
    let report = validate_faults(&description.mcn, &description.faults);
    if !report.is_valid() {
        bail!("invalid fault set in {}:\n{report}", common.input.display());
    }
    let faults = match &common.faults {
        FaultSelection::None => FaultSet::nominal_only(),
        FaultSelection::All => description.faults.clone(),
        FaultSelection::Indices(ix) => description.faults.select(ix).with_context(|| {
            format!("fault index out of range (the fault set has {} entries)", description.faults.len())
        })?,
    };
    let tolerances = Tolerances { cancel: common.tol_cancel, eval: common.tol_eval, ..Tolerances::default() };
    Ok(Loaded { description, faults, tolerances })
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}
