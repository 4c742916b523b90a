use anyhow::{Context, Result};
use mcn_core::design::{design_weights, DesignError, DesignOptions};
use mcn_core::model::{Edge, McnDescription};

use crate::common::{emit, load, EXIT_FAIL, EXIT_OK};
use crate::DesignArgs;

pub fn run(args: DesignArgs) -> Result<u8> {
    let loaded = load(&args.common)?;
    let preferred_edges = args
        .prefer_edge
        .iter()
        .map(|s| s.parse::<Edge>().with_context(|| format!("--prefer-edge {s}")))
        .collect::<Result<Vec<_>>>()?;
    let options = DesignOptions { equal_weights: false, preferred_edges };
    let property = args.property.0;
    let outcome = match design_weights(&loaded.description.mcn, &loaded.faults, property, &loaded.tolerances, &options)
    {
        Ok(o) => o,
        Err(DesignError::Infeasible(reason)) => {
            eprintln!("infeasible: {reason}");
            return Ok(EXIT_FAIL);
        }
        Err(e) => return Err(e.into()),
    };
    for change in &outcome.report.changes {
        eprintln!("{}: {} -> {}", change.edge, change.before, change.after);
    }
    let designed = McnDescription { mcn: outcome.mcn, faults: loaded.description.faults.clone() };
    emit(args.out.as_deref(), &(designed.to_json_string() + "\n"))?;
    if let Some(path) = &args.report {
        let text = serde_json::to_string_pretty(&outcome.report)? + "\n";
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(EXIT_OK)
}
