use anyhow::Result;
use mcn_core::analysis::{check_fault_tolerance_with, FaultToleranceReport, PlantData, Property};
use serde::Serialize;

use crate::common::{emit, load, EXIT_FAIL, EXIT_OK};
use crate::AnalyzeArgs;

#[derive(Serialize)]
struct AnalyzeReport<'a> {
    input: String,
    verdict: bool,
    properties: &'a [FaultToleranceReport],
}

pub fn run(args: AnalyzeArgs) -> Result<u8> {
    let loaded = load(&args.common)?;
    let mcn = &loaded.description.mcn;
    let plant = PlantData::new(mcn)?;
    let properties: Vec<Property> =
        if args.property.is_empty() { Property::ALL.to_vec() } else { args.property.iter().map(|p| p.0).collect() };
    let mut reports = Vec::with_capacity(properties.len());
    for property in properties {
        reports.push(check_fault_tolerance_with(&plant, mcn, &loaded.faults, property, &loaded.tolerances)?);
    }
    for report in &reports {
        for r in &report.reports {
            let failed: Vec<String> = r.failed().map(|c| format!("{:?}", c.condition)).collect();
            if failed.is_empty() {
                eprintln!("{} [{}]: pass", report.property, r.fault);
            } else {
                eprintln!("{} [{}]: FAIL ({})", report.property, r.fault, failed.join(", "));
            }
        }
    }
    let verdict = reports.iter().all(|r| r.verdict);
    let out = AnalyzeReport { input: args.common.input.display().to_string(), verdict, properties: &reports };
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(if verdict { EXIT_OK } else { EXIT_FAIL })
}
