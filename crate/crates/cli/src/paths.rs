use std::fmt::Write as _;

use anyhow::Result;
use mcn_core::model::{format_weight, Side};
use mcn_core::network::{
    apply_fault, enumerate_paths, gamma_sequence, induced_graph, network_tf, GammaSequence, RoutedPath,
};
use serde::Serialize;

use crate::common::{emit, load, EXIT_OK};
use crate::PathsArgs;

#[derive(Serialize)]
struct SideView {
    side: Side,
    fault: String,
    paths: Vec<RoutedPath>,
    gamma: GammaSequence,
    transfer_function: Option<String>,
}

pub fn run(args: PathsArgs) -> Result<u8> {
    let loaded = load(&args.common)?;
    let mcn = &loaded.description.mcn;
    let mut views = Vec::new();
    for side in [Side::Actuation, Side::Sensing] {
        for fault in &loaded.faults {
            let schedule = apply_fault(mcn.schedule(side), fault);
            let graph = mcn.graph(side);
            let paths = enumerate_paths(&induced_graph(graph, &schedule))?;
            let gamma = gamma_sequence(graph, &schedule)?;
            let transfer_function = network_tf(&gamma, mcn.sampling_period()).ok().map(|tf| tf.to_string());
            views.push(SideView { side, fault: fault.label().to_string(), paths, gamma, transfer_function });
        }
    }
    let text = if args.json { serde_json::to_string_pretty(&views)? + "\n" } else { table(&views) };
    emit(None, &text)?;
    Ok(EXIT_OK)
}

fn table(views: &[SideView]) -> String {
    let mut out = String::new();
    for v in views {
        let side = match v.side {
            Side::Actuation => "actuation",
            Side::Sensing => "sensing",
        };
        let _ = writeln!(out, "{side} side, fault {}", v.fault);
        if v.paths.is_empty() {
            let _ = writeln!(out, "  no paths\n");
            continue;
        }
        let routes: Vec<String> = v.paths.iter().map(|p| p.nodes.join(" -> ")).collect();
        let width = routes.iter().map(String::len).max().unwrap_or(0).max(5);
        let _ = writeln!(out, "  {:width$}  {:8}  {:8}  delay", "route", "slots", "weight");
        for (p, route) in v.paths.iter().zip(&routes) {
            let slots: Vec<String> = p.slots.iter().map(usize::to_string).collect();
            let _ =
                writeln!(out, "  {route:width$}  {:8}  {:8}  {}", slots.join(" "), format_weight(&p.weight), p.delay);
        }
        let gamma: Vec<String> = v
            .gamma
            .coefficients()
            .iter()
            .enumerate()
            .map(|(i, g)| (i + 1, format_weight(g)))
            .filter(|(_, g)| g != "0")
            .map(|(i, g)| format!("{i}: {g}"))
            .collect();
        let _ = writeln!(out, "  gamma: {}", gamma.join(", "));
        if let Some(tf) = &v.transfer_function {
            let _ = writeln!(out, "  G(z) = {tf}");
        }
        out.push('\n');
    }
    out
}
