use std::fs::File;
use std::io::BufWriter;

use anyhow::{Context, Result};
use mcn_core::closed_loop::{simulate, FaultTimeline, NoiseConfig, Reference, SimConfig};

use crate::common::{load, EXIT_FAIL, EXIT_FROZEN, EXIT_OK};
use crate::SimulateArgs;

pub fn run(args: SimulateArgs) -> Result<u8> {
    let loaded = load(&args.common)?;
    let timeline = match &args.timeline {
        Some(path) => FaultTimeline::from_path(path, &loaded.description.faults)
            .with_context(|| format!("timeline {}", path.display()))?,
        None => FaultTimeline::nominal(),
    };
    let config = SimConfig {
        horizon: args.horizon,
        lambda: args.lambda,
        tau: args.tau,
        tolerances: loaded.tolerances,
        reference: Reference::Step { amplitude: args.reference, start: 0 },
        noise: NoiseConfig {
            process_std: args.process_noise,
            measurement_std: args.measurement_noise,
            seed: args.seed,
        },
        respect_dwell: args.respect_dwell,
        ..SimConfig::default()
    };
    let outcome = simulate(&loaded.description.mcn, &timeline, &config)?;

    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
            outcome.trace.write_csv(BufWriter::new(file))?;
        }
        None => outcome.trace.write_csv(std::io::stdout().lock())?,
    }
    if let Some(path) = &args.mode_log {
        let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        outcome.mode_log.write_csv(BufWriter::new(file))?;
    }
    let summary = serde_json::to_string_pretty(&outcome.summary)? + "\n";
    match &args.summary {
        Some(path) => std::fs::write(path, summary).with_context(|| format!("cannot write {}", path.display()))?,
        None => eprint!("{summary}"),
    }

    let s = &outcome.summary;
    for event in &s.freeze_events {
        eprintln!("period {}: detected mode {} has no controller; control frozen", event.period, event.mode);
    }
    if let Some(k) = s.divergence_period {
        eprintln!("period {k}: state diverged, trace truncated");
    }
    Ok(if s.frozen() {
        EXIT_FROZEN
    } else if s.diverged {
        EXIT_FAIL
    } else {
        EXIT_OK
    })
}
