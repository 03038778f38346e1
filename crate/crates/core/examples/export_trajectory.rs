//! Write a trajectory CSV and step-event JSON for external plotting.
//!
//! Usage: export_trajectory [out_dir]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use liprint::io::{save_json, write_trajectory};
use liprint::planner::StepCommand;
use liprint::sim::{run, InitialCondition, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/liprint-export".into()));
    std::fs::create_dir_all(&dir)?;

    let config = SimConfig::new(StepCommand::forward(1.0)?);
    let result = run(&config, &InitialCondition::standing(&config)?)?;

    let csv = dir.join("trajectory.csv");
    write_trajectory(BufWriter::new(File::create(&csv)?), &result)?;
    let events = dir.join("steps.json");
    save_json(&events, &result.step_events)?;
    println!("{} samples -> {}", result.samples.len(), csv.display());
    println!("{} steps -> {}", result.step_events.len(), events.display());
    Ok(())
}
