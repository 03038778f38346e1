//! Success rate against rough-terrain amplitude for step-start and per-tick planning.
//!
//! Usage: rough_terrain_sweep [trials]

use liprint::planner::StepCommand;
use liprint::sim::{sweep, ReplanMode, SimConfig, SuccessCriterion, SweepCase};
use liprint::terrain::TerrainSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|a| a.parse()).transpose()?.unwrap_or(20);
    let mut cases = Vec::new();
    for amplitude in [0.05, 0.1, 0.15, 0.2] {
        for replan in [ReplanMode::AtStepStart, ReplanMode::EveryTick] {
            cases.push(SweepCase {
                label: format!("{amplitude}/{}", replan.as_str()),
                config: SimConfig {
                    replan,
                    ..SimConfig::new(StepCommand::forward(1.0)?)
                },
                terrain: TerrainSpec::Rough {
                    amplitude,
                    correlation_length: 0.5,
                    seed: 0,
                },
                success: SuccessCriterion::default(),
            });
        }
    }
    println!("{:>10} {:>12} {:>9}", "amplitude", "replan", "success");
    for row in sweep(&cases, trials, 0)? {
        println!("{:>10.2} {:>12} {:>9.3}", row.severity, row.replan.as_str(), row.success_rate);
    }
    Ok(())
}
