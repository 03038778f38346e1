//! Ten seconds of flat-ground walking at several speeds.
//!
//! The ICP advances by exactly `v * Ts` each step, so the mean CoM speed after the
//! first few steps equals the command.

use liprint::planner::StepCommand;
use liprint::sim::{run, InitialCondition, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>6} {:>10} {:>8} {:>12} {:>14}", "vx", "outcome", "steps", "mean vx", "icp advance");
    for vx in [0.0, 0.2, 0.5, 1.0, 1.5, 2.0] {
        let config = SimConfig::new(StepCommand::forward(vx)?);
        let result = run(&config, &InitialCondition::standing(&config)?)?;
        let starts: Vec<_> = result.step_starts().collect();
        let (first, last) = (starts[3], starts[starts.len() - 1]);
        let mean = (last.com_pos.x - first.com_pos.x) / (last.time - first.time);
        let advance = starts[5].icp.xi.x - starts[4].icp.xi.x;
        println!(
            "{vx:>6.2} {:>10} {:>8} {mean:>12.6} {advance:>14.9}",
            if result.completed() { "completed" } else { "failed" },
            result.step_events.len()
        );
    }
    Ok(())
}
