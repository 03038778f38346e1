//! Command switches by 90 and 180 degrees, with the stride heading error after each step.

use liprint::planner::{normalize_angle, StepCommand};
use liprint::sim::{turn_maneuver, ReplanMode, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for mode in [ReplanMode::AtStepStart, ReplanMode::EveryTick] {
        for degrees in [90.0f64, 180.0] {
            let config = SimConfig {
                replan: mode,
                ..SimConfig::new(StepCommand::forward(1.0)?)
            };
            let result = turn_maneuver(&config, degrees.to_radians(), 3.0)?;
            println!("{} turn {degrees} deg: {:?}", mode.as_str(), result.outcome);
            let starts: Vec<_> = result.step_starts().filter(|s| s.time > 3.0).collect();
            for (k, stride) in starts.windows(3).take(6).enumerate() {
                let d = stride[2].com_pos - stride[0].com_pos;
                let error = normalize_angle(d.y.atan2(d.x) - degrees.to_radians());
                println!("  stride ending at step {:>2}: heading error {error:+.4} rad", k + 3);
            }
        }
    }
    Ok(())
}
