//! Steady forward speed under the three replanning modes.
//!
//! Sizing step length, width and offsets with the shrinking remaining time every tick
//! overshoots the command by a constant factor; predicting the final ICP every tick
//! while keeping full-step offsets tracks it.

use liprint::planner::StepCommand;
use liprint::sim::{run, InitialCondition, ReplanMode, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (ts, dt) = (0.35, 0.01);
    let w = (9.81f64 / 0.62).sqrt();
    let predicted = (w * ts).exp_m1() * dt / ((w * dt).exp_m1() * ts);
    for mode in [ReplanMode::AtStepStart, ReplanMode::EveryTick, ReplanMode::EveryTickLiteral] {
        let config = SimConfig {
            replan: mode,
            reach_limit: 5.0,
            ..SimConfig::new(StepCommand::forward(0.5)?)
        };
        let result = run(&config, &InitialCondition::standing(&config)?)?;
        let v = result.mean_velocity(5.0, 9.8).map_or(f64::NAN, |v| v.x);
        println!("{:>20}: {:?}, mean vx {v:.4} m/s ({:.4} x command)", mode.as_str(), result.outcome, v / 0.5);
    }
    println!("predicted overshoot of the literal mode: {predicted:.6}");
    Ok(())
}
