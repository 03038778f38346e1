//! Reward breakdown for an ideal sample, a perturbed one, and a simulated trajectory.

use nalgebra::Vector3;

use liprint::io::{score_rows, trajectory_rows};
use liprint::lip::Vec2;
use liprint::metrics::{pd_torque, total_reward_at, FootTargets, PdGains, RewardParams, RobotSample, KD, KP};
use liprint::planner::StepCommand;
use liprint::sim::{run, InitialCondition, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = RewardParams::for_command(Vec2::new(1.0, 0.0)).with_uniform_limits(10, 100.0, 2.0);
    let targets = FootTargets {
        left: Vec2::new(0.35, 0.15),
        right: Vec2::new(0.0, -0.15),
    };
    let ideal = RobotSample::ideal(&params, &targets, 10);
    let mut tilted = ideal.clone();
    tilted.base_height = 0.52;
    tilted.base_velocity = Vec2::new(0.5, 0.0);
    tilted.gravity_projection = Vector3::new(0.2, 0.1, -0.97);

    for (name, sample) in [("ideal", &ideal), ("perturbed", &tilted)] {
        let b = total_reward_at(sample, &params, 1.0, &targets)?;
        println!("{name}: total {:.6}", b.total);
        for t in &b.terms {
            println!("  {:<26} {:>12.6}", t.name, t.value);
        }
    }

    let tau = pd_torque(&[0.0; 3], &[0.1, 0.0, 0.0], &[0.0; 3], &[0.0, 0.5, 0.0], &PdGains::uniform(3, KP, KD))?;
    println!("pd torque: {tau:?}");

    let config = SimConfig::new(StepCommand::forward(1.0)?);
    let result = run(&config, &InitialCondition::standing(&config)?)?;
    let rewards = score_rows(&trajectory_rows(&result), None, &RewardParams::for_command(Vec2::new(1.0, 0.0)))?;
    let mean = rewards.iter().map(|b| b.total).sum::<f64>() / rewards.len() as f64;
    println!("LIP run: {} scored rows, mean total reward {mean:.4}", rewards.len());
    Ok(())
}
