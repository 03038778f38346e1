//! One planning call from rest, straight ahead and at 90 degrees.

use liprint::gait::{GaitParams, GaitState};
use liprint::lip::{FootPosition, LipParams, LipState, Vec2, GRAVITY};
use liprint::planner::{plan_step_with, OffsetHorizon, StepCommand};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let state = LipState::at_rest(Vec2::zeros(), LipParams::new(GRAVITY, 0.62)?);
    let stance = FootPosition::new(0.0, -0.15, 0.0);
    let gait = GaitState::start(GaitParams::default());

    for velocity in [Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), Vec2::zeros()] {
        let cmd = StepCommand::new(velocity, 0.3)?;
        let plan = plan_step_with(&state, &stance, &cmd, &gait, OffsetHorizon::Remaining);
        println!("command ({:.1}, {:.1}) m/s", velocity.x, velocity.y);
        println!("  s_d = {:.4} m, w_d = {:.4} m, dT = {:.3} s", plan.step_length, plan.step_width, plan.remaining_time);
        println!("  xi0 = ({:.6}, {:.6})", plan.icp_initial.xi.x, plan.icp_initial.xi.y);
        println!("  xi_f = ({:.6}, {:.6})", plan.icp_final.xi.x, plan.icp_final.xi.y);
        println!("  b = ({:.6}, {:.6})", plan.offsets.bx, plan.offsets.by);
        println!(
            "  p_d = ({:.6}, {:.6}), heading {:.4} rad, swing {:?}",
            plan.step.position.x,
            plan.step.position.y,
            plan.step.heading,
            gait.swing_foot()
        );
    }
    Ok(())
}
