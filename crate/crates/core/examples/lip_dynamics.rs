//! Closed-form CoM motion over one step and the ICP computed along it.

use liprint::lip::{com_trajectory, icp_of, icp_trajectory, FootPosition, LipParams, LipState, Vec2, GRAVITY};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = LipParams::new(GRAVITY, 0.62)?;
    let w = params.omega0();
    let state = LipState::new(Vec2::new(0.0, 0.0), Vec2::new(0.4, 0.0), params)?;
    let foot = FootPosition::new(0.1, 0.0, 0.0);
    let xi0 = icp_of(&state);
    println!("omega0 = {w:.12} rad/s, xi0 = ({:.6}, {:.6})", xi0.xi.x, xi0.xi.y);
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "x", "xdot", "xi", "xi closed");

    for k in 0..=7 {
        let t = k as f64 * 0.05;
        let s = com_trajectory(&state, &foot, t)?;
        let xi = icp_trajectory(&xi0, &foot, w, t)?;
        println!(
            "{t:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            s.com_pos.x,
            s.com_vel.x,
            icp_of(&s).xi.x,
            xi.xi.x
        );
    }
    Ok(())
}
