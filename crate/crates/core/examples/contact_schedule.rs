//! Gait clock over two steps: parity, stance foot, contact schedule and phase clock.

use liprint::gait::{GaitParams, GaitState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut gait = GaitState::start(GaitParams::default());
    println!("{:>5} {:>6} {:>6} {:>6} {:>9} {:>8} {:>8}", "tick", "t", "t'", "n", "C", "sin", "cos");
    for tick in 0..=70 {
        if tick > 0 {
            let (next, boundary) = gait.advance(0.01)?;
            if boundary {
                println!("-- touchdown: {:?} foot now in stance", next.stance_foot());
            }
            gait = next;
        }
        if tick % 5 == 0 {
            let (s, c) = gait.phase_clock();
            println!(
                "{tick:>5} {:>6.3} {:>6.3} {:>6} {:>9.5} {:>8.4} {:>8.4}",
                gait.elapsed(),
                gait.cycle_elapsed(),
                gait.parity(),
                gait.contact_schedule(),
                s,
                c
            );
        }
    }
    Ok(())
}
