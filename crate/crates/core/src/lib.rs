pub mod cli;
pub mod error;
pub mod gait;
pub mod io;
pub mod lip;
pub mod metrics;
pub mod planner;
pub mod sim;
pub mod terrain;
