//! Walking over 0.15 m gaps every 0.8 m. Planned steps that land in or near a gap
//! are moved to the nearest steppable point.

use std::sync::Arc;

use liprint::planner::StepCommand;
use liprint::sim::{run, terrain_extent, InitialCondition, ReplanMode, SimConfig, Terrain, TERRAIN_RESOLUTION};
use liprint::terrain::{generate, TerrainSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec: TerrainSpec = "gap:0.15:0.8".parse()?;
    for mode in [ReplanMode::AtStepStart, ReplanMode::EveryTick] {
        let mut config = SimConfig {
            replan: mode,
            ..SimConfig::new(StepCommand::forward(1.0)?)
        };
        let map = generate(&spec, &terrain_extent(&config), TERRAIN_RESOLUTION)?;
        config.terrain = Terrain::Map(Arc::new(map));
        let result = run(&config, &InitialCondition::standing(&config)?)?;

        let snapped = result
            .step_events
            .iter()
            .filter(|e| e.planned.position != e.realized.p)
            .count();
        let all_steppable = result
            .step_events
            .iter()
            .all(|e| config.terrain.is_steppable(e.realized.p, &config.foothold));
        println!(
            "{}: {:?}, {} steps, {snapped} moved off gaps, all touchdowns steppable: {all_steppable}",
            mode.as_str(),
            result.outcome,
            result.step_events.len()
        );
        for e in result.step_events.iter().filter(|e| e.planned.position != e.realized.p).take(3) {
            println!(
                "  t = {:.2}: planned x = {:.3}, landed x = {:.3}",
                e.time, e.planned.position.x, e.realized.p.x
            );
        }
    }
    Ok(())
}
