//! Which microwave antenna drives each CPMG pulse as the diamond falls.
//!
//! `cargo run --example antenna_schedule`

use std::io::Write;

use massive::protocol::{antenna_schedule, AntennaLayout, DropPlan};
use massive::spin::build_cpmg;

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let layout = AntennaLayout::default();
    let window = DropPlan::default();
    let full = DropPlan {
        window: 0.553,
        ..window
    };
    writeln!(out, "free fall over {} m takes {:.6} s", window.height, window.free_fall_time())?;
    for plan in [window, full] {
        let pulses = build_cpmg(10_000, plan.window)?.pulse_times();
        let schedule = antenna_schedule(&plan, &layout, &pulses)?;
        writeln!(
            out,
            "window {:.3} s: {} pulses on {} antennas, highest index {}, {} switch-overs",
            plan.window,
            pulses.len(),
            schedule.antennas_used(),
            schedule.max_index().unwrap_or(0),
            schedule.switches.len()
        )?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
