//! Stepping the gated protocol by hand, including a rejected diamond.
//!
//! `cargo run --example protocol_walkthrough`

use std::io::Write;

use massive::protocol::{advance, Evidence, ProtocolState, Transition};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let good = Evidence {
        mass_estimate: Some(1.84e-15),
        neutral: Some(true),
        nv_present: Some(true),
        g2: Some(0.3),
        aligned: Some(true),
        internal_temperature: Some(5.0),
        cooled_ok: Some(true),
        pressure_schedule: Some(vec![101_325.0, 1e4, 1e-4]),
        polarized: Some(true),
        bias_field: Some(0.05),
        coherence_time: Some(0.5),
        window: Some(0.4),
        field_ok: Some(true),
        saturation_ok: Some(true),
        expected_collisions: Some(0.5),
        closure_residual: Some(1e-15),
        timing_error: Some(1e-5),
        readout_outcome: Some(true),
    };
    let crowded = Evidence {
        g2: Some(0.6),
        ..good.clone()
    };

    let mut state = ProtocolState::new();
    let mut first = true;
    loop {
        let evidence = if first { &crowded } else { &good };
        match advance(&state, evidence)? {
            Transition::Advanced(next) => {
                writeln!(out, "{:<16} -> {}", state.step, next.step)?;
                state = next;
            }
            Transition::Rejected { gate, detail, state: next } => {
                writeln!(out, "{:<16} rejected: {gate} ({detail})", state.step)?;
                first = false;
                state = next;
            }
            Transition::Completed(done) => {
                writeln!(out, "{:<16} -> done after {} rejected diamond(s)", state.step, done.attempt_count)?;
                break;
            }
        }
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
