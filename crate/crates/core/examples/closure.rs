//! Pulse timing that brings both arms back together at rest.
//!
//! `cargo run --example closure -- trajectory.csv` also writes the
//! relative trajectory.

use std::io::Write;

use massive::interferometer::{arm_acceleration, propagate_arms, solve_closure};
use massive::particle::{Diamond, DEFAULT_NV_YIELD};
use massive::spin::{build_cpmg, Basis};

pub fn run(out: &mut dyn Write, csv_path: Option<&str>) -> massive::Result<()> {
    let diamond = Diamond::build(0.5e-6, 3510.0, 20.0, DEFAULT_NV_YIELD)?;
    let a = arm_acceleration(&diamond, 1e4, Basis::SingleQuantum)?;

    for t1 in [0.05, 0.1, 0.125] {
        let timing = solve_closure(t1)?;
        let traj = propagate_arms(a, &timing, 10_001, false, None)?;
        let (dz, dv) = traj.relative_residuals();
        writeln!(
            out,
            "t1 {t1:.3} s -> t2 {:.6} s, t3 {:.6} s, max separation {:.4} um, residuals {dz:.1e} / {dv:.1e}",
            timing.t2,
            timing.t3,
            traj.max_separation * 1e6
        )?;
    }

    // letting every decoupling pulse swap the force leaves the arms open
    let timing = solve_closure(0.1)?;
    let dd = build_cpmg(7, timing.total())?.decoupling_times();
    let strict = propagate_arms(a, &timing, 10_001, true, Some(&dd))?;
    writeln!(out, "strict decoupling forces closed: {}", strict.is_closed())?;

    if let Some(path) = csv_path {
        let traj = propagate_arms(a, &timing, 10_001, false, None)?;
        traj.write_csv(std::fs::File::create(path)?)?;
        writeln!(out, "wrote {path}")?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    let path = std::env::args().nth(1);
    run(&mut std::io::stdout(), path.as_deref())
}
