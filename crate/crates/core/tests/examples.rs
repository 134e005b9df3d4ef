//! Runs every crate example to completion and spot-checks its output.

#[allow(dead_code)]
#[path = "../examples/antenna_schedule.rs"]
mod antenna_schedule;
#[allow(dead_code)]
#[path = "../examples/campaign.rs"]
mod campaign;
#[allow(dead_code)]
#[path = "../examples/closure.rs"]
mod closure;
#[allow(dead_code)]
#[path = "../examples/dynamical_decoupling.rs"]
mod dynamical_decoupling;
#[allow(dead_code)]
#[path = "../examples/fringe_fit.rs"]
mod fringe_fit;
#[allow(dead_code)]
#[path = "../examples/gravitational_phase.rs"]
mod gravitational_phase;
#[allow(dead_code)]
#[path = "../examples/mass_sweep.rs"]
mod mass_sweep;
#[allow(dead_code)]
#[path = "../examples/phase_jitter.rs"]
mod phase_jitter;
#[allow(dead_code)]
#[path = "../examples/pole_piece.rs"]
mod pole_piece;
#[allow(dead_code)]
#[path = "../examples/protocol_walkthrough.rs"]
mod protocol_walkthrough;
#[allow(dead_code)]
#[path = "../examples/readout_economics.rs"]
mod readout_economics;
#[allow(dead_code)]
#[path = "../examples/scenario_file.rs"]
mod scenario_file;
#[allow(dead_code)]
#[path = "../examples/spin_rotations.rs"]
mod spin_rotations;
#[allow(dead_code)]
#[path = "../examples/superposition.rs"]
mod superposition;
#[allow(dead_code)]
#[path = "../examples/units.rs"]
mod units;
#[allow(dead_code)]
#[path = "../examples/vacuum_budget.rs"]
mod vacuum_budget;

fn capture(f: impl FnOnce(&mut dyn std::io::Write) -> massive::Result<()>) -> String {
    let mut buf = Vec::new();
    f(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn physics_examples() {
    assert!(capture(superposition::run).contains("s(0.2 s) = 2.021 um"));
    assert!(capture(gravitational_phase::run).contains("3.4559e4"));
    assert!(capture(spin_rotations::run).contains("10001 pulses"));
    assert!(capture(dynamical_decoupling::run).contains("pi pulse"));
    assert!(capture(phase_jitter::run).contains("gaussian"));
    assert!(capture(pole_piece::run).contains("saturated true"));
    assert!(capture(vacuum_budget::run).contains("cooled true"));
    assert!(capture(units::run).contains("unit mismatch"));
}

#[test]
fn closure_example_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = capture(|w| closure::run(w, path.to_str()));
    assert!(out.contains("strict decoupling forces closed: false"));
    assert!(std::fs::metadata(&path).unwrap().len() > 0);
}

#[test]
fn readout_and_fit_examples() {
    assert!(capture(readout_economics::run).contains("111112 drops"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let out = capture(|w| fringe_fit::run(w, path.to_str()));
    assert!(out.contains("(41 points)"), "{out}");
}

#[test]
fn protocol_examples() {
    assert!(capture(antenna_schedule::run).contains("highest index 149"));
    assert!(capture(protocol_walkthrough::run).contains("done after 1 rejected"));
    let out = capture(campaign::run);
    assert!(out.contains("fitted visibility") && out.contains("decoherence"), "{out}");
}

#[test]
fn scenario_examples() {
    assert!(capture(scenario_file::run).contains("rejected: line 2"));
    assert!(capture(mass_sweep::run).contains("diamond.radius"));
}
