//! How tightly the drop must be controlled before the phase turns pseudo-random.
//!
//! `cargo run --release --example phase_jitter`

use std::io::Write;

use massive::interferometer::{gaussian_visibility, phase_jitter_visibility, FractionalErrors};

pub fn run(out: &mut dyn Write) -> massive::Result<()> {
    let phi0 = 3.456e4;
    writeln!(out, "{:>10} {:>12} {:>12}", "eps", "monte_carlo", "gaussian")?;
    for eps in [0.0, 1e-6, 3e-6, 1e-5, 3e-5, 1e-4] {
        let errors = FractionalErrors {
            time: eps,
            ..FractionalErrors::default()
        };
        let mc = phase_jitter_visibility(phi0, &errors, 20_000, 7)?;
        writeln!(out, "{eps:>10.1e} {mc:>12.4} {:>12.4}", gaussian_visibility(phi0, &errors))?;
    }
    let all = FractionalErrors::uniform(1e-5);
    writeln!(
        out,
        "all three at 1e-5: {:.4}",
        phase_jitter_visibility(phi0, &all, 20_000, 7)?
    )?;
    Ok(())
}

fn main() -> massive::Result<()> {
    run(&mut std::io::stdout())
}
