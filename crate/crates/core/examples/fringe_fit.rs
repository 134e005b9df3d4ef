//! Simulated drop-time fringe scan through a 95% fidelity readout, then the fit.
//!
//! `cargo run --release --example fringe_fit -- scan.csv` also writes the data.

use std::io::Write;

use massive::readout::{fit_fringes, simulate_fringe_scan, FringeDataset, ReadoutModel};

pub fn run(out: &mut dyn Write, csv_path: Option<&str>) -> massive::Result<()> {
    let model = ReadoutModel::cryogenic(0.95)?;
    let t0 = 0.4;
    let phi0 = 3.456e4;
    let times: Vec<f64> = (0..41).map(|j| t0 + (j as f64 - 20.0) * 2e-6).collect();
    let data = simulate_fringe_scan(|t| phi0 * (t / t0).powi(3), 0.58, &model, &times, 500, 3)?;
    let fit = fit_fringes(&data, &model)?;
    writeln!(out, "visibility {:.4} +/- {:.4} (injected 0.58)", fit.visibility, fit.visibility_err)?;
    writeln!(out, "frequency  {:.5e} +/- {:.1e} rad/s (expected {:.5e})", fit.frequency, fit.frequency_err, 3.0 * phi0 / t0)?;
    writeln!(out, "chi2 {:.1} for {} dof", fit.chi_squared, fit.degrees_of_freedom)?;

    if let Some(path) = csv_path {
        data.write_csv(std::fs::File::create(path)?)?;
        let back = FringeDataset::read_csv(std::fs::File::open(path)?, "drop_time_s")?;
        writeln!(out, "wrote {path} ({} points)", back.points.len())?;
    }
    Ok(())
}

fn main() -> massive::Result<()> {
    let path = std::env::args().nth(1);
    run(&mut std::io::stdout(), path.as_deref())
}
