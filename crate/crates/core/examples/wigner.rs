//! Steady-state Wigner functions: negativity disappears as linear loss grows.

use qamem::harness::build_liouvillian;
use qamem::lindblad::{lobe_amplitude, LiouvillianForm, ModelParams};
use qamem::phasespace::{wigner, PhaseGrid};
use qamem::spectral::steady_state;

fn main() -> qamem::Result<()> {
    let base = ModelParams::symmetric(4, 1.14, 0.1, 30);
    let grid = PhaseGrid::square(lobe_amplitude(&base)? + 3.0, 121)?;
    for gamma1 in [0.0, 0.2, 1.0] {
        let p = ModelParams { gamma1, ..base.clone() };
        let ss = steady_state(&build_liouvillian(&p, LiouvillianForm::General)?)?;
        let w = wigner(ss.state.operator(), grid);
        let maxima = w.local_maxima(0.5);
        println!(
            "γ₁ = {gamma1}: min W = {:+.4}, ∫W = {:.6}, {} maxima, first at {:?}",
            w.min_negativity(),
            w.integral(),
            maxima.len(),
            maxima.first().map(|m| (m.0, m.1))
        );
    }
    Ok(())
}
