//! Steady state of the four-lobe memory compared with the equal mixture of
//! its coherent lobes.

use qamem::fockspace::{lobe_states, trace_distance, DensityMatrix, FockOperator};
use qamem::lindblad::{build_liouvillian_general, lobe_amplitude, ModelParams};
use qamem::spectral::steady_state;
use qamem::C64;

fn main() -> qamem::Result<()> {
    let p = ModelParams::symmetric(4, 1.14, 0.1, 35);
    let ss = steady_state(&build_liouvillian_general(&p)?)?;
    let beta = lobe_amplitude(&p)?;
    let mut mix = FockOperator::zeros(p.dim)?;
    for lobe in lobe_states(p.dim, beta, p.n, p.lobe_offset())? {
        mix.add_scaled(C64::new(0.25, 0.0), lobe.operator());
    }
    let mix = DensityMatrix::new(mix)?;
    println!("β = {beta:.4}, ‖𝓛ρ_ss‖ = {:.1e}", ss.residual);
    println!("trace distance to the lobe mixture: {:.4}", trace_distance(&ss.state, &mix)?);
    println!("purity {:.4}, populations of |0⟩..|7⟩:", ss.state.purity());
    for (k, pk) in ss.state.populations().iter().take(8).enumerate() {
        println!("  {k}: {pk:.4}");
    }
    Ok(())
}
