//! The three lobe measurements for a three-lobe memory: completeness,
//! agreement of the two ambiguous constructions, and click probabilities.

use qamem::fockspace::lobe_states;
use qamem::lindblad::{build_liouvillian_general, lobe_amplitude, ModelParams};
use qamem::memory::{ambiguous_povm_numerical, ambiguous_povm_theoretical, mean_element_distance, unambiguous_povm};
use qamem::metastable::build_phases;
use qamem::spectral::decompose;

fn main() -> qamem::Result<()> {
    let p = ModelParams { n: 3, m: 3, delta: 0.4, eta: 4.6875, theta: 0.0, gamma1: 1.0, gamma_m: 0.6, dim: 30 };
    let dec = decompose(&build_liouvillian_general(&p)?, None)?;
    let man = build_phases(&dec, 3)?;
    let numerical = ambiguous_povm_numerical(&man)?;
    let theoretical = ambiguous_povm_theoretical(p.dim, p.n, p.lobe_offset())?;
    let lobes = lobe_states(p.dim, lobe_amplitude(&p)?, p.n, p.lobe_offset())?;
    let unambiguous = unambiguous_povm(&lobes)?;
    for povm in [&numerical, &theoretical, &unambiguous] {
        println!("{:<22} completeness error {:.1e}, clipped mass {:.1e}", povm.kind().name(), povm.completeness_error(), povm.clipped_mass());
    }
    println!(
        "mean element distance, numerical vs theoretical: {:.4} (trace-normalized {:.4})",
        mean_element_distance(&numerical, &theoretical, false)?,
        mean_element_distance(&numerical, &theoretical, true)?
    );
    for (k, lobe) in lobes.iter().enumerate() {
        let fmt = |v: Vec<f64>| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
        println!("lobe {}: numerical [{}]  unambiguous [{}]", k + 1, fmt(numerical.probabilities(lobe.operator())), fmt(unambiguous.probabilities(lobe.operator())));
    }
    Ok(())
}
