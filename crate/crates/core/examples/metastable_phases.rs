//! Metastable phases of the four-lobe memory and the quasiprobabilities of
//! a coherent input relaxing onto them.

use qamem::fockspace::{annihilation, coherent_state, CoherentAmplitude};
use qamem::lindblad::{build_liouvillian_general, ModelParams};
use qamem::metastable::{build_phases, evolve_in_manifold, quasiprobabilities};
use qamem::spectral::decompose;
use qamem::C64;

fn main() -> qamem::Result<()> {
    let p = ModelParams::symmetric(4, 1.14, 0.1, 30);
    let dec = decompose(&build_liouvillian_general(&p)?, None)?;
    let man = build_phases(&dec, 4)?;
    let a = annihilation(p.dim)?;
    for (l, mu) in man.phases().iter().enumerate() {
        let alpha = a.trace_product(mu);
        println!("μ_{}: ⟨â⟩ = {:+.3} {:+.3}i  (|⟨â⟩| = {:.3})", l + 1, alpha.re, alpha.im, alpha.norm());
    }
    let rho = coherent_state(p.dim, CoherentAmplitude::new(C64::from_polar(1.0, 2.0))?)?;
    println!("p(ρ) = {:?}", quasiprobabilities(&man, rho.operator())?);
    let tau4 = dec.timescales().tau(4);
    let times = [0.0, 0.1 * tau4, tau4, 5.0 * tau4];
    for (t, ps) in times.iter().zip(evolve_in_manifold(&man, rho.operator(), &times)?) {
        let pretty: Vec<String> = ps.iter().map(|x| format!("{x:.3}")).collect();
        println!("t = {t:8.2}: p = [{}]", pretty.join(", "));
    }
    Ok(())
}
