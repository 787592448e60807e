//! Time evolution three ways: mode expansion, adaptive Runge–Kutta and the
//! metastable manifold alone.

use std::f64::consts::PI;

use qamem::dynamics::{evolve_integrate, evolve_spectral, geometric_times};
use qamem::fockspace::{annihilation, coherent_state, CoherentAmplitude};
use qamem::lindblad::{build_liouvillian_general, lobe_amplitude, ModelParams};
use qamem::metastable::{build_phases, evolve_in_manifold};
use qamem::ode::Tolerances;
use qamem::spectral::decompose;
use qamem::C64;

fn main() -> qamem::Result<()> {
    let p = ModelParams::symmetric(4, 1.14, 0.1, 30);
    let l = build_liouvillian_general(&p)?;
    let dec = decompose(&l, None)?;
    let man = build_phases(&dec, 4)?;
    let ts = dec.timescales();
    let beta = lobe_amplitude(&p)?;
    let rho0 = coherent_state(p.dim, CoherentAmplitude::new(C64::from_polar(0.5 * beta, 2.0 * PI / 9.0))?)?;
    let times = geometric_times(1e-2, 2.0 * ts.tau(4), 12)?;

    let spectral = evolve_spectral(&dec, rho0.operator(), &times, false)?;
    let direct = evolve_integrate(&l, rho0.operator(), &times[..6], &Tolerances::default(), false)?;
    let manifold = evolve_in_manifold(&man, rho0.operator(), &times)?;
    let a = annihilation(p.dim)?;
    println!("{:>10} {:>10} {:>10} {:>10}", "t", "|a| modes", "|a| RK", "|a| slow");
    for (i, t) in times.iter().enumerate() {
        let slow = a.trace_product(&man.combine(&manifold[i])).norm();
        let rk = direct.expect_a.get(i).map_or(String::from("-"), |z| format!("{:.5}", z.norm()));
        println!("{t:10.3} {:10.5} {rk:>10} {slow:10.5}", spectral.expect_a[i].norm());
    }
    println!("τ₅ = {:.3}: the slow description applies from about 3τ₅ on", ts.tau(5));
    Ok(())
}
