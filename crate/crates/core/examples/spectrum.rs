//! Liouvillian spectrum: the damped oscillator against its closed form, then
//! the slow timescales of a four-lobe memory.

use qamem::harness::build_liouvillian;
use qamem::lindblad::{LiouvillianForm, ModelParams};
use qamem::spectral::{eigenvalues, Timescales};
use qamem::C64;

fn main() -> qamem::Result<()> {
    let free = ModelParams { n: 2, m: 2, delta: 0.4, eta: 0.0, theta: 0.0, gamma1: 1.0, gamma_m: 0.0, dim: 12 };
    let vals = eigenvalues(&build_liouvillian(&free, LiouvillianForm::General)?)?;
    // λ_{k,l} = −iΔ(k−l) − (k+l)/2 on indices far from the cutoff.
    let mut worst = 0.0f64;
    for k in 0..4 {
        for l in 0..4 {
            let exact = C64::new(-0.5 * (k + l) as f64, -0.4 * (k as f64 - l as f64));
            let nearest = vals.iter().map(|v| (v - exact).norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(nearest);
        }
    }
    println!("damped oscillator: largest deviation on k,l < 4: {worst:.2e}");

    let memory = ModelParams::symmetric(4, 1.14, 0.1, 30);
    let vals = eigenvalues(&build_liouvillian(&memory, LiouvillianForm::General)?)?;
    let ts = Timescales::from_eigenvalues(&vals);
    println!("four-lobe memory (D=30): slowest eigenvalues");
    for v in vals.iter().take(6) {
        println!("  {:+.6} {:+.6}i", v.re, v.im);
    }
    println!("τ₄ = {:.3}, τ₅ = {:.4}, τ₄/τ₅ = {:.1}", ts.tau(4), ts.tau(5), ts.gap_ratio(4));
    Ok(())
}
