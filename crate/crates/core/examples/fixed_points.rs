//! Mean-field fixed points, their stability, and a semiclassical trajectory.

use qamem::lindblad::{lobe_amplitude, ModelParams};
use qamem::meanfield::{fixed_points, mf_integrate, MeanFieldState};

fn main() -> qamem::Result<()> {
    let p = ModelParams::symmetric(4, 1.14, 0.1, 30);
    println!("large-amplitude estimate R = {:.4}", lobe_amplitude(&p)?);
    for f in fixed_points(&p)? {
        println!(
            "{:?}: r = {:.4}, φ = {:.4}, stable = {}, Jacobian eigenvalues {:.3} / {:.3}",
            f.kind,
            f.state.r(),
            f.state.phi(),
            f.stable,
            f.jacobian_eigenvalues[0],
            f.jacobian_eigenvalues[1]
        );
    }
    let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
    let path = mf_integrate(MeanFieldState::from_polar(0.5, 0.3), &p, &times)?;
    let last = path.last().expect("nonempty");
    println!("from r=0.5, φ=0.3 the flow settles at r = {:.4}, φ = {:.4}", last.r(), last.phi());
    Ok(())
}
