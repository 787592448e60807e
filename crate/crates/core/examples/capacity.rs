//! Storage capacity per effective Fock dimension for n = 2..8 lobes.

use qamem::memory::capacity::{DEFAULT_EPSILON, HEBBIAN_CAPACITY};
use qamem::memory::{capacity_curve, max_capacity};

fn main() -> qamem::Result<()> {
    let betas: Vec<f64> = (1..=240).map(|k| 0.025 * k as f64).collect();
    println!("{:>3} {:>8} {:>8} {:>6}", "n", "β*", "α̃_max", "L_max");
    for n in 2..=8 {
        let best = max_capacity(&capacity_curve(n, &betas, DEFAULT_EPSILON)?).expect("nonempty grid");
        let mark = if best.alpha_tilde > HEBBIAN_CAPACITY { "  > Hebbian" } else { "" };
        println!("{n:>3} {:8.3} {:8.4} {:>6}{mark}", best.beta, best.alpha_tilde, best.l_max);
    }
    Ok(())
}
