//! Pattern retrieval: random coherent inputs relax onto the lobes and are
//! read out with the ambiguous and unambiguous measurements.

use qamem::dynamics::geometric_times;
use qamem::fockspace::lobe_states;
use qamem::lindblad::{build_liouvillian_general, lobe_amplitude, ModelParams};
use qamem::memory::{ambiguous_povm_numerical, retrieval_experiment, unambiguous_povm, RetrievalOptions, Strategy};
use qamem::metastable::build_phases;
use qamem::spectral::decompose;

fn main() -> qamem::Result<()> {
    let p = ModelParams::symmetric(4, 1.14, 0.1, 30);
    let dec = decompose(&build_liouvillian_general(&p)?, None)?;
    let ts = dec.timescales();
    let beta = lobe_amplitude(&p)?;
    let lobes = lobe_states(p.dim, beta, p.n, p.lobe_offset())?;
    let strategies = vec![
        Strategy { name: "ambiguous".into(), povm: ambiguous_povm_numerical(&build_phases(&dec, 4)?)? },
        Strategy { name: "unambiguous".into(), povm: unambiguous_povm(&lobes)? },
    ];
    let opts = RetrievalOptions { trials: 200, times: geometric_times(1e-3, ts.tau(4), 10)?, seed: 3, max_amplitude: 2.0 * beta };
    let e = retrieval_experiment(&dec, &lobes, &strategies, &opts)?;
    let s = &e.summary;
    println!("{:>10} {:>18} {:>18}", "t", "P_s ambiguous", "P_s unambiguous");
    for (i, t) in s.times.iter().enumerate() {
        println!("{t:10.3} {:>10.3} ± {:.3} {:>10.3} ± {:.3}", s.success[0][i], s.standard_error[0][i], s.success[1][i], s.standard_error[1][i]);
    }
    println!("metastable window [{:.2}, {:.2}]", 3.0 * ts.tau(5), ts.tau(4));
    Ok(())
}
