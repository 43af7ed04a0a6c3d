//! ΔE, γ_L/g and γ̃_L/g̃ across the interaction scan at μ = w, Δ = 5w.
//!
//! `cargo run --release -p majorana-core --example zero_gap_scan -- 10`

use majorana_core::decoherence::{gamma_low_dephasing, gamma_low_dissipation};
use majorana_core::jw::{dephasing_matrix_elements, dissipative_matrix_elements};
use majorana_core::{solve_chain, ChainParams, SpectrumOptions};

fn main() -> majorana_core::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(8);
    println!("{:>6} {:>12} {:>10} {:>12}", "U/w", "dE/w", "gL/g", "gL~/g~");
    for i in 0..=24 {
        let u = 0.5 * i as f64;
        let p = ChainParams::dimensionless(n, 5.0, 1.0, u)?;
        let s = solve_chain(&p, &SpectrumOptions::for_params(&p))?;
        let c = dissipative_matrix_elements(&s.even, &s.odd, 1)?;
        let de = dephasing_matrix_elements(&s.even, 1)?;
        let dodd = dephasing_matrix_elements(&s.odd, 1)?;
        println!(
            "{u:>6.2} {:>12.3e} {:>10.4} {:>12.3e}",
            s.ground_gap(),
            gamma_low_dissipation(&c, 1.0)?,
            gamma_low_dephasing(&de, &dodd, 1.0)?
        );
    }
    Ok(())
}
