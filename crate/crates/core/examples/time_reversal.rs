//! Time reversal swaps decaying and growing vectors, yet the formally
//! Hermitian Hamiltonian is not invariant.

use commutclass::time_reversal::{apply_t, concrete_gamow_vectors, invariance_gap, swap_residual};
use commutclass::{Complex64, Resonance};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (d, g) = concrete_gamow_vectors(1, 1)?;
    println!("|D) = ({:.4}, {:.4})", d.0[0], d.0[1]);
    println!("|G) = ({:.4}, {:.4})", g.0[0], g.0[1]);
    println!("max |T|D) - |G)| = {:.1e}", apply_t(&d)?.max_deviation(&g));
    for n in 1..=4 {
        println!("N = {n}: swap residual {:.1e}", swap_residual(n)?);
    }

    let res = Resonance::new(2.0, 1.0)?;
    let cases = [
        (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
        (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)),
        (Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)),
    ];
    println!("\nz = {}", res.pole());
    for (a, b) in cases {
        let rep = invariance_gap(a, b, &res);
        println!(
            "a = {a}, b = {b}: (ψ|H|ψ) = {:.4}, (ψ|THT|ψ) = {:.4}, gap = {:.4}",
            rep.lhs, rep.rhs, rep.gap
        );
    }
    println!(
        "\n{}",
        serde_json::to_string_pretty(&invariance_gap(cases[0].0, cases[0].1, &res))?
    );
    Ok(())
}
