//! Expression language for kernel and functional profiles.

use commutclass::expr::{eval_constant, sample_offdiag};
use commutclass::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for text in [
        "2^3^2",
        "-E^2",
        "1-2-3",
        "exp(i*pi)",
        "sqrt(-4)",
        "2.5i*E + Ep",
        "1/(E + i)",
    ] {
        let expr = parse(text)?;
        println!(
            "{text:<14} => {expr:<28} at (E, Ep) = (3, 4): {}",
            expr.evaluate(3.0, 4.0)?
        );
    }

    println!("\nconstant `0.5-0.2i` = {}", eval_constant("0.5-0.2i")?);

    for bad in ["foo(E)", "exp(E, Ep)", "(E + 1", "1/(E-1)"] {
        match parse(bad).and_then(|x| x.evaluate(1.0, 0.0)) {
            Ok(v) => println!("{bad:<12} => {v}"),
            Err(err) => println!("{bad:<12} => error: {err}"),
        }
    }

    let grid = make_grid(8.0, 4)?;
    let k = sample_offdiag(&parse("exp(-(E-2)^2-(Ep-2)^2)")?, &grid)?;
    println!("\nnodes {:?}", grid.nodes());
    println!("K = {:.4}", k.map(|c| c.re));
    Ok(())
}
