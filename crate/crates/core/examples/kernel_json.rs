//! Kernel products, the dense representation, and JSON round trips.

use commutclass::expr::sample;
use commutclass::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(4.0, 3)?;
    let tag = AlgebraTag::Free;
    let a = sample(&parse("E")?, Some(&parse("E - Ep")?), &grid, tag)?;
    let b = sample(&parse("1")?, Some(&parse("i*(E - Ep)")?), &grid, tag)?;

    let ab = a.product(&b)?;
    let lhs = ab.dense_rep();
    let rhs = a.dense_rep() * b.dense_rep();
    println!(
        "max |dense(AB) - dense(A)dense(B)| = {:.2e}",
        (lhs - rhs).iter().map(|c| c.norm()).fold(0.0, f64::max)
    );
    let c = a.commutator(&b)?;
    let d_max = c.diag().iter().map(|x| x.norm()).fold(0.0, f64::max);
    println!("max |d part of [A, B]| = {d_max}");
    println!(
        "A observable: {}, B observable: {}",
        a.is_observable(),
        b.is_observable()
    );

    let json = ab.to_json();
    println!("\n{json}");
    let back = OperatorKernel::from_json(&json)?;
    println!("round trip exact: {}", back == ab);
    Ok(())
}
