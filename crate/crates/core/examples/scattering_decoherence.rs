//! Commutator expectations on the energy half-line fade as off-diagonal
//! kernels dephase; weak-limit kernels commute exactly.

use commutclass::expr::{sample, sample_functional};
use commutclass::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = make_grid(8.0, 256)?;
    let tag = AlgebraTag::Free;
    let e = |s: &str| parse(s);

    let rho = sample_functional(&e("1")?, Some(&e("exp(-(E-2)^2-(Ep-3)^2)")?), &grid, tag)?;
    let o1 = sample(&e("E")?, Some(&e("exp(-(E-3)^2-(Ep-3)^2)")?), &grid, tag)?;
    let o2 = sample(
        &e("sin(E)")?,
        Some(&e("i*exp(-(E-2)^2-(Ep-2)^2)")?),
        &grid,
        tag,
    )?;

    let tmax = grid.nyquist_tmax();
    println!("ΔE = {}, Nyquist bound = {tmax:.4}", grid.spacing());
    let times = commutclass::evolution::linspace(0.0, tmax, 11);
    for p in decay_curve(&rho, &o1, &o2, &times)? {
        println!("t = {:7.3}  |(ρ|[O1(t),O2(t)])| = {:.3e}", p.t, p.abs());
    }

    let weak = o1.weak_limit().commutator(&o2.weak_limit())?;
    println!("\nweak-limit commutator is zero: {}", weak.is_zero());
    println!(
        "(ρ|O1(t)) at t = 0, tmax: {:.4}, {:.4}",
        rho.pair(&o1, 0.0)?,
        rho.pair(&o1, tmax)?
    );
    println!(
        "(ρ|O1_weak)          : {:.4}",
        rho.pair(&o1.weak_limit(), 0.0)?
    );

    match o1.evolve(2.0 * tmax) {
        Err(err) => println!("\nevolve past the bound: {err}"),
        Ok(_) => unreachable!(),
    }

    // Møller conjugation changes the algebra, not the kernel
    let o_in = o1.moller_retag(MollerSign::In)?;
    println!(
        "retagged {} -> {}; mixing them: {}",
        o1.tag(),
        o_in.tag(),
        o1.product(&o_in).unwrap_err()
    );
    Ok(())
}
