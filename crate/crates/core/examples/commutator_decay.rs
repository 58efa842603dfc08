//! Heisenberg evolution on the Gamow algebra and the decay of commutators.

use commutclass::evolution::default_scan_times;
use commutclass::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let res = [Resonance::new(2.0, 0.5)?];
    let (d, g) = (KetSymbol::d(1), KetSymbol::g(1));
    let o1 = GamowOperator::from_entries(
        1,
        [
            ((d, d), Complex64::new(1.0, 0.0)),
            ((g, d), Complex64::new(0.2, -0.7)),
        ],
    )?;
    let o2 = GamowOperator::from_entries(
        1,
        [
            ((d, g), Complex64::new(1.0, 0.0)),
            ((g, g), Complex64::new(0.0, 1.5)),
        ],
    )?;
    println!("O1 = {o1}\nO2 = {o2}\n[O1,O2] = {}", commutator(&o1, &o2)?);

    let times = default_scan_times(&res, 64);
    for family in [EvolutionFamily::Asymmetric, EvolutionFamily::Full] {
        for mode in [ScanMode::CommuteThenEvolve, ScanMode::EvolveThenCommute] {
            let scan = decay_scan(&o1, &o2, &res, family, &times, mode)?;
            let rate = scan
                .fitted_rate
                .map_or("undefined".into(), |r| format!("{r:+.4}"));
            println!(
                "{family:>10} {mode:<20} norm(0) = {:.3e}  norm(tmax) = {:.3e}  rate = {rate}",
                scan.norms[0],
                scan.norms.last().unwrap()
            );
        }
    }

    // the asymmetric propagator is self-adjoint and its square shrinks like e^{-tΓ}
    let t = 3.0;
    let u = evolution_operator(&res, EvolutionFamily::Asymmetric, t)?;
    println!("\nU(3) = {u}");
    println!("U(3)^2 = {}", u.compose(&u)?);
    println!("e^(-3Γ) = {:.6}", (-t * 0.5f64).exp());

    let full = evolution_operator(&res, EvolutionFamily::Full, t)?;
    let back = evolution_operator(&res, EvolutionFamily::Full, -t)?;
    println!("full: U(3)U(-3) = {}", full.compose(&back)?);

    println!("\nsurvival probability, Γ = 0.5:");
    for t in [0.0, 1.0, 2.0, 4.0] {
        let p = survival_probability(&res, 1, EvolutionFamily::Asymmetric, t)?;
        println!("  t = {t}: {p:.6}");
    }
    Ok(())
}
