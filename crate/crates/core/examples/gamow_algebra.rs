//! Formal bra-ket algebra on decaying/growing Gamow vectors.

use commutclass::krein::basis;
use commutclass::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 2;

    println!("pseudometric pairings (a|b):");
    print!("      ");
    for b in basis(n) {
        print!("{b:>4}");
    }
    println!();
    for a in basis(n) {
        print!("  {a:<4}");
        for b in basis(n) {
            print!("{:>4}", gram(n, a, b)?.re);
        }
        println!();
    }

    let m = build_metric(n)?;
    println!("\nmax |B·B - A| = {:.2e}", m.square_residual());

    let res = [Resonance::new(2.0, 1.0)?, Resonance::new(3.5, 0.4)?];
    let h = build_hamiltonian(&res, HamiltonianVariant::Hermitian)?;
    println!("\nH = {h}");
    println!("H is formally Hermitian: {}", h.adjoint() == h);

    for (i, r) in res.iter().enumerate() {
        let d = FormalVector::basis_vector(n, KetSymbol::d(i + 1))?;
        let g = FormalVector::basis_vector(n, KetSymbol::g(i + 1))?;
        let hd = h.apply(&d)?.get(KetSymbol::d(i + 1));
        let hg = h.apply(&g)?.get(KetSymbol::g(i + 1));
        println!("H|D{0}) = ({hd})|D{0}),  z  = {1}", i + 1, r.pole());
        println!("H|G{0}) = ({hg})|G{0}),  z* = {1}", i + 1, r.conj_pole());
    }

    let h3 = operator_power(&h, 3)?;
    println!("\nH^3 = {h3}");
    println!("z1^3 = {}", res[0].pole().powu(3));

    // dyads compose through the pairing: |D)(G| · |D)(G| = |D)(G|, |D)(G| · |G)(D| = 0
    let one = Complex64::new(1.0, 0.0);
    let (d1, g1) = (KetSymbol::d(1), KetSymbol::g(1));
    let p = GamowOperator::dyad(n, d1, g1, one)?;
    let q = GamowOperator::dyad(n, g1, d1, one)?;
    println!("\n|D1)(G1| |D1)(G1| = {}", p.compose(&p)?);
    println!("|D1)(G1| |G1)(D1| = {}", p.compose(&q)?);
    println!(
        "[|D1)(D1|, |D1)(G1|] = {}",
        commutator(&GamowOperator::dyad(n, d1, d1, one)?, &p)?
    );

    let x = FormalVector::from_coeffs(
        n,
        [
            (d1, Complex64::new(0.3, 1.0)),
            (g1, Complex64::new(-2.0, 0.5)),
        ],
    )?;
    println!(
        "\n(x|x) = {}  (indefinite: can be any complex number)",
        pseudo_inner(&x, &x)?
    );
    Ok(())
}
