//! Integrates the full system for one period from the case iii seed and
//! prints the displacement in reduced coordinates. The z and w displacements
//! shrink like √ε rather than ε: the √ε part of the reduced field has a
//! nonzero mean at the seed, so no periodic orbit sits within O(ε) of it.

use std::f64::consts::PI;

use zerohopf_core::averaging::averaged_zeros;
use zerohopf_core::ode::{flow, IntegratorConfig};
use zerohopf_core::orbits::seed_state;
use zerohopf_core::reduction::{full_to_reduced, jordan_change, perturb, Branch, UnfoldingSpec};

fn main() -> Result<(), zerohopf_core::Error> {
    let spec = UnfoldingSpec::case_iii(1.0, 1.0, 3.0, 1.0, 1.0, 0.0, Branch::Plus);
    let seed = averaged_zeros(&spec)?.into_iter().find(|z| z.label == "s1,2").expect("real for this spec");
    let change = jordan_change(&spec)?;
    let k = (spec.b1 * spec.delta0()).sqrt();
    println!("eps        dr         dz         dw         2π√ε·k·|w|");
    for eps in [1e-2, 5e-3, 2.5e-3, 1.25e-3] {
        let p = perturb(&spec, eps)?;
        let end = flow(&p, seed_state(&spec, eps, &seed)?, 2.0 * PI, &IntegratorConfig::default())?;
        let (_, x) = full_to_reduced(&spec, &change, eps, &end)?;
        let d: Vec<f64> = x.iter().zip(seed.location).map(|(a, b)| a - b).collect();
        let predicted = 2.0 * PI * eps.sqrt() * k * seed.location[2].abs();
        println!("{eps:<10} {:<10.5} {:<10.5} {:<10.5} {predicted:.5}", d[0], d[1], d[2]);
    }
    Ok(())
}
