use hardylab::quadform::{build_grid, rayleigh_min_mu, GridMode, GridFunction};
use hardylab::testfun::make_bubble;
use hardylab::thresholds::ProblemInstance;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let inst = ProblemInstance::new(5.0, 2.0, 0.0, 1.0, 0.0, 3.0, 1.0).unwrap();
    let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 5.0, 1.0, 200, 2.0).unwrap());

    let t = Instant::now();
    let b = make_bubble(&inst).unwrap();
    println!("make_bubble: {:?} (mu={:.6})", t.elapsed(), b.mu);

    let t = Instant::now();
    let (mu, _) = rayleigh_min_mu(&inst, &grid).unwrap();
    println!("rayleigh instance: {:?} (mu={mu:.6})", t.elapsed());

    let u = GridFunction::from_fn(&grid, |r| (1.0 - r) * (1.0 + r)).unwrap();
    let t = Instant::now();
    for _ in 0..100 {
        let _ = hardylab::mountainpass::phi2_and_gradient(&inst, &u).unwrap();
    }
    println!("100x phi2_and_gradient(incl. setup): {:?}", t.elapsed());
}
