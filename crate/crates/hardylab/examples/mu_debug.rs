use hardylab::quadform::{build_grid, mu_residual, rayleigh_min_mu, GridMode, GridFunction};
use hardylab::thresholds::ProblemInstance;
use std::sync::Arc;

fn main() {
    let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 3.0, 1.0, 250, 2.0).unwrap());
    let inst = ProblemInstance::new(3.0, 2.0, 0.0, 0.0, 0.0, 3.0, 1.0).unwrap();
    let init = GridFunction::from_fn(&grid, |r| (1.0 + r * r).powf(-0.5)).unwrap();
    let r0 = mu_residual(&inst, &init).unwrap();
    let t = std::time::Instant::now();
    let (mu, minimizer) = rayleigh_min_mu(&inst, &grid).unwrap();
    let r1 = mu_residual(&inst, &minimizer).unwrap();
    println!("mu = {mu:.10}, r0 = {r0:.3e}, r1 = {r1:.3e}, ratio = {:.3e}, time = {:?}", r1 / r0, t.elapsed());
    // where is the minimizer mass concentrated?
    let vals = minimizer.values();
    let imax = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    println!("peak at r = {:.4e}, value {:.4e}, min value {:.3e}", grid.nodes()[imax], vals[imax], minimizer.min_value());
}
