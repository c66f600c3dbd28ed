use hardylab::mountainpass::{mountain_pass_solve, MPConfig};
use hardylab::quadform::{build_grid, GridMode};
use hardylab::thresholds::ProblemInstance;
use std::sync::Arc;

fn main() {
    let inst = ProblemInstance::new(5.0, 2.0, 0.0, 1.0, 0.0, 3.0, 1.0).unwrap();
    let grid = Arc::new(build_grid(GridMode::RadialAlpha2, 5.0, 1.0, 200, 2.0).unwrap());
    let t = std::time::Instant::now();
    let r = mountain_pass_solve(&inst, &grid, &MPConfig::default()).unwrap();
    println!(
        "level={:.8} residual={:.2e} upsilon={:.8} iters={} time={:?}",
        r.level, r.residual, r.upsilon_discrete, r.iterations, t.elapsed()
    );
}
