//! Fixtures shared by the benchmarks.

use sfde_core::contrast::ContrastWorkspace;
use sfde_core::model::{builtin_benchmark, ModelSpec, BENCHMARK_THETA};
use sfde_core::simulate::{simulate_path, PathGrid, SimConfig};

pub struct Fixture {
    pub spec: ModelSpec,
    pub path: PathGrid,
    pub workspace: ContrastWorkspace,
    pub epsilon: f64,
}

/// A simulated benchmark path with its contrast workspace.
pub fn benchmark_fixture(n: usize, epsilon: f64, seed: u64) -> Fixture {
    let spec = builtin_benchmark();
    let path = simulate_path(&spec, &SimConfig::new(n, epsilon, seed), &BENCHMARK_THETA)
        .expect("simulate");
    let workspace = ContrastWorkspace::new(&path, &spec.delay).expect("workspace");
    Fixture {
        spec,
        path,
        workspace,
        epsilon,
    }
}
