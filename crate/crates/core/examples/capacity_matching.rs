//! Size an MLP to a KAN's parameter count.
//!
//!     cargo run --example capacity_matching

use kcm::kan::{match_capacity_dims, KanConfig, MlpNetwork};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for dims in [vec![2, 5, 3], vec![16, 16, 16, 10], vec![1, 1], vec![8, 4, 4, 2]] {
        let kan = KanConfig::with_dims(dims.clone());
        let target = kan.param_count();
        let mlp = match_capacity_dims(&dims, target)?;
        let n = MlpNetwork::count_params(&mlp);
        println!("KAN {dims:?}: {target:>5} params  ->  MLP {mlp:?}: {n:>5} ({:+.1}%)", 100.0 * (n as f64 / target as f64 - 1.0));
    }
    Ok(())
}
