//! B-spline basis, a single KAN edge, and a small network's forward and
//! backward passes.
//!
//!     cargo run --example kan_spline_basics

use kcm::kan::{edge_forward, io, Differentiable, KanConfig, KanEdge, KanNetwork, SplineBasis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // cubic splines, 5 intervals on [-1, 1] -> 8 basis functions
    let basis = SplineBasis::new(3, 5, -1.0, 1.0)?;
    let x = 0.37;
    let dense = basis.eval(x)?;
    println!("B(x = {x}) = {dense:.4?}");
    println!("sum = {}", dense.iter().sum::<f64>());

    let sparse = basis.eval_sparse(x)?;
    println!("nonzero from index {}: {:.4?}", sparse.first, sparse.values);

    let edge = KanEdge { coefficients: vec![1.0; basis.size()], base_scale: 0.0, spline_scale: 2.0 };
    println!("edge with unit coefficients at {x}: {}", edge_forward(&edge, &basis, x)?);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = KanNetwork::new(&KanConfig::with_dims(vec![2, 5, 3]), &mut rng)?;
    println!("network {:?} has {} parameters", net.dims(), net.num_params());

    let trace = net.forward_trace(&[0.2, -0.6])?;
    let grad = net.backward(&trace, &[1.0, 0.0, 0.0])?;
    let touched = grad.iter().filter(|g| **g != 0.0).count();
    println!("output {:.4?}; {touched} of {} gradient entries nonzero", trace.output(), grad.len());

    let bytes = io::to_bytes(&kcm::kan::AnyNetwork::Kan(net.clone()));
    let back = io::from_bytes(&bytes)?;
    println!("serialized to {} bytes, round trip equal: {}", bytes.len(), back.params() == net.params());
    Ok(())
}
