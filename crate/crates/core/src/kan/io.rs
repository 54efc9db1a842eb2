//! Binary model files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes  "KCMNET\0\0"
//! version    u32      currently 1
//! kind       u8       0 = KAN, 1 = MLP
//! n_dims     u32
//! dims       n_dims x u32
//! [KAN only] order u32, intervals u32, lo f64, hi f64
//! n_params   u64
//! params     n_params x f64   (flat order of `Differentiable::params`)
//! ```

use std::io::{Read, Write};

use super::{
    AnyNetwork, Differentiable, KanConfig, KanEdge, KanError, KanLayer, KanNetwork, MlpLayer,
    MlpNetwork, SplineBasis,
};

pub const MAGIC: &[u8; 8] = b"KCMNET\0\0";
pub const FORMAT_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> KanError {
    KanError::Format(e.to_string())
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<(), KanError> {
    w.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<(), KanError> {
    w.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn get<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N], KanError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(io_err)?;
    Ok(buf)
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32, KanError> {
    Ok(u32::from_le_bytes(get(r)?))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64, KanError> {
    Ok(f64::from_le_bytes(get(r)?))
}

pub fn write_network<W: Write>(net: &AnyNetwork, w: &mut W) -> Result<(), KanError> {
    w.write_all(MAGIC).map_err(io_err)?;
    put_u32(w, FORMAT_VERSION)?;
    let dims = match net {
        AnyNetwork::Kan(k) => k.dims(),
        AnyNetwork::Mlp(m) => m.dims(),
    };
    w.write_all(&[match net {
        AnyNetwork::Kan(_) => 0u8,
        AnyNetwork::Mlp(_) => 1u8,
    }])
    .map_err(io_err)?;
    put_u32(w, dims.len() as u32)?;
    for d in &dims {
        put_u32(w, *d as u32)?;
    }
    if let AnyNetwork::Kan(k) = net {
        let b = k.layers()[0].basis();
        put_u32(w, b.order() as u32)?;
        put_u32(w, b.num_intervals() as u32)?;
        let (lo, hi) = b.range();
        put_f64(w, lo)?;
        put_f64(w, hi)?;
    }
    let params = net.params();
    w.write_all(&(params.len() as u64).to_le_bytes()).map_err(io_err)?;
    for p in params {
        put_f64(w, p)?;
    }
    Ok(())
}

pub fn read_network<R: Read>(r: &mut R) -> Result<AnyNetwork, KanError> {
    let magic: [u8; 8] = get(r)?;
    if &magic != MAGIC {
        return Err(KanError::Format("not a model file (bad magic)".into()));
    }
    let version = get_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(KanError::Format(format!("unsupported format version {version}")));
    }
    let [kind] = get::<1, _>(r)?;
    let n_dims = get_u32(r)? as usize;
    if !(2..=1024).contains(&n_dims) {
        return Err(KanError::Format(format!("implausible layer count {n_dims}")));
    }
    let dims = (0..n_dims).map(|_| get_u32(r).map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
    let mut net = match kind {
        0 => {
            let order = get_u32(r)? as usize;
            let num_intervals = get_u32(r)? as usize;
            let lo = get_f64(r)?;
            let hi = get_f64(r)?;
            let config = KanConfig { dims: dims.clone(), order, num_intervals, lo, hi, ..KanConfig::default() };
            let basis = SplineBasis::new(order, num_intervals, lo, hi)?;
            let layers = dims
                .windows(2)
                .map(|w| KanLayer::new(w[0], w[1], basis.clone(), vec![KanEdge::zeros(basis.size()); w[0] * w[1]]))
                .collect::<Result<Vec<_>, _>>()?;
            let net = KanNetwork::from_layers(layers)?;
            debug_assert_eq!(net.num_params(), config.param_count());
            AnyNetwork::Kan(net)
        }
        1 => {
            let layers = dims
                .windows(2)
                .map(|w| MlpLayer {
                    in_dim: w[0],
                    out_dim: w[1],
                    weights: vec![0.0; w[0] * w[1]],
                    bias: vec![0.0; w[1]],
                })
                .collect();
            AnyNetwork::Mlp(MlpNetwork::from_layers(layers)?)
        }
        other => return Err(KanError::Format(format!("unknown network kind tag {other}"))),
    };
    let n_params = u64::from_le_bytes(get(r)?) as usize;
    if n_params != net.num_params() {
        return Err(KanError::Format(format!(
            "parameter count {n_params} does not match architecture ({})",
            net.num_params()
        )));
    }
    let params = (0..n_params).map(|_| get_f64(r)).collect::<Result<Vec<_>, _>>()?;
    net.set_params(&params)?;
    Ok(net)
}

pub fn to_bytes(net: &AnyNetwork) -> Vec<u8> {
    let mut buf = Vec::new();
    write_network(net, &mut buf).expect("writing to a Vec cannot fail");
    buf
}

pub fn from_bytes(bytes: &[u8]) -> Result<AnyNetwork, KanError> {
    let mut cursor = bytes;
    let net = read_network(&mut cursor)?;
    if !cursor.is_empty() {
        return Err(KanError::Format(format!("{} trailing bytes", cursor.len())));
    }
    Ok(net)
}
