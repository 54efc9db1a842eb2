use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, REPORT_VERSION};
use crate::kan::{match_capacity_dims, AnyNetwork, Differentiable, KanConfig, KanNetwork, MlpNetwork, ModelKind};
use crate::models::sgd_epoch_masked;

/// Sequential 1-D regression: phase `p` trains only on inputs from the
/// `p`-th of `phases` equal, disjoint sub-intervals of `[-1, 1]`, each
/// holding one Gaussian peak of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForgettingSpec {
    pub kind: ModelKind,
    /// KAN hidden widths; the MLP is matched to the resulting KAN size.
    pub hidden: Vec<usize>,
    pub order: usize,
    pub num_intervals: usize,
    pub phases: usize,
    pub points_per_phase: usize,
    pub eval_points_per_phase: usize,
    pub epochs_per_phase: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Peak standard deviation as a fraction of the phase interval width.
    pub peak_width: f64,
    /// Absolute error under which an evaluation point counts as retained.
    pub tolerance: f64,
    /// Train only KAN spline coefficients, holding the per-edge base and
    /// spline scales at their initial values. No effect on MLPs.
    pub coefficients_only: bool,
    /// Skip all parameter updates (control run).
    pub frozen: bool,
    pub seed: u64,
}

impl Default for ForgettingSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::Kan,
            hidden: vec![],
            order: 3,
            num_intervals: 20,
            phases: 5,
            points_per_phase: 64,
            eval_points_per_phase: 50,
            epochs_per_phase: 1000,
            learning_rate: 0.3,
            batch_size: 8,
            peak_width: 0.25,
            tolerance: 0.1,
            coefficients_only: true,
            frozen: false,
            seed: 0,
        }
    }
}

impl ForgettingSpec {
    fn bounds(&self, phase: usize) -> (f64, f64) {
        let w = 2.0 / self.phases as f64;
        (-1.0 + w * phase as f64, -1.0 + w * (phase + 1) as f64)
    }

    fn kan_config(&self) -> KanConfig {
        let mut dims = vec![1];
        dims.extend(&self.hidden);
        dims.push(1);
        KanConfig { dims, order: self.order, num_intervals: self.num_intervals, lo: -1.0, hi: 1.0, ..KanConfig::default() }
    }

    fn build(&self, rng: &mut ChaCha8Rng) -> Result<AnyNetwork, EvalError> {
        let kan = self.kan_config();
        Ok(match self.kind {
            ModelKind::Kan => AnyNetwork::Kan(KanNetwork::new(&kan, rng)?),
            ModelKind::Mlp => {
                AnyNetwork::Mlp(MlpNetwork::new(&match_capacity_dims(&kan.dims, kan.param_count())?, rng)?)
            }
        })
    }
}

/// Sum of one Gaussian peak per phase interval, each of height 1.
pub fn peak_target(spec: &ForgettingSpec, x: f64) -> f64 {
    (0..spec.phases)
        .map(|p| {
            let (a, b) = spec.bounds(p);
            let sd = spec.peak_width * (b - a);
            let z = (x - 0.5 * (a + b)) / sd;
            (-0.5 * z * z).exp()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingReport {
    pub version: u32,
    pub kind: ModelKind,
    pub params: usize,
    pub seed: u64,
    /// `retention[i][j]`, `j <= i`: fraction of phase-`j` points within
    /// tolerance after training phase `i`.
    pub retention: Vec<Vec<f64>>,
    pub score: f64,
    /// Mean of the last retention row.
    pub final_retention: f64,
}

/// Mean over tasks of the drop from the best retention seen to the final one.
pub fn forgetting_score(retention: &[Vec<f64>]) -> f64 {
    let Some(last) = retention.last() else { return 0.0 };
    let t = last.len();
    let drop: f64 = (0..t)
        .map(|j| {
            let best = retention[j..].iter().map(|row| row[j]).fold(f64::NEG_INFINITY, f64::max);
            best - last[j]
        })
        .sum();
    drop / t as f64
}

pub fn run_forgetting_benchmark(spec: &ForgettingSpec) -> Result<ForgettingReport, EvalError> {
    if spec.phases == 0 || spec.points_per_phase == 0 || spec.eval_points_per_phase == 0 {
        return Err(EvalError::InvalidInput("phases and point counts must be positive".into()));
    }
    if !(spec.tolerance > 0.0 && spec.peak_width > 0.0) {
        return Err(EvalError::InvalidInput("tolerance and peak_width must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut net = spec.build(&mut rng)?;

    let eval_sets: Vec<Vec<f64>> = (0..spec.phases)
        .map(|p| {
            let (a, b) = spec.bounds(p);
            let n = spec.eval_points_per_phase;
            (0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64).collect()
        })
        .collect();
    let score_phase = |net: &AnyNetwork, j: usize| -> Result<f64, EvalError> {
        let mut ok = 0usize;
        for &x in &eval_sets[j] {
            let y = net.forward(&[x])?[0];
            ok += usize::from((y - peak_target(spec, x)).abs() <= spec.tolerance);
        }
        Ok(ok as f64 / eval_sets[j].len() as f64)
    };

    let mask: Option<Vec<bool>> = match &net {
        AnyNetwork::Kan(k) if spec.coefficients_only => Some(
            k.layers()
                .iter()
                .flat_map(|l| l.edges())
                .flat_map(|e| std::iter::repeat_n(true, e.coefficients.len()).chain([false, false]))
                .collect(),
        ),
        _ => None,
    };

    let mut retention = Vec::with_capacity(spec.phases);
    for phase in 0..spec.phases {
        let (a, b) = spec.bounds(phase);
        let xs: Vec<Vec<f64>> = (0..spec.points_per_phase).map(|_| vec![rng.random_range(a..b)]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| peak_target(spec, x[0])).collect();
        if !spec.frozen {
            let mut order: Vec<usize> = (0..xs.len()).collect();
            for epoch in 0..spec.epochs_per_phase {
                order.shuffle(&mut rng);
                let loss = sgd_epoch_masked(
                    &mut net,
                    &xs,
                    &order,
                    spec.batch_size,
                    spec.learning_rate,
                    mask.as_deref(),
                    |i, out| {
                        let e = out[0] - ys[i];
                        (0.5 * e * e, vec![e])
                    },
                )?;
                if !loss.is_finite() {
                    return Err(EvalError::InvalidInput(format!("phase {phase} epoch {epoch}: loss diverged")));
                }
            }
        }
        retention.push((0..=phase).map(|j| score_phase(&net, j)).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(ForgettingReport {
        version: REPORT_VERSION,
        kind: spec.kind,
        params: net.num_params(),
        seed: spec.seed,
        score: forgetting_score(&retention),
        final_retention: retention.last().map_or(0.0, |r| r.iter().sum::<f64>() / r.len() as f64),
        retention,
    })
}
