mod common;

use std::collections::BTreeSet;
use std::sync::OnceLock;

use kcm::backends::{BackendError, CountingBackend, FailingBackend, OracleBackend, OracleSpec};
use kcm::collab::{
    infer, infer_batch, lm_rate, partition_training, train_kcm, CollabError, DecisionLog, DecisionRecord, KcmConfig,
    RouteTarget, SecondGate, TrainingPartition,
};
use kcm::data::{Dataset, Sample, Split};
use kcm::models::{argmax, train_supervised, ArchSpec, ClassifierHandle};
use proptest::prelude::*;

struct Fixture {
    data: Dataset,
    judgment: ClassifierHandle,
    small: ClassifierHandle,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let data = common::small_dataset(5);
        let arch = ArchSpec { hidden: vec![8], epochs: 20, ..Default::default() };
        let judgment = train_supervised(&data.split(Split::Train), data.num_classes(), &arch, 1).unwrap();
        // a differently seeded model stands in for a distilled one
        let small = train_supervised(&data.split(Split::Train), data.num_classes(), &arch, 2).unwrap();
        Fixture { data, judgment, small }
    })
}

fn oracle() -> OracleBackend {
    OracleBackend::new(OracleSpec::default()).unwrap()
}

/// Re-derives the target from the logged confidences alone.
fn brute_force(r: &DecisionRecord, eps: f64, gate: SecondGate) -> RouteTarget {
    if r.c_x > eps {
        return RouteTarget::JudgmentModel;
    }
    let second = match gate {
        SecondGate::SmallConfidence => r.c_s,
        SecondGate::LargeConfidence => r.c_l,
    };
    match second {
        Some(c) if c > eps => RouteTarget::SmallModel,
        _ => RouteTarget::LargeModel,
    }
}

fn run(eps: f64, gate: SecondGate) -> (Vec<kcm::collab::Inference>, Vec<DecisionRecord>, usize, Vec<u64>) {
    let f = fixture();
    let all: Vec<&Sample> = f.data.samples.iter().collect();
    let cfg = KcmConfig { epsilon: eps, second_gate: gate, ..Default::default() };
    let backend = CountingBackend::new(oracle());
    let log = DecisionLog::new();
    let out = infer_batch(&all, &f.judgment, &f.small, &backend, &f.data.label_names, &cfg, &log).unwrap();
    (out, log.snapshot(), backend.calls(), backend.seen_ids())
}

#[test]
fn decisions_match_brute_force_and_backend_is_called_only_for_large_routes() {
    for eps in [0.5, 0.8, 0.9, 0.98] {
        let (out, log, calls, seen) = run(eps, SecondGate::SmallConfidence);
        assert_eq!(log.len(), fixture().data.len());
        for (inf, rec) in out.iter().zip(&log) {
            assert_eq!(inf.sample_id, rec.sample_id);
            assert_eq!(rec.target, brute_force(rec, eps, SecondGate::SmallConfidence));
        }
        let large: Vec<u64> = log.iter().filter(|r| r.target == RouteTarget::LargeModel).map(|r| r.sample_id).collect();
        assert_eq!(calls, large.len());
        let mut sorted = large.clone();
        sorted.sort_unstable();
        assert_eq!(seen, sorted);
        let recount = 100.0 * large.len() as f64 / log.len() as f64;
        assert_eq!(lm_rate(&log), recount);
    }
}

#[test]
fn literal_mode_consults_the_large_model_past_the_first_gate() {
    let eps = 0.9;
    let (_, log, calls, _) = run(eps, SecondGate::LargeConfidence);
    let past_gate = log.iter().filter(|r| r.c_x <= eps).count();
    assert_eq!(calls, past_gate);
    for r in &log {
        assert_eq!(r.target, brute_force(r, eps, SecondGate::LargeConfidence));
    }
}

#[test]
fn epsilon_one_routes_everything_to_the_large_model() {
    let f = fixture();
    let (out, log, calls, _) = run(1.0, SecondGate::SmallConfidence);
    assert_eq!(lm_rate(&log), 100.0);
    assert_eq!(calls, f.data.len());
    let backend = oracle();
    for (s, inf) in f.data.samples.iter().zip(&out) {
        let p = kcm::collab::build_prompt(s.id, &[1.0], 0.0, &f.data.label_names, 0);
        use kcm::backends::LargeModel;
        assert_eq!(inf.prediction, backend.predict(s, &p, &f.data.label_names).unwrap().predicted_class());
    }
}

#[test]
fn epsilon_zero_never_calls_the_backend() {
    let f = fixture();
    let (out, log, calls, _) = run(0.0, SecondGate::SmallConfidence);
    assert_eq!(calls, 0);
    assert_eq!(lm_rate(&log), 0.0);
    for (s, inf) in f.data.samples.iter().zip(&out) {
        assert_eq!(inf.prediction, f.judgment.predict(&s.features).unwrap());
    }
}

#[test]
fn large_routes_carry_the_confidence_string() {
    let (out, _, _, _) = run(0.98, SecondGate::SmallConfidence);
    let mut n = 0;
    for inf in out.iter().filter(|i| i.decision.target == RouteTarget::LargeModel) {
        let p = inf.prompt.as_ref().expect("large routes have a prompt");
        let needle = format!("the confidence of the small model is {:.4}", inf.record.c_x);
        assert!(p.template_text.contains(&needle));
        n += 1;
    }
    assert!(n > 0);
}

#[test]
fn backend_failure_degrades_to_the_small_model() {
    let f = fixture();
    let cfg = KcmConfig { epsilon: 1.0, ..Default::default() };
    let log = DecisionLog::new();
    let failing = FailingBackend(BackendError::Timeout { attempts: 3 });
    for s in f.data.split(Split::Test).into_iter().take(20) {
        let inf = infer(s, &f.judgment, &f.small, &failing, &f.data.label_names, &cfg, &log).unwrap();
        assert!(inf.degraded && inf.record.degraded);
        assert_eq!(inf.decision.target, RouteTarget::LargeModel);
        assert_eq!(inf.prediction, argmax(&f.small.distribution(&s.features).unwrap()));
    }
    assert_eq!(log.len(), 20);
}

#[test]
fn batch_equals_sequential() {
    let f = fixture();
    let test = f.data.split(Split::Test);
    let cfg = KcmConfig { epsilon: 0.9, max_in_flight: 8, ..Default::default() };
    let b = oracle();
    let batch = infer_batch(&test, &f.judgment, &f.small, &b, &f.data.label_names, &cfg, &DecisionLog::new()).unwrap();
    let log = DecisionLog::new();
    for (s, bi) in test.iter().zip(&batch) {
        let si = infer(s, &f.judgment, &f.small, &b, &f.data.label_names, &cfg, &log).unwrap();
        assert_eq!((si.prediction, &si.decision, si.degraded), (bi.prediction, &bi.decision, bi.degraded));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn lm_rate_is_monotone_in_epsilon(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (_, l1, _, _) = run(lo, SecondGate::SmallConfidence);
        let (_, l2, _, _) = run(hi, SecondGate::SmallConfidence);
        prop_assert!(lm_rate(&l1) <= lm_rate(&l2));
    }
}

#[test]
fn partition_is_total_and_economical() {
    let f = fixture();
    let pool = f.data.split(Split::Val);
    let cfg = KcmConfig { epsilon: 0.9, ..Default::default() };
    let backend = CountingBackend::new(oracle());
    let p = partition_training(&pool, &f.judgment, &backend, &f.data.label_names, &cfg).unwrap();
    assert_eq!(p.total(), pool.len());
    assert_eq!(backend.calls(), pool.len() - p.x1.len());
    assert_eq!(p.backend_calls, backend.calls());
    let seen: BTreeSet<u64> = backend.seen_ids().into_iter().collect();
    assert!(seen.is_disjoint(&p.x1));
    assert_eq!(seen, p.x2.union(&p.x3).copied().collect());
    for id in &p.x2 {
        let t = &p.teacher_targets[id];
        assert!(t.iter().copied().fold(0.0, f64::max) > cfg.epsilon);
    }
    let again = partition_training(&pool, &f.judgment, &oracle(), &f.data.label_names, &cfg).unwrap();
    assert_eq!(again, p);
}

#[test]
fn failing_backend_sends_the_rest_to_x3() {
    let f = fixture();
    let pool = f.data.split(Split::Val);
    let cfg = KcmConfig { epsilon: 0.9, ..Default::default() };
    let failing = FailingBackend(BackendError::Transport { message: "down".into(), attempts: 3 });
    let p = partition_training(&pool, &f.judgment, &failing, &f.data.label_names, &cfg).unwrap();
    assert!(p.x2.is_empty());
    assert_eq!(p.x3.len(), pool.len() - p.x1.len());
    assert_eq!(p.backend_failures, p.x3.len());
}

#[test]
fn empty_partition_leaves_the_small_model_bit_identical() {
    let f = fixture();
    let pool = f.data.split(Split::Val);
    let part = TrainingPartition { x3: pool.iter().map(|s| s.id).collect(), ..Default::default() };
    let d = train_kcm(&part, &pool, &f.judgment, &KcmConfig::default(), 9).unwrap();
    assert_eq!(d.model.params_bits(), f.judgment.params_bits());
    assert!(d.loss_curve.is_empty());
}

#[test]
fn distillation_is_deterministic_and_leaves_the_judgment_model_alone() {
    let f = fixture();
    let pool = f.data.split(Split::Val);
    let cfg = KcmConfig { epsilon: 0.9, ..Default::default() };
    let before = f.judgment.params_bits();
    let p = partition_training(&pool, &f.judgment, &oracle(), &f.data.label_names, &cfg).unwrap();
    let a = train_kcm(&p, &pool, &f.judgment, &cfg, 3).unwrap();
    let b = train_kcm(&p, &pool, &f.judgment, &cfg, 3).unwrap();
    assert_eq!(a.model.params_bits(), b.model.params_bits());
    assert_ne!(a.model.params_bits(), before);
    assert_eq!(f.judgment.params_bits(), before);
    assert!(!a.loss_curve.is_empty() && a.loss_curve.len() <= cfg.epochs);
}

#[test]
fn exploding_step_aborts_with_the_epoch() {
    let f = fixture();
    let pool = f.data.split(Split::Val);
    let cfg = KcmConfig { epsilon: 0.9, learning_rate: 1e300, ..Default::default() };
    let p = partition_training(&pool, &f.judgment, &oracle(), &f.data.label_names, &cfg).unwrap();
    match train_kcm(&p, &pool, &f.judgment, &cfg, 3) {
        Err(CollabError::Diverged { epoch }) => assert!(epoch < cfg.epochs),
        other => panic!("expected divergence, got {:?}", other.map(|d| d.loss_curve)),
    }
}

#[test]
fn partition_with_foreign_ids_is_rejected() {
    let f = fixture();
    let pool = f.data.split(Split::Val);
    let mut part = TrainingPartition { x3: pool.iter().map(|s| s.id).collect(), ..Default::default() };
    part.x2.insert(u64::MAX);
    assert!(matches!(
        train_kcm(&part, &pool, &f.judgment, &KcmConfig::default(), 0),
        Err(CollabError::Partition(_))
    ));
}
