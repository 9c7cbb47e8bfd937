use drive_audit_core::classify::{
    classify_agents, filter_corpus, FilterMode, RuleSet, RuleTarget,
};
use drive_audit_core::metrics::{MetricConfig, MetricId, MetricSample};
use drive_audit_core::stats::{summarize, Histogram, SampleAccumulator, SummaryMode, DEFAULT_BINS};
use drive_audit_core::synthgen::{generate_corpus, CorpusOptions};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn arb_samples() -> impl Strategy<Value = Vec<MetricSample>> {
    let metric = prop::sample::select(MetricId::ALL.to_vec());
    prop::collection::vec(
        (metric, 0..4usize, 0..3usize, 0..110usize, -30.0..60.0f64),
        0..200,
    )
    .prop_map(|rows| {
        rows.into_iter()
            .map(|(m, subj, other, frame, v)| {
                let other = format!("o{other}");
                MetricSample::new(m, &format!("a{subj}"), Some(&other), frame, v)
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn summary_ignores_sample_order(samples in arb_samples(), seed in any::<u64>()) {
        let mut shuffled = samples.clone();
        // deterministic Fisher-Yates driven by the seed
        let mut x = seed | 1;
        for i in (1..shuffled.len()).rev() {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            shuffled.swap(i, (x % (i as u64 + 1)) as usize);
        }
        prop_assert_eq!(summarize(&samples), summarize(&shuffled));
    }

    #[test]
    fn merged_accumulators_equal_concatenation(a in arb_samples(), b in arb_samples()) {
        let mut left = SampleAccumulator::new(SummaryMode::PerFrame);
        left.add_samples(&a);
        let mut right = SampleAccumulator::new(SummaryMode::PerFrame);
        right.add_samples(&b);
        left.merge(right);
        let mut all = SampleAccumulator::new(SummaryMode::PerFrame);
        all.add_samples(&[a, b].concat());
        prop_assert_eq!(left.summarize(DEFAULT_BINS), all.summarize(DEFAULT_BINS));
    }

    #[test]
    fn rebinning_conserves_counts(values in prop::collection::vec(-100.0..100.0f64, 0..300), bins in 1..250usize, lo in -50.0..0.0f64, width in 0.1..80.0f64) {
        let mut h = Histogram::uniform(lo, lo + width, bins);
        values.iter().for_each(|&v| h.add(v));
        prop_assert_eq!(h.total(), values.len() as u64);
    }

    #[test]
    fn tighter_bounds_never_shrink_critical_set(samples in arb_samples(), ttc in 0.5..5.0f64, extra in 0.0..5.0f64) {
        let ids: Vec<String> = (0..4).map(|i| format!("a{i}")).collect();
        let critical = |rules: &RuleSet| -> BTreeSet<String> {
            classify_agents(&samples, rules, &ids).into_iter().filter(|l| l.is_critical).map(|l| l.agent_id).collect()
        };
        let base = RuleSet::default().with_bound(RuleTarget::Metric(MetricId::Ttc), ttc);
        let loose = base.with_bound(RuleTarget::Metric(MetricId::Ttc), ttc + extra);
        prop_assert!(critical(&base).is_subset(&critical(&loose)));
        prop_assert!(critical(&RuleSet::default().all_disabled()).is_empty());
    }
}

#[test]
fn filter_modes_partition_the_corpus() {
    let corpus = generate_corpus(36, 3, &CorpusOptions::default()).unwrap();
    let cfg = MetricConfig::default();
    let rules = RuleSet::default();
    let run = |mode| filter_corpus(corpus.iter().map(|g| Ok(g.scenario.clone())), &cfg, &rules, mode);
    let drop = run(FilterMode::DropCritical);
    let keep = run(FilterMode::KeepCritical);
    let ids = |o: &drive_audit_core::classify::FilterOutcome| -> BTreeSet<String> {
        o.emitted.iter().map(|s| s.meta.scenario_id.clone()).collect()
    };
    let (d, k) = (ids(&drop), ids(&keep));
    assert!(d.is_disjoint(&k));
    let all: BTreeSet<String> = corpus.iter().map(|g| g.scenario.meta.scenario_id.clone()).collect();
    assert_eq!(&d | &k, all);
    assert!(!d.is_empty() && !k.is_empty(), "corpus should mix critical and clean scenarios");
    assert_eq!(drop.manifest, keep.manifest.iter().map(|m| {
        let mut m = m.clone();
        m.emitted = !m.emitted;
        m
    }).collect::<Vec<_>>());
}
