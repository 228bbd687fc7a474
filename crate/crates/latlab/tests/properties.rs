//! Property tests over the core invariants.

use std::collections::BTreeMap;

use proptest::prelude::*;

use latlab::audit::replay;
use latlab::engine::TraceSink;
use latlab::model::{
    derive_parameter_set, utilization, ArrayId, ClusterSpec, JobArray, LatencyProfile,
    StageLatency,
};
use latlab::multilevel::bundle;
use latlab::policy::{Family, Limit, PolicyConfig};
use latlab::sim::{simulate_with_sink, TrialSetup};
use latlab::Micros;

proptest! {
    #[test]
    fn parameter_set_identities_hold(
        processors in 1u32..4096,
        tasks_per_processor in 1u32..512,
        task_time_ms in 1u64..120_000,
        trials in 1u32..5,
    ) {
        let t = Micros::from_millis(task_time_ms);
        let t_job = t * tasks_per_processor as u64;
        let set = derive_parameter_set(processors, t_job, t, trials).unwrap();
        // n * t = T_job and N = P * n, exactly.
        prop_assert_eq!(set.task_time * set.tasks_per_processor as u64, set.job_time_per_processor);
        prop_assert_eq!(set.total_tasks, set.processors as u64 * set.tasks_per_processor as u64);
        prop_assert_eq!(set.total_processor_time(), Micros(set.total_tasks * set.task_time.0));
    }

    #[test]
    fn utilization_strictly_decreases_in_total_time(
        t_job_s in 1u64..10_000,
        extra_a in 0u64..1_000_000,
        extra_b in 1u64..1_000_000,
    ) {
        let t_job = Micros::from_secs(t_job_s);
        let shorter = t_job + Micros(extra_a);
        let longer = shorter + Micros(extra_b);
        let u_short = utilization(t_job, shorter).unwrap();
        let u_long = utilization(t_job, longer).unwrap();
        prop_assert!(u_long < u_short);
        prop_assert!(u_short <= 1.0 && u_long > 0.0);
    }

    #[test]
    fn bundling_conserves_payload_exactly(
        task_count in 1u32..600,
        bundle_factor in 1u32..40,
        task_time_ms in 1u64..5_000,
        eps_ms in 0u64..50,
    ) {
        let array = JobArray::uniform(ArrayId(0), task_count, Micros::from_millis(task_time_ms));
        let bundled = bundle(&array, bundle_factor, Micros::from_millis(eps_ms)).unwrap();
        // Payload conservation, for every (N, b).
        prop_assert_eq!(bundled.total_payload(), array.total_payload());
        // Launch-count identity: ceil(N/b) bundles.
        let expected = (task_count as u64).div_ceil(bundle_factor as u64);
        prop_assert_eq!(bundled.task_count() as u64, expected);
        // Each bundle's duration is payload plus per-switch overhead.
        for t in &bundled.tasks {
            prop_assert_eq!(
                t.duration,
                t.payload + Micros::from_millis(eps_ms) * (t.payload_units as u64 - 1)
            );
        }
    }
}

fn arb_policy() -> impl Strategy<Value = PolicyConfig> {
    let family = prop_oneof![
        Just(Family::MonolithicBatch),
        Just(Family::TwoLevelOffer),
        Just(Family::HeartbeatMapreduce),
    ];
    (
        family,
        0u64..200_000,  // cadence interval (us)
        prop_oneof![Just(Limit::UNLIMITED), (1u32..8).prop_map(Limit::Count)],
        0u64..30_000,   // dispatch base (us)
        any::<bool>(),
    )
        .prop_map(|(family, interval, concurrency, dispatch_us, backfill)| {
            let jitter = Micros(dispatch_us / 3);
            PolicyConfig {
                family,
                latency: LatencyProfile {
                    submission: StageLatency::new(Micros(500), Micros(100)),
                    queue_management: StageLatency::new(Micros(500), Micros(100)),
                    resource_identification: StageLatency::new(Micros(300), Micros(50)),
                    resource_selection: StageLatency::new(Micros(300), Micros(50)),
                    resource_allocation: StageLatency::new(Micros(300), Micros(50)),
                    job_dispatch: StageLatency::new(Micros(dispatch_us), jitter),
                    job_termination: StageLatency::new(Micros(800), Micros(200)),
                },
                cycle_period: Micros(interval),
                max_dispatch_per_cycle: Limit::UNLIMITED,
                backfill,
                offer_interval: Micros(interval),
                offer_batch: 16,
                heartbeat_interval: Micros(interval),
                dispatch_concurrency: concurrency,
                task_memory: 64,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, .. ProptestConfig::default() })]

    /// Determinism, clock monotonicity and state-machine legality across
    /// randomized small worlds: two runs are bit-identical, and the trace
    /// replays with zero violations and exact payload conservation.
    #[test]
    fn random_worlds_are_deterministic_and_legal(
        policy in arb_policy(),
        task_count in 1u32..60,
        task_time_ms in 1u64..3_000,
        seed in any::<u64>(),
    ) {
        let cluster = ClusterSpec {
            node_count: 2,
            slots_per_node: 3,
            dynamic_resources: BTreeMap::from([("memory".to_string(), 3 * 64)]),
        };
        let workload = [JobArray::uniform(ArrayId(0), task_count, Micros::from_millis(task_time_ms))];
        let run = |seed: u64| {
            let setup = TrialSetup {
                cluster: &cluster,
                policy: &policy,
                workload: &workload,
                failures: &[],
            };
            simulate_with_sink(&setup, seed, TraceSink::Collect(Vec::new()))
                .map(|(outcome, sink)| (outcome, sink.into_entries()))
                .unwrap()
        };
        let (outcome_a, trace_a) = run(seed);
        let (outcome_b, trace_b) = run(seed);
        prop_assert_eq!(&outcome_a, &outcome_b);
        prop_assert_eq!(&trace_a, &trace_b);

        prop_assert!(trace_a.windows(2).all(|w| w[0].time <= w[1].time), "clock monotonic");

        let report = replay(&trace_a, &workload, &cluster, policy.task_memory);
        prop_assert!(report.ok(), "audit violations: {:?}", report.violations);
        prop_assert!(report.conserves(Micros::from_millis(task_time_ms) * task_count as u64));
        prop_assert_eq!(outcome_a.tasks_completed, task_count as u64);
    }
}
