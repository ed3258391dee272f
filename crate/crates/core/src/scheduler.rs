//! Placement policies.
//!
//! A policy sees only the [`PlatformView`] and, for the random policy, a
//! private random stream. Deterministic policies break every tie by lowest
//! worker id.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{InvocationRecord, WorkerId};
use crate::platform::PlatformView;
use crate::resources::ResourceVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchedulerKind {
    Random,
    DoubleDip,
    Helper,
    OpenWhisk,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::Random,
        SchedulerKind::DoubleDip,
        SchedulerKind::Helper,
        SchedulerKind::OpenWhisk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Random => "random",
            SchedulerKind::DoubleDip => "doubledip",
            SchedulerKind::Helper => "helper",
            SchedulerKind::OpenWhisk => "openwhisk",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheduler `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementDecision {
    Worker(WorkerId),
    Failure,
}

pub trait PlacementPolicy: Send {
    fn kind(&self) -> SchedulerKind;

    fn place(&mut self, invocation: &InvocationRecord, view: &PlatformView<'_>) -> PlacementDecision;
}

/// Workers that can start `footprint` right now without evicting anything,
/// in ascending id order.
pub fn eligible(view: &PlatformView<'_>, footprint: ResourceVector) -> Vec<WorkerId> {
    (0..view.num_workers())
        .map(WorkerId)
        .filter(|&w| footprint.fits_within(&view.free(w)))
        .collect()
}

fn least_loaded(view: &PlatformView<'_>, candidates: impl IntoIterator<Item = WorkerId>) -> Option<WorkerId> {
    // min_by_key keeps the first minimum, so ascending input means lowest id wins.
    candidates.into_iter().min_by_key(|&w| view.load(w))
}

fn all_workers(view: &PlatformView<'_>) -> impl Iterator<Item = WorkerId> {
    (0..view.num_workers()).map(WorkerId)
}

/// Narrows `candidates` to those matching `keep`, unless none would remain.
fn prefer(candidates: Vec<WorkerId>, keep: impl Fn(WorkerId) -> bool) -> Vec<WorkerId> {
    let filtered: Vec<WorkerId> = candidates.iter().copied().filter(|&w| keep(w)).collect();
    if filtered.is_empty() {
        candidates
    } else {
        filtered
    }
}

/// Uniform choice over eligible workers, or over all workers when none is
/// eligible.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(rng: ChaCha8Rng) -> Self {
        RandomPolicy { rng }
    }
}

impl PlacementPolicy for RandomPolicy {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Random
    }

    fn place(&mut self, _: &InvocationRecord, view: &PlatformView<'_>) -> PlacementDecision {
        let n = view.num_workers();
        if n == 0 {
            return PlacementDecision::Failure;
        }
        let candidates = eligible(view, view.footprint());
        if candidates.is_empty() {
            PlacementDecision::Worker(WorkerId(self.rng.random_range(0..n)))
        } else {
            PlacementDecision::Worker(candidates[self.rng.random_range(0..candidates.len())])
        }
    }
}

/// Tenant-isolating spread policy: filters eligible workers to those not
/// hosting another tenant, then to those already hosting this tenant, then to
/// those the tenant has not used within the recency window, and picks the
/// least loaded. Each filter is skipped if it would leave nothing.
pub struct DoubleDipPolicy {
    recency_window: f64,
}

impl DoubleDipPolicy {
    pub fn new(recency_window: f64) -> Self {
        DoubleDipPolicy { recency_window }
    }
}

impl PlacementPolicy for DoubleDipPolicy {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::DoubleDip
    }

    fn place(&mut self, inv: &InvocationRecord, view: &PlatformView<'_>) -> PlacementDecision {
        if view.num_workers() == 0 {
            return PlacementDecision::Failure;
        }
        let tenant = inv.tenant();
        let candidates = eligible(view, view.footprint());
        if candidates.is_empty() {
            return PlacementDecision::Worker(least_loaded(view, all_workers(view)).expect("workers exist"));
        }
        let now = view.now();
        let own: HashMap<WorkerId, u32> = view.tenant_workers(tenant).collect();
        let own_count = |w: WorkerId| own.get(&w).copied().unwrap_or(0);
        let isolated = prefer(candidates, |w| view.container_count(w) == own_count(w));
        // Stay inside the tenant's existing partition before claiming empty
        // workers, so partitions do not sprawl over the whole cluster.
        let owned = prefer(isolated, |w| own_count(w) > 0);
        let not_recent = prefer(owned, |w| match view.recency(w, tenant) {
            None => true,
            Some(t) => now.since(t) >= self.recency_window,
        });
        PlacementDecision::Worker(least_loaded(view, not_recent).expect("non-empty"))
    }
}

/// Warm-container affinity: the least-loaded eligible worker holding an idle
/// container of the function, else the least-loaded worker holding one even
/// if saturated, else the least-loaded eligible worker, else the least-loaded
/// worker overall.
pub struct HelperPolicy;

impl PlacementPolicy for HelperPolicy {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::Helper
    }

    fn place(&mut self, inv: &InvocationRecord, view: &PlatformView<'_>) -> PlacementDecision {
        if view.num_workers() == 0 {
            return PlacementDecision::Failure;
        }
        let footprint = view.footprint();
        let warm: Vec<WorkerId> = view.warm_workers(inv.function).collect();
        let choice = least_loaded(view, warm.iter().copied().filter(|&w| footprint.fits_within(&view.free(w))))
            // A warm container on a saturated worker still wins; the
            // invocation waits in that worker's queue.
            .or_else(|| least_loaded(view, warm.iter().copied()))
            .or_else(|| least_loaded(view, eligible(view, footprint)))
            .or_else(|| least_loaded(view, all_workers(view)));
        PlacementDecision::Worker(choice.expect("workers exist"))
    }
}

/// Home-worker sharding with co-prime probing.
pub struct OpenWhiskPolicy {
    salt: u64,
    /// Integers in `1..=n` co-prime with the cluster size `n`.
    step_sizes: Vec<usize>,
}

impl OpenWhiskPolicy {
    pub fn new(num_workers: usize, salt: u64) -> Self {
        let step_sizes = if num_workers <= 1 {
            vec![1]
        } else {
            (1..num_workers).filter(|&s| gcd(s, num_workers) == 1).collect()
        };
        OpenWhiskPolicy { salt, step_sizes }
    }

    /// Home index and probe step for an invocation.
    pub fn probe_plan(&self, inv: &InvocationRecord, num_workers: usize) -> (usize, usize) {
        let h = stable_hash(self.salt, inv.function.tenant.0, inv.function.function.0);
        let home = (h % num_workers as u64) as usize;
        let step = self.step_sizes[((h >> 32) % self.step_sizes.len() as u64) as usize];
        (home, step)
    }
}

impl PlacementPolicy for OpenWhiskPolicy {
    fn kind(&self) -> SchedulerKind {
        SchedulerKind::OpenWhisk
    }

    fn place(&mut self, inv: &InvocationRecord, view: &PlatformView<'_>) -> PlacementDecision {
        let n = view.num_workers();
        if n == 0 {
            return PlacementDecision::Failure;
        }
        let (home, step) = self.probe_plan(inv, n);
        let footprint = view.footprint();
        for i in 0..n {
            let w = WorkerId((home + i * step) % n);
            if footprint.fits_within(&view.free(w)) {
                return PlacementDecision::Worker(w);
            }
        }
        PlacementDecision::Worker(WorkerId(home))
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// SplitMix64 finalizer over the salted (tenant, function) pair. Stable across
/// platforms and toolchains.
pub fn stable_hash(salt: u64, tenant: u32, function: u32) -> u64 {
    let mut z = salt ^ ((tenant as u64) << 32 | function as u64);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOptions {
    pub recency_window: f64,
}

/// Builds the policy for `kind`; `rng` is the run's scheduler stream.
pub fn build_policy(
    kind: SchedulerKind,
    num_workers: usize,
    options: PolicyOptions,
    mut rng: ChaCha8Rng,
) -> Box<dyn PlacementPolicy> {
    match kind {
        SchedulerKind::Random => Box::new(RandomPolicy::new(rng)),
        SchedulerKind::DoubleDip => Box::new(DoubleDipPolicy::new(options.recency_window)),
        SchedulerKind::Helper => Box::new(HelperPolicy),
        SchedulerKind::OpenWhisk => Box::new(OpenWhiskPolicy::new(num_workers, rng.random())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EventQueue;
    use crate::model::{FunctionKey, InvocationId, Role};
    use crate::platform::{PlacementOutcome, Platform, PlatformConfig};
    use crate::rng;
    use crate::time::SimTime;

    fn platform(workers: usize, cap: ResourceVector) -> Platform {
        Platform::new(PlatformConfig::homogeneous(workers, cap))
    }

    fn inv(id: u64, tenant: u32) -> InvocationRecord {
        InvocationRecord {
            id: InvocationId(id),
            function: FunctionKey::new(tenant, 0),
            arrival: SimTime::new(0.0),
            service_time: 1.0,
            role: Role::Benign,
        }
    }

    fn admit(p: &mut Platform, q: &mut EventQueue, w: usize, r: &InvocationRecord, now: f64) -> PlacementOutcome {
        p.admit(WorkerId(w), r.id, r.function, SimTime::new(now), q).unwrap().0
    }

    /// Leaves an idle container of `r`'s function on worker `w`.
    fn idle(p: &mut Platform, q: &mut EventQueue, w: usize, r: &InvocationRecord, now: f64) {
        admit(p, q, w, r, now);
        p.complete(WorkerId(w), r.id, SimTime::new(now), q).unwrap();
    }

    fn place(policy: &mut dyn PlacementPolicy, p: &Platform, r: &InvocationRecord, now: f64) -> PlacementDecision {
        policy.place(r, &p.view(SimTime::new(now)))
    }

    #[test]
    fn eligibility_excludes_full_workers() {
        let mut p = platform(3, ResourceVector::new(1, 1, 0));
        let mut q = EventQueue::new();
        admit(&mut p, &mut q, 1, &inv(0, 0), 0.0);
        let view = p.view(SimTime::new(0.0));
        assert_eq!(eligible(&view, view.footprint()), vec![WorkerId(0), WorkerId(2)]);
    }

    #[test]
    fn helper_prefers_warm_worker() {
        let mut p = platform(3, ResourceVector::new(4, 4, 0));
        let mut q = EventQueue::new();
        idle(&mut p, &mut q, 2, &inv(0, 0), 0.0);
        assert_eq!(place(&mut HelperPolicy, &p, &inv(1, 0), 1.0), PlacementDecision::Worker(WorkerId(2)));
        assert_eq!(place(&mut HelperPolicy, &p, &inv(2, 7), 1.0), PlacementDecision::Worker(WorkerId(0)));
    }

    #[test]
    fn helper_takes_warm_container_on_saturated_worker() {
        let mut p = platform(2, ResourceVector::new(1, 1, 0));
        let mut q = EventQueue::new();
        idle(&mut p, &mut q, 1, &inv(0, 0), 0.0);
        let r = inv(1, 0);
        assert_eq!(place(&mut HelperPolicy, &p, &r, 1.0), PlacementDecision::Worker(WorkerId(1)));
        assert_eq!(admit(&mut p, &mut q, 1, &r, 1.0), PlacementOutcome::StartedWarm);
    }

    #[test]
    fn doubledip_avoids_other_tenants() {
        let mut p = platform(3, ResourceVector::new(4, 4, 0));
        let mut q = EventQueue::new();
        idle(&mut p, &mut q, 0, &inv(0, 1), 0.0);
        admit(&mut p, &mut q, 1, &inv(1, 2), 0.0);
        let mut dd = DoubleDipPolicy::new(0.0);
        assert_eq!(place(&mut dd, &p, &inv(2, 0), 1.0), PlacementDecision::Worker(WorkerId(2)));
        assert_eq!(place(&mut HelperPolicy, &p, &inv(2, 0), 1.0), PlacementDecision::Worker(WorkerId(0)));
    }

    #[test]
    fn doubledip_stays_in_tenant_partition() {
        let mut p = platform(3, ResourceVector::new(4, 4, 0));
        let mut q = EventQueue::new();
        admit(&mut p, &mut q, 2, &inv(0, 5), 0.0);
        let mut dd = DoubleDipPolicy::new(0.0);
        assert_eq!(place(&mut dd, &p, &inv(1, 5), 1.0), PlacementDecision::Worker(WorkerId(2)));
    }

    #[test]
    fn doubledip_skips_recently_used_worker() {
        let mut p = platform(2, ResourceVector::new(4, 4, 0));
        let mut q = EventQueue::new();
        idle(&mut p, &mut q, 0, &inv(0, 0), 0.0);
        idle(&mut p, &mut q, 1, &inv(1, 0), 0.0);
        idle(&mut p, &mut q, 0, &inv(2, 0), 5.0);
        let mut dd = DoubleDipPolicy::new(10.0);
        assert_eq!(place(&mut dd, &p, &inv(3, 0), 12.0), PlacementDecision::Worker(WorkerId(1)));
        let mut no_window = DoubleDipPolicy::new(0.0);
        assert_eq!(place(&mut no_window, &p, &inv(3, 0), 12.0), PlacementDecision::Worker(WorkerId(0)));
    }

    #[test]
    fn openwhisk_repeats_go_home_warm() {
        let mut p = platform(16, ResourceVector::new(4, 4, 0));
        let mut q = EventQueue::new();
        let mut ow = OpenWhiskPolicy::new(16, 42);
        let (home, _) = ow.probe_plan(&inv(0, 3), 16);
        for id in 0..5 {
            let r = inv(id, 3);
            assert_eq!(place(&mut ow, &p, &r, id as f64), PlacementDecision::Worker(WorkerId(home)));
            let expected = if id == 0 { PlacementOutcome::StartedCold } else { PlacementOutcome::StartedWarm };
            assert_eq!(admit(&mut p, &mut q, home, &r, id as f64), expected);
            p.complete(WorkerId(home), r.id, SimTime::new(id as f64), &mut q).unwrap();
        }
    }

    #[test]
    fn openwhisk_probes_by_step_when_home_is_full() {
        let n = 7;
        let mut p = platform(n, ResourceVector::new(1, 1, 0));
        let mut q = EventQueue::new();
        let mut ow = OpenWhiskPolicy::new(n, 9);
        let (home, step) = ow.probe_plan(&inv(0, 1), n);
        admit(&mut p, &mut q, home, &inv(100, 2), 0.0);
        admit(&mut p, &mut q, (home + step) % n, &inv(101, 2), 0.0);
        assert_eq!(
            place(&mut ow, &p, &inv(0, 1), 0.0),
            PlacementDecision::Worker(WorkerId((home + 2 * step) % n))
        );
    }

    #[test]
    fn openwhisk_steps_are_coprime() {
        for n in [1, 2, 6, 12, 97, 512] {
            let ow = OpenWhiskPolicy::new(n, 0);
            assert!(ow.step_sizes.iter().all(|&s| gcd(s, n.max(1)) == 1));
        }
        assert_eq!(OpenWhiskPolicy::new(12, 0).step_sizes, vec![1, 5, 7, 11]);
        assert_eq!(gcd(12, 18), 6);
    }

    #[test]
    fn stable_hash_is_salted_and_repeatable() {
        assert_eq!(stable_hash(1, 2, 3), stable_hash(1, 2, 3));
        assert_ne!(stable_hash(1, 2, 3), stable_hash(2, 2, 3));
        assert_ne!(stable_hash(1, 2, 3), stable_hash(1, 3, 2));
    }

    #[test]
    fn random_is_uniform_over_eligible() {
        let p = platform(8, ResourceVector::new(4, 4, 0));
        let mut policy = RandomPolicy::new(rng::stream(7, rng::SCHEDULER));
        let mut counts = [0u32; 8];
        for id in 0..80_000 {
            match place(&mut policy, &p, &inv(id, 0), 0.0) {
                PlacementDecision::Worker(w) => counts[w.0] += 1,
                PlacementDecision::Failure => panic!("no failure expected"),
            }
        }
        assert!(counts.iter().all(|&c| c.abs_diff(10_000) <= 500), "{counts:?}");
    }
}
