//! Workers, containers and the admission path.
//!
//! Resource accounting: an executing invocation occupies the function
//! footprint on its worker from admission (including the cold-start delay)
//! until completion. Afterwards its container idles and keeps the memory and
//! storage part of the footprint until it is reused, evicted, or reclaimed.
//! Queued invocations hold nothing; warm-versus-cold is decided when they
//! start.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::engine::{Event, EventKind, EventQueue, Payload};
use crate::error::SimError;
use crate::model::{ContainerId, FunctionKey, InvocationId, TenantId, WorkerId};
use crate::resources::ResourceVector;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformConfig {
    /// One capacity vector per worker.
    pub capacities: Vec<ResourceVector>,
    /// Resource demand of every function.
    pub footprint: ResourceVector,
    pub idle_timeout: f64,
    pub cold_start_latency: f64,
    pub queue_limit: usize,
}

impl PlatformConfig {
    pub fn homogeneous(num_workers: usize, capacity: ResourceVector) -> Self {
        PlatformConfig {
            capacities: vec![capacity; num_workers],
            ..Default::default()
        }
    }
}

impl Default for PlatformConfig {
    fn default() -> Self {
        PlatformConfig {
            capacities: vec![ResourceVector::new(8, 8, 0)],
            footprint: ResourceVector::new(1, 1, 0),
            idle_timeout: 60.0,
            cold_start_latency: 10.0,
            queue_limit: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContainerState {
    Active(InvocationId),
    Idle,
}

#[derive(Debug, Clone)]
pub struct Container {
    pub id: ContainerId,
    pub function: FunctionKey,
    pub worker: WorkerId,
    pub state: ContainerState,
    pub last_used: SimTime,
    /// Resources currently attributed to this container.
    pub hold: ResourceVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartKind {
    Warm,
    Cold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlacementOutcome {
    StartedWarm,
    StartedCold,
    Enqueued,
    Dropped,
}

impl From<StartKind> for PlacementOutcome {
    fn from(kind: StartKind) -> Self {
        match kind {
            StartKind::Warm => PlacementOutcome::StartedWarm,
            StartKind::Cold => PlacementOutcome::StartedCold,
        }
    }
}

/// An invocation that has been admitted to a container.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Execution {
    pub invocation: InvocationId,
    pub function: FunctionKey,
    pub worker: WorkerId,
    pub container: ContainerId,
    pub kind: StartKind,
    /// When the execution-start event fires.
    pub start_at: SimTime,
}

#[derive(Debug, Clone, Copy)]
struct QueuedInvocation {
    id: InvocationId,
    function: FunctionKey,
}

#[derive(Debug)]
pub struct Worker {
    pub id: WorkerId,
    pub capacity: ResourceVector,
    in_use: ResourceVector,
    active: HashMap<InvocationId, ContainerId>,
    /// Idle containers ordered oldest first.
    idle_lru: BTreeSet<(SimTime, ContainerId)>,
    /// Idle containers per function, most recently used last.
    idle_by_function: HashMap<FunctionKey, Vec<ContainerId>>,
    queue: VecDeque<QueuedInvocation>,
    containers_by_tenant: HashMap<TenantId, u32>,
    container_count: u32,
    tenant_recency: HashMap<TenantId, SimTime>,
}

impl Worker {
    fn new(id: WorkerId, capacity: ResourceVector) -> Self {
        Worker {
            id,
            capacity,
            in_use: ResourceVector::ZERO,
            active: HashMap::new(),
            idle_lru: BTreeSet::new(),
            idle_by_function: HashMap::new(),
            queue: VecDeque::new(),
            containers_by_tenant: HashMap::new(),
            container_count: 0,
            tenant_recency: HashMap::new(),
        }
    }

    pub fn in_use(&self) -> ResourceVector {
        self.in_use
    }

    pub fn free(&self) -> ResourceVector {
        self.capacity.saturating_sub(&self.in_use)
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn idle_count(&self) -> usize {
        self.idle_lru.len()
    }

    pub fn is_active(&self, id: InvocationId) -> bool {
        self.active.contains_key(&id)
    }

    pub fn is_queued(&self, id: InvocationId) -> bool {
        self.queue.iter().any(|q| q.id == id)
    }

    fn warm_count(&self, function: FunctionKey) -> usize {
        self.idle_by_function.get(&function).map_or(0, Vec::len)
    }

    fn hosts_tenant(&self, tenant: TenantId) -> bool {
        self.containers_by_tenant.get(&tenant).copied().unwrap_or(0) > 0
    }

    fn hosts_other_tenant(&self, tenant: TenantId) -> bool {
        let own = self.containers_by_tenant.get(&tenant).copied().unwrap_or(0);
        self.container_count > own
    }

    fn register_container(&mut self, tenant: TenantId) {
        *self.containers_by_tenant.entry(tenant).or_insert(0) += 1;
        self.container_count += 1;
    }

    fn unregister_container(&mut self, tenant: TenantId) {
        let count = self
            .containers_by_tenant
            .get_mut(&tenant)
            .expect("container tenant registered");
        *count -= 1;
        if *count == 0 {
            self.containers_by_tenant.remove(&tenant);
        }
        self.container_count -= 1;
    }

    fn remove_idle_index(&mut self, container: &Container) {
        self.idle_lru.remove(&(container.last_used, container.id));
        if let Some(list) = self.idle_by_function.get_mut(&container.function) {
            list.retain(|&c| c != container.id);
            if list.is_empty() {
                self.idle_by_function.remove(&container.function);
            }
        }
    }
}

/// Cluster-wide reverse index from a key to the workers holding it, with
/// per-worker multiplicity.
#[derive(Debug)]
struct WorkerIndex<K>(HashMap<K, BTreeMap<usize, u32>>);

impl<K: std::hash::Hash + Eq + Copy> WorkerIndex<K> {
    fn new() -> Self {
        WorkerIndex(HashMap::new())
    }

    fn add(&mut self, key: K, worker: WorkerId) {
        *self.0.entry(key).or_default().entry(worker.0).or_insert(0) += 1;
    }

    fn remove(&mut self, key: K, worker: WorkerId) {
        let workers = self.0.get_mut(&key).expect("indexed key");
        let n = workers.get_mut(&worker.0).expect("indexed worker");
        *n -= 1;
        if *n == 0 {
            workers.remove(&worker.0);
            if workers.is_empty() {
                self.0.remove(&key);
            }
        }
    }

    fn get(&self, key: K) -> Option<&BTreeMap<usize, u32>> {
        self.0.get(&key)
    }
}

/// Cluster state for one run.
#[derive(Debug)]
pub struct Platform {
    config: PlatformConfig,
    workers: Vec<Worker>,
    /// Workers holding idle containers of a function.
    warm_index: WorkerIndex<FunctionKey>,
    /// Workers holding any container of a tenant.
    tenant_index: WorkerIndex<TenantId>,
    containers: HashMap<ContainerId, Container>,
    executions: HashMap<InvocationId, Execution>,
    next_container: u64,
}

impl Platform {
    pub fn new(config: PlatformConfig) -> Self {
        let workers = config
            .capacities
            .iter()
            .enumerate()
            .map(|(i, cap)| Worker::new(WorkerId(i), *cap))
            .collect();
        Platform {
            config,
            workers,
            containers: HashMap::new(),
            executions: HashMap::new(),
            next_container: 0,
            warm_index: WorkerIndex::new(),
            tenant_index: WorkerIndex::new(),
        }
    }

    pub fn config(&self) -> &PlatformConfig {
        &self.config
    }

    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    pub fn worker(&self, id: WorkerId) -> &Worker {
        &self.workers[id.0]
    }

    pub fn container(&self, id: ContainerId) -> Option<&Container> {
        self.containers.get(&id)
    }

    pub fn execution(&self, id: InvocationId) -> Option<&Execution> {
        self.executions.get(&id)
    }

    pub fn executions_in_flight(&self) -> usize {
        self.executions.len()
    }

    pub fn queued_total(&self) -> usize {
        self.workers.iter().map(Worker::queue_len).sum()
    }

    pub fn view(&self, now: SimTime) -> PlatformView<'_> {
        PlatformView {
            platform: self,
            now,
        }
    }

    /// Tries to start `invocation` on `worker` immediately, falling back to
    /// its FIFO queue, and finally dropping it.
    pub fn admit(
        &mut self,
        worker: WorkerId,
        invocation: InvocationId,
        function: FunctionKey,
        now: SimTime,
        queue: &mut EventQueue,
    ) -> Result<(PlacementOutcome, Option<Execution>), SimError> {
        if worker.0 >= self.workers.len() {
            return Err(SimError::consistency(format!("unknown worker {worker}")));
        }
        if self.executions.contains_key(&invocation) || self.workers[worker.0].is_queued(invocation)
        {
            return Err(SimError::consistency(format!(
                "invocation {invocation} admitted twice"
            )));
        }
        // A footprint larger than the worker could ever provide would wait forever.
        if !self.config.footprint.fits_within(&self.workers[worker.0].capacity) {
            return Ok((PlacementOutcome::Dropped, None));
        }
        if self.workers[worker.0].queue.is_empty() {
            if let Some(exec) = self.try_start(worker, invocation, function, now, queue)? {
                return Ok((exec.kind.into(), Some(exec)));
            }
        }
        let w = &mut self.workers[worker.0];
        if w.queue.len() < self.config.queue_limit {
            w.queue.push_back(QueuedInvocation {
                id: invocation,
                function,
            });
            Ok((PlacementOutcome::Enqueued, None))
        } else {
            Ok((PlacementOutcome::Dropped, None))
        }
    }

    /// Releases a finished execution, idles its container and starts queued
    /// invocations in FIFO order while they fit.
    pub fn complete(
        &mut self,
        worker: WorkerId,
        invocation: InvocationId,
        now: SimTime,
        queue: &mut EventQueue,
    ) -> Result<Vec<Execution>, SimError> {
        let exec = match self.executions.get(&invocation) {
            Some(e) if e.worker == worker => *e,
            _ => {
                return Err(SimError::consistency(format!(
                    "completion of invocation {invocation} which is not active on worker {worker}"
                )))
            }
        };
        self.executions.remove(&invocation);
        let footprint = self.config.footprint;
        let container = self
            .containers
            .get_mut(&exec.container)
            .expect("active container exists");
        container.state = ContainerState::Idle;
        container.last_used = now;
        container.hold = footprint.idle_hold();
        let (cid, function) = (container.id, container.function);

        let w = &mut self.workers[worker.0];
        w.active.remove(&invocation);
        w.in_use -= footprint;
        w.in_use += footprint.idle_hold();
        w.idle_lru.insert((now, cid));
        w.idle_by_function.entry(function).or_default().push(cid);
        self.warm_index.add(function, worker);

        queue.schedule(Event::new(
            now + self.config.idle_timeout,
            EventKind::Reclaim,
            Payload::Container {
                worker,
                container: cid,
            },
        ))?;

        let mut started = Vec::new();
        while let Some(next) = self.workers[worker.0].queue.front().copied() {
            match self.try_start(worker, next.id, next.function, now, queue)? {
                Some(exec) => {
                    self.workers[worker.0].queue.pop_front();
                    started.push(exec);
                }
                None => break,
            }
        }
        Ok(started)
    }

    /// Handles a reclaim event. Stale events (container reused or already
    /// gone) return `false`.
    pub fn reclaim(&mut self, worker: WorkerId, container: ContainerId, now: SimTime) -> bool {
        let Some(c) = self.containers.get(&container) else {
            return false;
        };
        if c.worker != worker || c.state != ContainerState::Idle {
            return false;
        }
        if now < c.last_used + self.config.idle_timeout {
            return false;
        }
        let c = self.containers.remove(&container).expect("checked");
        let w = &mut self.workers[worker.0];
        w.remove_idle_index(&c);
        w.in_use -= c.hold;
        w.unregister_container(c.function.tenant);
        self.warm_index.remove(c.function, worker);
        self.tenant_index.remove(c.function.tenant, worker);
        true
    }

    /// Places up to `count` idle containers for `function` on distinct
    /// workers, preferring those holding the fewest containers (ties by id).
    /// Returns how many were placed.
    pub fn prewarm(
        &mut self,
        function: FunctionKey,
        count: usize,
        queue: &mut EventQueue,
    ) -> Result<usize, SimError> {
        let now = queue.now();
        let hold = self.config.footprint.idle_hold();
        let mut candidates: Vec<usize> = (0..self.workers.len())
            .filter(|&i| hold.fits_within(&self.workers[i].free()))
            .collect();
        candidates.sort_by_key(|&i| (self.workers[i].container_count, i));
        let mut placed = 0;
        for i in candidates.into_iter().take(count) {
            let cid = self.alloc_container();
            self.containers.insert(
                cid,
                Container {
                    id: cid,
                    function,
                    worker: WorkerId(i),
                    state: ContainerState::Idle,
                    last_used: now,
                    hold,
                },
            );
            let w = &mut self.workers[i];
            w.in_use += hold;
            w.register_container(function.tenant);
            w.idle_lru.insert((now, cid));
            w.idle_by_function.entry(function).or_default().push(cid);
            self.warm_index.add(function, WorkerId(i));
            self.tenant_index.add(function.tenant, WorkerId(i));
            queue.schedule(Event::new(
                now + self.config.idle_timeout,
                EventKind::Reclaim,
                Payload::Container {
                    worker: WorkerId(i),
                    container: cid,
                },
            ))?;
            placed += 1;
        }
        Ok(placed)
    }

    /// Verifies accounting on one worker. Cheap enough to call after every
    /// dispatch in debug builds.
    pub fn check_worker(&self, worker: WorkerId) -> Result<(), SimError> {
        let w = &self.workers[worker.0];
        if !w.in_use.fits_within(&w.capacity) {
            return Err(SimError::consistency(format!(
                "worker {worker} over capacity: {:?} > {:?}",
                w.in_use, w.capacity
            )));
        }
        if w.queue.len() > self.config.queue_limit {
            return Err(SimError::consistency(format!(
                "worker {worker} queue length {} exceeds limit {}",
                w.queue.len(),
                self.config.queue_limit
            )));
        }
        let mut expected = ResourceVector::ZERO;
        for cid in w.active.values() {
            expected += self.containers[cid].hold;
        }
        for (_, cid) in &w.idle_lru {
            let c = &self.containers[cid];
            if c.state != ContainerState::Idle {
                return Err(SimError::consistency(format!("container {cid} indexed idle")));
            }
            expected += c.hold;
        }
        if expected != w.in_use {
            return Err(SimError::consistency(format!(
                "worker {worker} accounting drift: recorded {:?}, recomputed {expected:?}",
                w.in_use
            )));
        }
        if (w.active.len() + w.idle_lru.len()) as u32 != w.container_count {
            return Err(SimError::consistency(format!(
                "worker {worker} container count mismatch"
            )));
        }
        if w.queue.iter().any(|q| w.active.contains_key(&q.id)) {
            return Err(SimError::consistency(format!(
                "worker {worker} has an invocation both active and queued"
            )));
        }
        for (function, list) in &w.idle_by_function {
            let indexed = self.warm_index.get(*function).and_then(|m| m.get(&worker.0)).copied();
            if indexed != Some(list.len() as u32) {
                return Err(SimError::consistency(format!(
                    "worker {worker} warm index for {function:?} is {indexed:?}, expected {}",
                    list.len()
                )));
            }
        }
        for (tenant, n) in &w.containers_by_tenant {
            let indexed = self.tenant_index.get(*tenant).and_then(|m| m.get(&worker.0)).copied();
            if indexed != Some(*n) {
                return Err(SimError::consistency(format!(
                    "worker {worker} tenant index for {tenant} is {indexed:?}, expected {n}"
                )));
            }
        }
        Ok(())
    }

    pub fn check_all(&self) -> Result<(), SimError> {
        (0..self.workers.len()).try_for_each(|i| self.check_worker(WorkerId(i)))?;
        let warm: u64 = self.warm_index.0.values().flat_map(|m| m.values()).map(|&n| n as u64).sum();
        let idle: u64 = self.workers.iter().map(|w| w.idle_lru.len() as u64).sum();
        let hosted: u64 = self.tenant_index.0.values().flat_map(|m| m.values()).map(|&n| n as u64).sum();
        let containers: u64 = self.workers.iter().map(|w| w.container_count as u64).sum();
        if warm != idle || hosted != containers {
            return Err(SimError::consistency("cluster index holds stale entries"));
        }
        Ok(())
    }

    fn alloc_container(&mut self) -> ContainerId {
        let id = ContainerId(self.next_container);
        self.next_container += 1;
        id
    }

    /// Starts the invocation now if resources allow (evicting idle containers
    /// in LRU order when that is enough). Does not touch the queue.
    fn try_start(
        &mut self,
        worker: WorkerId,
        invocation: InvocationId,
        function: FunctionKey,
        now: SimTime,
        queue: &mut EventQueue,
    ) -> Result<Option<Execution>, SimError> {
        let footprint = self.config.footprint;
        let warm = self.workers[worker.0]
            .idle_by_function
            .get(&function)
            .and_then(|list| list.last().copied());

        let (cid, kind) = if let Some(cid) = warm {
            let hold = self.containers[&cid].hold;
            if !self.make_room(worker, footprint.saturating_sub(&hold), Some(cid)) {
                return Ok(None);
            }
            let c = self.containers.get_mut(&cid).expect("warm container");
            let snapshot = c.clone();
            c.state = ContainerState::Active(invocation);
            c.hold = footprint;
            let w = &mut self.workers[worker.0];
            w.remove_idle_index(&snapshot);
            w.in_use -= hold;
            w.in_use += footprint;
            self.warm_index.remove(function, worker);
            (cid, StartKind::Warm)
        } else {
            if !self.make_room(worker, footprint, None) {
                return Ok(None);
            }
            let cid = self.alloc_container();
            self.containers.insert(
                cid,
                Container {
                    id: cid,
                    function,
                    worker,
                    state: ContainerState::Active(invocation),
                    last_used: now,
                    hold: footprint,
                },
            );
            let w = &mut self.workers[worker.0];
            w.in_use += footprint;
            w.register_container(function.tenant);
            self.tenant_index.add(function.tenant, worker);
            (cid, StartKind::Cold)
        };

        let w = &mut self.workers[worker.0];
        w.active.insert(invocation, cid);
        w.tenant_recency.insert(function.tenant, now);
        let start_at = match kind {
            StartKind::Warm => now,
            StartKind::Cold => now + self.config.cold_start_latency,
        };
        let exec = Execution {
            invocation,
            function,
            worker,
            container: cid,
            kind,
            start_at,
        };
        self.executions.insert(invocation, exec);
        queue.schedule(Event::new(
            start_at,
            EventKind::ExecutionStart,
            Payload::Invocation(invocation),
        ))?;
        Ok(Some(exec))
    }

    /// Ensures `needed` is free on `worker`, evicting idle containers oldest
    /// first. Evicts nothing unless eviction is sufficient.
    fn make_room(
        &mut self,
        worker: WorkerId,
        needed: ResourceVector,
        keep: Option<ContainerId>,
    ) -> bool {
        let w = &self.workers[worker.0];
        if needed.fits_within(&w.free()) {
            return true;
        }
        let evictable = w
            .idle_lru
            .iter()
            .filter(|(_, cid)| Some(*cid) != keep)
            .fold(ResourceVector::ZERO, |acc, (_, cid)| {
                acc + self.containers[cid].hold
            });
        if !needed.fits_within(&(w.free() + evictable)) {
            return false;
        }
        let victims: Vec<ContainerId> = w
            .idle_lru
            .iter()
            .map(|&(_, cid)| cid)
            .filter(|&cid| Some(cid) != keep)
            .collect();
        for cid in victims {
            if needed.fits_within(&self.workers[worker.0].free()) {
                break;
            }
            let c = self.containers.remove(&cid).expect("idle container");
            let w = &mut self.workers[worker.0];
            w.remove_idle_index(&c);
            w.in_use -= c.hold;
            w.unregister_container(c.function.tenant);
            self.warm_index.remove(c.function, worker);
            self.tenant_index.remove(c.function.tenant, worker);
        }
        true
    }
}

/// Read-only snapshot handed to placement policies during one dispatch.
#[derive(Clone, Copy)]
pub struct PlatformView<'a> {
    platform: &'a Platform,
    now: SimTime,
}

impl<'a> PlatformView<'a> {
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn num_workers(&self) -> usize {
        self.platform.workers.len()
    }

    pub fn footprint(&self) -> ResourceVector {
        self.platform.config.footprint
    }

    pub fn idle_timeout(&self) -> f64 {
        self.platform.config.idle_timeout
    }

    pub fn capacity(&self, worker: WorkerId) -> ResourceVector {
        self.platform.workers[worker.0].capacity
    }

    /// Free resources, counting idle holds as used.
    pub fn free(&self, worker: WorkerId) -> ResourceVector {
        self.platform.workers[worker.0].free()
    }

    /// Idle containers on `worker` for this exact (tenant, function).
    pub fn warm_count(&self, worker: WorkerId, function: FunctionKey) -> usize {
        self.platform.workers[worker.0].warm_count(function)
    }

    /// Workers holding at least one idle container of `function`, ascending.
    pub fn warm_workers(&self, function: FunctionKey) -> impl Iterator<Item = WorkerId> + 'a {
        self.platform
            .warm_index
            .get(function)
            .into_iter()
            .flat_map(|m| m.keys().map(|&w| WorkerId(w)))
    }

    /// Workers holding any container of `tenant`, with the container count,
    /// ascending by worker.
    pub fn tenant_workers(&self, tenant: TenantId) -> impl Iterator<Item = (WorkerId, u32)> + 'a {
        self.platform
            .tenant_index
            .get(tenant)
            .into_iter()
            .flat_map(|m| m.iter().map(|(&w, &n)| (WorkerId(w), n)))
    }

    /// Active plus idle containers on `worker`.
    pub fn container_count(&self, worker: WorkerId) -> u32 {
        self.platform.workers[worker.0].container_count
    }

    /// Active executions plus queued invocations.
    pub fn load(&self, worker: WorkerId) -> usize {
        let w = &self.platform.workers[worker.0];
        w.active_count() + w.queue_len()
    }

    pub fn hosts_tenant(&self, worker: WorkerId, tenant: TenantId) -> bool {
        self.platform.workers[worker.0].hosts_tenant(tenant)
    }

    /// Whether `worker` has any active or idle container owned by a tenant
    /// other than `tenant`.
    pub fn hosts_other_tenant(&self, worker: WorkerId, tenant: TenantId) -> bool {
        self.platform.workers[worker.0].hosts_other_tenant(tenant)
    }

    /// Last time an invocation of `tenant` started on `worker`.
    pub fn recency(&self, worker: WorkerId, tenant: TenantId) -> Option<SimTime> {
        self.platform.workers[worker.0]
            .tenant_recency
            .get(&tenant)
            .copied()
    }
}
