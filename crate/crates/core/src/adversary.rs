//! Attacker injection on top of a benign workload.
//!
//! The wrapper relabels the victim tenant's records and interleaves an
//! independent attacker arrival process whose long-run rate is
//! `intensity × victim arrival rate`. Attackers draw from their own stream,
//! so stripping attacker records returns the benign stream unchanged.

use std::collections::VecDeque;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{FunctionId, FunctionKey, InvocationId, InvocationRecord, Role, TenantId};
use crate::time::SimTime;
use crate::workload::{
    sample_service_time, ArrivalClock, ArrivalProcess, ArrivalSource, ServiceTimeSpec,
    WorkloadSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackPattern {
    Poisson,
    Uniform,
    Bursty,
}

impl FromStr for AttackPattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "poisson" => Ok(AttackPattern::Poisson),
            "uniform" => Ok(AttackPattern::Uniform),
            "bursty" => Ok(AttackPattern::Bursty),
            other => Err(format!("unknown attack pattern `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub attacker_tenant: TenantId,
    /// Attacker invocations per victim invocation.
    pub intensity: f64,
    pub pattern: AttackPattern,
    pub victim_tenant: TenantId,
    /// `None` means every function of the victim tenant.
    pub victim_functions: Option<Vec<FunctionId>>,
    pub service: ServiceTimeSpec,
    /// High-to-low rate ratio for the bursty pattern.
    pub burst_ratio: f64,
    pub phase_length: f64,
}

impl AttackSpec {
    /// The attack function every attacker record invokes.
    pub fn attack_function(&self) -> FunctionKey {
        FunctionKey {
            tenant: self.attacker_tenant,
            function: FunctionId(0),
        }
    }

    fn is_victim(&self, function: FunctionKey) -> bool {
        function.tenant == self.victim_tenant
            && self
                .victim_functions
                .as_ref()
                .is_none_or(|set| set.contains(&function.function))
    }

    pub fn validate(&self, benign: &WorkloadSpec) -> Result<(), String> {
        if !(self.intensity.is_finite() && self.intensity >= 0.0) {
            return Err(format!("attack intensity must be >= 0, got {}", self.intensity));
        }
        if self.victim_tenant.0 >= benign.tenants {
            return Err(format!(
                "victim tenant {} is not one of the {} benign tenants",
                self.victim_tenant, benign.tenants
            ));
        }
        if self.attacker_tenant.0 < benign.tenants {
            return Err(format!(
                "attacker tenant {} collides with a benign tenant",
                self.attacker_tenant
            ));
        }
        if let Some(set) = &self.victim_functions {
            if set.is_empty() {
                return Err("victim function set is empty".into());
            }
            if let Some(f) = set.iter().find(|f| f.0 >= benign.functions_per_tenant) {
                return Err(format!("victim function {f} does not exist"));
            }
        }
        if self.pattern == AttackPattern::Bursty
            && !(self.burst_ratio >= 1.0 && self.phase_length > 0.0)
        {
            return Err("bursty attack needs burst_ratio >= 1 and phase_length > 0".into());
        }
        if !(self.service.mean > 0.0) {
            return Err("attacker service mean must be positive".into());
        }
        Ok(())
    }

    /// Arrival process of the attacker at the coupled rate.
    pub fn attacker_process(&self, benign: &WorkloadSpec) -> Option<ArrivalProcess> {
        let rate = self.intensity * victim_rate(benign, self.victim_tenant, self.victim_functions.as_deref());
        if rate <= 0.0 {
            return None;
        }
        Some(match self.pattern {
            AttackPattern::Poisson => ArrivalProcess::Poisson { rate },
            AttackPattern::Uniform => ArrivalProcess::Uniform { interval: 1.0 / rate },
            AttackPattern::Bursty => {
                let low = 2.0 * rate / (1.0 + self.burst_ratio);
                ArrivalProcess::Bursty {
                    low_rate: low,
                    high_rate: low * self.burst_ratio,
                    phase_length: self.phase_length,
                }
            }
        })
    }
}

/// Long-run arrival rate of the victim's targeted invocations under uniform
/// tenant and function sampling.
pub fn victim_rate(
    benign: &WorkloadSpec,
    _victim_tenant: TenantId,
    victim_functions: Option<&[FunctionId]>,
) -> f64 {
    let tenant_rate = benign.process.mean_rate() / benign.tenants as f64;
    match victim_functions {
        None => tenant_rate,
        Some(set) => tenant_rate * set.len() as f64 / benign.functions_per_tenant as f64,
    }
}

struct AttackerStream {
    clock: ArrivalClock,
    rng: ChaCha8Rng,
    next_id: u64,
}

/// A benign source with victim labels and interleaved attacker records.
pub struct AttackedWorkload<S> {
    base: S,
    attack: AttackSpec,
    batch_size: usize,
    benign: VecDeque<InvocationRecord>,
    base_done: bool,
    attacker: Option<AttackerStream>,
    attacker_head: Option<InvocationRecord>,
}

/// Wraps `base` with the attack. Attacker ids start after the benign id range
/// so benign ids are unaffected.
pub fn wrap<S: ArrivalSource>(
    base: S,
    benign: &WorkloadSpec,
    attack: AttackSpec,
    rng: ChaCha8Rng,
) -> Result<AttackedWorkload<S>, String> {
    attack.validate(benign)?;
    let attacker = attack.attacker_process(benign).map(|p| AttackerStream {
        clock: ArrivalClock::new(p),
        rng,
        next_id: benign.total_invocations,
    });
    Ok(AttackedWorkload {
        base,
        batch_size: benign.batch_size,
        attack,
        benign: VecDeque::new(),
        base_done: false,
        attacker,
        attacker_head: None,
    })
}

impl<S: ArrivalSource> AttackedWorkload<S> {
    fn benign_head(&mut self) -> Option<&InvocationRecord> {
        if self.benign.is_empty() && !self.base_done {
            let batch = self.base.next_arrivals(self.batch_size);
            if batch.is_empty() {
                self.base_done = true;
            }
            self.benign.extend(batch);
        }
        self.benign.front()
    }

    fn attacker_head(&mut self) -> Option<&InvocationRecord> {
        if self.attacker_head.is_none() {
            if let Some(stream) = self.attacker.as_mut() {
                let arrival = stream.clock.next(&mut stream.rng);
                let service_time = sample_service_time(&self.attack.service, &mut stream.rng);
                self.attacker_head = Some(InvocationRecord {
                    id: InvocationId(stream.next_id),
                    function: self.attack.attack_function(),
                    arrival: SimTime::new(arrival),
                    service_time,
                    role: Role::Attacker,
                });
                stream.next_id += 1;
            }
        }
        self.attacker_head.as_ref()
    }

    fn next_record(&mut self) -> Option<InvocationRecord> {
        // Attackers stop with the benign stream.
        let benign_at = self.benign_head()?.arrival;
        if let Some(a) = self.attacker_head() {
            if a.arrival < benign_at {
                return self.attacker_head.take();
            }
        }
        let mut rec = self.benign.pop_front().expect("head checked");
        if self.attack.is_victim(rec.function) {
            rec.role = Role::Victim;
        }
        Some(rec)
    }
}

impl<S: ArrivalSource> ArrivalSource for AttackedWorkload<S> {
    fn next_arrivals(&mut self, count: usize) -> Vec<InvocationRecord> {
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            match self.next_record() {
                Some(r) => out.push(r),
                None => break,
            }
        }
        out
    }
}
