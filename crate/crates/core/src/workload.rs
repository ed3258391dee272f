//! Benign arrival generators and service-time sampling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::model::{FunctionKey, InvocationId, InvocationRecord, Role};
use crate::time::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArrivalProcess {
    /// Fixed spacing between consecutive arrivals.
    Uniform { interval: f64 },
    Poisson { rate: f64 },
    /// Poisson arrivals whose rate alternates between `low_rate` and
    /// `high_rate` every `phase_length`, starting low.
    Bursty {
        low_rate: f64,
        high_rate: f64,
        phase_length: f64,
    },
}

impl ArrivalProcess {
    /// Long-run arrivals per time unit.
    pub fn mean_rate(&self) -> f64 {
        match *self {
            ArrivalProcess::Uniform { interval } => 1.0 / interval,
            ArrivalProcess::Poisson { rate } => rate,
            ArrivalProcess::Bursty {
                low_rate,
                high_rate,
                ..
            } => (low_rate + high_rate) / 2.0,
        }
    }

    /// The same process shape scaled to `factor` times the rate.
    pub fn scaled(&self, factor: f64) -> ArrivalProcess {
        match *self {
            ArrivalProcess::Uniform { interval } => ArrivalProcess::Uniform {
                interval: interval / factor,
            },
            ArrivalProcess::Poisson { rate } => ArrivalProcess::Poisson {
                rate: rate * factor,
            },
            ArrivalProcess::Bursty {
                low_rate,
                high_rate,
                phase_length,
            } => ArrivalProcess::Bursty {
                low_rate: low_rate * factor,
                high_rate: high_rate * factor,
                phase_length,
            },
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(format!("{name} must be positive, got {v}"))
            }
        };
        match *self {
            ArrivalProcess::Uniform { interval } => positive("interval", interval),
            ArrivalProcess::Poisson { rate } => positive("rate", rate),
            ArrivalProcess::Bursty {
                low_rate,
                high_rate,
                phase_length,
            } => {
                positive("low_rate", low_rate)?;
                positive("high_rate", high_rate)?;
                positive("phase_length", phase_length)
            }
        }
    }
}

/// Produces successive arrival timestamps for one process.
#[derive(Debug, Clone)]
pub struct ArrivalClock {
    process: ArrivalProcess,
    last: f64,
}

impl ArrivalClock {
    pub fn new(process: ArrivalProcess) -> Self {
        ArrivalClock { process, last: 0.0 }
    }

    pub fn next(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        self.last = match self.process {
            ArrivalProcess::Uniform { interval } => self.last + interval,
            ArrivalProcess::Poisson { rate } => {
                self.last + Exp::new(rate).expect("validated rate").sample(rng)
            }
            ArrivalProcess::Bursty {
                low_rate,
                high_rate,
                phase_length,
            } => {
                // Invert the integrated piecewise-constant rate: spend an
                // Exp(1) budget phase by phase.
                let mut budget: f64 = Exp::new(1.0).expect("unit rate").sample(rng);
                let mut t = self.last;
                loop {
                    let phase = (t / phase_length).floor();
                    let rate = if phase as u64 % 2 == 0 { low_rate } else { high_rate };
                    let mut end = (phase + 1.0) * phase_length;
                    if end <= t {
                        end = t.next_up();
                    }
                    let capacity = rate * (end - t);
                    if budget < capacity {
                        break t + budget / rate;
                    }
                    budget -= capacity;
                    t = end;
                }
            }
        };
        self.last
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServiceKind {
    Fixed,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceTimeSpec {
    pub kind: ServiceKind,
    pub mean: f64,
}

impl ServiceTimeSpec {
    pub fn fixed(mean: f64) -> Self {
        ServiceTimeSpec {
            kind: ServiceKind::Fixed,
            mean,
        }
    }

    pub fn exponential(mean: f64) -> Self {
        ServiceTimeSpec {
            kind: ServiceKind::Exponential,
            mean,
        }
    }
}

pub fn sample_service_time(spec: &ServiceTimeSpec, rng: &mut ChaCha8Rng) -> f64 {
    match spec.kind {
        ServiceKind::Fixed => spec.mean,
        ServiceKind::Exponential => {
            let x: f64 = Exp::new(1.0 / spec.mean).expect("positive mean").sample(rng);
            // Zero-length executions would make start and completion coincide.
            x.max(f64::MIN_POSITIVE)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub process: ArrivalProcess,
    pub tenants: u32,
    pub functions_per_tenant: u32,
    pub total_invocations: u64,
    /// Arrivals pulled from the generator at a time.
    pub batch_size: usize,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<(), String> {
        self.process.validate()?;
        if self.tenants == 0 {
            return Err("workload.tenants must be at least 1".into());
        }
        if self.functions_per_tenant == 0 {
            return Err("workload.functions_per_tenant must be at least 1".into());
        }
        if self.batch_size == 0 {
            return Err("workload.batch must be at least 1".into());
        }
        Ok(())
    }
}

/// Anything that hands out timestamp-ordered invocations in batches.
pub trait ArrivalSource: Send {
    /// Up to `count` further records; empty once exhausted.
    fn next_arrivals(&mut self, count: usize) -> Vec<InvocationRecord>;
}

/// Benign traffic: tenants and functions sampled uniformly.
pub struct BenignWorkload {
    spec: WorkloadSpec,
    service: ServiceTimeSpec,
    clock: ArrivalClock,
    arrivals_rng: ChaCha8Rng,
    service_rng: ChaCha8Rng,
    emitted: u64,
}

impl BenignWorkload {
    pub fn new(
        spec: WorkloadSpec,
        service: ServiceTimeSpec,
        arrivals_rng: ChaCha8Rng,
        service_rng: ChaCha8Rng,
    ) -> Self {
        BenignWorkload {
            clock: ArrivalClock::new(spec.process),
            spec,
            service,
            arrivals_rng,
            service_rng,
            emitted: 0,
        }
    }

    pub fn spec(&self) -> &WorkloadSpec {
        &self.spec
    }
}

impl ArrivalSource for BenignWorkload {
    fn next_arrivals(&mut self, count: usize) -> Vec<InvocationRecord> {
        let remaining = self.spec.total_invocations - self.emitted;
        let n = remaining.min(count as u64);
        let mut out = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let arrival = self.clock.next(&mut self.arrivals_rng);
            let tenant = self.arrivals_rng.random_range(0..self.spec.tenants);
            let function = self.arrivals_rng.random_range(0..self.spec.functions_per_tenant);
            out.push(InvocationRecord {
                id: InvocationId(self.emitted),
                function: FunctionKey::new(tenant, function),
                arrival: SimTime::new(arrival),
                service_time: sample_service_time(&self.service, &mut self.service_rng),
                role: Role::Benign,
            });
            self.emitted += 1;
        }
        out
    }
}
