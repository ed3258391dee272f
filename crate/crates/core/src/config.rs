//! Experiment configuration files.
//!
//! The format is flat `key = value` text. Keys are dotted, `#` starts a
//! comment, lists are comma separated. Every setting except `scheduler` has a
//! default; see [`KEYS`].
//!
//! ```text
//! scheduler = random, doubledip, helper, openwhisk
//! seeds = 0..20
//! platform.num_workers = 512
//! service.kind = exponential
//! service.mean = 100
//! sweep.attack.intensity = 0,2,4,6,8,10
//! ```

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::adversary::{AttackPattern, AttackSpec};
use crate::error::ConfigError;
use crate::model::{FunctionId, FunctionKey, TenantId};
use crate::platform::PlatformConfig;
use crate::resources::ResourceVector;
use crate::scheduler::SchedulerKind;
use crate::workload::{ArrivalProcess, ServiceKind, ServiceTimeSpec, WorkloadSpec};

/// Scalar keys with their defaults. An empty default means "derived" (see
/// the description).
pub const KEYS: &[(&str, &str, &str)] = &[
    ("platform.num_workers", "512", "number of workers"),
    ("platform.cpu", "8", "per-worker CPU capacity"),
    ("platform.memory", "8", "per-worker memory capacity"),
    ("platform.storage", "0", "per-worker storage capacity"),
    ("platform.idle_timeout", "60", "idle time before a container is reclaimed"),
    ("platform.cold_start_latency", "10", "delay added by a cold start"),
    ("platform.queue_limit", "0", "per-worker FIFO queue length"),
    ("platform.prewarm", "0", "idle containers prewarmed per benign function"),
    ("function.cpu", "1", "CPU footprint of every function"),
    ("function.memory", "1", "memory footprint of every function"),
    ("function.storage", "0", "storage footprint of every function"),
    ("workload.kind", "poisson", "uniform | poisson | bursty"),
    ("workload.rate", "1", "total Poisson arrival rate"),
    ("workload.interval", "1", "uniform inter-arrival spacing"),
    ("workload.low_rate", "0.5", "bursty low-phase rate"),
    ("workload.high_rate", "1.5", "bursty high-phase rate"),
    ("workload.phase_length", "100", "bursty phase length"),
    ("workload.total", "20000", "benign invocations per run"),
    ("workload.tenants", "200", "benign tenants"),
    ("workload.functions_per_tenant", "20", "functions per tenant"),
    ("workload.batch", "1024", "arrivals generated at a time"),
    ("service.kind", "exponential", "fixed | exponential"),
    ("service.mean", "100", "mean service time"),
    ("attack.enabled", "false", "inject an attacker"),
    ("attack.intensity", "1", "attacker invocations per victim invocation"),
    ("attack.pattern", "poisson", "poisson | uniform | bursty"),
    ("attack.victim_tenant", "0", "victim tenant id"),
    ("attack.victim_functions", "", "victim function ids; default all"),
    ("attack.tenant", "", "attacker tenant id; default workload.tenants"),
    ("attack.service_kind", "", "attacker service kind; default service.kind"),
    ("attack.service_mean", "", "attacker service mean; default service.mean"),
    ("attack.burst_ratio", "10", "bursty attack high/low rate ratio"),
    ("attack.phase_length", "100", "bursty attack phase length"),
    ("doubledip.recency_window", "", "recency filter window; default platform.idle_timeout"),
];

fn is_scalar_key(key: &str) -> bool {
    if KEYS.iter().any(|(k, _, _)| *k == key) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    match parts.as_slice() {
        ["platform", "worker", id, res] => {
            id.parse::<usize>().is_ok() && matches!(*res, "cpu" | "memory" | "storage")
        }
        ["platform", "prewarm", t, f] => t.parse::<u32>().is_ok() && f.parse::<u32>().is_ok(),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Setting {
    value: String,
    line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
    line: usize,
}

/// Fully resolved scalar parameters of one run, apart from scheduler and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub platform: PlatformConfig,
    pub prewarm: Vec<(FunctionKey, usize)>,
    pub workload: WorkloadSpec,
    pub service: ServiceTimeSpec,
    pub attack: Option<AttackSpec>,
    pub recency_window: f64,
}

impl RunParams {
    pub fn num_workers(&self) -> usize {
        self.platform.capacities.len()
    }

    /// Configured intensity, 0 when no attacker is present.
    pub fn intensity(&self) -> f64 {
        self.attack.as_ref().map_or(0.0, |a| a.intensity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    settings: BTreeMap<String, Setting>,
    pub schedulers: Vec<SchedulerKind>,
    pub seeds: Vec<u64>,
    pub sweeps: Vec<SweepAxis>,
    pub output: Option<PathBuf>,
    pub trace: bool,
    pub trace_dir: PathBuf,
    /// One entry per point of the sweep grid, outermost axis first.
    pub(crate) grid: Vec<(Vec<(String, String)>, RunParams)>,
}

impl ExperimentConfig {
    /// Parameters with no sweep overrides.
    pub fn base(&self) -> Result<RunParams, ConfigError> {
        resolve(&self.settings)
    }

    pub fn grid(&self) -> &[(Vec<(String, String)>, RunParams)] {
        &self.grid
    }
}

pub fn split_list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn parse_seeds(value: &str, line: usize) -> Result<Vec<u64>, ConfigError> {
    let invalid = |message: String| ConfigError::InvalidValue {
        line,
        key: "seeds".into(),
        message,
    };
    let seeds: Vec<u64> = if let Some((a, b)) = value.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|e| invalid(format!("{e}")))?;
        let b: u64 = b.trim().parse().map_err(|e| invalid(format!("{e}")))?;
        (a..b).collect()
    } else {
        split_list(value)
            .iter()
            .map(|s| s.parse().map_err(|e| invalid(format!("`{s}`: {e}"))))
            .collect::<Result<_, _>>()?
    };
    if seeds.is_empty() {
        return Err(invalid("no seeds".into()));
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("seeds must be distinct".into()));
    }
    Ok(seeds)
}

fn parse_bool(key: &str, value: &str, line: usize) -> Result<bool, ConfigError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::InvalidValue {
            line,
            key: key.into(),
            message: format!("expected true or false, got `{value}`"),
        }),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut settings = BTreeMap::new();
    let mut schedulers = None;
    let mut seeds = vec![0];
    let mut sweeps: Vec<SweepAxis> = Vec::new();
    let mut output = None;
    let mut trace = false;
    let mut trace_dir = PathBuf::from("traces");
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("malformed key `{key}`"),
            });
        }
        if let Some(first) = seen.insert(key.to_string(), line) {
            return Err(ConfigError::Syntax {
                line,
                message: format!("`{key}` already set on line {first}"),
            });
        }
        if value.is_empty() {
            return Err(ConfigError::InvalidValue {
                line,
                key: key.into(),
                message: "empty value".into(),
            });
        }
        match key {
            "scheduler" => {
                let kinds = split_list(value)
                    .iter()
                    .map(|s| s.parse::<SchedulerKind>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|message| ConfigError::InvalidValue {
                        line,
                        key: key.into(),
                        message,
                    })?;
                schedulers = Some(kinds);
            }
            "seeds" => seeds = parse_seeds(value, line)?,
            "output" => output = Some(PathBuf::from(value)),
            "trace" => trace = parse_bool(key, value, line)?,
            "trace_dir" => trace_dir = PathBuf::from(value),
            _ => {
                if let Some(axis) = key.strip_prefix("sweep.") {
                    if !is_scalar_key(axis) {
                        return Err(ConfigError::UnknownKey {
                            line,
                            key: key.into(),
                        });
                    }
                    let values = split_list(value);
                    if values.is_empty() {
                        return Err(ConfigError::InvalidValue {
                            line,
                            key: key.into(),
                            message: "sweep axis has no values".into(),
                        });
                    }
                    sweeps.push(SweepAxis {
                        key: axis.into(),
                        values,
                        line,
                    });
                } else if is_scalar_key(key) {
                    settings.insert(
                        key.to_string(),
                        Setting {
                            value: value.into(),
                            line,
                        },
                    );
                } else {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.into(),
                    });
                }
            }
        }
    }

    let schedulers = schedulers.ok_or_else(|| ConfigError::MissingKey("scheduler".into()))?;
    if schedulers.is_empty() {
        return Err(ConfigError::MissingKey("scheduler".into()));
    }
    if let Some(a) = sweeps.iter().find(|a| settings.contains_key(&a.key)) {
        return Err(ConfigError::Syntax {
            line: a.line,
            message: format!("`{}` is both set and swept", a.key),
        });
    }
    let mut keys: Vec<&str> = sweeps.iter().map(|a| a.key.as_str()).collect();
    keys.sort_unstable();
    if keys.windows(2).any(|w| w[0] == w[1]) {
        return Err(ConfigError::Invalid("a key is swept twice".into()));
    }

    let grid = build_grid(&settings, &sweeps)?;
    Ok(ExperimentConfig {
        settings,
        schedulers,
        seeds,
        sweeps,
        output,
        trace,
        trace_dir,
        grid,
    })
}

fn build_grid(
    settings: &BTreeMap<String, Setting>,
    sweeps: &[SweepAxis],
) -> Result<Vec<(Vec<(String, String)>, RunParams)>, ConfigError> {
    let mut points: Vec<Vec<(String, String, usize)>> = vec![Vec::new()];
    for axis in sweeps {
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for p in &points {
            for v in &axis.values {
                let mut q = p.clone();
                q.push((axis.key.clone(), v.clone(), axis.line));
                next.push(q);
            }
        }
        points = next;
    }
    points
        .into_iter()
        .map(|point| {
            let mut s = settings.clone();
            for (k, v, line) in &point {
                s.insert(
                    k.clone(),
                    Setting {
                        value: v.clone(),
                        line: *line,
                    },
                );
            }
            let params = resolve(&s)?;
            Ok((point.into_iter().map(|(k, v, _)| (k, v)).collect(), params))
        })
        .collect()
}

struct Lookup<'a>(&'a BTreeMap<String, Setting>);

impl Lookup<'_> {
    fn raw(&self, key: &str) -> Option<&Setting> {
        self.0.get(key)
    }

    fn line(&self, key: &str) -> usize {
        self.raw(key).map_or(0, |s| s.line)
    }

    fn default_of(key: &str) -> &'static str {
        KEYS.iter().find(|(k, _, _)| *k == key).map_or("", |(_, d, _)| d)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: Display,
    {
        match self.raw(key) {
            Some(s) => parse_value(key, &s.value, s.line),
            None => parse_value(key, Self::default_of(key), 0),
        }
    }

    fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: Display,
    {
        self.raw(key).map(|s| parse_value(key, &s.value, s.line)).transpose()
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue {
            line: self.line(key),
            key: key.into(),
            message: message.into(),
        }
    }

    fn non_negative(&self, key: &str) -> Result<f64, ConfigError> {
        let v: f64 = self.get(key)?;
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(key, format!("must be a finite non-negative number, got {v}")))
        }
    }

    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.non_negative(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(key, "must be positive"))
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError>
where
    T::Err: Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue {
        line,
        key: key.into(),
        message: format!("`{value}`: {e}"),
    })
}

fn parse_service_kind(l: &Lookup<'_>, key: &str, value: &str) -> Result<ServiceKind, ConfigError> {
    match value {
        "fixed" => Ok(ServiceKind::Fixed),
        "exponential" => Ok(ServiceKind::Exponential),
        other => Err(l.invalid(key, format!("unknown service kind `{other}`"))),
    }
}

fn resolve(settings: &BTreeMap<String, Setting>) -> Result<RunParams, ConfigError> {
    let l = Lookup(settings);

    let num_workers: usize = l.get("platform.num_workers")?;
    if num_workers == 0 {
        return Err(l.invalid("platform.num_workers", "must be at least 1"));
    }
    let capacity = ResourceVector::new(l.get("platform.cpu")?, l.get("platform.memory")?, l.get("platform.storage")?);
    let mut capacities = vec![capacity; num_workers];
    for (key, s) in settings {
        let parts: Vec<&str> = key.split('.').collect();
        if let ["platform", "worker", id, res] = parts.as_slice() {
            let id: usize = id.parse().expect("checked by key filter");
            if id >= num_workers {
                return Err(ConfigError::InvalidValue {
                    line: s.line,
                    key: key.clone(),
                    message: format!("worker {id} does not exist with {num_workers} workers"),
                });
            }
            let v: u64 = parse_value(key, &s.value, s.line)?;
            match *res {
                "cpu" => capacities[id].cpu = v,
                "memory" => capacities[id].memory = v,
                _ => capacities[id].storage = v,
            }
        }
    }
    let footprint = ResourceVector::new(l.get("function.cpu")?, l.get("function.memory")?, l.get("function.storage")?);
    if footprint.cpu == 0 {
        return Err(l.invalid("function.cpu", "footprint needs at least one CPU unit"));
    }
    let idle_timeout = l.non_negative("platform.idle_timeout")?;
    let platform = PlatformConfig {
        capacities,
        footprint,
        idle_timeout,
        cold_start_latency: l.non_negative("platform.cold_start_latency")?,
        queue_limit: l.get("platform.queue_limit")?,
    };

    let kind: String = l.get("workload.kind")?;
    let process = match kind.as_str() {
        "uniform" => ArrivalProcess::Uniform {
            interval: l.positive("workload.interval")?,
        },
        "poisson" => ArrivalProcess::Poisson {
            rate: l.positive("workload.rate")?,
        },
        "bursty" => ArrivalProcess::Bursty {
            low_rate: l.positive("workload.low_rate")?,
            high_rate: l.positive("workload.high_rate")?,
            phase_length: l.positive("workload.phase_length")?,
        },
        other => return Err(l.invalid("workload.kind", format!("unknown workload kind `{other}`"))),
    };
    let workload = WorkloadSpec {
        process,
        tenants: l.get("workload.tenants")?,
        functions_per_tenant: l.get("workload.functions_per_tenant")?,
        total_invocations: l.get("workload.total")?,
        batch_size: l.get("workload.batch")?,
    };
    workload
        .validate()
        .map_err(|m| ConfigError::Invalid(format!("workload: {m}")))?;

    let service_kind: String = l.get("service.kind")?;
    let service = ServiceTimeSpec {
        kind: parse_service_kind(&l, "service.kind", &service_kind)?,
        mean: l.positive("service.mean")?,
    };

    let mut prewarm = Vec::new();
    let all: usize = l.get("platform.prewarm")?;
    if all > 0 {
        for t in 0..workload.tenants {
            for f in 0..workload.functions_per_tenant {
                prewarm.push((FunctionKey::new(t, f), all));
            }
        }
    }
    for (key, s) in settings {
        let parts: Vec<&str> = key.split('.').collect();
        if let ["platform", "prewarm", t, f] = parts.as_slice() {
            let function = FunctionKey::new(t.parse().expect("checked"), f.parse().expect("checked"));
            if function.tenant.0 >= workload.tenants || function.function.0 >= workload.functions_per_tenant {
                return Err(ConfigError::InvalidValue {
                    line: s.line,
                    key: key.clone(),
                    message: "no such benign function".into(),
                });
            }
            let count: usize = parse_value(key, &s.value, s.line)?;
            prewarm.retain(|(k, _)| *k != function);
            prewarm.push((function, count));
        }
    }

    let attack = if l.get::<String>("attack.enabled").and_then(|v| parse_bool("attack.enabled", &v, l.line("attack.enabled")))? {
        let pattern: String = l.get("attack.pattern")?;
        let victim_functions = match l.raw("attack.victim_functions") {
            None => None,
            Some(s) => Some(
                split_list(&s.value)
                    .iter()
                    .map(|f| parse_value::<u32>("attack.victim_functions", f, s.line).map(FunctionId))
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        let service_kind = match l.get_opt::<String>("attack.service_kind")? {
            Some(v) => parse_service_kind(&l, "attack.service_kind", &v)?,
            None => service.kind,
        };
        let service_mean = match l.raw("attack.service_mean") {
            Some(_) => l.positive("attack.service_mean")?,
            None => service.mean,
        };
        let spec = AttackSpec {
            attacker_tenant: TenantId(l.get_opt("attack.tenant")?.unwrap_or(workload.tenants)),
            intensity: l.non_negative("attack.intensity")?,
            pattern: pattern
                .parse::<AttackPattern>()
                .map_err(|m| l.invalid("attack.pattern", m))?,
            victim_tenant: TenantId(l.get("attack.victim_tenant")?),
            victim_functions,
            service: ServiceTimeSpec {
                kind: service_kind,
                mean: service_mean,
            },
            burst_ratio: l.get("attack.burst_ratio")?,
            phase_length: l.get("attack.phase_length")?,
        };
        spec.validate(&workload)
            .map_err(|m| ConfigError::Invalid(format!("attack: {m}")))?;
        Some(spec)
    } else {
        None
    };

    let recency_window = match l.raw("doubledip.recency_window") {
        Some(_) => l.non_negative("doubledip.recency_window")?,
        None => idle_timeout,
    };

    Ok(RunParams {
        platform,
        prewarm,
        workload,
        service,
        attack,
        recency_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_study_style_settings() {
        let c = parse_config(
            "scheduler = helper\nplatform.num_workers = 512\nservice.kind = exponential\nservice.mean = 100\n",
        )
        .unwrap();
        let p = c.base().unwrap();
        assert_eq!(p.num_workers(), 512);
        assert_eq!(p.service, ServiceTimeSpec::exponential(100.0));
        assert_eq!(c.schedulers, vec![SchedulerKind::Helper]);
    }

    #[test]
    fn missing_scheduler_is_named() {
        let err = parse_config("platform.num_workers = 4\n").unwrap_err();
        assert_eq!(err, ConfigError::MissingKey("scheduler".into()));
        assert!(err.to_string().contains("scheduler"));
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = parse_config("scheduler = random\n# c\nplatform.cores = 3\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 3,
                key: "platform.cores".into()
            }
        );
        assert!(matches!(
            parse_config("scheduler = random\nsweep.nope = 1,2\n"),
            Err(ConfigError::UnknownKey { line: 2, .. })
        ));
    }

    #[test]
    fn syntax_and_value_errors_report_line() {
        assert!(matches!(
            parse_config("scheduler = random\njust words\n"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("scheduler = random\nplatform.num_workers = many\n"),
            Err(ConfigError::InvalidValue { line: 2, .. })
        ));
        assert!(matches!(
            parse_config("scheduler = fifo\n"),
            Err(ConfigError::InvalidValue { line: 1, .. })
        ));
        assert!(matches!(
            parse_config("scheduler = random\nsweep.platform.queue_limit = 1,x\n"),
            Err(ConfigError::InvalidValue { line: 2, .. })
        ));
    }

    #[test]
    fn seeds_range_and_list() {
        let c = parse_config("scheduler = random\nseeds = 3..6\n").unwrap();
        assert_eq!(c.seeds, vec![3, 4, 5]);
        let c = parse_config("scheduler = random\nseeds = 9, 1\n").unwrap();
        assert_eq!(c.seeds, vec![9, 1]);
        assert!(parse_config("scheduler = random\nseeds = 1,1\n").is_err());
    }

    #[test]
    fn comments_and_whitespace() {
        let c = parse_config("  # header\nscheduler = random   # trailing\n\n\tplatform.queue_limit=7\n").unwrap();
        assert_eq!(c.base().unwrap().platform.queue_limit, 7);
    }

    #[test]
    fn per_worker_override() {
        let c = parse_config("scheduler = random\nplatform.num_workers = 3\nplatform.worker.1.memory = 64\n").unwrap();
        let caps = c.base().unwrap().platform.capacities;
        assert_eq!(caps[1], ResourceVector::new(8, 64, 0));
        assert_eq!(caps[0], ResourceVector::new(8, 8, 0));
        assert!(parse_config("scheduler = random\nplatform.num_workers = 3\nplatform.worker.3.cpu = 1\n").is_err());
    }

    #[test]
    fn attack_defaults_follow_workload() {
        let c = parse_config("scheduler = random\nworkload.tenants = 10\nservice.mean = 5\nattack.enabled = true\nattack.intensity = 2\n").unwrap();
        let a = c.base().unwrap().attack.unwrap();
        assert_eq!(a.attacker_tenant, TenantId(10));
        assert_eq!(a.service.mean, 5.0);
        assert_eq!(a.intensity, 2.0);
        let err = parse_config("scheduler = random\nworkload.tenants = 10\nattack.enabled = true\nattack.victim_tenant = 10\n").unwrap_err();
        assert!(err.to_string().contains("victim tenant"));
    }

    #[test]
    fn sweep_grid_order() {
        let c = parse_config("scheduler = random\nsweep.platform.queue_limit = 1,2\nsweep.attack.intensity = 0,5,10\nattack.enabled = true\n").unwrap();
        let labels: Vec<String> = c.grid().iter().map(|(axes, _)| format!("{}/{}", axes[0].1, axes[1].1)).collect();
        assert_eq!(labels, ["1/0", "1/5", "1/10", "2/0", "2/5", "2/10"]);
        assert_eq!(c.grid()[4].1.intensity(), 5.0);
        assert_eq!(c.grid()[4].1.platform.queue_limit, 2);
    }

    #[test]
    fn set_and_swept_is_rejected() {
        assert!(parse_config("scheduler = random\nplatform.queue_limit = 1\nsweep.platform.queue_limit = 1,2\n").is_err());
    }

    #[test]
    fn recency_window_defaults_to_idle_timeout() {
        let c = parse_config("scheduler = doubledip\nplatform.idle_timeout = 33\n").unwrap();
        assert_eq!(c.base().unwrap().recency_window, 33.0);
    }

    #[test]
    fn prewarm_keys() {
        let c = parse_config("scheduler = helper\nworkload.tenants = 2\nworkload.functions_per_tenant = 2\nplatform.prewarm = 1\nplatform.prewarm.1.0 = 3\n").unwrap();
        let p = c.base().unwrap().prewarm;
        assert_eq!(p.len(), 4);
        assert!(p.contains(&(FunctionKey::new(1, 0), 3)));
        assert!(p.contains(&(FunctionKey::new(0, 1), 1)));
    }
}
