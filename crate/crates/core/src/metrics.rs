//! Per-node metric ledgers, run summaries and the baseline-versus-fuzzy
//! comparison.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("ledger is frozen")]
    FrozenLedger,
    #[error("amount {0} is negative or not finite")]
    InvalidAmount(f64),
    #[error("{metric} counts events; amount {amount} is not a whole number")]
    NonIntegral { metric: &'static str, amount: f64 },
    #[error("runs differ in {0}")]
    ScenarioMismatch(&'static str),
}

/// The reported quantities, in export column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "camelCase"))]
pub enum Metric {
    TimesIntoBackoff,
    SlotsBackoff,
    MacBusySeconds,
    PhyBusySeconds,
    SentPackets,
    TotalLostPackets,
    #[cfg_attr(feature = "serde", serde(rename = "generatedWSM"))]
    GeneratedWsm,
    #[cfg_attr(feature = "serde", serde(rename = "generatedBSM"))]
    GeneratedBsm,
    #[cfg_attr(feature = "serde", serde(rename = "generatedWSA"))]
    GeneratedWsa,
    #[cfg_attr(feature = "serde", serde(rename = "receivedWSM"))]
    ReceivedWsm,
    #[cfg_attr(feature = "serde", serde(rename = "receivedBSM"))]
    ReceivedBsm,
    #[cfg_attr(feature = "serde", serde(rename = "receivedWSA"))]
    ReceivedWsa,
    DroppedByGate,
}

impl Metric {
    pub const ALL: [Metric; 13] = [
        Metric::TimesIntoBackoff,
        Metric::SlotsBackoff,
        Metric::MacBusySeconds,
        Metric::PhyBusySeconds,
        Metric::SentPackets,
        Metric::TotalLostPackets,
        Metric::GeneratedWsm,
        Metric::GeneratedBsm,
        Metric::GeneratedWsa,
        Metric::ReceivedWsm,
        Metric::ReceivedBsm,
        Metric::ReceivedWsa,
        Metric::DroppedByGate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::TimesIntoBackoff => "timesIntoBackoff",
            Metric::SlotsBackoff => "slotsBackoff",
            Metric::MacBusySeconds => "macBusySeconds",
            Metric::PhyBusySeconds => "phyBusySeconds",
            Metric::SentPackets => "sentPackets",
            Metric::TotalLostPackets => "totalLostPackets",
            Metric::GeneratedWsm => "generatedWSM",
            Metric::GeneratedBsm => "generatedBSM",
            Metric::GeneratedWsa => "generatedWSA",
            Metric::ReceivedWsm => "receivedWSM",
            Metric::ReceivedBsm => "receivedBSM",
            Metric::ReceivedWsa => "receivedWSA",
            Metric::DroppedByGate => "droppedByGate",
        }
    }

    pub fn from_name(name: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == name)
    }

    /// Seconds rather than an event count.
    pub fn is_duration(self) -> bool {
        matches!(self, Metric::MacBusySeconds | Metric::PhyBusySeconds)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Counters for one node. Values only grow, and a frozen ledger refuses
/// further writes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLedger {
    values: [f64; 13],
    frozen: bool,
}

impl MetricsLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, metric: Metric, amount: f64) -> Result<(), MetricsError> {
        if self.frozen {
            return Err(MetricsError::FrozenLedger);
        }
        if !(amount >= 0.0 && amount.is_finite()) {
            return Err(MetricsError::InvalidAmount(amount));
        }
        if !metric.is_duration() && libm::trunc(amount) != amount {
            return Err(MetricsError::NonIntegral { metric: metric.name(), amount });
        }
        self.values[metric.index()] += amount;
        Ok(())
    }

    /// Shorthand for counting one event.
    pub fn bump(&mut self, metric: Metric) -> Result<(), MetricsError> {
        self.record(metric, 1.0)
    }

    pub fn get(&self, metric: Metric) -> f64 {
        self.values[metric.index()]
    }

    pub fn count(&self, metric: Metric) -> u64 {
        self.values[metric.index()] as u64
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Rebuilds a frozen ledger from exported values, in [`Metric::ALL`]
    /// order.
    pub fn from_values(values: [f64; 13]) -> Result<Self, MetricsError> {
        let mut l = MetricsLedger::new();
        for (m, v) in Metric::ALL.into_iter().zip(values) {
            l.record(m, v)?;
        }
        l.freeze();
        Ok(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum NodeKind {
    Vehicle,
    Rsu,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Vehicle => "vehicle",
            NodeKind::Rsu => "rsu",
        }
    }
}

/// Final state of one node after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeReport {
    pub id: u32,
    pub kind: NodeKind,
    pub position: (f64, f64),
    pub ledger: MetricsLedger,
    /// Seconds during which neither the MAC nor the PHY saw the medium busy.
    pub idle_seconds: f64,
}

/// Measure of the union of closed intervals.
pub fn union_measure(intervals: &[(f64, f64)]) -> f64 {
    let mut v: Vec<(f64, f64)> = intervals.iter().copied().filter(|(a, b)| b > a).collect();
    v.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut total = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in v {
        cur = match cur {
            Some((s, e)) if a <= e => Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((s, e)) = cur {
        total += e - s;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricAggregate {
    pub metric: Metric,
    pub total: f64,
    pub mean: f64,
}

/// Aggregates of one run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RunSummary {
    pub scenario: String,
    pub seed: u64,
    pub mode: String,
    pub acceptance: Option<String>,
    pub duration: f64,
    pub nodes: usize,
    pub metrics: Vec<MetricAggregate>,
    /// Transmissions put on air, rebroadcasts included.
    pub frames_on_air: u64,
    pub total_idle_seconds: f64,
    pub mean_idle_seconds: f64,
}

impl RunSummary {
    pub fn from_reports(
        scenario: impl Into<String>,
        seed: u64,
        mode: impl Into<String>,
        acceptance: Option<String>,
        duration: f64,
        reports: &[NodeReport],
    ) -> Self {
        let n = reports.len();
        let mean = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
        let metrics: Vec<MetricAggregate> = Metric::ALL
            .into_iter()
            .map(|m| {
                let total: f64 = reports.iter().map(|r| r.ledger.get(m)).sum();
                MetricAggregate { metric: m, total, mean: mean(total) }
            })
            .collect();
        let total_idle: f64 = reports.iter().map(|r| r.idle_seconds).sum();
        RunSummary {
            scenario: scenario.into(),
            seed,
            mode: mode.into(),
            acceptance,
            duration,
            nodes: n,
            frames_on_air: reports.iter().map(|r| r.ledger.count(Metric::SentPackets)).sum(),
            metrics,
            total_idle_seconds: total_idle,
            mean_idle_seconds: mean(total_idle),
        }
    }

    pub fn aggregate(&self, metric: Metric) -> &MetricAggregate {
        self.metrics.iter().find(|a| a.metric == metric).expect("summary covers every metric")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Direction {
    /// Percentage = (baseline - fuzzy) / baseline.
    Reduction,
    /// Percentage = (fuzzy - baseline) / baseline.
    Increase,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Delta {
    pub baseline: f64,
    pub fuzzy: f64,
    /// `None` when the baseline is zero.
    pub percent: Option<f64>,
}

impl Delta {
    fn new(baseline: f64, fuzzy: f64, direction: Direction) -> Self {
        let percent = (baseline > 0.0).then(|| {
            let diff = match direction {
                Direction::Reduction => baseline - fuzzy,
                Direction::Increase => fuzzy - baseline,
            };
            100.0 * diff / baseline
        });
        Delta { baseline, fuzzy, percent }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FigureOfMerit {
    pub name: String,
    pub direction: Direction,
    /// Sum over nodes.
    pub total: Delta,
    /// Mean per node.
    pub per_node_mean: Delta,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricDelta {
    pub metric: Metric,
    pub total: Delta,
    pub per_node_mean: Delta,
}

/// Baseline against fuzzy on the same scenario and seed.
///
/// Figures of merit: collided packets (total lost), redundant sent packets,
/// network overhead (frames on air, rebroadcasts included; this coincides
/// with sent packets) and channel idle time (run length minus the union of
/// MAC and PHY busy periods).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ComparisonReport {
    pub scenario: String,
    pub seed: u64,
    pub duration: f64,
    pub nodes: usize,
    pub figures: Vec<FigureOfMerit>,
    pub metrics: Vec<MetricDelta>,
}

impl ComparisonReport {
    pub fn figure(&self, name: &str) -> Option<&FigureOfMerit> {
        self.figures.iter().find(|f| f.name == name)
    }
}

pub const COLLIDED_PACKETS: &str = "collided_packets";
pub const REDUNDANT_SENT_PACKETS: &str = "redundant_sent_packets";
pub const NETWORK_OVERHEAD: &str = "network_overhead";
pub const CHANNEL_IDLE_TIME: &str = "channel_idle_time";

pub fn compare_runs(baseline: &RunSummary, fuzzy: &RunSummary) -> Result<ComparisonReport, MetricsError> {
    if baseline.scenario != fuzzy.scenario {
        return Err(MetricsError::ScenarioMismatch("scenario"));
    }
    if baseline.seed != fuzzy.seed {
        return Err(MetricsError::ScenarioMismatch("seed"));
    }
    if baseline.duration != fuzzy.duration {
        return Err(MetricsError::ScenarioMismatch("duration"));
    }
    if baseline.nodes != fuzzy.nodes {
        return Err(MetricsError::ScenarioMismatch("node count"));
    }

    let metric_figure = |name: &str, m: Metric| {
        let (b, f) = (baseline.aggregate(m), fuzzy.aggregate(m));
        FigureOfMerit {
            name: name.into(),
            direction: Direction::Reduction,
            total: Delta::new(b.total, f.total, Direction::Reduction),
            per_node_mean: Delta::new(b.mean, f.mean, Direction::Reduction),
        }
    };
    let n = baseline.nodes.max(1) as f64;
    let figures = alloc::vec![
        metric_figure(COLLIDED_PACKETS, Metric::TotalLostPackets),
        metric_figure(REDUNDANT_SENT_PACKETS, Metric::SentPackets),
        FigureOfMerit {
            name: NETWORK_OVERHEAD.into(),
            direction: Direction::Reduction,
            total: Delta::new(baseline.frames_on_air as f64, fuzzy.frames_on_air as f64, Direction::Reduction),
            per_node_mean: Delta::new(
                baseline.frames_on_air as f64 / n,
                fuzzy.frames_on_air as f64 / n,
                Direction::Reduction
            ),
        },
        FigureOfMerit {
            name: CHANNEL_IDLE_TIME.into(),
            direction: Direction::Increase,
            total: Delta::new(baseline.total_idle_seconds, fuzzy.total_idle_seconds, Direction::Increase),
            per_node_mean: Delta::new(baseline.mean_idle_seconds, fuzzy.mean_idle_seconds, Direction::Increase),
        },
    ];
    let metrics = Metric::ALL
        .into_iter()
        .map(|m| {
            let (b, f) = (baseline.aggregate(m), fuzzy.aggregate(m));
            MetricDelta {
                metric: m,
                total: Delta::new(b.total, f.total, Direction::Reduction),
                per_node_mean: Delta::new(b.mean, f.mean, Direction::Reduction),
            }
        })
        .collect();
    Ok(ComparisonReport {
        scenario: baseline.scenario.clone(),
        seed: baseline.seed,
        duration: baseline.duration,
        nodes: baseline.nodes,
        figures,
        metrics,
    })
}
