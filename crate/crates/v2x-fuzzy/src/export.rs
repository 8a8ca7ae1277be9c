//! Result files: the per-node table and the JSON run summary and
//! comparison report.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use v2x_fuzzy_core::metrics::{ComparisonReport, Metric, MetricsLedger, NodeKind, NodeReport, RunSummary};
use v2x_fuzzy_core::sim::{RunOutput, Tally};

pub const SCHEMA_VERSION: u32 = 1;
pub const NODE_TABLE: &str = "nodes.csv";
pub const SUMMARY: &str = "summary.json";
pub const COMPARISON: &str = "comparison.json";

/// Column order of the node table. Ledger columns come first, in ledger
/// order, followed by final position and idle time.
pub const NODE_HEADER: [&str; 18] = [
    "nodeId",
    "kind",
    "timesIntoBackoff",
    "slotsBackoff",
    "macBusySeconds",
    "phyBusySeconds",
    "sentPackets",
    "totalLostPackets",
    "generatedWSM",
    "generatedBSM",
    "generatedWSA",
    "receivedWSM",
    "receivedBSM",
    "receivedWSA",
    "droppedByGate",
    "x",
    "y",
    "idleSeconds",
];

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("node table: {0}")]
    Csv(#[from] csv::Error),
    #[error("node table row {row}: {message}")]
    Format { row: usize, message: String },
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io { path: path.to_path_buf(), source }
}

/// Seventeen significant digits: fixed width per value and an exact
/// round-trip for every finite double.
fn real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_node_table<W: Write>(out: W, nodes: &[NodeReport]) -> Result<(), ExportError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(NODE_HEADER)?;
    for r in nodes {
        let mut row = vec![r.id.to_string(), r.kind.name().to_string()];
        for m in Metric::ALL {
            row.push(if m.is_duration() { real(r.ledger.get(m)) } else { r.ledger.count(m).to_string() });
        }
        row.extend([real(r.position.0), real(r.position.1), real(r.idle_seconds)]);
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_node_table<R: Read>(input: R) -> Result<Vec<NodeReport>, ExportError> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(NODE_HEADER) {
        return Err(ExportError::Format { row: 0, message: "unexpected header".into() });
    }
    let mut nodes = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad =
            |col: &str, v: &str| ExportError::Format { row, message: format!("column {col}: cannot parse `{v}`") };
        let field = |c: usize| -> Result<f64, ExportError> {
            let v = &rec[c];
            v.parse::<f64>().map_err(|_| bad(NODE_HEADER[c], v))
        };
        let id = rec[0].parse().map_err(|_| bad("nodeId", &rec[0]))?;
        let kind = match &rec[1] {
            "vehicle" => NodeKind::Vehicle,
            "rsu" => NodeKind::Rsu,
            other => return Err(bad("kind", other)),
        };
        let mut values = [0.0; 13];
        for (k, v) in values.iter_mut().enumerate() {
            *v = field(2 + k)?;
        }
        let ledger =
            MetricsLedger::from_values(values).map_err(|e| ExportError::Format { row, message: e.to_string() })?;
        nodes.push(NodeReport { id, kind, position: (field(15)?, field(16)?), ledger, idle_seconds: field(17)? });
    }
    Ok(nodes)
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    schema_version: u32,
    kind: &'static str,
    summary: &'a RunSummary,
    tally: &'a Tally,
    events_processed: u64,
}

#[derive(Serialize)]
struct Definitions {
    network_overhead: &'static str,
    channel_idle_time: &'static str,
    percent: &'static str,
}

#[derive(Serialize)]
struct ComparisonDoc<'a> {
    schema_version: u32,
    kind: &'static str,
    definitions: Definitions,
    report: &'a ComparisonReport,
}

pub fn summary_json(run: &RunOutput) -> String {
    let doc = SummaryDoc {
        schema_version: SCHEMA_VERSION,
        kind: "run_summary",
        summary: &run.summary,
        tally: &run.tally,
        events_processed: run.events_processed,
    };
    serde_json::to_string_pretty(&doc).expect("summary serializes") + "\n"
}

pub fn comparison_json(report: &ComparisonReport) -> String {
    let doc = ComparisonDoc {
        schema_version: SCHEMA_VERSION,
        kind: "comparison_report",
        definitions: Definitions {
            network_overhead: "total frames placed on air: originals plus rebroadcasts (sentPackets)",
            channel_idle_time: "per node: duration minus the union of MAC and PHY busy intervals",
            percent: "(baseline - fuzzy) / baseline * 100; null when the baseline is not positive",
        },
        report,
    };
    serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
}

/// Writes the node table and summary of one run into `dir`.
pub fn write_run(dir: &Path, run: &RunOutput) -> Result<(), ExportError> {
    fs::create_dir_all(dir).map_err(io_at(dir))?;
    let mut table = Vec::new();
    write_node_table(&mut table, &run.nodes)?;
    write_file(&dir.join(NODE_TABLE), &table)?;
    write_file(&dir.join(SUMMARY), summary_json(run).as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_at(parent))?;
    }
    fs::write(path, bytes).map_err(io_at(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn node(id: u32, values: [f64; 13]) -> NodeReport {
        NodeReport {
            id,
            kind: if id == 0 { NodeKind::Rsu } else { NodeKind::Vehicle },
            position: (1.0 / 3.0, 97.25),
            ledger: MetricsLedger::from_values(values).unwrap(),
            idle_seconds: 199.999_999_7,
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let mut buf = Vec::new();
        write_node_table(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), NODE_HEADER.join(",") + "\n");
    }

    #[test]
    fn header_is_the_ledger_order() {
        for (m, col) in Metric::ALL.iter().zip(&NODE_HEADER[2..15]) {
            assert_eq!(m.name(), *col);
        }
    }

    #[test]
    fn metric_names_serialize_as_columns() {
        for m in Metric::ALL {
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{}\"", m.name()));
        }
    }

    #[test]
    fn rejects_tampered_rows() {
        let mut buf = Vec::new();
        write_node_table(&mut buf, &[node(1, [1.0; 13])]).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("vehicle", "bus");
        assert!(matches!(read_node_table(text.as_bytes()), Err(ExportError::Format { row: 1, .. })));
    }

    proptest! {
        #[test]
        fn table_round_trip(rows in proptest::collection::vec(
            (proptest::array::uniform13(0u32..100_000), 0.0f64..500.0, 0.0f64..500.0), 0..20)
        ) {
            let nodes: Vec<NodeReport> = rows.iter().enumerate().map(|(i, (c, mac, phy))| {
                let mut v = c.map(f64::from);
                v[2] = *mac;
                v[3] = *phy;
                node(i as u32, v)
            }).collect();
            let mut buf = Vec::new();
            write_node_table(&mut buf, &nodes).unwrap();
            prop_assert_eq!(read_node_table(buf.as_slice()).unwrap(), nodes);
        }
    }
}
