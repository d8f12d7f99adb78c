//! Report files (`section.metric = value`, one per line) and aligned text
//! tables for single runs and comparisons.

use gloran::config::{parse_kv, StoreConfig};
use gloran::device::IoSnapshot;

use crate::cost_model::{CostModel, CostOp, CostParams};
use crate::runner::{Metrics, OpKind};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn parse(text: &str) -> gloran::error::Result<Self> {
        Ok(Report {
            entries: parse_kv(text)?
                .into_iter()
                .map(|(_, k, v)| (k, v))
                .collect(),
        })
    }
}

fn io_entries(r: &mut Report, prefix: &str, io: &IoSnapshot) {
    r.set(format!("{prefix}.data_block_reads"), io.data_block_reads);
    r.set(format!("{prefix}.data_block_writes"), io.data_block_writes);
    r.set(
        format!("{prefix}.tombstone_block_reads"),
        io.tombstone_block_reads,
    );
    r.set(
        format!("{prefix}.tombstone_block_writes"),
        io.tombstone_block_writes,
    );
    r.set(format!("{prefix}.index_node_reads"), io.index_node_reads);
    r.set(format!("{prefix}.index_node_writes"), io.index_node_writes);
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.6}"))
}

/// Build the report for one run; `cfg` supplies the cost-model parameters
/// that sit beside the measurements.
pub fn build(metrics: &Metrics, cfg: &StoreConfig, trace: &str) -> Report {
    let mut r = Report::new();
    r.set("run.strategy", &metrics.strategy);
    r.set("run.trace", trace);
    r.set("run.ops", metrics.ops);
    r.set("run.elapsed_ns", metrics.elapsed_ns);
    r.set(
        "run.throughput_ops_per_s",
        format!("{:.1}", metrics.throughput()),
    );
    if let Some(m) = metrics.mismatches {
        r.set("run.mismatches", m);
    }

    for kind in OpKind::ALL {
        let k = metrics.kind(kind);
        let name = kind.name();
        let l = &k.latency;
        r.set(format!("latency.{name}.count"), l.count);
        r.set(
            format!("latency.{name}.mean_ns"),
            format!("{:.1}", l.mean_ns),
        );
        r.set(format!("latency.{name}.p50_ns"), l.p50_ns);
        r.set(format!("latency.{name}.p95_ns"), l.p95_ns);
        r.set(format!("latency.{name}.p99_ns"), l.p99_ns);
        if l.count > 0 {
            let per = |v: u64| format!("{:.4}", k.per_op(v));
            r.set(format!("per_op.{name}.reads"), per(k.io.total_reads()));
            r.set(format!("per_op.{name}.writes"), per(k.io.total_writes()));
            r.set(
                format!("per_op.{name}.tombstone_block_reads"),
                per(k.io.tombstone_block_reads),
            );
            r.set(
                format!("per_op.{name}.index_node_reads"),
                per(k.io.index_node_reads),
            );
            r.set(
                format!("per_op.{name}.index_node_writes"),
                per(k.io.index_node_writes),
            );
        }
    }
    io_entries(&mut r, "io", &metrics.io);

    r.set("filters.phi", opt(metrics.phi));
    r.set("filters.epsilon", opt(metrics.epsilon));
    r.set("lsm.entries", metrics.entries);
    r.set("lsm.levels", metrics.levels);
    r.set("lsm.flushes", metrics.flushes);
    r.set("lsm.compactions", metrics.compactions);
    r.set("lsm.rt_probes", metrics.rt_probes);
    r.set("lsm.rt_records_examined", metrics.rt_records_examined);
    r.set("space.disk_bytes", metrics.disk_bytes);

    if let Some(i) = &metrics.index {
        r.set("index.levels", i.levels);
        r.set("index.leaf_count", i.leaf_count);
        r.set("index.node_count", i.node_count);
        r.set("index.records_inserted", i.records_inserted);
        r.set("index.trees_built", i.trees_built);
        r.set("index.checks", i.checks);
        r.set("index.check_hits", i.check_hits);
        r.set("index.check_node_accesses", i.check_node_accesses);
        r.set("index.max_check_node_accesses", i.max_check_node_accesses);
        r.set("index.check_bound", i.check_bound);
        r.set("index.height_violations", i.height_violations);
        r.set("index.check_bound_violations", i.check_bound_violations);
        r.set("index.node_bound_violations", i.node_bound_violations);
        r.set("index.gc_purged_leaves", i.gc_purged_leaves);
        r.set("index.purged_entries", i.purged_entries);
        r.set("eve.queries", i.eve_queries);
        r.set("eve.short_circuits", i.eve_short_circuits);
        r.set("eve.epochs", i.eve_epochs);
    }

    let params = params_for(metrics, cfg);
    let model = CostModel::new(params);
    let strategy = cfg.strategy;
    r.set("model.lambda", format!("{:.3}", params.lambda));
    for op in CostOp::ALL {
        r.set(
            format!("model.{}", op.name()),
            format!("{:.4}", model.cost(strategy, op).total()),
        );
    }
    r
}

/// Cost-model parameters from the store layout plus measured quantities.
pub fn params_for(metrics: &Metrics, cfg: &StoreConfig) -> CostParams<f64> {
    let q = metrics.count(OpKind::RangeDelete);
    let n = (metrics.entries.max(1)) as f64;
    CostParams {
        n,
        f: cfg.memtable_capacity as f64,
        t: cfg.size_ratio as f64,
        b: cfg.block_size as f64,
        k: cfg.key_width as f64,
        e: cfg.entry_width as f64,
        lambda: if q == 0 { f64::INFINITY } else { n / q as f64 },
        phi: metrics.phi.unwrap_or(0.0),
        eps: metrics.epsilon.unwrap_or(0.0),
        d: cfg.drtree_fanout as f64,
        f_idx: cfg.index_buffer_capacity as f64,
        t_idx: cfg.index_size_ratio as f64,
        ell: if q == 0 {
            1.0
        } else {
            metrics.range_delete_keys as f64 / q as f64
        },
    }
}

/// Render rows as a left-aligned text table.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let render = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = render(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    out += &render(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in rows {
        out += &render(row);
    }
    out
}

/// Per-kind table for one run.
pub fn run_table(metrics: &Metrics) -> String {
    let rows: Vec<Vec<String>> = OpKind::ALL
        .iter()
        .filter(|k| metrics.count(**k) > 0)
        .map(|&k| {
            let m = metrics.kind(k);
            vec![
                k.name().to_string(),
                m.latency.count.to_string(),
                format!("{:.0}", m.latency.mean_ns),
                m.latency.p50_ns.to_string(),
                m.latency.p99_ns.to_string(),
                format!("{:.3}", m.per_op(m.io.total_reads())),
                format!("{:.3}", m.per_op(m.io.total_writes())),
            ]
        })
        .collect();
    table(
        &[
            "op",
            "count",
            "mean_ns",
            "p50_ns",
            "p99_ns",
            "reads/op",
            "writes/op",
        ],
        &rows,
    )
}

const COMPARE_COLUMNS: &[(&str, &str)] = &[
    ("ops", "run.ops"),
    ("ops/s", "run.throughput_ops_per_s"),
    ("get_p50_ns", "latency.point_lookup.p50_ns"),
    ("get_p99_ns", "latency.point_lookup.p99_ns"),
    ("reads/get", "per_op.point_lookup.reads"),
    ("rt_reads/get", "per_op.point_lookup.tombstone_block_reads"),
    ("idx_reads/get", "per_op.point_lookup.index_node_reads"),
    ("writes/rdel", "per_op.range_delete.writes"),
    ("phi", "filters.phi"),
    ("eps", "filters.epsilon"),
    ("disk_bytes", "space.disk_bytes"),
];

/// Side-by-side table; throughput is normalized to the first report.
pub fn compare(reports: &[(String, Report)]) -> String {
    let base = reports
        .first()
        .and_then(|(_, r)| r.number("run.throughput_ops_per_s"))
        .filter(|v| *v > 0.0);
    let mut header = vec!["report", "strategy", "norm_tput"];
    header.extend(COMPARE_COLUMNS.iter().map(|(h, _)| *h));
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|(name, r)| {
            let norm = match (base, r.number("run.throughput_ops_per_s")) {
                (Some(b), Some(t)) => format!("{:.2}x", t / b),
                _ => "n/a".to_string(),
            };
            let mut row = vec![
                name.clone(),
                r.get("run.strategy").unwrap_or("n/a").to_string(),
                norm,
            ];
            row.extend(
                COMPARE_COLUMNS
                    .iter()
                    .map(|(_, key)| r.get(key).unwrap_or("n/a").to_string()),
            );
            row
        })
        .collect();
    table(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(strategy: &str, tput: Option<f64>) -> Report {
        let mut r = Report::new();
        r.set("run.strategy", strategy);
        if let Some(t) = tput {
            r.set("run.throughput_ops_per_s", t);
        }
        r
    }

    #[test]
    fn roundtrip() {
        let mut r = report("LRR", Some(10.0));
        r.set("io.data_block_reads", 5);
        r.set("io.data_block_reads", 6);
        let back = Report::parse(&r.to_text()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.number("io.data_block_reads"), Some(6.0));
        assert!(r.to_text().contains("run.strategy = LRR\n"));
    }

    #[test]
    fn one_run_one_row() {
        let out = compare(&[("a".into(), report("LRR", Some(10.0)))]);
        assert_eq!(out.lines().count(), 3);
        assert!(out.contains("1.00x"));
    }

    #[test]
    fn normalized_and_missing() {
        let out = compare(&[
            ("a".into(), report("LRR", Some(100.0))),
            ("b".into(), report("GLORAN", Some(270.0))),
            ("c".into(), report("DECOMP", None)),
        ]);
        let lines: Vec<_> = out.lines().collect();
        assert!(lines[2].contains("1.00x"));
        assert!(lines[3].contains("2.70x"));
        assert!(lines[4].contains("n/a"));
    }

    #[test]
    fn built_report_has_model_and_io() {
        let m = Metrics {
            strategy: "GLORAN".into(),
            entries: 1000,
            ..Metrics::default()
        };
        let r = build(&m, &StoreConfig::default(), "t.trace");
        assert_eq!(r.get("run.strategy"), Some("GLORAN"));
        assert_eq!(r.get("filters.phi"), Some("n/a"));
        assert!(r.number("model.lookup_n").is_some());
        assert_eq!(r.number("io.index_node_reads"), Some(0.0));
        assert_eq!(r.get("model.lambda"), Some("inf"));
    }
}
