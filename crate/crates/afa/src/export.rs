//! CSV and DOT emitters for traces, metrics, sweeps, and policies.
//!
//! Output is plain-text and deterministic: identical inputs produce
//! byte-identical files.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluation::{AggregateReport, EpisodeTrace, MetricsReport};
use crate::exploration::CurveRow;
use crate::mdp::{PolicyCore, Superstate};
use crate::regularisation::RegularisationReport;

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(std::io::BufWriter::new(file))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-episode table: one row per instance with its acquisition path.
pub fn write_traces_csv(path: impl AsRef<Path>, traces: &[EpisodeTrace], names: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(
        w,
        "instance,label,predicted,probability,cost,return,depth,path"
    )
    .map_err(io_err(path))?;
    for t in traces {
        let path_str = t
            .steps
            .iter()
            .map(|(s, _)| s.label(names))
            .collect::<Vec<_>>()
            .join(">");
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            t.instance, t.label, t.predicted, t.probability, t.cost, t.ret,
            t.depth(), path_str
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Per-split metrics plus a trailing mean/std pair when an aggregate is given.
pub fn write_metrics_csv(
    path: impl AsRef<Path>,
    reports: &[MetricsReport],
    aggregate: Option<&AggregateReport>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(
        w,
        "split,auc,accuracy,mean_cost,mean_return,mean_depth,max_depth,node_count"
    )
    .map_err(io_err(path))?;
    for (i, r) in reports.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            i, r.auc, r.accuracy, r.mean_cost, r.mean_return, r.mean_depth, r.max_depth,
            r.node_count
        )
        .map_err(io_err(path))?;
    }
    if let Some(a) = aggregate {
        writeln!(
            w,
            "mean,{},{},{},{},{},,",
            a.auc.0, a.accuracy.0, a.mean_cost.0, a.mean_return.0, a.mean_depth.0
        )
        .map_err(io_err(path))?;
        writeln!(
            w,
            "std,{},{},{},{},{},,",
            a.auc.1, a.accuracy.1, a.mean_cost.1, a.mean_return.1, a.mean_depth.1
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Modality-usage table: one row per feature group.
pub fn write_usage_csv(path: impl AsRef<Path>, names: &[String], costs: &[f64], usage: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "group,name,cost,usage").map_err(io_err(path))?;
    for (g, ((name, cost), freq)) in names.iter().zip(costs).zip(usage).enumerate() {
        writeln!(w, "{g},{name},{cost},{freq}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Exploration trace (one row per node insertion).
pub fn write_exploration_csv(path: impl AsRef<Path>, rows: &[CurveRow]) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "step,node,score,return,mean_cost,depth").map_err(io_err(path))?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.step,
            r.node.bits(),
            r.score,
            r.ret,
            r.mean_cost,
            r.depth
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Per-iteration compaction report.
pub fn write_regularisation_csv(path: impl AsRef<Path>, report: &RegularisationReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "iteration,node_count,visited_count,mean_return,e_reg,converged").map_err(io_err(path))?;
    for s in &report.steps {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.iteration, s.node_count, s.visited_count, s.mean_return, s.e_reg, report.converged
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Lambda-sweep frontier rows.
pub fn write_sweep_csv(
    path: impl AsRef<Path>,
    rows: &[(f64, AggregateReport)],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    writeln!(w, "lambda,accuracy,accuracy_std,mean_cost,mean_cost_std,auc,mean_return").map_err(io_err(path))?;
    for (lambda, a) in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            lambda, a.accuracy.0, a.accuracy.1, a.mean_cost.0, a.mean_cost.1, a.auc.0,
            a.mean_return.0
        )
        .map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Graphviz export: one box per superstate labelled with its feature names
/// and, when visit counts are given, "visited / finished" totals; fill
/// darkens with visit share.
pub fn write_dot(
    path: impl AsRef<Path>,
    core: &PolicyCore,
    names: &[String],
    visits: Option<&BTreeMap<Superstate, (usize, usize)>>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = create(path)?;
    let total: usize = visits
        .map(|v| v.get(&Superstate::EMPTY).map(|(n, _)| *n).unwrap_or(0))
        .unwrap_or(0);
    writeln!(w, "digraph policy {{").map_err(io_err(path))?;
    writeln!(w, "  rankdir=TB;").map_err(io_err(path))?;
    writeln!(w, "  node [shape=box, style=filled, fontname=\"Helvetica\"];").map_err(io_err(path))?;
    for s in core.superstates() {
        let mut label = s.label(names);
        let mut shade = 100u32;
        if let Some(v) = visits {
            let (seen, finished) = v.get(&s).copied().unwrap_or((0, 0));
            label = format!("{label}\\n{seen} / {finished}");
            if total > 0 {
                let frac = seen as f64 / total as f64;
                shade = (100.0 - 55.0 * frac).round() as u32;
            }
        }
        writeln!(
            w,
            "  n{} [label=\"{}\", fillcolor=\"gray{}\"];",
            s.bits(),
            label,
            shade
        )
        .map_err(io_err(path))?;
    }
    for s in core.superstates() {
        let node = core.node(s).unwrap();
        for (&g, _) in &node.acquires {
            let child = s.with(g);
            if core.contains(child) {
                let name = names.get(g).cloned().unwrap_or_else(|| format!("g{g}"));
                writeln!(w, "  n{} -> n{} [label=\"{}\"];", s.bits(), child.bits(), name)
                    .map_err(io_err(path))?;
            }
        }
    }
    writeln!(w, "}}").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}
