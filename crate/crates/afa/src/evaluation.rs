//! Episode execution on held-out data and the reported metrics.

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::MaskedClassifier;
use crate::mdp::{Action, PolicyCore, Superstate};

/// One instance's acquisition trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub instance: usize,
    /// (state, action) pairs; the last action is always Finish.
    pub steps: Vec<(Superstate, Action)>,
    pub terminal: Superstate,
    /// Positive-class probability at the terminal superstate.
    pub probability: f64,
    pub predicted: u8,
    pub label: u8,
    /// Sum of acquired group costs.
    pub cost: f64,
    /// correct(0/1) - lambda * cost.
    pub ret: f64,
}

impl EpisodeTrace {
    pub fn depth(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn correct(&self) -> bool {
        (self.probability > 0.5 && self.label == 1) || (self.probability < 0.5 && self.label == 0)
    }
}

/// Runs one greedy episode from the root, reading only acquired entries of
/// `row`; the terminal probability comes from the masked classifier.
pub fn run_episode(
    core: &PolicyCore,
    classifier: &MaskedClassifier,
    row: &[f64],
    label: u8,
    instance: usize,
) -> Result<EpisodeTrace> {
    let mut s = Superstate::EMPTY;
    let mut steps = Vec::new();
    loop {
        let action = core.greedy_action(s, row)?;
        steps.push((s, action));
        match action {
            Action::Finish => break,
            Action::Acquire(g) => {
                if s.contains(g) {
                    return Err(Error::Policy(format!("group {g} acquired twice")));
                }
                s = s.with(g);
            }
        }
        if steps.len() > core.group_count + 1 {
            return Err(Error::Policy("episode exceeded group count".into()));
        }
    }
    let probability = classifier.predict_proba(row, s.bits());
    let predicted = u8::from(probability > 0.5);
    let cost: f64 = {
        let node = core.node(s).expect("terminal node in graph");
        node.cost
    };
    let correct = (probability > 0.5 && label == 1) || (probability < 0.5 && label == 0);
    let ret = f64::from(correct) - core.lambda * cost;
    Ok(EpisodeTrace {
        instance,
        steps,
        terminal: s,
        probability,
        predicted,
        label,
        cost,
        ret,
    })
}

/// Metrics of one evaluation run (one split).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub auc: f64,
    pub accuracy: f64,
    pub mean_cost: f64,
    pub mean_return: f64,
    pub mean_depth: f64,
    pub max_depth: usize,
    pub node_count: usize,
    /// Fraction of episodes acquiring each group.
    pub usage: Vec<f64>,
}

/// Episodes plus metrics for a whole dataset.
pub fn evaluate(
    core: &PolicyCore,
    classifier: &MaskedClassifier,
    d: &Dataset,
) -> Result<(Vec<EpisodeTrace>, MetricsReport)> {
    if d.n_rows() == 0 {
        return Err(Error::Data("empty evaluation set".into()));
    }
    let traces: Vec<EpisodeTrace> = (0..d.n_rows())
        .into_par_iter()
        .map(|i| run_episode(core, classifier, &d.row(i), d.labels()[i], i))
        .collect::<Result<Vec<_>>>()?;
    let report = summarize(core, &traces)?;
    Ok((traces, report))
}

/// Metrics from a set of episode traces.
pub fn summarize(core: &PolicyCore, traces: &[EpisodeTrace]) -> Result<MetricsReport> {
    if traces.is_empty() {
        return Err(Error::Data("no traces to summarize".into()));
    }
    let n = traces.len() as f64;
    let probs: Vec<f64> = traces.iter().map(|t| t.probability).collect();
    let labels: Vec<u8> = traces.iter().map(|t| t.label).collect();
    Ok(MetricsReport {
        auc: auc(&probs, &labels)?,
        accuracy: traces.iter().filter(|t| t.correct()).count() as f64 / n,
        mean_cost: traces.iter().map(|t| t.cost).sum::<f64>() / n,
        mean_return: traces.iter().map(|t| t.ret).sum::<f64>() / n,
        mean_depth: traces.iter().map(|t| t.depth() as f64).sum::<f64>() / n,
        max_depth: traces.iter().map(|t| t.depth()).max().unwrap_or(0),
        node_count: core.node_count(),
        usage: usage_frequencies(traces, core.group_count),
    })
}

/// Mann-Whitney AUC of probabilities against binary labels; tied
/// probabilities contribute 1/2 via average ranks.
pub fn auc(probabilities: &[f64], labels: &[u8]) -> Result<f64> {
    if probabilities.len() != labels.len() {
        return Err(Error::Dimensions("auc: length mismatch".into()));
    }
    let n = labels.len();
    let n_pos = labels.iter().filter(|&&y| y == 1).count();
    let n_neg = n - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data("auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| probabilities[a].partial_cmp(&probabilities[b]).unwrap());
    let mut ranks = vec![0.0f64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && probabilities[order[j + 1]] == probabilities[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0; // ranks are 1-based
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    let pos_rank_sum: f64 = (0..n).filter(|&i| labels[i] == 1).map(|i| ranks[i]).sum();
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Fraction of traces acquiring each group.
pub fn usage_frequencies(traces: &[EpisodeTrace], group_count: usize) -> Vec<f64> {
    let mut counts = vec![0usize; group_count];
    for t in traces {
        for g in t.terminal.groups() {
            counts[g] += 1;
        }
    }
    counts
        .into_iter()
        .map(|c| c as f64 / traces.len().max(1) as f64)
        .collect()
}

/// Split-wise aggregation: mean and standard deviation of per-split metrics
/// (no pooling of instances across splits).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_splits: usize,
    pub auc: (f64, f64),
    pub accuracy: (f64, f64),
    pub mean_cost: (f64, f64),
    pub mean_return: (f64, f64),
    pub mean_depth: (f64, f64),
    pub usage: Vec<f64>,
}

pub fn aggregate(reports: &[MetricsReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::Data("no reports to aggregate".into()));
    }
    let mean_std = |f: &dyn Fn(&MetricsReport) -> f64| -> (f64, f64) {
        let vals: Vec<f64> = reports.iter().map(|r| f(r)).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / vals.len() as f64;
        (m, var.sqrt())
    };
    let groups = reports[0].usage.len();
    let usage: Vec<f64> = (0..groups)
        .map(|g| reports.iter().map(|r| r.usage[g]).sum::<f64>() / reports.len() as f64)
        .collect();
    Ok(AggregateReport {
        n_splits: reports.len(),
        auc: mean_std(&|r| r.auc),
        accuracy: mean_std(&|r| r.accuracy),
        mean_cost: mean_std(&|r| r.mean_cost),
        mean_return: mean_std(&|r| r.mean_return),
        mean_depth: mean_std(&|r| r.mean_depth),
        usage,
    })
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Dimensions("spearman needs two equal-length vectors".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for i in 0..a.len() {
        let da = ra[i] - ma;
        let db = rb[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va.sqrt() * vb.sqrt()))
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| v[x].partial_cmp(&v[y]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Per-instance median probability is sometimes useful for calibration
/// checks in tests.
pub fn mean(values: &Array1<f64>) -> f64 {
    values.sum() / values.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_perfect_separation_is_one() {
        let probs = [0.9, 0.8, 0.2, 0.1];
        let labels = [1, 1, 0, 0];
        assert_eq!(auc(&probs, &labels).unwrap(), 1.0);
    }

    #[test]
    fn auc_hand_case_three_of_four_pairs() {
        // probs (0.9, 0.8, 0.4, 0.1), labels (1, 0, 1, 0): concordant pairs
        // (0.9|0.8), (0.9|0.1), (0.4|0.1); discordant (0.4|0.8) -> 3/4.
        let probs = [0.9, 0.8, 0.4, 0.1];
        let labels = [1, 0, 1, 0];
        assert_eq!(auc(&probs, &labels).unwrap(), 0.75);
    }

    #[test]
    fn auc_ties_contribute_half() {
        let probs = [0.5, 0.5, 0.5, 0.5];
        let labels = [1, 0, 1, 0];
        assert_eq!(auc(&probs, &labels).unwrap(), 0.5);
    }

    #[test]
    fn auc_matches_pair_counting_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(61);
        for trial in 0..20 {
            let n = rng.gen_range(5..100);
            let probs: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() * 8.0).round() / 8.0).collect();
            let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
            labels[0] = 0;
            labels[1] = 1;
            let got = auc(&probs, &labels).unwrap();
            // Oracle: count concordant pairs, ties half.
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == 1 && labels[j] == 0 {
                        den += 1.0;
                        if probs[i] > probs[j] {
                            num += 1.0;
                        } else if probs[i] == probs[j] {
                            num += 0.5;
                        }
                    }
                }
            }
            let want = num / den;
            assert!((got - want).abs() < 1e-12, "trial {trial}: {got} vs {want}");
        }
    }

    #[test]
    fn auc_requires_both_classes() {
        assert!(auc(&[0.1, 0.9], &[1, 1]).is_err());
    }

    #[test]
    fn usage_counts_acquired_groups() {
        let mk = |terminal: Superstate| EpisodeTrace {
            instance: 0,
            steps: vec![(Superstate::EMPTY, Action::Finish)],
            terminal,
            probability: 0.7,
            predicted: 1,
            label: 1,
            cost: 0.0,
            ret: 1.0,
        };
        let traces = vec![
            mk(Superstate::from_groups([2])),
            mk(Superstate::from_groups([0, 2])),
            mk(Superstate::EMPTY),
        ];
        let freq = usage_frequencies(&traces, 3);
        assert_eq!(freq, vec![1.0 / 3.0, 0.0, 2.0 / 3.0]);
        let none = vec![mk(Superstate::EMPTY)];
        assert_eq!(usage_frequencies(&none, 3), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn aggregate_means_equal_mean_of_split_metrics() {
        let mk = |auc: f64, cost: f64| MetricsReport {
            auc,
            accuracy: 0.8,
            mean_cost: cost,
            mean_return: 0.5,
            mean_depth: 1.0,
            max_depth: 2,
            node_count: 4,
            usage: vec![0.5, 0.0],
        };
        let agg = aggregate(&[mk(0.8, 1.0), mk(0.9, 3.0)]).unwrap();
        assert!((agg.auc.0 - 0.85).abs() < 1e-12);
        assert!((agg.mean_cost.0 - 2.0).abs() < 1e-12);
        assert!((agg.usage[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn spearman_detects_monotone_relations() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let up = [10.0, 20.0, 25.0, 70.0];
        let down = [5.0, 4.0, 3.0, 1.0];
        assert!((spearman(&a, &up).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&a, &down).unwrap() + 1.0).abs() < 1e-12);
    }
}
