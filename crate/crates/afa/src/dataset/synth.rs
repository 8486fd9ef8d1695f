//! Synthetic dataset generators.
//!
//! Real-data studies in this domain use UCI tables (heart disease with
//! per-test dollar costs, Wisconsin breast cancer, spambase) plus private
//! echocardiography waveforms. None of those can ship here, so this module
//! generates surrogates with matching shapes: feature counts, sample counts,
//! class prevalence, and cost structure. The generators are deterministic
//! given a seed.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, FeatureGroup};
use crate::util::{mix_seed, tags};

/// One scalar feature of a [`scalar_dataset`].
#[derive(Debug, Clone)]
pub struct ScalarFeature {
    pub name: String,
    pub cost: f64,
    /// Class separation: the feature is N(±strength/2, 1) conditioned on the label.
    pub strength: f64,
    /// Exact duplicate of an earlier feature's column (same values).
    pub copy_of: Option<usize>,
    /// Correlate with an earlier feature: x = rho * x_src + sqrt(1-rho^2) * fresh.
    pub corr_with: Option<(usize, f64)>,
}

impl ScalarFeature {
    pub fn new(name: impl Into<String>, cost: f64, strength: f64) -> Self {
        ScalarFeature {
            name: name.into(),
            cost,
            strength,
            copy_of: None,
            corr_with: None,
        }
    }
}

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; clamped away from 0 to keep ln finite.
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn draw_labels(n: usize, prevalence: f64, rng: &mut impl Rng) -> Array1<u8> {
    // Exact prevalence count, shuffled: keeps class balance reproducible.
    let pos = ((n as f64) * prevalence).round() as usize;
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < pos)).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        labels.swap(i, j);
    }
    Array1::from_vec(labels)
}

/// Gaussian class-shift dataset over scalar features.
pub fn scalar_dataset(
    name: &str,
    n: usize,
    prevalence: f64,
    features: &[ScalarFeature],
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[tags::SYNTH, n as u64]));
    let labels = draw_labels(n, prevalence, &mut rng);
    let mut values = Array2::zeros((n, features.len()));
    for (j, feat) in features.iter().enumerate() {
        for i in 0..n {
            let fresh = feat.strength * (labels[i] as f64 - 0.5) + normal(&mut rng);
            values[[i, j]] = match (feat.copy_of, feat.corr_with) {
                (Some(src), _) => values[[i, src]],
                (None, Some((src, rho))) => rho * values[[i, src]] + (1.0 - rho * rho).sqrt() * fresh,
                (None, None) => fresh,
            };
        }
    }
    let groups = features
        .iter()
        .enumerate()
        .map(|(id, f)| FeatureGroup {
            id,
            name: f.name.clone(),
            dims: 1,
            cost: f.cost,
        })
        .collect();
    Dataset::new(name, groups, values, labels).expect("synthetic dataset is valid")
}

/// One multidimensional waveform group of a [`waveform_dataset`].
#[derive(Debug, Clone)]
pub struct WaveformGroup {
    pub name: String,
    pub cost: f64,
    pub dims: usize,
    /// Class effect on waveform amplitude.
    pub amp_shift: f64,
    /// Class effect on waveform phase.
    pub delay_shift: f64,
    pub freq: f64,
    /// Index of the shared latent factor this group couples to (0..4).
    pub latent: usize,
}

/// Temporally sampled waveforms per group, with class-dependent amplitude and
/// phase plus instance-level latent variation; PCA-reducible by construction.
pub fn waveform_dataset(
    name: &str,
    n: usize,
    prevalence: f64,
    groups: &[WaveformGroup],
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[tags::SYNTH, n as u64, 77]));
    let labels = draw_labels(n, prevalence, &mut rng);
    let latents: Vec<[f64; 4]> = (0..n)
        .map(|_| [normal(&mut rng), normal(&mut rng), normal(&mut rng), normal(&mut rng)])
        .collect();
    let total_dims: usize = groups.iter().map(|g| g.dims).sum();
    let mut values = Array2::zeros((n, total_dims));
    let mut col = 0;
    for g in groups {
        for i in 0..n {
            let s = labels[i] as f64 - 0.5;
            let u = latents[i][g.latent % 4];
            let amp = 1.0 + g.amp_shift * s + 0.25 * u;
            let phase = g.delay_shift * s + 0.15 * u;
            for t in 0..g.dims {
                let x = t as f64 / g.dims as f64;
                let wave = amp
                    * (2.0 * std::f64::consts::PI * g.freq * x + phase).sin()
                    + 0.3 * amp * (4.0 * std::f64::consts::PI * g.freq * x + 2.0 * phase).cos();
                values[[i, col + t]] = wave + 0.15 * normal(&mut rng);
            }
        }
        col += g.dims;
    }
    let metas = groups
        .iter()
        .enumerate()
        .map(|(id, g)| FeatureGroup {
            id,
            name: g.name.clone(),
            dims: g.dims,
            cost: g.cost,
        })
        .collect();
    Dataset::new(name, metas, values, labels).expect("synthetic dataset is valid")
}

/// Heart-disease surrogate: 11 scalar features, 531 rows, 61% positive.
///
/// Costs are the published per-test dollar amounts for this table (exercise
/// test readouts are the expensive ones, around $87-103; vitals cost $1).
/// Informativeness correlates with cost: the exercise features carry the
/// strongest signal, so uniform-cost policies prefer them while real-cost
/// policies shift to cheap vitals.
pub fn heart(seed: u64) -> Dataset {
    let spec: &[(&str, f64, f64)] = &[
        ("age", 1.0, 0.75),
        ("sex", 1.0, 0.40),
        ("cp", 1.0, 0.85),
        ("trestbps", 1.0, 0.55),
        ("chol", 7.27, 0.60),
        ("fbs", 5.20, 0.30),
        ("restecg", 15.50, 0.50),
        ("thalach", 102.90, 1.30),
        ("exang", 87.30, 1.50),
        ("oldpeak", 87.30, 1.40),
        ("slope", 87.30, 1.60),
    ];
    let feats: Vec<ScalarFeature> = spec
        .iter()
        .map(|&(name, cost, strength)| ScalarFeature::new(name, cost, strength))
        .collect();
    scalar_dataset("heart", 531, 0.61, &feats, seed)
}

/// Breast-cancer surrogate: 8 scalar features, 683 rows, 34% positive,
/// uniform unit costs, strong cytology-like signal.
pub fn breast(seed: u64) -> Dataset {
    let strengths = [2.1, 1.9, 1.7, 1.5, 1.2, 0.9, 0.6, 0.3];
    let feats: Vec<ScalarFeature> = strengths
        .iter()
        .enumerate()
        .map(|(j, &s)| ScalarFeature::new(format!("marker{j}"), 1.0, s))
        .collect();
    scalar_dataset("breast", 683, 0.34, &feats, seed)
}

/// Spam surrogate: 56 scalar features, 4601 rows, 39% positive.
///
/// Every feature carries moderate signal and none stands out (word
/// frequencies): accuracy keeps accumulating well past depth 10, so deep
/// random exploration is competitive when acquisition is cheap while
/// targeted shallow exploration wins when it is expensive. Eight features
/// are correlated shadows of earlier ones.
pub fn spam(seed: u64) -> Dataset {
    let mut feats = Vec::with_capacity(56);
    for j in 0..56usize {
        let phase = (j as f64) * 0.61803398875;
        let frac = phase - phase.floor();
        let strength = 0.55 + 0.4 * frac;
        let mut f = ScalarFeature::new(format!("word{j:02}"), 1.0, strength);
        if (40..48).contains(&j) {
            f.corr_with = Some((j - 40, 0.85));
        }
        feats.push(f);
    }
    scalar_dataset("spam", 4601, 0.39, &feats, seed)
}

/// Echocardiography-style surrogate: 5 waveform groups of 40 samples each,
/// 248 rows, 70% positive. Groups 0 and 1 are redundant strong markers
/// coupled to the same latent, group 2 is moderate, 3 weak, 4 pure noise;
/// redundancy is what gives a sparsity regulariser something to remove.
pub fn hta(seed: u64) -> Dataset {
    let groups = vec![
        WaveformGroup {
            name: "mitral_doppler".into(),
            cost: 1.0,
            dims: 40,
            amp_shift: 0.9,
            delay_shift: 0.7,
            freq: 1.0,
            latent: 0,
        },
        WaveformGroup {
            name: "aortic_doppler".into(),
            cost: 1.0,
            dims: 40,
            amp_shift: 0.85,
            delay_shift: 0.75,
            freq: 1.0,
            latent: 0,
        },
        WaveformGroup {
            name: "tissue_velocity".into(),
            cost: 1.0,
            dims: 40,
            amp_shift: 0.5,
            delay_shift: 0.3,
            freq: 2.0,
            latent: 1,
        },
        WaveformGroup {
            name: "strain_global".into(),
            cost: 1.0,
            dims: 40,
            amp_shift: 0.25,
            delay_shift: 0.15,
            freq: 1.5,
            latent: 2,
        },
        WaveformGroup {
            name: "strain_septal".into(),
            cost: 1.0,
            dims: 40,
            amp_shift: 0.0,
            delay_shift: 0.0,
            freq: 2.5,
            latent: 3,
        },
    ];
    waveform_dataset("hta", 248, 0.70, &groups, seed)
}

/// Small random dataset with unique rows and i.i.d. noise features; labels
/// random with both classes guaranteed. Used by solver-vs-bruteforce oracles.
pub fn random_unique(n: usize, f: usize, cost_range: (f64, f64), seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &[tags::SYNTH, n as u64, f as u64]));
    let values = Array2::from_shape_fn((n, f), |_| normal(&mut rng));
    let mut labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2) as u8).collect();
    labels[0] = 0;
    labels[1] = 1;
    let groups = (0..f)
        .map(|id| FeatureGroup {
            id,
            name: format!("f{id}"),
            dims: 1,
            cost: rng.gen_range(cost_range.0..=cost_range.1),
        })
        .collect();
    Dataset::new("random", groups, values, Array1::from_vec(labels))
        .expect("synthetic dataset is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surrogates_match_table_shapes() {
        let h = heart(1);
        assert_eq!((h.n_groups(), h.n_rows()), (11, 531));
        assert!((h.prevalence() - 0.61).abs() < 0.01);
        assert_eq!(h.group(10).cost, 87.30);

        let b = breast(1);
        assert_eq!((b.n_groups(), b.n_rows()), (8, 683));
        assert!((b.prevalence() - 0.34).abs() < 0.01);

        let s = spam(1);
        assert_eq!((s.n_groups(), s.n_rows()), (56, 4601));
        assert!((s.prevalence() - 0.39).abs() < 0.01);

        let w = hta(1);
        assert_eq!((w.n_groups(), w.n_rows()), (5, 248));
        assert_eq!(w.n_cols(), 200);
        assert!((w.prevalence() - 0.70).abs() < 0.01);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = heart(9);
        let b = heart(9);
        assert_eq!(a.values(), b.values());
        assert_eq!(a.labels(), b.labels());
        let c = heart(10);
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn copy_of_yields_identical_columns() {
        let mut feats = vec![
            ScalarFeature::new("a", 1.0, 1.0),
            ScalarFeature::new("b", 1.0, 1.0),
        ];
        feats[1].copy_of = Some(0);
        let d = scalar_dataset("dup", 50, 0.5, &feats, 3);
        for i in 0..50 {
            assert_eq!(d.values()[[i, 0]], d.values()[[i, 1]]);
        }
    }

    #[test]
    fn random_unique_has_unique_rows() {
        let d = random_unique(40, 3, (0.0, 0.2), 11);
        for i in 0..40 {
            for j in (i + 1)..40 {
                let same = (0..3).all(|c| d.values()[[i, c]] == d.values()[[j, c]]);
                assert!(!same, "rows {i} and {j} coincide");
            }
        }
    }
}
