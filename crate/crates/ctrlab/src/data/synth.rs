//! Seeded synthetic CTR data with a known ground-truth model.
//!
//! The teacher is a factorization machine over per-feature latent vectors,
//! optionally composed with a per-field context gate (a sigmoid of a
//! learned projection of the instance's mean latent vector). With a
//! non-zero gate a plain FM underfits while refinement-augmented models can
//! recover the gap, so training tests get a measurable lift signal. The
//! generator also reports each row's true click probability, giving tests
//! a Bayes-optimal AUC oracle to compare against.

use crate::rng::{below, normal, rng_from_seed, ChaCha20Rng};

#[derive(Clone, Debug)]
pub struct SynthConfig {
    /// Raw vocabulary size per field (before the pipeline adds unknowns).
    pub field_sizes: Vec<usize>,
    pub rows: usize,
    pub seed: u64,
    /// Teacher latent dimension.
    pub latent_dim: usize,
    /// 0 disables the context gate (plain FM teacher).
    pub gate_strength: f64,
    /// Logit scale after standardization; larger separates classes more.
    pub temperature: f64,
    /// Desired positive rate (sets the logit shift).
    pub positive_rate: f64,
    /// Skew of value sampling; larger concentrates mass on head values.
    pub skew: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            field_sizes: vec![200, 800, 7, 7, 2, 3, 2, 9, 40, 80],
            rows: 40_000,
            seed: 2022,
            latent_dim: 6,
            gate_strength: 3.0,
            temperature: 2.2,
            positive_rate: 0.33,
            skew: 1.6,
        }
    }
}

pub struct SynthDataset {
    pub config: SynthConfig,
    /// Per-row field value indices.
    pub values: Vec<Vec<u32>>,
    pub labels: Vec<u8>,
    /// True click probability per row (the Bayes oracle).
    pub truth: Vec<f64>,
}

struct Teacher {
    latent: Vec<Vec<Vec<f64>>>, // [field][value][k]
    gate_proj: Vec<Vec<f64>>,   // [field][k]
    k: usize,
}

impl Teacher {
    fn new(cfg: &SynthConfig, rng: &mut ChaCha20Rng) -> Self {
        let k = cfg.latent_dim;
        let latent = cfg
            .field_sizes
            .iter()
            .map(|&n| (0..n).map(|_| (0..k).map(|_| normal(rng) / (k as f64).sqrt()).collect()).collect())
            .collect();
        let gate_proj = cfg.field_sizes.iter().map(|_| (0..k).map(|_| normal(rng)).collect()).collect();
        Teacher { latent, gate_proj, k }
    }

    /// Raw (un-standardized) teacher logit for one row.
    fn raw_logit(&self, cfg: &SynthConfig, values: &[u32]) -> f64 {
        let f = values.len();
        let mut mean = vec![0.0; self.k];
        for (fi, &v) in values.iter().enumerate() {
            for (d, m) in mean.iter_mut().enumerate() {
                *m += self.latent[fi][v as usize][d] / f as f64;
            }
        }
        // Context-gated embeddings, then pairwise FM score via square-of-sum.
        let mut sum = vec![0.0; self.k];
        let mut sq = vec![0.0; self.k];
        for (fi, &v) in values.iter().enumerate() {
            let dot: f64 = self.gate_proj[fi].iter().zip(&mean).map(|(a, b)| a * b).sum();
            let gate = if cfg.gate_strength == 0.0 {
                1.0
            } else {
                2.0 / (1.0 + (-cfg.gate_strength * dot).exp())
            };
            for d in 0..self.k {
                let e = self.latent[fi][v as usize][d] * gate;
                sum[d] += e;
                sq[d] += e * e;
            }
        }
        0.5 * sum.iter().zip(&sq).map(|(s, q)| s * s - q).sum::<f64>()
    }
}

/// Generate a dataset. Deterministic in the config seed.
pub fn generate(cfg: &SynthConfig) -> SynthDataset {
    let mut rng = rng_from_seed(cfg.seed);
    let teacher = Teacher::new(cfg, &mut rng);

    // Skewed value draws: floor(n * u^skew) piles mass on low indices.
    let draw = |n: usize, rng: &mut ChaCha20Rng| -> u32 {
        let u: f64 = rand::Rng::random::<f64>(rng);
        let v = ((n as f64) * u.powf(cfg.skew)) as usize;
        v.min(n - 1) as u32
    };

    let mut values = Vec::with_capacity(cfg.rows);
    let mut raw = Vec::with_capacity(cfg.rows);
    for _ in 0..cfg.rows {
        let row: Vec<u32> = cfg.field_sizes.iter().map(|&n| draw(n, &mut rng)).collect();
        raw.push(teacher.raw_logit(cfg, &row));
        values.push(row);
    }

    // Standardize logits, then scale and shift to the target positive rate.
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let var = raw.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / raw.len() as f64;
    let std = var.sqrt().max(1e-12);
    let shift = (cfg.positive_rate / (1.0 - cfg.positive_rate)).ln();

    let mut labels = Vec::with_capacity(cfg.rows);
    let mut truth = Vec::with_capacity(cfg.rows);
    for r in &raw {
        let z = (r - mean) / std * cfg.temperature + shift;
        let p = 1.0 / (1.0 + (-z).exp());
        truth.push(p);
        labels.push(if rand::Rng::random::<f64>(&mut rng) < p { 1 } else { 0 });
    }

    SynthDataset { config: cfg.clone(), values, labels, truth }
}

impl SynthDataset {
    /// Render as generic delimited text (header + rows), the same surface
    /// real datasets enter through.
    pub fn to_delimited(&self) -> String {
        let f = self.config.field_sizes.len();
        let mut out = String::new();
        out.push_str("label");
        for i in 0..f {
            out.push_str(&format!(",f{i}"));
        }
        out.push('\n');
        for (row, y) in self.values.iter().zip(&self.labels) {
            out.push_str(&format!("{y}"));
            for v in row {
                out.push_str(&format!(",v{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Empirical Bayes AUC over a subset of rows: scores = true
    /// probabilities against the sampled labels.
    pub fn bayes_auc(&self, indices: &[usize]) -> Option<f64> {
        let labels: Vec<u8> = indices.iter().map(|&i| self.labels[i]).collect();
        let scores: Vec<f64> = indices.iter().map(|&i| self.truth[i]).collect();
        crate::metrics::auc(&labels, &scores).ok()
    }
}

/// Uniform random instance ids for probe inputs: one id per field, drawn
/// inside each field's range (never the unknown slot when avoidable).
pub fn random_instance_ids(schema: &crate::data::schema::FieldSchema, rng: &mut ChaCha20Rng) -> Vec<u32> {
    (0..schema.field_count())
        .map(|f| {
            let size = schema.field(f).size();
            if size == 1 {
                schema.offset(f)
            } else {
                schema.offset(f) + 1 + below(rng, (size - 1) as u64) as u32
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_calibrated() {
        let cfg = SynthConfig { rows: 5000, ..Default::default() };
        let a = generate(&cfg);
        let b = generate(&cfg);
        assert_eq!(a.values, b.values);
        assert_eq!(a.labels, b.labels);
        let rate = a.labels.iter().map(|&y| y as f64).sum::<f64>() / a.labels.len() as f64;
        assert!((rate - 0.33).abs() < 0.05, "positive rate {rate}");
    }

    #[test]
    fn bayes_auc_is_high_but_not_degenerate() {
        let cfg = SynthConfig { rows: 8000, ..Default::default() };
        let d = generate(&cfg);
        let idx: Vec<usize> = (0..d.labels.len()).collect();
        let auc = d.bayes_auc(&idx).unwrap();
        assert!(auc > 0.85 && auc < 0.999, "bayes auc {auc}");
    }

    #[test]
    fn delimited_output_parses_back() {
        let cfg = SynthConfig { rows: 50, ..Default::default() };
        let d = generate(&cfg);
        let text = d.to_delimited();
        let reader = crate::data::raw::RecordReader::new(
            std::io::Cursor::new(text),
            &crate::data::raw::RawFormat::frappe(),
        )
        .unwrap();
        let recs: Vec<_> = reader.collect::<crate::error::Result<Vec<_>>>().unwrap();
        assert_eq!(recs.len(), 50);
        assert_eq!(recs[0].tokens.len(), 10);
    }
}
