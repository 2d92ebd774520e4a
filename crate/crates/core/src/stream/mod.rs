//! Multi-distributional stream construction.
//!
//! Two sources are supported: a synthetic two-class Gaussian stream whose
//! class means drift a little between intervals, and a labeled dataset
//! (e.g. LIBSVM files) that is shuffled, cut into intervals and perturbed by
//! fresh class-conditional Gaussian noise in every interval. Every emitted
//! sample is clipped into the `D`-ball after any noise is added.

pub mod dump;
pub mod libsvm;
pub mod rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{check_dim, norm, Label, Sample};
use rng::SplitMix64;

pub use dump::{read_stream_csv, write_stream_csv};
pub use libsvm::parse_libsvm;

const TAG_MEANS: u64 = 1;
const TAG_SAMPLES: u64 = 2;
const TAG_SHUFFLE: u64 = 3;
const TAG_NOISE: u64 = 4;
const TAG_FRESH: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StreamMode {
    Synthetic,
    #[serde(alias = "libsvm_noised")]
    Libsvm,
}

fn default_drift_std() -> f64 {
    0.3
}
fn default_noise_std() -> f64 {
    0.1
}
fn default_d() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    /// Number of intervals.
    pub g: usize,
    /// Samples per interval.
    pub b: usize,
    pub dim: usize,
    pub mode: StreamMode,
    /// Std of the per-interval random walk of the synthetic class means.
    #[serde(default = "default_drift_std")]
    pub drift_std: f64,
    /// Std of the per-interval noise (and noise means) in dataset mode.
    #[serde(default = "default_noise_std")]
    pub noise_std: f64,
    pub seed: u64,
    /// Feature norm bound.
    #[serde(default = "default_d")]
    pub d: f64,
}

impl StreamSpec {
    pub fn synthetic(g: usize, b: usize, dim: usize, seed: u64) -> Self {
        Self {
            g,
            b,
            dim,
            mode: StreamMode::Synthetic,
            drift_std: default_drift_std(),
            noise_std: default_noise_std(),
            seed,
            d: default_d(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.g == 0 || self.b == 0 || self.dim == 0 {
            return Err(Error::invalid(format!(
                "G, B and dim must be positive (G = {}, B = {}, dim = {})",
                self.g, self.b, self.dim
            )));
        }
        for (name, v) in [("drift_std", self.drift_std), ("noise_std", self.noise_std)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(Error::invalid(format!("D must be positive, got {}", self.d)));
        }
        Ok(())
    }
}

/// The samples of one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBuffer {
    /// 1-based interval number.
    pub interval_index: usize,
    pub samples: Vec<Sample>,
}

impl IntervalBuffer {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Class-conditional means (or noise means) of one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMeans {
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
}

impl ClassMeans {
    pub fn for_label(&self, y: Label) -> &[f64] {
        match y {
            Label::Pos => &self.pos,
            Label::Neg => &self.neg,
        }
    }
}

/// Intervals plus the per-interval distribution parameters that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedStream {
    pub intervals: Vec<IntervalBuffer>,
    /// Synthetic mode: generating class means. Dataset mode: noise means.
    pub means: Vec<ClassMeans>,
}

/// Rescales every `x` with `‖x‖ > D` onto the sphere of radius `D`.
pub fn condition_norms(samples: &mut [Sample], d: f64) {
    for s in samples {
        let n = norm(&s.x);
        if n > d {
            let scale = d / n;
            s.x.iter_mut().for_each(|v| *v *= scale);
        }
    }
}

fn normal_vec(rng: &mut SplitMix64, dim: usize, std: f64) -> Vec<f64> {
    (0..dim).map(|_| std * rng.next_normal()).collect()
}

/// Balanced label sequence (`⌈n/2⌉` positives) in seeded random order.
fn balanced_labels(rng: &mut SplitMix64, n: usize) -> Vec<Label> {
    let mut labels: Vec<Label> = (0..n)
        .map(|i| if i < n.div_ceil(2) { Label::Pos } else { Label::Neg })
        .collect();
    rng.shuffle(&mut labels);
    labels
}

/// Draws `n` balanced samples `x ~ N(μ_y, I)` without norm conditioning.
pub fn sample_from_means(means: &ClassMeans, n: usize, dim: usize, rng: &mut SplitMix64) -> Result<Vec<Sample>> {
    check_dim(dim, means.pos.len())?;
    check_dim(dim, means.neg.len())?;
    let labels = balanced_labels(rng, n);
    Ok(labels
        .into_iter()
        .map(|y| {
            let x = means
                .for_label(y)
                .iter()
                .map(|m| m + rng.next_normal())
                .collect();
            Sample::new(x, y)
        })
        .collect())
}

/// Class means of every interval: initial means `~ N(0, I)` (redrawn until
/// distinct), then a Gaussian random walk with std `drift_std`.
pub fn synthetic_means(spec: &StreamSpec) -> Vec<ClassMeans> {
    let mut rng = SplitMix64::substream(spec.seed, TAG_MEANS, 0);
    let pos = normal_vec(&mut rng, spec.dim, 1.0);
    let mut neg = normal_vec(&mut rng, spec.dim, 1.0);
    while neg == pos {
        neg = normal_vec(&mut rng, spec.dim, 1.0);
    }
    let mut out = vec![ClassMeans { pos, neg }];
    for _ in 1..spec.g {
        let prev = out.last().expect("non-empty");
        let pos = prev.pos.iter().map(|m| m + spec.drift_std * rng.next_normal()).collect();
        let neg = prev.neg.iter().map(|m| m + spec.drift_std * rng.next_normal()).collect();
        out.push(ClassMeans { pos, neg });
    }
    out
}

/// Synthetic stream before norm conditioning.
pub fn gen_synthetic_raw(spec: &StreamSpec) -> Result<GeneratedStream> {
    spec.validate()?;
    if spec.mode != StreamMode::Synthetic {
        return Err(Error::invalid("gen_synthetic requires synthetic mode"));
    }
    let means = synthetic_means(spec);
    let mut intervals = Vec::with_capacity(spec.g);
    for (g, m) in means.iter().enumerate() {
        let mut rng = SplitMix64::substream(spec.seed, TAG_SAMPLES, g as u64);
        intervals.push(IntervalBuffer {
            interval_index: g + 1,
            samples: sample_from_means(m, spec.b, spec.dim, &mut rng)?,
        });
    }
    Ok(GeneratedStream { intervals, means })
}

/// Synthetic drifting two-Gaussian stream, clipped into the `D`-ball.
pub fn gen_synthetic(spec: &StreamSpec) -> Result<GeneratedStream> {
    let mut out = gen_synthetic_raw(spec)?;
    for iv in &mut out.intervals {
        condition_norms(&mut iv.samples, spec.d);
    }
    Ok(out)
}

/// `n` fresh conditioned samples from the distribution of synthetic interval
/// `interval_index` (1-based), on a substream disjoint from the stream itself.
pub fn fresh_samples(spec: &StreamSpec, means: &ClassMeans, interval_index: usize, n: usize) -> Result<Vec<Sample>> {
    let mut rng = SplitMix64::substream(spec.seed, TAG_FRESH, interval_index as u64);
    let mut out = sample_from_means(means, n, spec.dim, &mut rng)?;
    condition_norms(&mut out, spec.d);
    Ok(out)
}

/// Cuts a labeled dataset into `G` noised intervals of `B` samples.
///
/// The dataset is shuffled with the seeded generator and truncated to
/// `G·B`. Interval `g` draws one noise mean per class, `μ_c ~ N(0, σ²I)`,
/// and adds `ε ~ N(μ_c, σ²I)` to every sample of class `c`.
pub fn make_multidist(samples: &[Sample], spec: &StreamSpec) -> Result<GeneratedStream> {
    spec.validate()?;
    let required = spec.g * spec.b;
    if samples.len() < required {
        return Err(Error::InsufficientSamples {
            required,
            available: samples.len(),
        });
    }
    for s in samples {
        check_dim(spec.dim, s.dim())?;
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    SplitMix64::substream(spec.seed, TAG_SHUFFLE, 0).shuffle(&mut order);

    let sigma = spec.noise_std;
    let mut intervals = Vec::with_capacity(spec.g);
    let mut means = Vec::with_capacity(spec.g);
    for (g, block) in order[..required].chunks(spec.b).enumerate() {
        let mut rng = SplitMix64::substream(spec.seed, TAG_NOISE, g as u64);
        let shift = ClassMeans {
            pos: normal_vec(&mut rng, spec.dim, sigma),
            neg: normal_vec(&mut rng, spec.dim, sigma),
        };
        let mut buf: Vec<Sample> = block
            .iter()
            .map(|&i| {
                let s = &samples[i];
                let mu = shift.for_label(s.y);
                let x = s
                    .x
                    .iter()
                    .zip(mu)
                    .map(|(v, m)| v + m + sigma * rng.next_normal())
                    .collect();
                Sample::new(x, s.y)
            })
            .collect();
        condition_norms(&mut buf, spec.d);
        intervals.push(IntervalBuffer {
            interval_index: g + 1,
            samples: buf,
        });
        means.push(shift);
    }
    Ok(GeneratedStream { intervals, means })
}

/// Builds the stream described by `spec`; dataset mode needs `dataset`.
pub fn build_stream(spec: &StreamSpec, dataset: Option<&[Sample]>) -> Result<GeneratedStream> {
    match spec.mode {
        StreamMode::Synthetic => gen_synthetic(spec),
        StreamMode::Libsvm => {
            let data = dataset.ok_or_else(|| Error::invalid("dataset mode requires input samples"))?;
            make_multidist(data, spec)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn condition_examples() {
        let mut s = vec![
            Sample::new(vec![0.1, 0.2], Label::Pos),
            Sample::new(vec![3.0, 4.0], Label::Neg),
            Sample::new(vec![0.0, 0.0], Label::Pos),
        ];
        let before = s.clone();
        condition_norms(&mut s, 1.0);
        assert_eq!(s[0], before[0]);
        assert!((s[1].x[0] - 0.6).abs() < 1e-15 && (s[1].x[1] - 0.8).abs() < 1e-15);
        assert_eq!(s[2].x, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_drift_keeps_means() {
        let mut spec = StreamSpec::synthetic(6, 10, 2, 3);
        spec.drift_std = 0.0;
        let out = gen_synthetic(&spec).unwrap();
        assert!(out.means.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn positive_drift_moves_means() {
        let spec = StreamSpec::synthetic(15, 10, 2, 3);
        let out = gen_synthetic(&spec).unwrap();
        assert!(out.means.windows(2).all(|w| w[0].pos != w[1].pos && w[0].neg != w[1].neg));
        assert!(out.means.iter().all(|m| m.pos != m.neg));
    }

    #[test]
    fn synthetic_is_deterministic_and_well_formed() {
        let spec = StreamSpec::synthetic(15, 201, 3, 77);
        let a = gen_synthetic(&spec).unwrap();
        let b = gen_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        for (g, iv) in a.intervals.iter().enumerate() {
            assert_eq!(iv.interval_index, g + 1);
            assert_eq!(iv.len(), 201);
            assert_eq!(iv.samples.iter().filter(|s| s.y == Label::Pos).count(), 101);
            assert!(iv.samples.iter().all(|s| s.norm() <= spec.d + 1e-12 && s.dim() == 3));
        }
        let other = gen_synthetic(&StreamSpec::synthetic(15, 201, 3, 78)).unwrap();
        assert_ne!(a.intervals, other.intervals);
    }

    #[test]
    fn empirical_class_means_track_generators() {
        // 100 samples per class: the per-coordinate std of the mean is 0.1
        let spec = StreamSpec::synthetic(15, 200, 2, 2024);
        let raw = gen_synthetic_raw(&spec).unwrap();
        for (iv, m) in raw.intervals.iter().zip(&raw.means) {
            for y in [Label::Pos, Label::Neg] {
                let xs: Vec<&Sample> = iv.samples.iter().filter(|s| s.y == y).collect();
                for j in 0..2 {
                    let mean = xs.iter().map(|s| s.x[j]).sum::<f64>() / xs.len() as f64;
                    assert!((mean - m.for_label(y)[j]).abs() <= 3.0 / 100f64.sqrt());
                }
            }
        }
    }

    #[test]
    fn sampling_rejects_dim_mismatch() {
        let m = ClassMeans { pos: vec![0.0; 3], neg: vec![0.0; 3] };
        assert!(sample_from_means(&m, 5, 2, &mut SplitMix64::new(1)).is_err());
    }

    fn dataset(n: usize, dim: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let x = (0..dim).map(|j| ((i * 7 + j * 3) % 11) as f64 / 40.0).collect();
                Sample::new(x, if i % 3 == 0 { Label::Pos } else { Label::Neg })
            })
            .collect()
    }

    fn libsvm_spec(g: usize, b: usize, dim: usize, noise: f64) -> StreamSpec {
        StreamSpec {
            g,
            b,
            dim,
            mode: StreamMode::Libsvm,
            drift_std: 0.0,
            noise_std: noise,
            seed: 5,
            d: 1.0,
        }
    }

    #[test]
    fn noiseless_split_is_a_shuffled_partition() {
        let data = dataset(100, 2);
        let spec = libsvm_spec(4, 20, 2, 0.0);
        let out = make_multidist(&data, &spec).unwrap();
        assert_eq!(out.intervals.len(), 4);
        let seen: Vec<&Sample> = out.intervals.iter().flat_map(|iv| iv.samples.iter()).collect();
        assert_eq!(seen.len(), 80);
        for s in &seen {
            assert!(data.contains(s));
        }
        assert_eq!(out, make_multidist(&data, &spec).unwrap());
        assert_ne!(out.intervals[0].samples, data[..20].to_vec());
    }

    #[test]
    fn insufficient_samples_reports_requirement() {
        let err = make_multidist(&dataset(10, 2), &libsvm_spec(3, 4, 2, 0.1)).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { required: 12, available: 10 }));
        assert!(err.to_string().contains("12"));
    }

    #[test]
    fn noise_shift_matches_drawn_means() {
        // all-zero features: the noised points are the noise itself
        let n = 10_000;
        let data: Vec<Sample> = (0..n)
            .map(|i| Sample::new(vec![0.0, 0.0], if i % 2 == 0 { Label::Pos } else { Label::Neg }))
            .collect();
        let mut spec = libsvm_spec(1, n, 2, 0.1);
        spec.d = 10.0;
        let out = make_multidist(&data, &spec).unwrap();
        let shift = &out.means[0];
        for y in [Label::Pos, Label::Neg] {
            let xs: Vec<&Sample> = out.intervals[0].samples.iter().filter(|s| s.y == y).collect();
            for j in 0..2 {
                let est = xs.iter().map(|s| s.x[j]).sum::<f64>() / xs.len() as f64;
                // 4 standard errors of a 5000-sample mean with std 0.1
                assert!((est - shift.for_label(y)[j]).abs() < 4.0 * 0.1 / (xs.len() as f64).sqrt());
            }
        }
        assert_ne!(shift.pos, shift.neg);
    }
}
