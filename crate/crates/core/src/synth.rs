//! Seeded synthetic gesture generator.
//!
//! Every class `c >= 1` displaces each landmark group (pose, left hand, right
//! hand) from the rest pose and moves it along a sum of two sinusoids; the
//! displacement, amplitudes, frequencies and phases are drawn from a
//! class-keyed stream of the spec seed. Class 0 is the
//! idle class: the rest pose with a faint sway. A sample is a `T`-frame slice
//! of its class's continuous motion starting at a random phase, with per-sample
//! amplitude/speed jitter, a small body offset and i.i.d. Gaussian noise.
//!
//! Randomness is derived per sample as `mix(seed, class, index)`, so the
//! dataset does not depend on generation order and is produced in parallel.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::landmark::{Dataset, GestureSample, Label, Vocabulary, WindowMatrix, DEFAULT_LABELS};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub samples_per_class: usize,
    pub frames: usize,
    pub landmarks: usize,
    pub noise_std: f64,
    pub seed: u64,
    /// Range of per-group sinusoid amplitudes for signing classes.
    pub amplitude: (f64, f64),
    /// Range of base frequencies, in cycles per window.
    pub frequency: (f64, f64),
    /// Range of the magnitude of each group's displacement from rest while
    /// signing; the sign of each axis is drawn per class.
    pub displacement: (f64, f64),
    /// Sway amplitude of the idle class.
    pub idle_amplitude: f64,
    /// Relative per-sample amplitude and speed jitter.
    pub jitter: f64,
    /// Half-width of the uniform per-sample body offset.
    pub body_offset: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: 8,
            samples_per_class: 60,
            frames: 30,
            landmarks: 129,
            noise_std: 0.01,
            seed: 7,
            amplitude: (0.03, 0.15),
            frequency: (0.5, 2.0),
            displacement: (0.03, 0.12),
            idle_amplitude: 0.004,
            jitter: 0.1,
            body_offset: 0.02,
        }
    }
}

/// Motion of one landmark group along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisMotion {
    /// Constant displacement from the rest position.
    pub shift: f64,
    pub amplitude: f64,
    /// Cycles per window.
    pub frequency: f64,
    pub phase: f64,
    /// Amplitude of the second harmonic relative to the first.
    pub harmonic: f64,
}

impl AxisMotion {
    fn at(&self, tau: f64, frames: f64, landmark_phase: f64) -> f64 {
        let theta = TAU * self.frequency * tau / frames + self.phase + landmark_phase;
        self.shift + self.amplitude * (theta.sin() + self.harmonic * (2.0 * theta).sin())
    }
}

/// Per-group `[x, y]` motion of one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMotion {
    pub groups: Vec<[AxisMotion; 2]>,
}

const GROUP_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const REST_STREAM: u64 = 0xd1b5_4a32_d192_ed03;

/// SplitMix64-style mixing of the seed with a class and sample index.
pub fn derive_seed(seed: u64, class: u64, index: u64) -> u64 {
    let mut z = seed
        ^ class.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ index.wrapping_mul(0xbf58_476d_1ce4_e5b9).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("synth spec: {m}")));
        if self.classes < 2 {
            return bad("at least two classes are required");
        }
        if self.frames == 0 || self.landmarks == 0 {
            return bad("frames and landmarks must be positive");
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad("noise standard deviation must be >= 0");
        }
        if !(self.amplitude.0 >= 0.0 && self.amplitude.0 <= self.amplitude.1) {
            return bad("amplitude range must be ordered and non-negative");
        }
        if !(self.displacement.0 >= 0.0 && self.displacement.0 <= self.displacement.1) {
            return bad("displacement range must be ordered and non-negative");
        }
        if !(self.frequency.0 > 0.0 && self.frequency.0 <= self.frequency.1) {
            return bad("frequency range must be ordered and positive");
        }
        if !(0.0..1.0).contains(&self.jitter) || self.body_offset < 0.0 || self.idle_amplitude < 0.0 {
            return bad("jitter must lie in [0, 1); offsets must be >= 0");
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        2 * self.landmarks
    }

    pub fn vocabulary(&self) -> Vocabulary {
        if self.classes == DEFAULT_LABELS.len() {
            return Vocabulary::default();
        }
        let names: Vec<String> = std::iter::once("not_signing".to_owned())
            .chain((1..self.classes).map(|c| format!("sign_{c}")))
            .collect();
        Vocabulary::from_names(&names, "not_signing").expect("generated names are valid")
    }

    /// Landmark ranges of the pose and hand groups: 21 landmarks per hand
    /// when there is room, otherwise three near-equal groups.
    pub fn groups(&self) -> Vec<std::ops::Range<usize>> {
        let f = self.landmarks;
        let sizes = if f >= 63 {
            vec![f - 42, 21, 21]
        } else if f >= 3 {
            vec![f / 3 + f % 3, f / 3, f / 3]
        } else {
            vec![f]
        };
        let mut start = 0;
        sizes
            .into_iter()
            .map(|n| {
                let r = start..start + n;
                start += n;
                r
            })
            .collect()
    }

    pub fn rest_pose(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, REST_STREAM, 0));
        (0..self.dim()).map(|_| rng.random_range(0.2..0.8)).collect()
    }

    pub fn class_motion(&self, class: usize) -> ClassMotion {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, class as u64, GROUP_STREAM));
        let groups = self
            .groups()
            .iter()
            .map(|_| {
                let mut axis = || {
                    let amplitude = if class == 0 {
                        self.idle_amplitude
                    } else {
                        rng.random_range(self.amplitude.0..=self.amplitude.1)
                    };
                    let shift = if class == 0 {
                        0.0
                    } else {
                        let m = rng.random_range(self.displacement.0..=self.displacement.1);
                        if rng.random_bool(0.5) { m } else { -m }
                    };
                    AxisMotion {
                        shift,
                        amplitude,
                        frequency: if class == 0 {
                            self.frequency.0 * 0.25
                        } else {
                            rng.random_range(self.frequency.0..=self.frequency.1)
                        },
                        phase: rng.random_range(0.0..TAU),
                        harmonic: rng.random_range(0.0..0.5),
                    }
                };
                [axis(), axis()]
            })
            .collect();
        ClassMotion { groups }
    }

    /// Noise-free coordinates of `class` at continuous time `tau` (frames).
    fn clean_frame(&self, rest: &[f64], motion: &ClassMotion, tau: f64, scale: f64, offset: [f64; 2]) -> Vec<f64> {
        let frames = self.frames as f64;
        let mut out = rest.to_vec();
        for (g, range) in self.groups().into_iter().enumerate() {
            for (k, l) in range.enumerate() {
                let landmark_phase = 0.15 * k as f64;
                for axis in 0..2 {
                    out[2 * l + axis] += offset[axis] + scale * motion.groups[g][axis].at(tau, frames, landmark_phase);
                }
            }
        }
        out
    }

    /// Mean (noise-free, unjittered, zero-phase) trajectory of a class.
    pub fn mean_trajectory(&self, class: usize) -> Vec<f64> {
        let rest = self.rest_pose();
        let motion = self.class_motion(class);
        (0..self.frames)
            .flat_map(|t| self.clean_frame(&rest, &motion, t as f64, 1.0, [0.0, 0.0]))
            .collect()
    }

    /// Smallest root-mean-square distance between the mean trajectories of
    /// two distinct classes.
    pub fn separation_margin(&self) -> f64 {
        let means: Vec<Vec<f64>> = (0..self.classes).map(|c| self.mean_trajectory(c)).collect();
        let mut min = f64::INFINITY;
        for a in 0..self.classes {
            for b in a + 1..self.classes {
                let sq: f64 = means[a].iter().zip(&means[b]).map(|(x, y)| (x - y) * (x - y)).sum();
                min = min.min((sq / means[a].len() as f64).sqrt());
            }
        }
        min
    }

    /// `count` consecutive frames of `class` drawn with the randomness of
    /// `(class, index)`; the first `self.frames` of them are that sample.
    pub fn gesture_frames(&self, class: usize, index: u64, count: usize) -> Vec<Vec<f64>> {
        let rest = self.rest_pose();
        let motion = self.class_motion(class);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, class as u64, index));
        let scale = 1.0 + rng.random_range(-self.jitter..=self.jitter);
        let speed = 1.0 + rng.random_range(-self.jitter..=self.jitter);
        let start = rng.random_range(0.0..self.frames as f64 * 4.0);
        let offset = if self.body_offset > 0.0 {
            [
                rng.random_range(-self.body_offset..=self.body_offset),
                rng.random_range(-self.body_offset..=self.body_offset),
            ]
        } else {
            [0.0, 0.0]
        };
        let noise = Normal::new(0.0, self.noise_std).expect("validated noise std");
        (0..count)
            .map(|t| {
                let mut frame = self.clean_frame(&rest, &motion, start + t as f64 * speed, scale, offset);
                if self.noise_std > 0.0 {
                    for v in &mut frame {
                        *v += noise.sample(&mut rng);
                    }
                }
                frame
            })
            .collect()
    }

    pub fn sample(&self, class: usize, index: u64) -> GestureSample {
        let rows = self.gesture_frames(class, index, self.frames);
        GestureSample {
            label: self.vocabulary().label(class).clone(),
            matrix: WindowMatrix::from_rows(&rows).expect("synthetic frames are finite and rectangular"),
        }
    }
}

/// Generates `classes * samples_per_class` samples, grouped by class. Fails
/// if the constructed classes are not separated by more than `3 * noise_std`.
pub fn generate_dataset(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let margin = spec.separation_margin();
    if margin.is_nan() || margin <= 3.0 * spec.noise_std {
        return Err(Error::InvalidArgument(format!(
            "synth spec: class separation {margin:.5} does not exceed 3 x noise std {:.5}",
            spec.noise_std
        )));
    }
    let vocabulary = spec.vocabulary();
    let jobs: Vec<(usize, u64)> = (0..spec.classes)
        .flat_map(|c| (0..spec.samples_per_class as u64).map(move |i| (c, i)))
        .collect();
    let samples: Vec<GestureSample> = jobs.par_iter().map(|&(c, i)| spec.sample(c, i)).collect();
    let mut dataset = Dataset::new(vocabulary);
    for s in samples {
        dataset.push(s)?;
    }
    Ok(dataset)
}

/// Label of class `c` under the spec's vocabulary.
pub fn class_label(spec: &SynthSpec, class: usize) -> Label {
    spec.vocabulary().label(class).clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthSpec {
        SynthSpec {
            samples_per_class: 3,
            frames: 10,
            landmarks: 12,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn default_shape_and_counts() {
        let ds = generate_dataset(&SynthSpec::default()).unwrap();
        assert_eq!(ds.len(), 480);
        assert_eq!(ds.counts_per_label(), vec![60; 8]);
        assert_eq!(ds.shape(), Some((30, 258)));
    }

    #[test]
    fn same_seed_same_dataset() {
        let a = generate_dataset(&small()).unwrap();
        let b = generate_dataset(&small()).unwrap();
        assert_eq!(a.samples(), b.samples());
        let c = generate_dataset(&SynthSpec { seed: 8, ..small() }).unwrap();
        assert_ne!(a.samples(), c.samples());
    }

    #[test]
    fn default_margin_exceeds_three_sigma() {
        let spec = SynthSpec::default();
        assert!(spec.separation_margin() > 3.0 * spec.noise_std);
    }

    #[test]
    fn margin_violation_is_rejected() {
        let spec = SynthSpec {
            noise_std: 1.0,
            ..small()
        };
        assert!(generate_dataset(&spec).is_err());
    }

    #[test]
    fn groups_cover_all_landmarks() {
        for f in [1, 2, 3, 10, 62, 63, 75, 129] {
            let spec = SynthSpec { landmarks: f, ..SynthSpec::default() };
            let groups = spec.groups();
            assert_eq!(groups.first().unwrap().start, 0);
            assert_eq!(groups.last().unwrap().end, f);
            assert!(groups.windows(2).all(|w| w[0].end == w[1].start));
        }
        assert_eq!(SynthSpec::default().groups(), vec![0..87, 87..108, 108..129]);
    }

    #[test]
    fn sample_is_prefix_of_stream() {
        let spec = small();
        let s = spec.sample(3, 5);
        let stream = spec.gesture_frames(3, 5, 25);
        for (t, frame) in stream.iter().take(spec.frames).enumerate() {
            assert_eq!(&s.matrix.row(t).to_vec(), frame);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(SynthSpec { classes: 1, ..small() }.validate().is_err());
        assert!(SynthSpec { noise_std: -0.1, ..small() }.validate().is_err());
        assert!(SynthSpec { frames: 0, ..small() }.validate().is_err());
    }

    #[test]
    fn non_default_class_count_names() {
        let v = SynthSpec { classes: 3, ..small() }.vocabulary();
        assert_eq!(v.labels().iter().map(|l| l.as_str()).collect::<Vec<_>>(), ["not_signing", "sign_1", "sign_2"]);
    }
}
