use serde::{Deserialize, Deserializer, Serialize, Serializer};
use trajsel_bbob::Sample;

use crate::OptimizerKind;

impl Serialize for OptimizerKind {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for OptimizerKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub function: usize,
    pub instance: usize,
    pub dim: usize,
    pub algorithm: OptimizerKind,
    pub seed: u64,
    /// Number of leading samples produced by the first-phase algorithm.
    pub phase_boundary: usize,
}

/// Ordered evaluations of one run plus the running minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    #[serde(flatten)]
    pub meta: RunMeta,
    #[serde(with = "pairs")]
    pub samples: Vec<Sample>,
    pub best_so_far: Vec<f64>,
}

impl RunTrace {
    pub fn new(meta: RunMeta, samples: Vec<Sample>) -> Self {
        let best_so_far = running_min(samples.iter().map(|s| s.y));
        Self {
            meta,
            samples,
            best_so_far,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Index of the first sample attaining the minimum.
    pub fn argmin(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.samples.iter().enumerate() {
            match best {
                Some(b) if self.samples[b].y <= s.y => {}
                _ => best = Some(i),
            }
        }
        best
    }

    /// Appends `tail` after this trace; the first-phase boundary becomes the
    /// current length.
    pub fn concat(&self, tail: &RunTrace) -> RunTrace {
        let mut samples = self.samples.clone();
        samples.extend(tail.samples.iter().cloned());
        let meta = RunMeta {
            algorithm: tail.meta.algorithm,
            seed: tail.meta.seed,
            phase_boundary: self.samples.len(),
            ..self.meta.clone()
        };
        RunTrace::new(meta, samples)
    }
}

pub(crate) fn running_min(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut best = f64::INFINITY;
    values
        .map(|y| {
            if y < best {
                best = y;
            }
            best
        })
        .collect()
}

mod pairs {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(samples: &[Sample], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(samples.len()))?;
        for sample in samples {
            seq.serialize_element(&(&sample.x, sample.y))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Sample>, D::Error> {
        let raw: Vec<(Vec<f64>, f64)> = Deserialize::deserialize(d)?;
        Ok(raw.into_iter().map(|(x, y)| Sample { x, y }).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(ys: &[f64]) -> RunTrace {
        let meta = RunMeta {
            function: 1,
            instance: 1,
            dim: 1,
            algorithm: OptimizerKind::De,
            seed: 3,
            phase_boundary: 0,
        };
        let samples = ys.iter().map(|&y| Sample { x: vec![y], y }).collect();
        RunTrace::new(meta, samples)
    }

    #[test]
    fn best_so_far_is_running_min() {
        let t = trace(&[3.0, 4.0, 1.0, 2.0, 0.5]);
        assert_eq!(t.best_so_far, vec![3.0, 3.0, 1.0, 1.0, 0.5]);
        assert_eq!(t.argmin(), Some(4));
    }

    #[test]
    fn argmin_prefers_first_tie() {
        assert_eq!(trace(&[2.0, 1.0, 1.0]).argmin(), Some(1));
        assert_eq!(trace(&[]).argmin(), None);
    }

    #[test]
    fn json_shape() {
        let t = trace(&[2.0, 1.0]);
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["algorithm"], "DE");
        assert_eq!(v["samples"][1][0][0], 1.0);
        assert_eq!(v["samples"][1][1], 1.0);
        assert_eq!(v["best_so_far"][1], 1.0);
        let back: RunTrace = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn concat_sets_phase_boundary() {
        let a = trace(&[3.0, 2.0]);
        let b = trace(&[2.5, 1.0]);
        let c = a.concat(&b);
        assert_eq!(c.meta.phase_boundary, 2);
        assert_eq!(c.best_so_far, vec![3.0, 2.0, 2.0, 1.0]);
    }
}
