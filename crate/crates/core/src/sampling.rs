//! Parameter sets on `[-1, 1]^J`: plain Halton points for training and Latin
//! hypercube samples for testing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transform::ParamPoint;

/// Digit reversal of `index` in `base`, a value in `[0, 1)`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    debug_assert!(base >= 2);
    let inv_base = 1.0 / base as f64;
    let mut scale = inv_base;
    let mut value = 0.0;
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale *= inv_base;
    }
    value
}

/// The first `count` primes.
pub fn first_primes(count: usize) -> Vec<u64> {
    let mut primes: Vec<u64> = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|p| *p * *p <= candidate)
            .all(|p| candidate % p != 0)
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SampleKind {
    Halton { skip: u64 },
    LatinHypercube { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub points: Vec<ParamPoint>,
    pub kind: SampleKind,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, ParamPoint::dim)
    }
}

/// Plain (unscrambled, unleaped) Halton points mapped to `[-1, 1]^dim`.
///
/// Point `i` uses index `skip + i + 1` so the origin of the sequence is never
/// emitted.
pub fn halton(count: usize, dim: usize, skip: u64) -> SampleSet {
    let bases = first_primes(dim);
    let points = (0..count)
        .map(|i| {
            let index = skip + i as u64 + 1;
            let coords = bases
                .iter()
                .map(|&b| 2.0 * radical_inverse(index, b) - 1.0)
                .collect();
            ParamPoint::new(coords).expect("radical inverse lies in [0, 1)")
        })
        .collect();
    SampleSet {
        points,
        kind: SampleKind::Halton { skip },
    }
}

/// Latin hypercube sample: in every dimension, each of the `count` equal
/// strata of `[-1, 1]` holds exactly one point.
pub fn latin_hypercube(count: usize, dim: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "Latin hypercube needs at least one point".into(),
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let mut coords = vec![vec![0.0; dim]; count];
    let width = 2.0 / count as f64;
    for d in 0..dim {
        let mut strata: Vec<usize> = (0..count).collect();
        rng.shuffle(&mut strata);
        for (point, stratum) in coords.iter_mut().zip(&strata) {
            let u = rng.next_f64();
            point[d] = (-1.0 + (*stratum as f64 + u) * width).clamp(-1.0, 1.0);
        }
    }
    let points = coords
        .into_iter()
        .map(ParamPoint::new)
        .collect::<Result<_>>()?;
    Ok(SampleSet {
        points,
        kind: SampleKind::LatinHypercube { seed },
    })
}

/// SplitMix64 (Steele, Lea & Flood 2014).
///
/// The state advances by the golden-ratio increment `0x9E3779B97F4A7C15`
/// and each output is the finalizer
/// `z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB; z ^= z >> 31`.
/// Floats use the top 53 bits; bounded integers use the high word of a
/// 64x64 multiply. Fisher-Yates shuffles walk from the last index down.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Integer in `0..bound`.
    pub fn below(&mut self, bound: u64) -> u64 {
        ((self.next_u64() as u128 * bound as u128) >> 64) as u64
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse_by_hand() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert_eq!(radical_inverse(0, 7), 0.0);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-16);
        // 5 = 12_3 -> 0.21_3 = 2/3 + 1/9
        assert!((radical_inverse(5, 3) - 7.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn primes() {
        assert_eq!(first_primes(8), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }

    #[test]
    fn halton_small_cases() {
        let set = halton(3, 1, 0);
        let xs: Vec<f64> = set.points.iter().map(|p| p.as_slice()[0]).collect();
        assert_eq!(xs, vec![0.0, -0.5, 0.5]);

        let set = halton(1, 2, 0);
        let p = set.points[0].as_slice();
        assert_eq!(p[0], 0.0);
        assert!((p[1] + 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn halton_skip_consistency() {
        let long = halton(40, 5, 0);
        let short = halton(30, 5, 10);
        assert_eq!(&long.points[10..], &short.points[..]);
    }

    #[test]
    fn lhs_single_point_and_strata() {
        let set = latin_hypercube(1, 3, 9).unwrap();
        assert_eq!(set.len(), 1);
        assert!(set.points[0].as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));

        let set = latin_hypercube(4, 1, 42).unwrap();
        let mut xs: Vec<f64> = set.points.iter().map(|p| p.as_slice()[0]).collect();
        xs.sort_by(f64::total_cmp);
        let bounds = [(-1.0, -0.5), (-0.5, 0.0), (0.0, 0.5), (0.5, 1.0)];
        for (x, (lo, hi)) in xs.iter().zip(bounds) {
            assert!(*x >= lo && *x <= hi, "{x} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn lhs_is_deterministic() {
        assert_eq!(
            latin_hypercube(16, 4, 7).unwrap(),
            latin_hypercube(16, 4, 7).unwrap()
        );
        assert_ne!(
            latin_hypercube(16, 4, 7).unwrap(),
            latin_hypercube(16, 4, 8).unwrap()
        );
        assert!(latin_hypercube(0, 4, 7).is_err());
    }

    #[test]
    fn splitmix_reference_outputs() {
        // published test vector for seed 1234567
        let mut rng = SplitMix64::new(1234567);
        let expected = [
            6457827717110365317u64,
            3203168211198807973,
            9817491932198370423,
            4593380528125082431,
            16408922859458223821,
        ];
        for e in expected {
            assert_eq!(rng.next_u64(), e);
        }
    }
}
