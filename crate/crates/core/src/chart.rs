//! Single coordinate charts and deterministic point sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Distance kept from every finite end of a coordinate interval.
pub const BOUNDARY_MARGIN: f64 = 1e-3;
/// Half-width of the box used in place of an unbounded direction.
pub const TRUNCATION: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChartError {
    #[error("chart needs at least one coordinate")]
    Empty,
    #[error("duplicate coordinate name `{0}`")]
    DuplicateName(String),
    #[error("coordinate `{name}` has inverted bounds ({lo}, {hi})")]
    InvertedBounds { name: String, lo: f64, hi: f64 },
    #[error("bounds given for unknown coordinate `{0}`")]
    UnknownCoordinate(String),
    #[error("coordinate `{name}` has no feasible sampling interval inside ({lo}, {hi})")]
    EmptyBox { name: String, lo: f64, hi: f64 },
    #[error("point count must be at least 1")]
    NoPoints,
}

/// Open interval `(lo, hi)`; infinite ends allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    /// Closed range actually sampled for this coordinate.
    pub fn sampling_range(&self) -> (f64, f64) {
        let eps = BOUNDARY_MARGIN;
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (self.lo + eps, self.hi - eps),
            (true, false) => (self.lo + eps, self.lo + TRUNCATION),
            (false, true) => (self.hi - TRUNCATION, self.hi - eps),
            (false, false) => (-TRUNCATION, TRUNCATION),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    bounds: Vec<Interval>,
}

impl Chart {
    /// Coordinates not listed in `bounds` range over the whole real line.
    pub fn new<S: AsRef<str>>(
        names: &[S],
        bounds: &[(&str, Interval)],
    ) -> Result<Chart, ChartError> {
        if names.is_empty() {
            return Err(ChartError::Empty);
        }
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(ChartError::DuplicateName(n.clone()));
            }
        }
        let mut intervals = vec![Interval::REAL_LINE; names.len()];
        for (name, iv) in bounds {
            let i = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| ChartError::UnknownCoordinate(name.to_string()))?;
            if iv.lo.is_nan() || iv.hi.is_nan() || iv.lo >= iv.hi {
                return Err(ChartError::InvertedBounds {
                    name: name.to_string(),
                    lo: iv.lo,
                    hi: iv.hi,
                });
            }
            intervals[i] = *iv;
        }
        Ok(Chart {
            names,
            bounds: intervals,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name_refs(&self) -> Vec<&str> {
        self.names.iter().map(String::as_str).collect()
    }

    pub fn bounds(&self) -> &[Interval] {
        &self.bounds
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn ranges(&self) -> Result<Vec<(f64, f64)>, ChartError> {
        self.bounds
            .iter()
            .zip(&self.names)
            .map(|(iv, name)| {
                let (lo, hi) = iv.sampling_range();
                if lo > hi {
                    Err(ChartError::EmptyBox {
                        name: name.clone(),
                        lo: iv.lo,
                        hi: iv.hi,
                    })
                } else {
                    Ok((lo, hi))
                }
            })
            .collect()
    }

    /// True when `point` lies inside the sampling box (margins included).
    pub fn contains_with_margin<T: Scalar>(&self, point: &Point<T>) -> bool {
        let Ok(ranges) = self.ranges() else {
            return false;
        };
        point.len() == self.dim()
            && point.coords().iter().zip(ranges).all(|(v, (lo, hi))| {
                let v = v.to_f64_lossy();
                v >= lo && v <= hi
            })
    }

    pub fn sample_points<T: Scalar>(
        &self,
        strategy: Sampling,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Point<T>>, ChartError> {
        if count == 0 {
            return Err(ChartError::NoPoints);
        }
        let ranges = self.ranges()?;
        Ok(match strategy {
            Sampling::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        Point::new(
                            ranges
                                .iter()
                                .map(|&(lo, hi)| {
                                    T::lit(if lo == hi {
                                        lo
                                    } else {
                                        rng.random_range(lo..=hi)
                                    })
                                })
                                .collect(),
                        )
                    })
                    .collect()
            }
            Sampling::Grid => {
                let per_axis = grid_side(count, self.dim());
                let axes: Vec<Vec<f64>> = ranges
                    .iter()
                    .map(|&(lo, hi)| {
                        if per_axis == 1 {
                            vec![0.5 * (lo + hi)]
                        } else {
                            (0..per_axis)
                                .map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64)
                                .collect()
                        }
                    })
                    .collect();
                let total = per_axis.pow(self.dim() as u32);
                (0..total)
                    .map(|mut flat| {
                        let mut coords = vec![T::zero(); self.dim()];
                        for axis in (0..self.dim()).rev() {
                            coords[axis] = T::lit(axes[axis][flat % per_axis]);
                            flat /= per_axis;
                        }
                        Point::new(coords)
                    })
                    .collect()
            }
        })
    }
}

/// Points per axis for a grid of roughly `count` points in `dim` dimensions.
fn grid_side(count: usize, dim: usize) -> usize {
    let mut k = (count as f64).powf(1.0 / dim as f64).round().max(1.0) as usize;
    while k > 1 && k.pow(dim as u32) > count.max(1) * 2 {
        k -= 1;
    }
    k
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    #[default]
    Uniform,
    Grid,
}

/// Coordinates of a point in a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<T> {
    coords: Vec<T>,
}

impl<T: Scalar> Point<T> {
    pub fn new(coords: Vec<T>) -> Self {
        Point { coords }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|v| v.to_f64_lossy()).collect()
    }
}
