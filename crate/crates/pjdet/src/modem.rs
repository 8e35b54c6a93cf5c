//! Square-QAM constellations, symbol sourcing, slicing, and error metrics.
//!
//! Constellations are unlabeled (no bit mapping): the simulations report
//! symbol error rate, not BER.

use num_complex::Complex64;
use rand::Rng;

use crate::numerics::SeededRng;
use crate::{Error, Result};

/// A square J-QAM alphabet scaled to a target mean symbol energy.
#[derive(Clone, Debug)]
pub struct Constellation {
    order: usize,
    side: usize,
    /// Half the minimum distance; grid levels are odd multiples of this.
    step: f64,
    points: Vec<Complex64>,
    sigma_x_sq: f64,
    d_min: f64,
    neighbor_avg: f64,
}

impl Constellation {
    /// Build square J-QAM with mean symbol energy `sigma_x_sq`.
    ///
    /// `j` must be a positive integer power of 4 so the grid is square with
    /// an even side. The closed forms
    /// `d_min = sqrt(6 sigma_x^2 / (J - 1))` and `K = 4 - 4 / sqrt(J)`
    /// (average nearest-neighbor count) hold for every such grid.
    pub fn make_qam(j: usize, sigma_x_sq: f64) -> Result<Self> {
        let power_of_four = j >= 4 && j.is_power_of_two() && j.trailing_zeros() % 2 == 0;
        if !power_of_four {
            return Err(Error::InvalidArgument(format!(
                "QAM order must be a positive integer power of 4, got {j}"
            )));
        }
        if !(sigma_x_sq > 0.0) || !sigma_x_sq.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "symbol energy must be positive and finite, got {sigma_x_sq}"
            )));
        }
        let side = (j as f64).sqrt().round() as usize;
        // Unit grid {..,-3,-1,1,3,..} has mean energy 2(J-1)/3 per symbol.
        let step = (3.0 * sigma_x_sq / (2.0 * (j as f64 - 1.0))).sqrt();
        let d_min = (6.0 * sigma_x_sq / (j as f64 - 1.0)).sqrt();
        let mut points = Vec::with_capacity(j);
        for a in 0..side {
            for b in 0..side {
                let re = step * (2.0 * a as f64 - (side as f64 - 1.0));
                let im = step * (2.0 * b as f64 - (side as f64 - 1.0));
                points.push(Complex64::new(re, im));
            }
        }
        Ok(Constellation {
            order: j,
            side,
            step,
            points,
            sigma_x_sq,
            d_min,
            neighbor_avg: 4.0 - 4.0 / (j as f64).sqrt(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> Complex64 {
        self.points[idx]
    }

    /// Mean symbol energy the grid was scaled to.
    pub fn sigma_x_sq(&self) -> f64 {
        self.sigma_x_sq
    }

    /// Minimum Euclidean distance between two constellation points.
    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    /// Average nearest-neighbor count over the alphabet.
    pub fn neighbor_avg(&self) -> f64 {
        self.neighbor_avg
    }

    /// Quantize one axis value to a level index in `0..side`.
    ///
    /// Exact midpoints round toward the smaller level index, so slicing is a
    /// deterministic pure function (the event has probability zero under
    /// continuous noise, but replays must agree).
    #[inline]
    fn axis_level(&self, v: f64) -> usize {
        let t = (v / self.step + (self.side as f64 - 1.0)) / 2.0;
        let l = (t - 0.5).ceil();
        if l < 0.0 {
            0
        } else if l >= self.side as f64 {
            self.side - 1
        } else {
            l as usize
        }
    }

    /// Nearest-point index for one complex sample (per-axis quantization).
    #[inline]
    pub fn slice_one(&self, v: Complex64) -> usize {
        self.axis_level(v.re) * self.side + self.axis_level(v.im)
    }
}

/// Decided symbols: alphabet indices plus the corresponding point values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolVector {
    pub indices: Vec<usize>,
}

impl SymbolVector {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Materialize the complex symbol values.
    pub fn values(&self, c: &Constellation) -> Vec<Complex64> {
        self.indices.iter().map(|&i| c.point(i)).collect()
    }
}

/// Draw `n` symbols uniformly and independently from the alphabet.
pub fn draw_symbols(c: &Constellation, n: usize, rng: &mut SeededRng) -> SymbolVector {
    let indices = (0..n).map(|_| rng.gen_range(0..c.order())).collect();
    SymbolVector { indices }
}

/// Symbol-by-symbol decision: nearest constellation point per entry.
///
/// For square QAM this is independent per-axis quantization, which agrees
/// with the exhaustive nearest-point search everywhere except exact
/// midpoints (resolved toward the smaller index).
pub fn slice(c: &Constellation, xhat: &[Complex64]) -> Result<SymbolVector> {
    if xhat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("slice input"));
    }
    Ok(SymbolVector {
        indices: xhat.iter().map(|&v| c.slice_one(v)).collect(),
    })
}

/// Exact index-wise mismatch counts: total and per stream.
pub fn count_symbol_errors(truth: &SymbolVector, decision: &SymbolVector) -> Result<(u64, Vec<u64>)> {
    if truth.len() != decision.len() {
        return Err(Error::Dimension(format!(
            "error count: lengths differ ({} vs {})",
            truth.len(),
            decision.len()
        )));
    }
    let per_stream: Vec<u64> = truth
        .indices
        .iter()
        .zip(&decision.indices)
        .map(|(a, b)| u64::from(a != b))
        .collect();
    Ok((per_stream.iter().sum(), per_stream))
}
