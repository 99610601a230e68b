//! Clamped B-spline bases on the unit interval.
//!
//! A degree-`r` basis of size `k` lives on `k + r + 1` nondecreasing knots
//! `xi[0] <= ... <= xi[k + r]` with the first `r + 1` pinned to 0 and the
//! last `r + 1` pinned to 1. Basis functions follow the Cox-de Boor
//! recursion, with the convention that any term whose denominator vanishes
//! is dropped. Degree-0 functions are indicators of the half-open spans
//! `[xi[j - 1], xi[j])`; additionally the last positive-width span owns the
//! right endpoint, so the basis covers the closed interval and sums to 1
//! everywhere on [0, 1].
//!
//! Each basis function has the analytic integral
//! `(xi[j + r] - xi[j - 1]) / (r + 1)` (indices 1-based as in the public
//! API), which normalizes it into a probability density. Zero-width supports
//! give degenerate densities that evaluate to 0; mixtures over the basis
//! reassign any weight carried by degenerate components proportionally to
//! the live ones, so a weight vector summing to 1 always yields a density.

use crate::{Error, Result};

/// Integrals at or below this threshold mark a basis spline as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Knot differences must reach this close to 1 before renormalization.
const DELTA_SUM_TOL: f64 = 1e-9;

/// Nondecreasing clamped knot sequence on [0, 1] for a degree-`r` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotSequence {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotSequence {
    /// Validates and wraps an explicit knot vector of length `k + r + 1`.
    ///
    /// Requires `k >= r + 1`, nondecreasing knots, the leading `r + 1`
    /// exactly 0, and the trailing `r + 1` exactly 1.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let len = knots.len();
        // k >= r + 1 basis functions require k + r + 1 >= 2 (r + 1) knots.
        if len < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "need at least {} knots for degree {}, got {}",
                2 * (degree + 1),
                degree,
                len
            )));
        }
        if knots.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidKnots("non-finite knot".into()));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots("knots must be nondecreasing".into()));
        }
        if knots[..=degree].iter().any(|&x| x != 0.0) {
            return Err(Error::InvalidKnots(format!(
                "first {} knots must equal 0",
                degree + 1
            )));
        }
        if knots[len - degree - 1..].iter().any(|&x| x != 1.0) {
            return Err(Error::InvalidKnots(format!(
                "last {} knots must equal 1",
                degree + 1
            )));
        }
        Ok(Self { degree, knots })
    }

    /// Builds the clamped sequence whose internal knots are the cumulative
    /// sums of `deltas`.
    ///
    /// `deltas` holds the `k - r` span widths; they must be nonnegative and
    /// are renormalized to sum to exactly 1, so the last internal knot is 1
    /// bit-exactly even when stick-breaking mass leaked below 1.
    pub fn from_deltas(deltas: &[f64], degree: usize) -> Result<Self> {
        if deltas.is_empty() {
            return Err(Error::InvalidKnots("need at least one knot difference".into()));
        }
        if deltas.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidKnots("knot differences must be nonnegative".into()));
        }
        let total: f64 = deltas.iter().sum();
        if total < DELTA_SUM_TOL {
            return Err(Error::InvalidKnots(format!(
                "knot differences sum to {total}, expected about 1"
            )));
        }
        let k = deltas.len() + degree;
        let mut knots = vec![0.0; k + degree + 1];
        let mut acc = 0.0;
        for (m, &d) in deltas.iter().enumerate().take(deltas.len() - 1) {
            acc += d / total;
            knots[degree + 1 + m] = acc.min(1.0);
        }
        for x in knots[k..].iter_mut() {
            *x = 1.0;
        }
        Ok(Self { degree, knots })
    }

    /// Spline degree `r`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions `k`.
    pub fn basis_size(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Full knot vector `xi[0] ..= xi[k + r]`.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.basis_size() {
            return Err(Error::IndexOutOfRange {
                index: j,
                size: self.basis_size(),
            });
        }
        Ok(())
    }

    fn check_omega(omega: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::OutOfUnitInterval {
                name: "omega",
                value: omega,
            });
        }
        Ok(())
    }

    /// Evaluates the `j`-th basis function (numbered from 1) at `omega` via
    /// the Cox-de Boor recursion.
    pub fn basis_value(&self, omega: f64, j: usize) -> Result<f64> {
        self.check_index(j)?;
        Self::check_omega(omega)?;
        Ok(self.recurse(omega, j - 1, self.degree))
    }

    /// Two-term recursion on 0-based basis slots; `d` is the current degree.
    fn recurse(&self, omega: f64, slot: usize, d: usize) -> f64 {
        let xi = &self.knots;
        if d == 0 {
            let lo = xi[slot];
            let hi = xi[slot + 1];
            let inside = lo <= omega && omega < hi;
            let right_closure = omega == 1.0 && lo < hi && hi == 1.0;
            return if inside || right_closure { 1.0 } else { 0.0 };
        }
        let mut value = 0.0;
        let den_l = xi[slot + d] - xi[slot];
        if den_l > 0.0 {
            value += (omega - xi[slot]) / den_l * self.recurse(omega, slot, d - 1);
        }
        let den_r = xi[slot + d + 1] - xi[slot + 1];
        if den_r > 0.0 {
            value += (xi[slot + d + 1] - omega) / den_r * self.recurse(omega, slot + 1, d - 1);
        }
        value
    }

    /// Analytic integral of the `j`-th basis function,
    /// `(xi[j + r] - xi[j - 1]) / (r + 1)`.
    pub fn basis_integral(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        Ok((self.knots[j + self.degree] - self.knots[j - 1]) / (self.degree as f64 + 1.0))
    }

    /// 0-based index `s` of the span with `xi[s] <= omega < xi[s + 1]`; at
    /// `omega = 1` the last positive-width span.
    pub fn span_index(&self, omega: f64) -> usize {
        let r = self.degree;
        let k = self.basis_size();
        if omega >= 1.0 {
            let mut s = k - 1;
            while self.knots[s] >= self.knots[s + 1] {
                s -= 1;
            }
            return s;
        }
        // Rightmost s in [r, k - 1] with knots[s] <= omega.
        let mut lo = r;
        let mut hi = k - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if self.knots[mid] <= omega {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    /// Values of the `r + 1` basis functions that can be nonzero at `omega`,
    /// in slot order `s - r ..= s` for the returned span `s`.
    ///
    /// Triangular form of the recursion restricted to one span; all
    /// denominators contain the positive-width span `[xi[s], xi[s + 1]]`, so
    /// no zero-denominator guard is needed. Values beyond the returned
    /// window are exactly zero.
    pub fn active_row(&self, omega: f64, out: &mut Vec<f64>) -> Result<usize> {
        Self::check_omega(omega)?;
        let r = self.degree;
        let s = self.span_index(omega);
        out.clear();
        out.resize(r + 1, 0.0);
        out[0] = 1.0;
        let mut left = [0.0; MAX_DEGREE + 1];
        let mut right = [0.0; MAX_DEGREE + 1];
        for d in 1..=r {
            left[d] = omega - self.knots[s + 1 - d];
            right[d] = self.knots[s + d] - omega;
            let mut saved = 0.0;
            for i in 0..d {
                let tmp = out[i] / (right[i + 1] + left[d - i]);
                out[i] = saved + right[i + 1] * tmp;
                saved = left[d - i] * tmp;
            }
            out[d] = saved;
        }
        Ok(s)
    }
}

/// Degrees supported by the stack-allocated recursion buffers.
pub const MAX_DEGREE: usize = 16;

/// B-spline basis with each function normalized into a density on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct BsplineDensityBasis {
    knot_sequence: KnotSequence,
    normalizers: Vec<f64>,
}

impl BsplineDensityBasis {
    /// Computes the analytic integral of every basis function.
    pub fn new(knot_sequence: KnotSequence) -> Result<Self> {
        if knot_sequence.degree() > MAX_DEGREE {
            return Err(Error::InvalidKnots(format!(
                "degree {} exceeds supported maximum {}",
                knot_sequence.degree(),
                MAX_DEGREE
            )));
        }
        let normalizers = (1..=knot_sequence.basis_size())
            .map(|j| knot_sequence.basis_integral(j))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            knot_sequence,
            normalizers,
        })
    }

    /// The underlying knot sequence.
    pub fn knot_sequence(&self) -> &KnotSequence {
        &self.knot_sequence
    }

    /// Analytic integrals of the basis functions (0 marks degeneracy).
    pub fn normalizers(&self) -> &[f64] {
        &self.normalizers
    }

    /// Whether the `j`-th basis function (from 1) has zero-width support.
    pub fn is_degenerate(&self, j: usize) -> bool {
        self.normalizers[j - 1] <= DEGENERACY_TOL
    }

    /// Density value of the `j`-th basis function (from 1) at `omega`;
    /// degenerate components evaluate to 0.
    pub fn density_value(&self, omega: f64, j: usize) -> Result<f64> {
        let value = self.knot_sequence.basis_value(omega, j)?;
        let norm = self.normalizers[j - 1];
        if norm <= DEGENERACY_TOL {
            return Ok(0.0);
        }
        Ok(value / norm)
    }

    /// Density values of the active window at `omega` (slots
    /// `s - r ..= s`, 0-based); returns the span `s`.
    pub fn active_densities(&self, omega: f64, out: &mut Vec<f64>) -> Result<usize> {
        let s = self.knot_sequence.active_row(omega, out)?;
        let r = self.knot_sequence.degree();
        for (i, v) in out.iter_mut().enumerate() {
            let norm = self.normalizers[s - r + i];
            *v = if norm <= DEGENERACY_TOL { 0.0 } else { *v / norm };
        }
        Ok(s)
    }

    /// Reassigns weight sitting on degenerate components proportionally to
    /// the live ones (uniformly when all live weights are zero), preserving
    /// the total. Weights must be nonnegative.
    pub fn effective_weights(&self, weights: &[f64]) -> Result<Vec<f64>> {
        let k = self.knot_sequence.basis_size();
        if weights.len() != k {
            return Err(Error::InvalidKnots(format!(
                "weight count {} does not match basis size {k}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidKnots("weights must be nonnegative".into()));
        }
        let mut out = weights.to_vec();
        let mut dead_mass = 0.0;
        let mut live_mass = 0.0;
        let mut live_count = 0usize;
        for (j, w) in out.iter_mut().enumerate() {
            if self.normalizers[j] <= DEGENERACY_TOL {
                dead_mass += *w;
                *w = 0.0;
            } else {
                live_mass += *w;
                live_count += 1;
            }
        }
        if live_count == 0 {
            return Err(Error::InvalidKnots(
                "all basis splines degenerate; clamped sequences cannot reach this".into(),
            ));
        }
        if dead_mass > 0.0 {
            if live_mass > 0.0 {
                let scale = 1.0 + dead_mass / live_mass;
                for (j, w) in out.iter_mut().enumerate() {
                    if self.normalizers[j] > DEGENERACY_TOL {
                        *w *= scale;
                    }
                }
            } else {
                let share = dead_mass / live_count as f64;
                for (j, w) in out.iter_mut().enumerate() {
                    if self.normalizers[j] > DEGENERACY_TOL {
                        *w = share;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Mixture density `sum_j w_j * b_j(omega)` after redistributing weight
    /// away from degenerate components.
    pub fn mixture_value(&self, omega: f64, weights: &[f64]) -> Result<f64> {
        let eff = self.effective_weights(weights)?;
        let mut row = Vec::new();
        let s = self.active_densities(omega, &mut row)?;
        let r = self.knot_sequence.degree();
        Ok(row
            .iter()
            .enumerate()
            .map(|(i, b)| eff[s - r + i] * b)
            .sum())
    }
}
