//! Orthogonal matching pursuit over an effective dictionary, the resulting
//! angle spectrum and an exhaustive l0 oracle for testing.
//!
//! Each iteration picks the atom with the largest normalized correlation
//! `|<r, psi_j>| / ||psi_j||` among atoms not yet selected (lowest index wins
//! ties), refits all selected coefficients by least squares and updates the
//! residual.

use num_complex::Complex64;

use crate::array::{next_combination, AngleGrid};
use crate::error::{DoaError, Result};
use crate::linalg::{lstsq, CMatrix, CVector};
use crate::sensing::{EffectiveDictionary, MeasuredVector};
use crate::spectrum::AngleSpectrum;

/// Relative singular-value cutoff for the per-iteration least-squares fit.
const LSTSQ_RCOND: f64 = 1e-12;

/// Default relative residual tolerance for early termination.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Enumeration budget for [`l0_oracle`].
pub const L0_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    /// Selected atom indices in selection order.
    pub support: Vec<usize>,
    /// Least-squares coefficients aligned with `support`.
    pub coefficients: Vec<Complex64>,
    /// `||r_c||` for c = 0 (the measurement itself) through the last iteration.
    pub residual_norms: Vec<f64>,
    pub iterations_run: usize,
    pub residual: CVector,
}

impl OmpResult {
    pub fn sorted_support(&self) -> Vec<usize> {
        let mut s = self.support.clone();
        s.sort_unstable();
        s
    }
}

/// Recover an `sparsity`-term representation of `y` over `psi`.
///
/// Stops after `sparsity` iterations or once `||r|| <= tol * ||y||`. With
/// `tol = 0` it always runs the full count unless the residual vanishes.
pub fn omp_recover(
    psi: &EffectiveDictionary,
    y: &MeasuredVector,
    sparsity: usize,
    tol: f64,
) -> Result<OmpResult> {
    if sparsity == 0 {
        return Err(DoaError::Domain("sparsity must be at least 1".into()));
    }
    if sparsity > psi.rows() {
        return Err(DoaError::Infeasible(format!(
            "sparsity {sparsity} exceeds {} measurements",
            psi.rows()
        )));
    }
    if sparsity > psi.n_atoms() {
        return Err(DoaError::Infeasible(format!(
            "sparsity {sparsity} exceeds {} atoms",
            psi.n_atoms()
        )));
    }
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(DoaError::Domain(format!(
            "tolerance must be nonnegative, got {tol}"
        )));
    }
    let y = y.data();
    if y.len() != psi.rows() {
        return Err(DoaError::Dimension(format!(
            "measurement has {} entries, dictionary has {} rows",
            y.len(),
            psi.rows()
        )));
    }

    let a = psi.matrix();
    let norms = psi.column_norms();
    let y_norm = y.norm();
    let mut residual = y.clone();
    let mut residual_norms = vec![y_norm];
    let mut support: Vec<usize> = Vec::with_capacity(sparsity);
    let mut selected = vec![false; psi.n_atoms()];
    let mut coefficients = CVector::zeros(0);

    while support.len() < sparsity && residual_norms[residual_norms.len() - 1] > tol * y_norm {
        let mut best: Option<(usize, f64)> = None;
        for (j, col) in a.column_iter().enumerate() {
            if selected[j] {
                continue;
            }
            let corr = col.dotc(&residual).norm() / norms[j];
            if best.is_none_or(|(_, b)| corr > b) {
                best = Some((j, corr));
            }
        }
        let Some((lambda, _)) = best else { break };
        selected[lambda] = true;
        support.push(lambda);

        let chosen = a.select_columns(support.iter());
        coefficients = lstsq(&chosen, y, LSTSQ_RCOND)?;
        residual = y - &chosen * &coefficients;
        residual_norms.push(residual.norm());
    }

    Ok(OmpResult {
        iterations_run: support.len(),
        coefficients: coefficients.iter().copied().collect(),
        support,
        residual_norms,
        residual,
    })
}

/// `|s_j|^2` on the support, zero elsewhere.
pub fn angle_spectrum(result: &OmpResult, grid: &AngleGrid) -> Result<AngleSpectrum> {
    let mut power = vec![0.0; grid.len()];
    for (&j, c) in result.support.iter().zip(&result.coefficients) {
        if j >= grid.len() {
            return Err(DoaError::Dimension(format!(
                "support index {j} outside a {}-point grid",
                grid.len()
            )));
        }
        power[j] = c.norm_sqr();
    }
    AngleSpectrum::new(grid.clone(), power)
}

/// DOAs picked from a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaEstimate {
    /// Ascending angles in degrees.
    pub angles_deg: Vec<f64>,
    /// Grid indices matching `angles_deg`.
    pub indices: Vec<usize>,
    /// Fewer candidates than requested were available.
    pub shortfall: bool,
}

/// Angles of the `m_sources` strongest nonzero bins, ascending. Equal powers
/// resolve toward the lower grid index.
pub fn estimate_doas(spectrum: &AngleSpectrum, m_sources: usize) -> DoaEstimate {
    let mut indices: Vec<usize> = spectrum
        .ranked_bins()
        .into_iter()
        .filter(|&j| spectrum.power()[j] > 0.0)
        .take(m_sources)
        .collect();
    let shortfall = indices.len() < m_sources;
    indices.sort_unstable();
    DoaEstimate {
        angles_deg: indices.iter().map(|&j| spectrum.grid().angle(j)).collect(),
        indices,
        shortfall,
    }
}

/// `n choose k`, saturating at `u64::MAX`.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Exhaustive search for the support of size `sparsity` with the smallest
/// least-squares residual. Earlier supports in lexicographic order win
/// ties (residuals equal within `1e-10 ||y||`).
pub fn l0_oracle(
    psi: &EffectiveDictionary,
    y: &MeasuredVector,
    sparsity: usize,
) -> Result<Vec<usize>> {
    let n = psi.n_atoms();
    if sparsity == 0 || sparsity > n {
        return Err(DoaError::Domain(format!(
            "sparsity must lie in 1..={n}, got {sparsity}"
        )));
    }
    let count = binomial(n, sparsity);
    if count > L0_BUDGET {
        return Err(DoaError::Refused(format!(
            "{count} candidate supports exceed the budget of {L0_BUDGET}"
        )));
    }
    let y = y.data();
    if y.len() != psi.rows() {
        return Err(DoaError::Dimension(
            "measurement length does not match dictionary".into(),
        ));
    }
    let slack = 1e-10 * y.norm();
    let mut subset: Vec<usize> = (0..sparsity).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let cols: CMatrix = psi.matrix().select_columns(subset.iter());
        let s = lstsq(&cols, y, LSTSQ_RCOND)?;
        let r = (y - &cols * s).norm();
        if best.as_ref().is_none_or(|(b, _)| r < b - slack) {
            best = Some((r, subset.clone()));
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    Ok(best.map(|(_, s)| s).unwrap_or_default())
}
