//! Covariance-based baselines: MUSIC, Capon (MVDR), the propagator method
//! and least-squares ESPRIT, plus a local-maximum peak picker for their
//! spectra.

use num_complex::Complex64;

use crate::array::{ArrayGeometry, Dictionary};
use crate::error::{DoaError, Result};
use crate::linalg::{eigenvalues, hermitian_defect, hermitian_eigen, lstsq_matrix, CMatrix};
use crate::spectrum::AngleSpectrum;
use crate::synth::SnapshotMatrix;

/// Floor on spectrum denominators, relative to `||a||^2`, so exact nulls
/// give large but finite power.
const DENOMINATOR_FLOOR: f64 = 1e-14;

/// Eigenvalue ratio below which a covariance counts as singular.
const SINGULAR_RATIO: f64 = 1e-12;

/// Largest condition number accepted for the propagator's `G^H G` block.
const PROPAGATOR_MAX_CONDITION: f64 = 1e12;

/// Hermitian sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    matrix: CMatrix,
    snapshot_count: usize,
}

impl CovarianceMatrix {
    /// Wrap a Hermitian matrix (checked to `1e-12` relative); the stored
    /// matrix is the exact Hermitian part.
    pub fn new(matrix: CMatrix, snapshot_count: usize) -> Result<Self> {
        if !matrix.is_square() {
            return Err(DoaError::Dimension("covariance must be square".into()));
        }
        let scale = matrix.norm().max(1.0);
        if hermitian_defect(&matrix) > 1e-12 * scale {
            return Err(DoaError::Invariant("covariance is not Hermitian".into()));
        }
        let matrix = (&matrix + matrix.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(Self {
            matrix,
            snapshot_count,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshot_count
    }

    pub fn n_sensors(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `(1/K) X X^H`.
pub fn sample_covariance(x: &SnapshotMatrix) -> Result<CovarianceMatrix> {
    let k = x.n_snapshots();
    if k == 0 {
        return Err(DoaError::Domain(
            "covariance needs at least one snapshot".into(),
        ));
    }
    let d = x.data();
    let r = d * d.adjoint() / Complex64::new(k as f64, 0.0);
    let r = (&r + r.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(CovarianceMatrix {
        matrix: r,
        snapshot_count: k,
    })
}

fn check_dims(r: &CovarianceMatrix, dict: &Dictionary) -> Result<()> {
    if r.n_sensors() != dict.matrix().nrows() {
        return Err(DoaError::Dimension(format!(
            "covariance is {0}x{0}, dictionary has {1} rows",
            r.n_sensors(),
            dict.matrix().nrows()
        )));
    }
    Ok(())
}

fn check_sources(m_sources: usize, n: usize) -> Result<()> {
    if m_sources == 0 || m_sources >= n {
        return Err(DoaError::Domain(format!(
            "source count must lie in 1..{n}, got {m_sources}"
        )));
    }
    Ok(())
}

/// `1 / d_j` for each atom, with `d_j` floored, normalized to max 1.
fn reciprocal_spectrum(dict: &Dictionary, denominators: Vec<f64>) -> Result<AngleSpectrum> {
    let n = dict.matrix().nrows() as f64;
    let power = denominators
        .into_iter()
        .map(|d| 1.0 / d.max(DENOMINATOR_FLOOR * n))
        .collect();
    Ok(AngleSpectrum::new(dict.grid().clone(), power)?.normalized())
}

/// MUSIC pseudo-spectrum `1 / ||E_n^H a||^2`, normalized to max 1.
pub fn music_spectrum(
    r: &CovarianceMatrix,
    dict: &Dictionary,
    m_sources: usize,
) -> Result<AngleSpectrum> {
    check_dims(r, dict)?;
    let n = r.n_sensors();
    check_sources(m_sources, n)?;
    let eig = hermitian_eigen(r.matrix())?;
    let noise = eig.vectors.columns(m_sources, n - m_sources);
    let proj = noise.adjoint() * dict.matrix();
    let denominators = proj.column_iter().map(|c| c.norm_squared()).collect();
    reciprocal_spectrum(dict, denominators)
}

/// Capon spectrum `1 / (a^H (R + delta I)^{-1} a)`, normalized to max 1.
pub fn capon_spectrum(
    r: &CovarianceMatrix,
    dict: &Dictionary,
    diagonal_loading: f64,
) -> Result<AngleSpectrum> {
    check_dims(r, dict)?;
    if !(diagonal_loading >= 0.0 && diagonal_loading.is_finite()) {
        return Err(DoaError::Domain(format!(
            "diagonal loading must be nonnegative, got {diagonal_loading}"
        )));
    }
    let n = r.n_sensors();
    let mut loaded = r.matrix().clone();
    for i in 0..n {
        loaded[(i, i)] += Complex64::new(diagonal_loading, 0.0);
    }
    let eig = hermitian_eigen(&loaded)?;
    let top = eig.values[0];
    let bottom = eig.values[n - 1];
    if top.is_nan() || top <= 0.0 || bottom <= SINGULAR_RATIO * top {
        return Err(DoaError::Numerical(format!(
            "covariance is singular (eigenvalues {top:.3e} .. {bottom:.3e}); \
             use diagonal loading > 0 or more snapshots"
        )));
    }
    // a^H R^{-1} a = sum_k |v_k^H a|^2 / lambda_k
    let proj = eig.vectors.adjoint() * dict.matrix();
    let denominators = proj
        .column_iter()
        .map(|c| {
            c.iter()
                .zip(&eig.values)
                .map(|(z, l)| z.norm_sqr() / l)
                .sum()
        })
        .collect();
    reciprocal_spectrum(dict, denominators)
}

/// Propagator-method spectrum. With `R = [G | H]` split after `m_sources`
/// columns, the propagator is `P = (G^H G)^{-1} G^H H` and the spectrum is
/// `1 / ||Q^H a||^2` with `Q^H = [P^H, -I]`, normalized to max 1.
pub fn propagator_spectrum(
    r: &CovarianceMatrix,
    dict: &Dictionary,
    m_sources: usize,
) -> Result<AngleSpectrum> {
    check_dims(r, dict)?;
    let n = r.n_sensors();
    check_sources(m_sources, n)?;
    let g = r.matrix().columns(0, m_sources).into_owned();
    let h = r.matrix().columns(m_sources, n - m_sources).into_owned();
    let gram = g.adjoint() * &g;
    let sv = gram.singular_values();
    let (s_max, s_min) = (sv.max(), sv.min());
    if s_max.is_nan() || s_max <= 0.0 || s_min <= s_max / PROPAGATOR_MAX_CONDITION {
        return Err(DoaError::Numerical(format!(
            "propagator block is ill-conditioned (singular values {s_max:.3e} .. {s_min:.3e})"
        )));
    }
    let p = lstsq_matrix(&gram, &(g.adjoint() * &h), 0.0)?;
    let mut qh = CMatrix::zeros(n - m_sources, n);
    qh.columns_mut(0, m_sources).copy_from(&p.adjoint());
    for i in 0..n - m_sources {
        qh[(i, m_sources + i)] = Complex64::new(-1.0, 0.0);
    }
    let proj = qh * dict.matrix();
    let denominators = proj.column_iter().map(|c| c.norm_squared()).collect();
    reciprocal_spectrum(dict, denominators)
}

/// Grid-free ESPRIT estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EspritEstimate {
    /// Ascending angles in degrees, clamped to [-90, 90].
    pub angles_deg: Vec<f64>,
    /// At least one rotation phase exceeded `2 pi d` and was clamped.
    pub aliased: bool,
}

/// Least-squares ESPRIT on the two maximally overlapping subarrays.
pub fn esprit_doas(
    r: &CovarianceMatrix,
    geometry: &ArrayGeometry,
    m_sources: usize,
) -> Result<EspritEstimate> {
    let n = r.n_sensors();
    if n != geometry.n_sensors() {
        return Err(DoaError::Dimension(format!(
            "covariance is {n}x{n}, array has {} sensors",
            geometry.n_sensors()
        )));
    }
    check_sources(m_sources, n)?;
    let eig = hermitian_eigen(r.matrix())?;
    let es = eig.vectors.columns(0, m_sources);
    let upper = es.rows(0, n - 1).into_owned();
    let lower = es.rows(1, n - 1).into_owned();
    let rotation = lstsq_matrix(&upper, &lower, 1e-12)?;
    let scale = 2.0 * std::f64::consts::PI * geometry.spacing();
    let mut aliased = false;
    let mut angles_deg: Vec<f64> = eigenvalues(&rotation)?
        .into_iter()
        .map(|z| {
            let s = -z.arg() / scale;
            if s.abs() > 1.0 {
                aliased = true;
            }
            s.clamp(-1.0, 1.0).asin().to_degrees()
        })
        .collect();
    angles_deg.sort_by(f64::total_cmp);
    Ok(EspritEstimate {
        angles_deg,
        aliased,
    })
}

/// Peaks picked from a spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakPick {
    /// Ascending angles in degrees.
    pub angles_deg: Vec<f64>,
    pub indices: Vec<usize>,
    /// Fewer strict local maxima than requested; the rest were padded.
    pub padded: bool,
}

/// The `m_sources` largest strict interior local maxima, padded from the
/// largest remaining bins when there are too few. Ties go to the lower index.
pub fn spectrum_peaks(spectrum: &AngleSpectrum, m_sources: usize) -> PeakPick {
    let p = spectrum.power();
    let ranked = spectrum.ranked_bins();
    let is_peak = |j: usize| j > 0 && j + 1 < p.len() && p[j] > p[j - 1] && p[j] > p[j + 1];
    let mut chosen: Vec<usize> = ranked
        .iter()
        .copied()
        .filter(|&j| is_peak(j))
        .take(m_sources)
        .collect();
    let padded = chosen.len() < m_sources;
    if padded {
        for &j in &ranked {
            if chosen.len() == m_sources {
                break;
            }
            if !chosen.contains(&j) {
                chosen.push(j);
            }
        }
    }
    chosen.sort_unstable();
    PeakPick {
        angles_deg: chosen.iter().map(|&j| spectrum.grid().angle(j)).collect(),
        indices: chosen,
        padded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{build_dictionary, AngleGrid};
    use crate::synth::{
        analytic_covariance, analytic_covariance_with_phases, NoiseLevel, SourceScenario,
    };

    fn g15() -> ArrayGeometry {
        ArrayGeometry::half_wavelength(15).unwrap()
    }

    fn dict15() -> Dictionary {
        build_dictionary(&g15(), &AngleGrid::default_scan())
    }

    fn analytic(
        doas: Vec<f64>,
        groups: Option<Vec<Vec<usize>>>,
        noise: NoiseLevel,
    ) -> CovarianceMatrix {
        let sc = SourceScenario::new(doas, groups, noise, 1, 0).unwrap();
        CovarianceMatrix::new(analytic_covariance(&g15(), &sc).unwrap(), usize::MAX).unwrap()
    }

    fn identity_cov() -> CovarianceMatrix {
        CovarianceMatrix::new(CMatrix::identity(15, 15), 1).unwrap()
    }

    #[test]
    fn single_snapshot_covariance_is_rank_one() {
        let x = CMatrix::from_fn(4, 1, |r, _| Complex64::new(r as f64, 1.0));
        let r = sample_covariance(&SnapshotMatrix::new(x.clone(), 0.0)).unwrap();
        assert!((r.matrix() - &x * x.adjoint()).norm() < 1e-12);
        assert_eq!(crate::linalg::numerical_rank(r.matrix(), 1e-10), 1);
    }

    #[test]
    fn orthogonal_columns_give_diagonal() {
        // Columns e_0 * 2 and e_1 * 2i: R = diag(2, 2, 0).
        let mut x = CMatrix::zeros(3, 2);
        x[(0, 0)] = Complex64::new(2.0, 0.0);
        x[(1, 1)] = Complex64::new(0.0, 2.0);
        let r = sample_covariance(&SnapshotMatrix::new(x, 0.0)).unwrap();
        let expected = CMatrix::from_diagonal(&crate::linalg::CVector::from_vec(vec![
            Complex64::new(2.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 0.0),
        ]));
        assert!((r.matrix() - expected).norm() < 1e-15);
    }

    #[test]
    fn music_analytic_three_sources() {
        let r = analytic(vec![-40.0, 0.0, 24.0], None, NoiseLevel::SnrDb(0.0));
        let s = music_spectrum(&r, &dict15(), 3).unwrap();
        assert_eq!(s.max(), 1.0);
        assert_eq!(spectrum_peaks(&s, 3).angles_deg, vec![-40.0, 0.0, 24.0]);
    }

    #[test]
    fn identity_gives_flat_spectra() {
        let d = dict15();
        for s in [
            music_spectrum(&identity_cov(), &d, 3).unwrap(),
            capon_spectrum(&identity_cov(), &d, 0.0).unwrap(),
        ] {
            assert!(s.power().iter().all(|&p| (p - 1.0).abs() < 1e-9));
        }
        let p = propagator_spectrum(&identity_cov(), &d, 3).unwrap();
        let mut sorted = p.power().to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        assert!(p.max() / median < 2.0);
        let pick = spectrum_peaks(&p, 2);
        assert!(pick.padded);
        assert_eq!(pick.indices, vec![0, 1]);
    }

    #[test]
    fn capon_single_source_peak() {
        let r = analytic(vec![37.0], None, NoiseLevel::SnrDb(20.0));
        let s = capon_spectrum(&r, &dict15(), 0.0).unwrap();
        assert_eq!(spectrum_peaks(&s, 1).angles_deg, vec![37.0]);
        assert_eq!(
            s.ranked_bins()[0],
            dict15().grid().index_of(37.0, 1e-9).unwrap()
        );
    }

    #[test]
    fn capon_rank_one_needs_loading() {
        let x = crate::array::steering_matrix(&g15(), &[10.0]).unwrap();
        let r = sample_covariance(&SnapshotMatrix::new(x, 0.0)).unwrap();
        assert!(matches!(
            capon_spectrum(&r, &dict15(), 0.0),
            Err(DoaError::Numerical(_))
        ));
        assert!(capon_spectrum(&r, &dict15(), 0.1).is_ok());
    }

    #[test]
    fn propagator_noiseless_nulls() {
        let r = analytic(vec![-40.0, 0.0, 24.0], None, NoiseLevel::Noiseless);
        let s = propagator_spectrum(&r, &dict15(), 3).unwrap();
        assert_eq!(spectrum_peaks(&s, 3).angles_deg, vec![-40.0, 0.0, 24.0]);
    }

    #[test]
    fn propagator_rejects_rank_deficient_block() {
        let r = analytic(
            vec![-40.0, 0.0],
            Some(vec![vec![0, 1]]),
            NoiseLevel::Noiseless,
        );
        assert!(matches!(
            propagator_spectrum(&r, &dict15(), 2),
            Err(DoaError::Numerical(_))
        ));
    }

    #[test]
    fn esprit_single_source_exact() {
        let r = analytic(vec![30.0], None, NoiseLevel::SnrDb(30.0));
        let e = esprit_doas(&r, &g15(), 1).unwrap();
        assert!((e.angles_deg[0] - 30.0).abs() < 1e-6, "{:?}", e);
        assert!(!e.aliased);

        let r = analytic(vec![-12.345], None, NoiseLevel::SnrDb(0.0));
        let e = esprit_doas(&r, &g15(), 1).unwrap();
        assert!((e.angles_deg[0] + 12.345).abs() < 1e-6);
    }

    #[test]
    fn esprit_coherent_pair_is_biased() {
        let sc = SourceScenario::new(
            vec![-50.0, 60.0],
            Some(vec![vec![0, 1]]),
            NoiseLevel::SnrDb(20.0),
            1,
            0,
        )
        .unwrap();
        let r = CovarianceMatrix::new(
            analytic_covariance_with_phases(&g15(), &sc, &[0.0, 1.0]).unwrap(),
            1,
        )
        .unwrap();
        let e = esprit_doas(&r, &g15(), 2).unwrap();
        let worst = e
            .angles_deg
            .iter()
            .zip([-50.0, 60.0])
            .map(|(a, t)| (a - t).abs())
            .fold(0.0, f64::max);
        assert!(worst > 5.0, "{:?}", e);
    }

    #[test]
    fn source_count_domain() {
        let d = dict15();
        assert!(matches!(
            music_spectrum(&identity_cov(), &d, 15),
            Err(DoaError::Domain(_))
        ));
        assert!(matches!(
            music_spectrum(&identity_cov(), &d, 0),
            Err(DoaError::Domain(_))
        ));
        assert!(matches!(
            esprit_doas(&identity_cov(), &g15(), 15),
            Err(DoaError::Domain(_))
        ));
    }

    #[test]
    fn peak_picker_cases() {
        let grid = AngleGrid::uniform(-3.0, 3.0, 1.0).unwrap();
        let single =
            AngleSpectrum::new(grid.clone(), vec![0.1, 0.2, 0.5, 1.0, 0.4, 0.2, 0.1]).unwrap();
        let pick = spectrum_peaks(&single, 1);
        assert_eq!(pick.angles_deg, vec![0.0]);
        assert!(!pick.padded);

        let flat = AngleSpectrum::new(grid.clone(), vec![1.0; 7]).unwrap();
        let pick = spectrum_peaks(&flat, 2);
        assert!(pick.padded);
        assert_eq!(pick.angles_deg, vec![-3.0, -2.0]);

        // Edge bins are never strict local maxima.
        let edge = AngleSpectrum::new(grid, vec![1.0, 0.5, 0.6, 0.2, 0.3, 0.1, 0.9]).unwrap();
        let pick = spectrum_peaks(&edge, 2);
        assert_eq!(pick.angles_deg, vec![-1.0, 1.0]);
        assert!(!pick.padded);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::identity(3, 3);
        m[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(CovarianceMatrix::new(m, 1).is_err());
    }
}
