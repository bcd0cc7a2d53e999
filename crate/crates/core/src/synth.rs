//! Source waveforms, sensor noise and snapshot synthesis.
//!
//! Sources are zero-mean unit-power circular complex Gaussian sequences.
//! Sources in one coherence group share a waveform up to a unit-modulus
//! scalar drawn once per realization. The SNR is per source and per sensor:
//! the noise variance is `10^(-snr_db / 10)` relative to unit source power.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::{steering_matrix, ArrayGeometry};
use crate::error::{DoaError, Result};
use crate::linalg::{CMatrix, CVector};

/// Sensor noise level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    SnrDb(f64),
    Noiseless,
}

impl NoiseLevel {
    /// Per-element noise variance for unit-power sources.
    pub fn variance(&self) -> f64 {
        match *self {
            NoiseLevel::SnrDb(db) => 10f64.powf(-db / 10.0),
            NoiseLevel::Noiseless => 0.0,
        }
    }

    /// SNR in dB, `+inf` when noiseless.
    pub fn snr_db(&self) -> f64 {
        match *self {
            NoiseLevel::SnrDb(db) => db,
            NoiseLevel::Noiseless => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceScenario {
    doas_deg: Vec<f64>,
    coherence_groups: Vec<Vec<usize>>,
    noise: NoiseLevel,
    n_snapshots: usize,
    seed: u64,
    amplitude: f64,
}

impl SourceScenario {
    /// `coherence_groups` partitions the 0-based source indices; `None`
    /// makes every source its own group.
    pub fn new(
        doas_deg: Vec<f64>,
        coherence_groups: Option<Vec<Vec<usize>>>,
        noise: NoiseLevel,
        n_snapshots: usize,
        seed: u64,
    ) -> Result<Self> {
        let m = doas_deg.len();
        if m == 0 {
            return Err(DoaError::Domain(
                "scenario needs at least one source".into(),
            ));
        }
        for &d in &doas_deg {
            if !(-90.0..=90.0).contains(&d) {
                return Err(DoaError::Domain(format!(
                    "DOA {d} deg is outside [-90, 90]"
                )));
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                if doas_deg[i] == doas_deg[j] {
                    return Err(DoaError::Domain(format!(
                        "DOAs must be distinct, {} appears twice",
                        doas_deg[i]
                    )));
                }
            }
        }
        if n_snapshots == 0 {
            return Err(DoaError::Domain("snapshot count must be positive".into()));
        }
        if let NoiseLevel::SnrDb(db) = noise {
            if !db.is_finite() {
                return Err(DoaError::Domain(
                    "SNR must be finite; use the noiseless level instead".into(),
                ));
            }
        }
        let groups = match coherence_groups {
            Some(g) => {
                check_partition(&g, m)?;
                g
            }
            None => (0..m).map(|i| vec![i]).collect(),
        };
        Ok(Self {
            doas_deg,
            coherence_groups: groups,
            noise,
            n_snapshots,
            seed,
            amplitude: 1.0,
        })
    }

    /// Scale every source waveform by `amplitude` (the SNR reference stays at
    /// unit power, so zero gives a noise-only scene).
    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn with_snapshots(mut self, n_snapshots: usize) -> Self {
        self.n_snapshots = n_snapshots.max(1);
        self
    }

    pub fn with_noise(mut self, noise: NoiseLevel) -> Self {
        self.noise = noise;
        self
    }

    pub fn doas_deg(&self) -> &[f64] {
        &self.doas_deg
    }

    pub fn n_sources(&self) -> usize {
        self.doas_deg.len()
    }

    pub fn coherence_groups(&self) -> &[Vec<usize>] {
        &self.coherence_groups
    }

    pub fn noise(&self) -> NoiseLevel {
        self.noise
    }

    pub fn n_snapshots(&self) -> usize {
        self.n_snapshots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Default stream for this scenario.
    pub fn stream(&self) -> crate::rng::Stream {
        crate::rng::stream(self.seed, &[])
    }
}

fn check_partition(groups: &[Vec<usize>], m: usize) -> Result<()> {
    let mut seen = vec![false; m];
    for g in groups {
        if g.is_empty() {
            return Err(DoaError::Domain(
                "coherence groups must be non-empty".into(),
            ));
        }
        for &i in g {
            if i >= m {
                return Err(DoaError::Domain(format!(
                    "coherence group refers to source {i}, only {m} sources"
                )));
            }
            if seen[i] {
                return Err(DoaError::Domain(format!(
                    "source {i} appears in more than one coherence group"
                )));
            }
            seen[i] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(DoaError::Domain(format!(
            "source {missing} is not in any coherence group"
        )));
    }
    Ok(())
}

/// One draw from CN(0, variance).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// M x K source matrix for `scenario`.
pub fn generate_source_matrix<R: Rng + ?Sized>(scenario: &SourceScenario, rng: &mut R) -> CMatrix {
    let k = scenario.n_snapshots;
    let mut s = CMatrix::zeros(scenario.n_sources(), k);
    for group in &scenario.coherence_groups {
        let waveform: Vec<Complex64> = (0..k).map(|_| complex_gaussian(rng, 1.0)).collect();
        for &i in group {
            let phase: f64 = rng.random::<f64>() * TAU;
            let scalar = Complex64::from_polar(scenario.amplitude, phase);
            for (t, w) in waveform.iter().enumerate() {
                s[(i, t)] = scalar * w;
            }
        }
    }
    s
}

/// Received snapshots `X` (N x K).
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: CMatrix,
    noise_variance: f64,
}

impl SnapshotMatrix {
    pub fn new(data: CMatrix, noise_variance: f64) -> Self {
        Self {
            data,
            noise_variance,
        }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn n_sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_snapshots(&self) -> usize {
        self.data.ncols()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn snapshot(&self, k: usize) -> CVector {
        self.data.column(k).into_owned()
    }

    /// The first `k` snapshots.
    pub fn leading(&self, k: usize) -> SnapshotMatrix {
        SnapshotMatrix {
            data: self.data.columns(0, k.min(self.n_snapshots())).into_owned(),
            noise_variance: self.noise_variance,
        }
    }
}

/// Noise-free array output `A(theta) S`.
pub fn array_response(
    geometry: &ArrayGeometry,
    doas_deg: &[f64],
    sources: &CMatrix,
) -> Result<CMatrix> {
    if sources.nrows() != doas_deg.len() {
        return Err(DoaError::Dimension(format!(
            "{} DOAs but {} source rows",
            doas_deg.len(),
            sources.nrows()
        )));
    }
    Ok(steering_matrix(geometry, doas_deg)? * sources)
}

/// Add CN(0, variance) noise to every entry.
pub fn add_noise<R: Rng + ?Sized>(x: &mut CMatrix, variance: f64, rng: &mut R) {
    if variance == 0.0 {
        return;
    }
    for z in x.iter_mut() {
        *z += complex_gaussian(rng, variance);
    }
}

fn check_identifiable(geometry: &ArrayGeometry, scenario: &SourceScenario) -> Result<()> {
    if scenario.n_sources() >= geometry.n_sensors() {
        return Err(DoaError::Identifiability(format!(
            "{} sources need more than {} sensors",
            scenario.n_sources(),
            geometry.n_sensors()
        )));
    }
    Ok(())
}

/// `X = A(theta) S + W` with sources and noise both drawn from `rng`.
pub fn synthesize_snapshots<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    scenario: &SourceScenario,
    rng: &mut R,
) -> Result<SnapshotMatrix> {
    check_identifiable(geometry, scenario)?;
    let s = generate_source_matrix(scenario, rng);
    let mut x = array_response(geometry, &scenario.doas_deg, &s)?;
    let variance = scenario.noise.variance();
    add_noise(&mut x, variance, rng);
    Ok(SnapshotMatrix::new(x, variance))
}

/// Snapshots for a given source matrix, with noise from `rng`.
pub fn synthesize_from_sources<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    scenario: &SourceScenario,
    sources: &CMatrix,
    rng: &mut R,
) -> Result<SnapshotMatrix> {
    check_identifiable(geometry, scenario)?;
    let mut x = array_response(geometry, &scenario.doas_deg, sources)?;
    let variance = scenario.noise.variance();
    add_noise(&mut x, variance, rng);
    Ok(SnapshotMatrix::new(x, variance))
}

/// Infinite-snapshot covariance `A P A^H + sigma^2 I`, with every coherence
/// scalar set to 1.
pub fn analytic_covariance(geometry: &ArrayGeometry, scenario: &SourceScenario) -> Result<CMatrix> {
    analytic_covariance_with_phases(geometry, scenario, &vec![0.0; scenario.n_sources()])
}

/// [`analytic_covariance`] conditioned on per-source coherence phases
/// (radians), which fix the scalar each source applies to its group waveform.
pub fn analytic_covariance_with_phases(
    geometry: &ArrayGeometry,
    scenario: &SourceScenario,
    phases: &[f64],
) -> Result<CMatrix> {
    let m = scenario.n_sources();
    if phases.len() != m {
        return Err(DoaError::Dimension(format!(
            "{m} sources but {} phases",
            phases.len()
        )));
    }
    let power = scenario.amplitude * scenario.amplitude;
    let mut p = CMatrix::zeros(m, m);
    for group in &scenario.coherence_groups {
        for &i in group {
            for &j in group {
                p[(i, j)] = Complex64::from_polar(power, phases[i] - phases[j]);
            }
        }
    }
    let a = steering_matrix(geometry, &scenario.doas_deg)?;
    let mut r = &a * p * a.adjoint();
    let sigma2 = scenario.noise.variance();
    for i in 0..geometry.n_sensors() {
        r[(i, i)] += Complex64::new(sigma2, 0.0);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_vector;
    use crate::linalg::{hermitian_eigen, numerical_rank};
    use crate::rng::stream;

    fn geometry() -> ArrayGeometry {
        ArrayGeometry::half_wavelength(15).unwrap()
    }

    #[test]
    fn scenario_validation() {
        let n = NoiseLevel::SnrDb(0.0);
        assert!(SourceScenario::new(vec![], None, n, 1, 0).is_err());
        assert!(SourceScenario::new(vec![10.0, 10.0], None, n, 1, 0).is_err());
        assert!(SourceScenario::new(vec![95.0], None, n, 1, 0).is_err());
        assert!(SourceScenario::new(vec![0.0], None, n, 0, 0).is_err());
        assert!(SourceScenario::new(vec![0.0, 5.0], Some(vec![vec![0]]), n, 1, 0).is_err());
        assert!(
            SourceScenario::new(vec![0.0, 5.0], Some(vec![vec![0, 1], vec![1]]), n, 1, 0).is_err()
        );
        assert!(SourceScenario::new(vec![0.0, 5.0], Some(vec![vec![0, 2]]), n, 1, 0).is_err());
        assert!(
            SourceScenario::new(vec![0.0], None, NoiseLevel::SnrDb(f64::INFINITY), 1, 0).is_err()
        );
        assert!(SourceScenario::new(vec![0.0, 5.0], Some(vec![vec![1, 0]]), n, 1, 0).is_ok());
    }

    #[test]
    fn independent_sources_full_rank() {
        let sc = SourceScenario::new(vec![-40.0, 0.0, 24.0], None, NoiseLevel::SnrDb(0.0), 500, 3)
            .unwrap();
        let s = generate_source_matrix(&sc, &mut sc.stream());
        assert_eq!(s.shape(), (3, 500));
        assert_eq!(numerical_rank(&s, 1e-10), 3);
    }

    #[test]
    fn coherent_pair_is_rank_one() {
        let sc = SourceScenario::new(
            vec![1.0, -24.0],
            Some(vec![vec![0, 1]]),
            NoiseLevel::SnrDb(0.0),
            200,
            3,
        )
        .unwrap();
        let s = generate_source_matrix(&sc, &mut sc.stream());
        assert_eq!(numerical_rank(&s, 1e-10), 1);
        let ratio = s[(1, 0)] / s[(0, 0)];
        assert!((ratio.norm() - 1.0).abs() < 1e-12);
        for t in 0..200 {
            assert!((s[(1, t)] - ratio * s[(0, t)]).norm() < 1e-12);
        }
    }

    #[test]
    fn groups_set_rank() {
        let sc = SourceScenario::new(
            vec![-40.0, 1.0, -24.0],
            Some(vec![vec![0], vec![1, 2]]),
            NoiseLevel::SnrDb(0.0),
            50,
            11,
        )
        .unwrap();
        let s = generate_source_matrix(&sc, &mut sc.stream());
        assert_eq!(numerical_rank(&s, 1e-10), 2);
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        let sc =
            SourceScenario::new(vec![-40.0, 0.0], None, NoiseLevel::SnrDb(0.0), 20, 99).unwrap();
        let a = synthesize_snapshots(&geometry(), &sc, &mut sc.stream()).unwrap();
        let b = synthesize_snapshots(&geometry(), &sc, &mut sc.stream()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noiseless_single_snapshot_is_scaled_steering() {
        let sc = SourceScenario::new(vec![17.0], None, NoiseLevel::Noiseless, 1, 5).unwrap();
        let x = synthesize_snapshots(&geometry(), &sc, &mut sc.stream()).unwrap();
        let a = steering_vector(&geometry(), 17.0).unwrap();
        let alpha = x.data()[(0, 0)];
        assert!((x.snapshot(0) - a * alpha).norm() < 1e-12);
    }

    #[test]
    fn too_many_sources_refused() {
        let g = ArrayGeometry::half_wavelength(3).unwrap();
        let sc = SourceScenario::new(vec![-40.0, 0.0, 30.0], None, NoiseLevel::SnrDb(0.0), 1, 0)
            .unwrap();
        assert!(matches!(
            synthesize_snapshots(&g, &sc, &mut sc.stream()),
            Err(DoaError::Identifiability(_))
        ));
    }

    #[test]
    fn three_sources_give_three_dominant_eigenvalues() {
        let sc = SourceScenario::new(
            vec![-40.0, 0.0, 24.0],
            None,
            NoiseLevel::SnrDb(20.0),
            500,
            8,
        )
        .unwrap();
        let x = synthesize_snapshots(&geometry(), &sc, &mut stream(8, &[1])).unwrap();
        let r = x.data() * x.data().adjoint() / Complex64::new(500.0, 0.0);
        let e = hermitian_eigen(&r).unwrap();
        assert!(e.values[2] > 50.0 * e.values[3], "{:?}", e.values);
    }

    #[test]
    fn noise_only_covariance_is_scaled_identity() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let sc = SourceScenario::new(vec![10.0, -30.0], None, NoiseLevel::SnrDb(3.0), 100_000, 4)
            .unwrap()
            .with_amplitude(0.0);
        let x = synthesize_snapshots(&g, &sc, &mut sc.stream()).unwrap();
        let sigma2 = sc.noise().variance();
        let r = x.data() * x.data().adjoint() / Complex64::new(100_000.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                let expected = if i == j { sigma2 } else { 0.0 };
                assert!((r[(i, j)] - Complex64::new(expected, 0.0)).norm() < 0.05 * sigma2);
            }
        }
    }

    #[test]
    fn analytic_covariance_forms() {
        let g = ArrayGeometry::half_wavelength(6).unwrap();
        let one = SourceScenario::new(vec![20.0], None, NoiseLevel::SnrDb(0.0), 1, 0).unwrap();
        let r = analytic_covariance(&g, &one).unwrap();
        let a = steering_vector(&g, 20.0).unwrap();
        let expected = &a * a.adjoint() + CMatrix::identity(6, 6);
        assert!((r - expected).norm() < 1e-12);

        let coh = SourceScenario::new(
            vec![-10.0, 35.0],
            Some(vec![vec![0, 1]]),
            NoiseLevel::Noiseless,
            1,
            0,
        )
        .unwrap();
        let r = analytic_covariance_with_phases(&g, &coh, &[0.3, 1.9]).unwrap();
        assert_eq!(numerical_rank(&r, 1e-10), 1);

        let ind =
            SourceScenario::new(vec![-50.0, 0.0, 40.0], None, NoiseLevel::Noiseless, 1, 0).unwrap();
        assert_eq!(
            numerical_rank(&analytic_covariance(&g, &ind).unwrap(), 1e-10),
            3
        );
    }
}
