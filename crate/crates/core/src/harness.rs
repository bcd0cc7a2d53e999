//! Monte-Carlo experiment engine: single-realization spectrum comparisons,
//! RMSE-versus-SNR sweeps and repeated-trial OMP consistency studies.
//!
//! Every trial draws from its own random streams, keyed by the master seed
//! and the (SNR index, trial index) pair, so results do not depend on how
//! many threads run the trials. Aggregation always walks trials in order.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{build_dictionary, AngleGrid, ArrayGeometry, Dictionary};
use crate::baselines::{
    capon_spectrum, esprit_doas, music_spectrum, propagator_spectrum, sample_covariance,
    spectrum_peaks,
};
use crate::error::{DoaError, Result};
use crate::omp::{angle_spectrum, estimate_doas, omp_recover};
use crate::rng::{purpose, stream};
use crate::sensing::{
    compress, effective_dictionary, make_measurement_matrix, warn_if_undersampled,
    EffectiveDictionary, MeasurementKind,
};
use crate::spectrum::AngleSpectrum;
use crate::synth::{generate_source_matrix, synthesize_from_sources, NoiseLevel, SourceScenario};

/// Error charged for each source an estimator fails to report.
pub const SHORTFALL_PENALTY_DEG: f64 = 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    Omp,
    Music,
    Capon,
    Propagator,
    Esprit,
}

impl AlgorithmKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmKind::Omp => "omp",
            AlgorithmKind::Music => "music",
            AlgorithmKind::Capon => "capon",
            AlgorithmKind::Propagator => "propagator",
            AlgorithmKind::Esprit => "esprit",
        }
    }

    /// Whether the estimator produces an angle spectrum.
    pub fn has_spectrum(&self) -> bool {
        !matches!(self, AlgorithmKind::Esprit)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmSpec {
    pub kind: AlgorithmKind,
    pub snapshots: usize,
    /// Capon only.
    pub diagonal_loading: f64,
}

impl AlgorithmSpec {
    pub fn new(kind: AlgorithmKind, snapshots: usize) -> Self {
        Self {
            kind,
            snapshots,
            diagonal_loading: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSpec {
    pub kind: MeasurementKind,
    /// Row count; identity always uses the sensor count.
    pub rows: usize,
    /// Fixed seed for the matrix. `None` draws a fresh matrix per trial.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpSettings {
    /// Defaults to the number of sources.
    pub sparsity: Option<usize>,
    pub tolerance: f64,
}

impl Default for OmpSettings {
    fn default() -> Self {
        Self {
            sparsity: None,
            tolerance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: ArrayGeometry,
    pub grid: AngleGrid,
    pub doas_deg: Vec<f64>,
    pub coherence_groups: Option<Vec<Vec<usize>>>,
    /// SNR sweep; a single entry for spectrum and consistency runs.
    pub noise_levels: Vec<NoiseLevel>,
    pub algorithms: Vec<AlgorithmSpec>,
    pub measurement: MeasurementSpec,
    pub omp: OmpSettings,
    pub n_trials: usize,
    pub master_seed: u64,
}

impl ExperimentConfig {
    /// Identity measurement, default grid, one SNR point.
    pub fn new(
        geometry: ArrayGeometry,
        doas_deg: Vec<f64>,
        noise: NoiseLevel,
        algorithms: Vec<AlgorithmSpec>,
        n_trials: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            geometry,
            grid: AngleGrid::default_scan(),
            doas_deg,
            coherence_groups: None,
            noise_levels: vec![noise],
            algorithms,
            measurement: MeasurementSpec {
                kind: MeasurementKind::Identity,
                rows: geometry.n_sensors(),
                seed: None,
            },
            omp: OmpSettings::default(),
            n_trials,
            master_seed,
        }
    }

    pub fn n_sources(&self) -> usize {
        self.doas_deg.len()
    }

    pub fn sparsity(&self) -> usize {
        self.omp.sparsity.unwrap_or(self.doas_deg.len())
    }

    pub fn max_snapshots(&self) -> usize {
        self.algorithms
            .iter()
            .map(|a| a.snapshots)
            .max()
            .unwrap_or(1)
    }

    /// Scenario at `noise` with the largest configured snapshot count.
    pub fn scenario(&self, noise: NoiseLevel) -> Result<SourceScenario> {
        SourceScenario::new(
            self.doas_deg.clone(),
            self.coherence_groups.clone(),
            noise,
            self.max_snapshots(),
            self.master_seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(DoaError::Config(m));
        if self.n_trials == 0 {
            return cfg("trials must be at least 1".into());
        }
        if self.noise_levels.is_empty() {
            return cfg("the SNR list is empty".into());
        }
        if self.algorithms.is_empty() {
            return cfg("no algorithms configured".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].iter().any(|b| b.kind == a.kind) {
                return cfg(format!("algorithm {} is listed twice", a.kind));
            }
            if a.snapshots == 0 {
                return cfg(format!("algorithm {} needs at least 1 snapshot", a.kind));
            }
            if a.kind == AlgorithmKind::Omp && a.snapshots != 1 {
                return cfg(format!(
                    "omp works on a single snapshot, got snapshots = {}",
                    a.snapshots
                ));
            }
            if a.kind == AlgorithmKind::Capon {
                if !(a.diagonal_loading >= 0.0 && a.diagonal_loading.is_finite()) {
                    return cfg("capon diagonal_loading must be nonnegative".into());
                }
                if a.snapshots < self.geometry.n_sensors() && a.diagonal_loading == 0.0 {
                    return cfg(format!(
                        "capon with {} snapshots on {} sensors needs diagonal_loading > 0",
                        a.snapshots,
                        self.geometry.n_sensors()
                    ));
                }
            }
        }
        for &d in &self.doas_deg {
            if d < self.grid.start() || d > self.grid.stop() {
                return cfg(format!(
                    "DOA {d} lies outside the scan grid [{}, {}]",
                    self.grid.start(),
                    self.grid.stop()
                ));
            }
        }
        if self.n_sources() >= self.geometry.n_sensors() {
            return cfg(format!(
                "{} sources need more than {} sensors",
                self.n_sources(),
                self.geometry.n_sensors()
            ));
        }
        let n = self.geometry.n_sensors();
        match self.measurement.kind {
            MeasurementKind::Identity if self.measurement.rows != n => {
                return cfg(format!("identity measurement needs rows = {n}"));
            }
            MeasurementKind::ComplexGaussian
                if self.measurement.rows == 0 || self.measurement.rows > n =>
            {
                return cfg(format!("measurement rows must lie in 1..={n}"));
            }
            _ => {}
        }
        if self.has(AlgorithmKind::Omp) {
            let k = self.sparsity();
            if k == 0 || k > self.measurement.rows {
                return cfg(format!(
                    "omp sparsity {k} must lie in 1..={} (measurement rows)",
                    self.measurement.rows
                ));
            }
        }
        if !(self.omp.tolerance >= 0.0 && self.omp.tolerance.is_finite()) {
            return cfg("omp tolerance must be nonnegative".into());
        }
        self.scenario(self.noise_levels[0])
            .map_err(|e| DoaError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn has(&self, kind: AlgorithmKind) -> bool {
        self.algorithms.iter().any(|a| a.kind == kind)
    }
}

/// What one estimator produced in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmOutcome {
    pub kind: AlgorithmKind,
    /// Ascending estimated DOAs.
    pub angles_deg: Vec<f64>,
    /// Fewer than M estimates (OMP) or a numerical failure.
    pub shortfall: bool,
    /// Unnormalized spectrum, when the estimator has one.
    pub spectrum: Option<AngleSpectrum>,
    /// OMP support in selection order.
    pub support: Option<Vec<usize>>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// In configuration order.
    pub algorithms: Vec<AlgorithmOutcome>,
}

impl TrialOutcome {
    pub fn get(&self, kind: AlgorithmKind) -> Option<&AlgorithmOutcome> {
        self.algorithms.iter().find(|a| a.kind == kind)
    }
}

/// Shared per-run state: the dictionary and, for a fixed measurement
/// matrix, the effective dictionary.
struct Prepared {
    dictionary: Dictionary,
    fixed_psi: Option<(crate::sensing::MeasurementMatrix, EffectiveDictionary)>,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let dictionary = build_dictionary(&config.geometry, &config.grid);
    let n = config.geometry.n_sensors();
    let fixed_seed = match config.measurement.kind {
        MeasurementKind::Identity => Some(0),
        MeasurementKind::ComplexGaussian => config.measurement.seed,
    };
    let fixed_psi = match fixed_seed {
        Some(seed) => {
            let phi =
                make_measurement_matrix(config.measurement.kind, config.measurement.rows, n, seed)?;
            let psi = effective_dictionary(&phi, &dictionary)?;
            Some((phi, psi))
        }
        None => None,
    };
    if config.has(AlgorithmKind::Omp) && config.measurement.kind == MeasurementKind::ComplexGaussian
    {
        // The matrix itself does not matter for the count check.
        let probe =
            make_measurement_matrix(config.measurement.kind, config.measurement.rows, n, 0)?;
        warn_if_undersampled(&probe, config.n_sources());
    }
    Ok(Prepared {
        dictionary,
        fixed_psi,
    })
}

/// Stream path roots. `waveform_path` selects the source realization,
/// `trial_path` the noise and measurement draws.
struct TrialKey<'a> {
    waveform_path: &'a [u64],
    trial_path: &'a [u64],
}

fn run_one(
    config: &ExperimentConfig,
    prepared: &Prepared,
    noise: NoiseLevel,
    trial: usize,
    key: TrialKey<'_>,
    algorithms: &[AlgorithmSpec],
) -> Result<TrialOutcome> {
    let scenario = config.scenario(noise)?;
    let mut wave_path = key.waveform_path.to_vec();
    wave_path.push(purpose::WAVEFORM);
    let sources = generate_source_matrix(&scenario, &mut stream(config.master_seed, &wave_path));

    let mut outcomes = Vec::with_capacity(algorithms.len());
    for (alg_index, alg) in algorithms.iter().enumerate() {
        let mut noise_path = key.trial_path.to_vec();
        noise_path.extend_from_slice(&[purpose::NOISE, alg.kind as u64, alg_index as u64]);
        let mut rng = stream(config.master_seed, &noise_path);
        let k = alg.snapshots;
        let sub = sources.columns(0, k).into_owned();
        let x = synthesize_from_sources(
            &config.geometry,
            &scenario.clone().with_snapshots(k),
            &sub,
            &mut rng,
        )?;

        let m = config.n_sources();
        let result: Result<AlgorithmOutcome> = (|| match alg.kind {
            AlgorithmKind::Omp => {
                let phi_psi;
                let (phi, psi) = match &prepared.fixed_psi {
                    Some((phi, psi)) => (phi, psi),
                    None => {
                        let mut meas_path = key.trial_path.to_vec();
                        meas_path.push(purpose::MEASUREMENT);
                        let seed: u64 = stream(config.master_seed, &meas_path).random();
                        let phi = make_measurement_matrix(
                            config.measurement.kind,
                            config.measurement.rows,
                            config.geometry.n_sensors(),
                            seed,
                        )?;
                        let psi = effective_dictionary(&phi, &prepared.dictionary)?;
                        phi_psi = (phi, psi);
                        (&phi_psi.0, &phi_psi.1)
                    }
                };
                let y = compress(phi, &x.snapshot(0))?;
                let rec = omp_recover(psi, &y, config.sparsity(), config.omp.tolerance)?;
                let spectrum = angle_spectrum(&rec, &config.grid)?;
                let est = estimate_doas(&spectrum, m);
                Ok(AlgorithmOutcome {
                    kind: alg.kind,
                    angles_deg: est.angles_deg,
                    shortfall: est.shortfall,
                    spectrum: Some(spectrum),
                    support: Some(rec.support),
                    failure: None,
                })
            }
            AlgorithmKind::Esprit => {
                let r = sample_covariance(&x)?;
                let est = esprit_doas(&r, &config.geometry, m)?;
                Ok(AlgorithmOutcome {
                    kind: alg.kind,
                    angles_deg: est.angles_deg,
                    shortfall: false,
                    spectrum: None,
                    support: None,
                    failure: None,
                })
            }
            AlgorithmKind::Music | AlgorithmKind::Capon | AlgorithmKind::Propagator => {
                let r = sample_covariance(&x)?;
                let spectrum = match alg.kind {
                    AlgorithmKind::Music => music_spectrum(&r, &prepared.dictionary, m)?,
                    AlgorithmKind::Capon => {
                        capon_spectrum(&r, &prepared.dictionary, alg.diagonal_loading)?
                    }
                    _ => propagator_spectrum(&r, &prepared.dictionary, m)?,
                };
                let pick = spectrum_peaks(&spectrum, m);
                Ok(AlgorithmOutcome {
                    kind: alg.kind,
                    angles_deg: pick.angles_deg,
                    shortfall: false,
                    spectrum: Some(spectrum),
                    support: None,
                    failure: None,
                })
            }
        })();

        outcomes.push(match result {
            Ok(o) => o,
            Err(e @ DoaError::Numerical(_)) => AlgorithmOutcome {
                kind: alg.kind,
                angles_deg: vec![],
                shortfall: true,
                spectrum: None,
                support: None,
                failure: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        });
    }
    Ok(TrialOutcome {
        trial,
        algorithms: outcomes,
    })
}

/// Run `with` on a pool of `jobs` threads (`None`: rayon's default).
pub fn with_jobs<T: Send>(jobs: Option<usize>, with: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(with()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| DoaError::Config(format!("cannot start {n} worker threads: {e}")))?;
            Ok(pool.install(with))
        }
    }
}

/// All trials of one SNR point, in trial order.
pub fn run_trials(config: &ExperimentConfig, noise_index: usize) -> Result<Vec<TrialOutcome>> {
    let prepared = prepare(config)?;
    run_trials_prepared(config, &prepared, noise_index, &config.algorithms)
}

fn run_trials_prepared(
    config: &ExperimentConfig,
    prepared: &Prepared,
    noise_index: usize,
    algorithms: &[AlgorithmSpec],
) -> Result<Vec<TrialOutcome>> {
    let noise = *config
        .noise_levels
        .get(noise_index)
        .ok_or_else(|| DoaError::Config(format!("no SNR point {noise_index}")))?;
    (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let path = [noise_index as u64, t as u64];
            run_one(
                config,
                prepared,
                noise,
                t,
                TrialKey {
                    waveform_path: &path,
                    trial_path: &path,
                },
                algorithms,
            )
        })
        .collect()
}

/// Normalized spectra of every spectral estimator on one realization,
/// keyed by algorithm. All estimators see the same source waveforms; each
/// draws its own noise for its snapshot count.
pub fn run_spectrum_experiment(
    config: &ExperimentConfig,
) -> Result<BTreeMap<AlgorithmKind, AngleSpectrum>> {
    if config.noise_levels.len() != 1 {
        return Err(DoaError::Config(format!(
            "a spectrum run takes exactly one SNR value, got {}",
            config.noise_levels.len()
        )));
    }
    if let Some(a) = config.algorithms.iter().find(|a| !a.kind.has_spectrum()) {
        return Err(DoaError::Config(format!(
            "{} does not produce a spectrum",
            a.kind
        )));
    }
    let prepared = prepare(config)?;
    let path = [0u64, 0u64];
    let outcome = run_one(
        config,
        &prepared,
        config.noise_levels[0],
        0,
        TrialKey {
            waveform_path: &path,
            trial_path: &path,
        },
        &config.algorithms,
    )?;
    let mut out = BTreeMap::new();
    for a in outcome.algorithms {
        match (a.spectrum, a.failure) {
            (Some(s), _) => {
                out.insert(a.kind, s.normalized());
            }
            (None, Some(msg)) => return Err(DoaError::Numerical(format!("{}: {msg}", a.kind))),
            (None, None) => unreachable!("spectral estimators always return a spectrum"),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmsePoint {
    pub snr_db: f64,
    pub rmse_deg: f64,
    /// Delta-method standard error of the RMSE.
    pub stderr_deg: f64,
    /// Trials where the estimator reported fewer than M DOAs.
    pub shortfalls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmseCurve {
    pub algorithm: AlgorithmKind,
    pub points: Vec<RmsePoint>,
    pub n_trials: usize,
}

/// Per-source absolute errors after order-preserving matching.
///
/// Both lists are sorted ascending. With equal lengths this is plain sorted
/// pairing. With fewer estimates, they are matched in order to the subset of
/// true DOAs that minimizes the squared error, and every unmatched true DOA
/// is charged [`SHORTFALL_PENALTY_DEG`]. Extra estimates beyond M are dropped
/// from the high end.
pub fn match_sorted(truth_deg: &[f64], estimates_deg: &[f64]) -> Vec<f64> {
    let mut truth = truth_deg.to_vec();
    truth.sort_by(f64::total_cmp);
    let mut est = estimates_deg.to_vec();
    est.sort_by(f64::total_cmp);
    est.truncate(truth.len());
    let m = truth.len();
    let k = est.len();
    if k == m {
        return truth.iter().zip(&est).map(|(t, e)| (e - t).abs()).collect();
    }
    // cost[i][j]: best squared error matching est[..j] into truth[..i].
    let inf = f64::INFINITY;
    let mut cost = vec![vec![inf; k + 1]; m + 1];
    let mut take = vec![vec![false; k + 1]; m + 1];
    cost[0][0] = 0.0;
    for i in 1..=m {
        for j in 0..=k.min(i) {
            let skip = cost[i - 1][j] + SHORTFALL_PENALTY_DEG * SHORTFALL_PENALTY_DEG;
            let pair = if j > 0 {
                cost[i - 1][j - 1] + (est[j - 1] - truth[i - 1]).powi(2)
            } else {
                inf
            };
            if pair <= skip {
                cost[i][j] = pair;
                take[i][j] = true;
            } else {
                cost[i][j] = skip;
            }
        }
    }
    let mut errors = vec![SHORTFALL_PENALTY_DEG; m];
    let (mut i, mut j) = (m, k);
    while i > 0 {
        if take[i][j] {
            errors[i - 1] = (est[j - 1] - truth[i - 1]).abs();
            j -= 1;
        }
        i -= 1;
    }
    errors
}

/// RMSE curve per configured algorithm over the SNR sweep.
pub fn run_rmse_experiment(config: &ExperimentConfig) -> Result<Vec<RmseCurve>> {
    let prepared = prepare(config)?;
    let truth = &config.doas_deg;
    let m = truth.len() as f64;
    let mut curves: Vec<RmseCurve> = config
        .algorithms
        .iter()
        .map(|a| RmseCurve {
            algorithm: a.kind,
            points: Vec::with_capacity(config.noise_levels.len()),
            n_trials: config.n_trials,
        })
        .collect();
    for (snr_index, noise) in config.noise_levels.iter().enumerate() {
        let trials = run_trials_prepared(config, &prepared, snr_index, &config.algorithms)?;
        for (a_index, curve) in curves.iter_mut().enumerate() {
            let per_trial: Vec<f64> = trials
                .iter()
                .map(|t| {
                    let o = &t.algorithms[a_index];
                    match_sorted(truth, &o.angles_deg)
                        .iter()
                        .map(|e| e * e)
                        .sum::<f64>()
                        / m
                })
                .collect();
            let shortfalls = trials
                .iter()
                .filter(|t| t.algorithms[a_index].shortfall)
                .count();
            curve
                .points
                .push(rmse_point(noise.snr_db(), &per_trial, shortfalls));
        }
    }
    Ok(curves)
}

fn rmse_point(snr_db: f64, per_trial_mse: &[f64], shortfalls: usize) -> RmsePoint {
    let t = per_trial_mse.len() as f64;
    let mse = per_trial_mse.iter().sum::<f64>() / t;
    let rmse = mse.sqrt();
    let stderr = if per_trial_mse.len() > 1 && rmse > 0.0 {
        let var = per_trial_mse.iter().map(|v| (v - mse).powi(2)).sum::<f64>() / (t - 1.0);
        (var / t).sqrt() / (2.0 * rmse)
    } else {
        0.0
    };
    RmsePoint {
        snr_db,
        rmse_deg: rmse,
        stderr_deg: stderr,
        shortfalls,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyTrial {
    /// Normalized to max 1, then divided by the trial count.
    pub spectrum: AngleSpectrum,
    /// Sorted OMP support.
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyResult {
    pub trials: Vec<ConsistencyTrial>,
    /// Bin-wise sum of the scaled trial spectra.
    pub aggregate: AngleSpectrum,
    pub modal_support: Vec<usize>,
    /// Fraction of trials whose support equals the modal support.
    pub stability: f64,
}

/// Repeated OMP recoveries of one source realization. Noise and, unless a
/// fixed seed is configured, the measurement matrix are redrawn per trial.
pub fn run_consistency_experiment(config: &ExperimentConfig) -> Result<ConsistencyResult> {
    if config.noise_levels.len() != 1 {
        return Err(DoaError::Config(format!(
            "a consistency run takes exactly one SNR value, got {}",
            config.noise_levels.len()
        )));
    }
    if let Some(a) = config
        .algorithms
        .iter()
        .find(|a| a.kind != AlgorithmKind::Omp)
    {
        return Err(DoaError::Config(format!(
            "consistency runs omp only, found {}",
            a.kind
        )));
    }
    if !config.has(AlgorithmKind::Omp) {
        return Err(DoaError::Config(
            "consistency needs the omp algorithm".into(),
        ));
    }
    let prepared = prepare(config)?;
    let noise = config.noise_levels[0];
    let outcomes: Vec<TrialOutcome> = (0..config.n_trials)
        .into_par_iter()
        .map(|t| {
            let trial_path = [0u64, t as u64];
            run_one(
                config,
                &prepared,
                noise,
                t,
                TrialKey {
                    waveform_path: &[],
                    trial_path: &trial_path,
                },
                &config.algorithms,
            )
        })
        .collect::<Result<_>>()?;

    let scale = 1.0 / config.n_trials as f64;
    let mut trials = Vec::with_capacity(outcomes.len());
    let mut aggregate = vec![0.0; config.grid.len()];
    for o in &outcomes {
        let omp = o.get(AlgorithmKind::Omp).expect("omp configured");
        let spectrum = omp
            .spectrum
            .as_ref()
            .expect("omp always yields a spectrum")
            .normalized()
            .scaled(scale);
        for (acc, p) in aggregate.iter_mut().zip(spectrum.power()) {
            *acc += p;
        }
        let mut support = omp.support.clone().unwrap_or_default();
        support.sort_unstable();
        trials.push(ConsistencyTrial { spectrum, support });
    }
    let modal_support = modal(trials.iter().map(|t| t.support.clone()).collect());
    let matching = trials.iter().filter(|t| t.support == modal_support).count();
    Ok(ConsistencyResult {
        stability: matching as f64 / trials.len() as f64,
        aggregate: AngleSpectrum::new(config.grid.clone(), aggregate)?,
        modal_support,
        trials,
    })
}

/// Most frequent support; the earliest trial wins ties.
fn modal(supports: Vec<Vec<usize>>) -> Vec<usize> {
    let mut best: Option<(usize, &Vec<usize>)> = None;
    for s in &supports {
        let count = supports.iter().filter(|o| *o == s).count();
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, s));
        }
    }
    best.map(|(_, s)| s.clone()).unwrap_or_default()
}
