//! Measurement matrices and the compressed sparse model `y = Phi A s`.

use serde::{Deserialize, Serialize};

use crate::array::Dictionary;
use crate::error::{DoaError, Result};
use crate::linalg::{CMatrix, CVector};
use crate::synth::complex_gaussian;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementKind {
    Identity,
    ComplexGaussian,
}

impl MeasurementKind {
    pub fn name(&self) -> &'static str {
        match self {
            MeasurementKind::Identity => "identity",
            MeasurementKind::ComplexGaussian => "complex-gaussian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    kind: MeasurementKind,
    matrix: CMatrix,
    seed: Option<u64>,
}

impl MeasurementMatrix {
    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }
}

/// Build an `m x n` measurement matrix. Gaussian entries are CN(0, 1/m).
pub fn make_measurement_matrix(
    kind: MeasurementKind,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<MeasurementMatrix> {
    if m == 0 || n == 0 {
        return Err(DoaError::Dimension(
            "measurement matrix needs m, n >= 1".into(),
        ));
    }
    if m > n {
        return Err(DoaError::Dimension(format!(
            "measurement rows {m} exceed sensor count {n}"
        )));
    }
    match kind {
        MeasurementKind::Identity => {
            if m != n {
                return Err(DoaError::Kind(format!(
                    "identity measurement needs m = n, got {m} x {n}"
                )));
            }
            Ok(MeasurementMatrix {
                kind,
                matrix: CMatrix::identity(n, n),
                seed: None,
            })
        }
        MeasurementKind::ComplexGaussian => {
            let mut rng = crate::rng::stream(seed, &[crate::rng::purpose::MEASUREMENT]);
            let var = 1.0 / m as f64;
            // Row-major fill so the matrix for a seed does not depend on storage order.
            let mut matrix = CMatrix::zeros(m, n);
            for r in 0..m {
                for c in 0..n {
                    matrix[(r, c)] = complex_gaussian(&mut rng, var);
                }
            }
            Ok(MeasurementMatrix {
                kind,
                matrix,
                seed: Some(seed),
            })
        }
    }
}

/// Compressed snapshot `y = Phi x`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredVector {
    data: CVector,
    kind: MeasurementKind,
    snapshot_index: usize,
}

impl MeasuredVector {
    pub fn new(data: CVector, kind: MeasurementKind, snapshot_index: usize) -> Self {
        Self {
            data,
            kind,
            snapshot_index,
        }
    }

    pub fn data(&self) -> &CVector {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn kind(&self) -> MeasurementKind {
        self.kind
    }

    pub fn snapshot_index(&self) -> usize {
        self.snapshot_index
    }
}

pub fn compress(phi: &MeasurementMatrix, x: &CVector) -> Result<MeasuredVector> {
    compress_snapshot(phi, x, 0)
}

/// [`compress`] recording which snapshot `x` came from.
pub fn compress_snapshot(
    phi: &MeasurementMatrix,
    x: &CVector,
    snapshot_index: usize,
) -> Result<MeasuredVector> {
    if x.len() != phi.cols() {
        return Err(DoaError::Dimension(format!(
            "measurement matrix has {} columns, snapshot has {} entries",
            phi.cols(),
            x.len()
        )));
    }
    let data = match phi.kind {
        MeasurementKind::Identity => x.clone(),
        MeasurementKind::ComplexGaussian => &phi.matrix * x,
    };
    Ok(MeasuredVector::new(data, phi.kind, snapshot_index))
}

/// Effective dictionary `Psi = Phi A` together with its column norms.
#[derive(Debug, Clone)]
pub struct EffectiveDictionary {
    matrix: CMatrix,
    column_norms: Vec<f64>,
}

impl EffectiveDictionary {
    /// Wrap an arbitrary matrix; zero columns are rejected.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let column_norms: Vec<f64> = matrix.column_iter().map(|c| c.norm()).collect();
        if let Some(j) = column_norms
            .iter()
            .position(|&n| !(n > 0.0 && n.is_finite()))
        {
            return Err(DoaError::Invariant(format!(
                "dictionary column {j} has zero norm"
            )));
        }
        Ok(Self {
            matrix,
            column_norms,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn column_norms(&self) -> &[f64] {
        &self.column_norms
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_atoms(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn effective_dictionary(
    phi: &MeasurementMatrix,
    dict: &Dictionary,
) -> Result<EffectiveDictionary> {
    if phi.cols() != dict.matrix().nrows() {
        return Err(DoaError::Dimension(format!(
            "measurement matrix has {} columns, dictionary has {} rows",
            phi.cols(),
            dict.matrix().nrows()
        )));
    }
    let matrix = match phi.kind {
        MeasurementKind::Identity => dict.matrix().clone(),
        MeasurementKind::ComplexGaussian => phi.matrix() * dict.matrix(),
    };
    EffectiveDictionary::from_matrix(matrix)
}

/// Whether `m` meets the `m >= M ln N` measurement count for `n_sources`.
pub fn measurement_count_sufficient(m: usize, n_sensors: usize, n_sources: usize) -> bool {
    m as f64 >= n_sources as f64 * (n_sensors as f64).ln()
}

/// Log a warning when a compressive matrix is below the `M ln N` count.
pub fn warn_if_undersampled(phi: &MeasurementMatrix, n_sources: usize) -> bool {
    let short = phi.kind == MeasurementKind::ComplexGaussian
        && !measurement_count_sufficient(phi.rows(), phi.cols(), n_sources);
    if short {
        log::warn!(
            "{} measurements for {} sources on {} sensors is below M ln N = {:.2}",
            phi.rows(),
            n_sources,
            phi.cols(),
            n_sources as f64 * (phi.cols() as f64).ln()
        );
    }
    short
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{build_dictionary, AngleGrid, ArrayGeometry};
    use crate::linalg::numerical_rank;
    use num_complex::Complex64;

    #[test]
    fn identity_matrix() {
        let phi = make_measurement_matrix(MeasurementKind::Identity, 15, 15, 0).unwrap();
        assert_eq!(phi.matrix(), &CMatrix::identity(15, 15));
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            make_measurement_matrix(MeasurementKind::ComplexGaussian, 16, 15, 0),
            Err(DoaError::Dimension(_))
        ));
        assert!(matches!(
            make_measurement_matrix(MeasurementKind::Identity, 8, 15, 0),
            Err(DoaError::Kind(_))
        ));
    }

    #[test]
    fn gaussian_entry_power() {
        // Pool 50 seeds so the mean over 6000 entries is within 5% comfortably.
        let mut total = 0.0;
        let mut count = 0usize;
        for seed in 0..50 {
            let phi =
                make_measurement_matrix(MeasurementKind::ComplexGaussian, 8, 15, seed).unwrap();
            assert_eq!(phi.matrix().shape(), (8, 15));
            total += phi.matrix().iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += 8 * 15;
        }
        let mean = total / count as f64;
        assert!(
            (mean * 8.0 - 1.0).abs() < 0.05,
            "mean squared magnitude {mean}"
        );
    }

    #[test]
    fn gaussian_is_deterministic() {
        let a = make_measurement_matrix(MeasurementKind::ComplexGaussian, 6, 15, 42).unwrap();
        let b = make_measurement_matrix(MeasurementKind::ComplexGaussian, 6, 15, 42).unwrap();
        let c = make_measurement_matrix(MeasurementKind::ComplexGaussian, 6, 15, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn compress_examples() {
        let id = make_measurement_matrix(MeasurementKind::Identity, 3, 3, 0).unwrap();
        let x = CVector::from_vec(vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-3.0, 0.5),
            Complex64::new(0.0, -1.0),
        ]);
        assert_eq!(compress(&id, &x).unwrap().data(), &x);
        assert_eq!(
            compress(&id, &CVector::zeros(3)).unwrap().data(),
            &CVector::zeros(3)
        );

        let mut row = CMatrix::zeros(1, 3);
        row[(0, 1)] = Complex64::new(1.0, 0.0);
        let phi = MeasurementMatrix {
            kind: MeasurementKind::ComplexGaussian,
            matrix: row,
            seed: None,
        };
        assert_eq!(compress(&phi, &x).unwrap().data()[0], x[1]);
        assert!(compress(&id, &CVector::zeros(4)).is_err());
    }

    #[test]
    fn identity_effective_dictionary_is_bit_identical() {
        let g = ArrayGeometry::half_wavelength(15).unwrap();
        let d = build_dictionary(&g, &AngleGrid::default_scan());
        let phi = make_measurement_matrix(MeasurementKind::Identity, 15, 15, 0).unwrap();
        let psi = effective_dictionary(&phi, &d).unwrap();
        assert_eq!(psi.matrix(), d.matrix());
        assert!(psi
            .column_norms()
            .iter()
            .all(|&n| (n - 15f64.sqrt()).abs() < 1e-12));
    }

    #[test]
    fn zero_column_guarded() {
        let mut m = CMatrix::identity(3, 3);
        m.set_column(1, &CVector::zeros(3));
        assert!(matches!(
            EffectiveDictionary::from_matrix(m),
            Err(DoaError::Invariant(_))
        ));
    }

    #[test]
    fn compressive_dictionary_rank() {
        let g = ArrayGeometry::half_wavelength(15).unwrap();
        let d = build_dictionary(&g, &AngleGrid::default_scan());
        let phi = make_measurement_matrix(MeasurementKind::ComplexGaussian, 8, 15, 5).unwrap();
        let psi = effective_dictionary(&phi, &d).unwrap();
        assert_eq!(psi.matrix().shape(), (8, 181));
        assert_eq!(numerical_rank(psi.matrix(), 1e-10), 8);
    }

    #[test]
    fn undersampling_warning() {
        let phi = make_measurement_matrix(MeasurementKind::ComplexGaussian, 6, 15, 1).unwrap();
        assert!(warn_if_undersampled(&phi, 3));
        let phi = make_measurement_matrix(MeasurementKind::ComplexGaussian, 9, 15, 1).unwrap();
        assert!(!warn_if_undersampled(&phi, 3));
        let id = make_measurement_matrix(MeasurementKind::Identity, 15, 15, 1).unwrap();
        assert!(!warn_if_undersampled(&id, 10));
    }
}
