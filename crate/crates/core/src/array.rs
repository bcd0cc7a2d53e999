//! Uniform linear array geometry, steering vectors and scan-grid
//! dictionaries.
//!
//! Angles are in degrees measured from broadside and lie in [-90, 90].
//! The [0, 180) convention measured from the array axis is the same
//! manifold under `theta_axis = 90 - theta_broadside`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DoaError, Result};
use crate::linalg::{numerical_rank, CMatrix, CVector};

/// Relative singular-value threshold for the exhaustive spark rank test.
pub const SPARK_RANK_TOL: f64 = 1e-8;

/// Largest grid [`spark_bruteforce`] will enumerate.
pub const SPARK_MAX_COLUMNS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    n_sensors: usize,
    spacing: f64,
}

impl ArrayGeometry {
    /// `spacing` is the inter-sensor distance in wavelengths.
    pub fn new(n_sensors: usize, spacing: f64) -> Result<Self> {
        if n_sensors < 2 {
            return Err(DoaError::Domain(format!(
                "array needs at least 2 sensors, got {n_sensors}"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(DoaError::Domain(format!(
                "sensor spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self { n_sensors, spacing })
    }

    /// Half-wavelength array with `n_sensors` elements.
    pub fn half_wavelength(n_sensors: usize) -> Result<Self> {
        Self::new(n_sensors, 0.5)
    }

    pub fn n_sensors(&self) -> usize {
        self.n_sensors
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }
}

/// Ordered set of scan angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    points: Vec<f64>,
}

impl AngleGrid {
    /// Inclusive grid `start, start + step, ...` up to `stop`.
    pub fn uniform(start_deg: f64, stop_deg: f64, step_deg: f64) -> Result<Self> {
        if !(start_deg.is_finite() && stop_deg.is_finite() && step_deg.is_finite()) {
            return Err(DoaError::Domain("grid bounds must be finite".into()));
        }
        if step_deg <= 0.0 {
            return Err(DoaError::Domain(format!(
                "grid step must be positive, got {step_deg}"
            )));
        }
        if start_deg >= stop_deg {
            return Err(DoaError::Domain(format!(
                "grid start {start_deg} must be below stop {stop_deg}"
            )));
        }
        let count = ((stop_deg - start_deg) / step_deg + 1e-9).floor() as usize + 1;
        let points = (0..count)
            .map(|i| start_deg + i as f64 * step_deg)
            .collect();
        Self::from_points(points)
    }

    /// The -90..=90 degree grid with 1 degree resolution (181 points).
    pub fn default_scan() -> Self {
        Self::uniform(-90.0, 90.0, 1.0).expect("default grid is valid")
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(DoaError::Domain("grid needs at least 2 points".into()));
        }
        for &p in &points {
            check_angle(p)?;
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(DoaError::Domain(
                "grid points must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn angle(&self, index: usize) -> f64 {
        self.points[index]
    }

    pub fn start(&self) -> f64 {
        self.points[0]
    }

    pub fn stop(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    /// Index of the grid point within `tol_deg` of `angle_deg`, if any.
    pub fn index_of(&self, angle_deg: f64, tol_deg: f64) -> Option<usize> {
        self.points
            .iter()
            .position(|&p| (p - angle_deg).abs() <= tol_deg)
    }

    /// Index of the grid point closest to `angle_deg` (lower index on ties).
    pub fn nearest_index(&self, angle_deg: f64) -> usize {
        let mut best = 0;
        for (i, &p) in self.points.iter().enumerate() {
            if (p - angle_deg).abs() < (self.points[best] - angle_deg).abs() {
                best = i;
            }
        }
        best
    }
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&theta_deg) {
        return Err(DoaError::Domain(format!(
            "angle {theta_deg} deg is outside [-90, 90]"
        )));
    }
    Ok(())
}

/// Array response to a far-field narrowband source at `theta_deg`:
/// element k is `exp(-i 2 pi d k sin(theta))`.
pub fn steering_vector(geometry: &ArrayGeometry, theta_deg: f64) -> Result<CVector> {
    check_angle(theta_deg)?;
    Ok(steering_unchecked(geometry, theta_deg))
}

pub(crate) fn steering_unchecked(geometry: &ArrayGeometry, theta_deg: f64) -> CVector {
    let phase_step = -2.0 * PI * geometry.spacing * theta_deg.to_radians().sin();
    CVector::from_fn(geometry.n_sensors, |k, _| {
        if k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, phase_step * k as f64)
        }
    })
}

/// Steering matrix with one column per angle.
pub fn steering_matrix(geometry: &ArrayGeometry, angles_deg: &[f64]) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(geometry.n_sensors, angles_deg.len());
    for (j, &theta) in angles_deg.iter().enumerate() {
        m.set_column(j, &steering_vector(geometry, theta)?);
    }
    Ok(m)
}

/// The N x Ns steering matrix evaluated on a scan grid.
#[derive(Debug, Clone)]
pub struct Dictionary {
    matrix: CMatrix,
    grid: AngleGrid,
    geometry: ArrayGeometry,
}

impl Dictionary {
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    pub fn n_atoms(&self) -> usize {
        self.matrix.ncols()
    }
}

pub fn build_dictionary(geometry: &ArrayGeometry, grid: &AngleGrid) -> Dictionary {
    let mut matrix = CMatrix::zeros(geometry.n_sensors, grid.len());
    for (j, &theta) in grid.points().iter().enumerate() {
        matrix.set_column(j, &steering_unchecked(geometry, theta));
    }
    Dictionary {
        matrix,
        grid: grid.clone(),
        geometry: *geometry,
    }
}

/// Spark of the continuous ULA steering manifold: any N steering vectors at
/// distinct (non-aliased) angles are independent, and N+1 always span C^N.
pub fn spark_ula(geometry: &ArrayGeometry) -> usize {
    geometry.n_sensors + 1
}

/// Exhaustive spark of a dictionary: the size of the smallest linearly
/// dependent column subset among subsets of size `<= max_subset`, or `None`.
pub fn spark_bruteforce(dictionary: &Dictionary, max_subset: usize) -> Result<Option<usize>> {
    spark_of_columns(dictionary.matrix(), max_subset)
}

/// [`spark_bruteforce`] on a bare matrix, for column sets that do not form a
/// valid scan grid (for instance repeated angles).
pub fn spark_of_columns(matrix: &CMatrix, max_subset: usize) -> Result<Option<usize>> {
    let n_cols = matrix.ncols();
    if n_cols > SPARK_MAX_COLUMNS {
        return Err(DoaError::Refused(format!(
            "exhaustive spark limited to {SPARK_MAX_COLUMNS} columns, got {n_cols}"
        )));
    }
    for size in 1..=max_subset.min(n_cols) {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            let cols = matrix.select_columns(subset.iter());
            if numerical_rank(&cols, SPARK_RANK_TOL) < size {
                return Ok(Some(size));
            }
            if !next_combination(&mut subset, n_cols) {
                break;
            }
        }
    }
    Ok(None)
}

/// Advance `c` to the next k-subset of `0..n` in lexicographic order.
pub(crate) fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Largest M with `M < (N + rank_x) / 2`.
pub fn max_identifiable_sources(geometry: &ArrayGeometry, rank_x: usize) -> Result<usize> {
    let n = geometry.n_sensors;
    if rank_x == 0 || rank_x > n {
        return Err(DoaError::Domain(format!(
            "rank of the data must lie in 1..={n}, got {rank_x}"
        )));
    }
    Ok(max_identifiable_from_spark(spark_ula(geometry), rank_x))
}

/// Largest M with `M < (spark - 1 + rank_x) / 2`.
pub fn max_identifiable_from_spark(spark: usize, rank_x: usize) -> usize {
    // 2M < spark - 1 + rank  <=>  M <= (spark - 2 + rank) / 2
    (spark + rank_x - 2) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_vec_close(v: &CVector, expected: &[Complex64], tol: f64) {
        assert_eq!(v.len(), expected.len());
        for (a, b) in v.iter().zip(expected) {
            assert!((a - b).norm() < tol, "{a} vs {b}");
        }
    }

    #[test]
    fn broadside_is_all_ones() {
        let g = ArrayGeometry::new(4, 0.5).unwrap();
        let v = steering_vector(&g, 0.0).unwrap();
        assert!(v.iter().all(|&z| z == c(1.0, 0.0)));
    }

    #[test]
    fn endfire_two_sensors() {
        let g = ArrayGeometry::new(2, 0.5).unwrap();
        let v = steering_vector(&g, 90.0).unwrap();
        assert_vec_close(&v, &[c(1.0, 0.0), c(-1.0, 0.0)], 1e-12);
    }

    #[test]
    fn thirty_degrees_quarter_turns() {
        let g = ArrayGeometry::new(3, 0.5).unwrap();
        let v = steering_vector(&g, 30.0).unwrap();
        assert_vec_close(&v, &[c(1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0)], 1e-12);
    }

    #[test]
    fn out_of_range_angle_rejected() {
        let g = ArrayGeometry::new(3, 0.5).unwrap();
        assert!(matches!(
            steering_vector(&g, 90.5),
            Err(DoaError::Domain(_))
        ));
        assert!(matches!(
            steering_vector(&g, -91.0),
            Err(DoaError::Domain(_))
        ));
    }

    #[test]
    fn geometry_and_grid_validation() {
        assert!(ArrayGeometry::new(1, 0.5).is_err());
        assert!(ArrayGeometry::new(4, 0.0).is_err());
        assert!(AngleGrid::uniform(10.0, 10.0, 1.0).is_err());
        assert!(AngleGrid::uniform(-10.0, 10.0, 0.0).is_err());
        assert!(AngleGrid::from_points(vec![0.0, 0.0]).is_err());
        assert_eq!(AngleGrid::default_scan().len(), 181);
        assert_eq!(AngleGrid::uniform(-90.0, 90.0, 10.0).unwrap().len(), 19);
    }

    #[test]
    fn default_dictionary_shape() {
        let g = ArrayGeometry::half_wavelength(15).unwrap();
        let d = build_dictionary(&g, &AngleGrid::default_scan());
        assert_eq!(d.matrix().shape(), (15, 181));
        assert!(d.matrix().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let j0 = d.grid().index_of(0.0, 1e-9).unwrap();
        assert!(d.matrix().column(j0).iter().all(|&z| z == c(1.0, 0.0)));
        for (j, &theta) in d.grid().points().iter().enumerate() {
            assert_eq!(d.matrix().column(j), steering_vector(&g, theta).unwrap());
            let mirror = d.grid().index_of(-theta, 1e-9).unwrap();
            let diff = (d.matrix().column(mirror).map(|z| z.conj()) - d.matrix().column(j)).norm();
            assert!(diff < 1e-12);
        }
    }

    #[test]
    fn spark_closed_form() {
        assert_eq!(spark_ula(&ArrayGeometry::half_wavelength(15).unwrap()), 16);
        assert_eq!(spark_ula(&ArrayGeometry::half_wavelength(2).unwrap()), 3);
        assert_eq!(spark_ula(&ArrayGeometry::half_wavelength(8).unwrap()), 9);
    }

    #[test]
    fn spark_exhaustive_examples() {
        let g4 = ArrayGeometry::half_wavelength(4).unwrap();
        let grid8 = AngleGrid::from_points(vec![-70.0, -45.0, -20.0, -5.0, 10.0, 30.0, 50.0, 75.0])
            .unwrap();
        let d = build_dictionary(&g4, &grid8);
        assert_eq!(spark_bruteforce(&d, 8).unwrap(), Some(5));
        assert_eq!(spark_bruteforce(&d, 4).unwrap(), None);

        let g2 = ArrayGeometry::half_wavelength(2).unwrap();
        let grid3 = AngleGrid::from_points(vec![-30.0, 0.0, 45.0]).unwrap();
        assert_eq!(
            spark_bruteforce(&build_dictionary(&g2, &grid3), 3).unwrap(),
            Some(3)
        );

        let dup = steering_matrix(&g4, &[-20.0, 15.0, 15.0, 60.0]).unwrap();
        assert_eq!(spark_of_columns(&dup, 4).unwrap(), Some(2));

        // -90 and +90 alias onto the same column at half-wavelength spacing.
        let ends = AngleGrid::from_points(vec![-90.0, 0.0, 90.0]).unwrap();
        assert_eq!(
            spark_bruteforce(&build_dictionary(&g4, &ends), 3).unwrap(),
            Some(2)
        );
    }

    #[test]
    fn spark_refuses_large_grids() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let d = build_dictionary(&g, &AngleGrid::uniform(-90.0, 90.0, 5.0).unwrap());
        assert!(matches!(spark_bruteforce(&d, 2), Err(DoaError::Refused(_))));
    }

    #[test]
    fn identifiability_bound() {
        let g15 = ArrayGeometry::half_wavelength(15).unwrap();
        assert_eq!(max_identifiable_sources(&g15, 1).unwrap(), 7);
        assert_eq!(max_identifiable_sources(&g15, 3).unwrap(), 8);
        let g2 = ArrayGeometry::half_wavelength(2).unwrap();
        assert_eq!(max_identifiable_sources(&g2, 1).unwrap(), 1);
        assert!(max_identifiable_sources(&g15, 0).is_err());
        assert!(max_identifiable_sources(&g15, 16).is_err());
    }

    #[test]
    fn identifiability_matches_spark_form() {
        for n in 2..=20 {
            let g = ArrayGeometry::half_wavelength(n).unwrap();
            for r in 1..=n {
                assert_eq!(
                    max_identifiable_sources(&g, r).unwrap(),
                    max_identifiable_from_spark(spark_ula(&g), r)
                );
            }
        }
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1];
        let mut count = 1;
        while next_combination(&mut c, 5) {
            count += 1;
        }
        assert_eq!(count, 10);
        assert_eq!(c, vec![3, 4]);
    }
}
