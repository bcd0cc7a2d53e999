use crate::array::AngleGrid;
use crate::error::{DoaError, Result};

/// Nonnegative power per scan-grid angle.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleSpectrum {
    grid: AngleGrid,
    power: Vec<f64>,
}

impl AngleSpectrum {
    pub fn new(grid: AngleGrid, power: Vec<f64>) -> Result<Self> {
        if power.len() != grid.len() {
            return Err(DoaError::Dimension(format!(
                "spectrum has {} bins, grid has {}",
                power.len(),
                grid.len()
            )));
        }
        if let Some(j) = power.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(DoaError::Invariant(format!(
                "spectrum bin {j} is {} (must be finite and nonnegative)",
                power[j]
            )));
        }
        Ok(Self { grid, power })
    }

    pub fn zeros(grid: AngleGrid) -> Self {
        let power = vec![0.0; grid.len()];
        Self { grid, power }
    }

    pub fn grid(&self) -> &AngleGrid {
        &self.grid
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn max(&self) -> f64 {
        self.power.iter().copied().fold(0.0, f64::max)
    }

    /// Copy scaled so the largest bin is exactly 1. All-zero spectra are
    /// returned unchanged.
    pub fn normalized(&self) -> Self {
        let max = self.max();
        if max == 0.0 {
            return self.clone();
        }
        let power = self
            .power
            .iter()
            .map(|p| if *p == max { 1.0 } else { p / max })
            .collect();
        Self {
            grid: self.grid.clone(),
            power,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            power: self.power.iter().map(|p| p * factor).collect(),
        }
    }

    /// Bin indices ordered by descending power, lower index first on ties.
    pub fn ranked_bins(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.power.len()).collect();
        idx.sort_by(|&a, &b| self.power[b].total_cmp(&self.power[a]).then(a.cmp(&b)));
        idx
    }
}
