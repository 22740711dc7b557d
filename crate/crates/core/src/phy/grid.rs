use num_complex::Complex64;

use super::Numerology;
use crate::error::{invalid, Result};

/// Complex symbols on a subcarrier x OFDM-symbol lattice for one subframe.
///
/// Storage is symbol-major: element `(l, k)` is at `l * n_subcarriers + k`.
/// Elements that were never mapped stay exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceGrid {
    n_subcarriers: usize,
    n_symbols: usize,
    data: Vec<Complex64>,
    occupied: Vec<bool>,
}

impl ResourceGrid {
    pub fn new(num: &Numerology) -> Self {
        Self::with_size(num.n_subcarriers(), num.symbols_per_subframe)
    }

    pub fn with_size(n_subcarriers: usize, n_symbols: usize) -> Self {
        let n = n_subcarriers * n_symbols;
        Self { n_subcarriers, n_symbols, data: vec![Complex64::new(0.0, 0.0); n], occupied: vec![false; n] }
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_subcarriers
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn matches(&self, num: &Numerology) -> bool {
        self.n_subcarriers == num.n_subcarriers() && self.n_symbols == num.symbols_per_subframe
    }

    pub fn get(&self, symbol: usize, subcarrier: usize) -> Complex64 {
        self.data[symbol * self.n_subcarriers + subcarrier]
    }

    pub fn is_occupied(&self, symbol: usize, subcarrier: usize) -> bool {
        self.occupied[symbol * self.n_subcarriers + subcarrier]
    }

    pub fn symbol(&self, symbol: usize) -> &[Complex64] {
        let start = symbol * self.n_subcarriers;
        &self.data[start..start + self.n_subcarriers]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn occupied_mask(&self) -> &[bool] {
        &self.occupied
    }

    /// Places `symbols` contiguously from subcarrier `rb_offset * 12` of OFDM
    /// symbol `symbol_index`.
    pub fn map(&mut self, symbols: &[Complex64], symbol_index: usize, rb_offset: usize) -> Result<()> {
        if symbols.is_empty() {
            return Ok(());
        }
        let first = rb_offset * 12;
        if symbol_index >= self.n_symbols || first + symbols.len() > self.n_subcarriers {
            return invalid(format!(
                "mapping {} symbols at symbol {symbol_index}, rb {rb_offset} exceeds the grid",
                symbols.len()
            ));
        }
        let base = symbol_index * self.n_subcarriers + first;
        if self.occupied[base..base + symbols.len()].iter().any(|&o| o) {
            return invalid(format!("symbol {symbol_index}: target elements already occupied"));
        }
        self.data[base..base + symbols.len()].copy_from_slice(symbols);
        self.occupied[base..base + symbols.len()].fill(true);
        Ok(())
    }

    /// Builds a grid from received values; every element counts as occupied.
    pub(crate) fn from_received(n_subcarriers: usize, n_symbols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), n_subcarriers * n_symbols);
        let occupied = vec![true; data.len()];
        Self { n_subcarriers, n_symbols, data, occupied }
    }

    #[cfg(test)]
    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Functional form of [`ResourceGrid::map`].
pub fn map_to_grid(
    symbols: &[Complex64],
    symbol_index: usize,
    rb_offset: usize,
    mut grid: ResourceGrid,
) -> Result<ResourceGrid> {
    grid.map(symbols, symbol_index, rb_offset)?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Vec<Complex64> {
        vec![Complex64::new(1.0, 0.0); n]
    }

    #[test]
    fn full_allocation_fills_symbol() {
        let num = Numerology::default();
        let grid = map_to_grid(&ones(300), 4, 0, ResourceGrid::new(&num)).unwrap();
        assert_eq!(grid.occupied_count(), 300);
        assert!((0..300).all(|k| grid.is_occupied(4, k)));
        assert!(!grid.is_occupied(3, 0));
    }

    #[test]
    fn overlap_is_rejected() {
        let num = Numerology::default();
        let grid = map_to_grid(&ones(24), 2, 1, ResourceGrid::new(&num)).unwrap();
        assert!(map_to_grid(&ones(12), 2, 2, grid.clone()).is_err());
        assert!(map_to_grid(&ones(12), 2, 0, grid).is_ok());
    }

    #[test]
    fn out_of_range_is_rejected() {
        let num = Numerology::default();
        assert!(map_to_grid(&ones(12), 14, 0, ResourceGrid::new(&num)).is_err());
        assert!(map_to_grid(&ones(24), 0, 24, ResourceGrid::new(&num)).is_err());
    }

    #[test]
    fn empty_mapping_is_noop() {
        let num = Numerology::default();
        let grid = ResourceGrid::new(&num);
        let mapped = map_to_grid(&[], 5, 0, grid.clone()).unwrap();
        assert_eq!(mapped, grid);
    }
}
