use std::collections::HashMap;

use ndarray::{ArrayView1, ArrayView2};

use super::{check_inputs, EstimatorConfig, MiEstimate};
use crate::error::Result;

/// Equal-width bin index of each value over its own [min, max] range.
fn bin_column<'a>(values: impl Iterator<Item = &'a f64> + Clone, bins: usize) -> Vec<u32> {
    let (lo, hi) = values
        .clone()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let width = hi - lo;
    values
        .map(|&v| {
            if width <= 0.0 {
                0
            } else {
                (((v - lo) / width * bins as f64) as usize).min(bins - 1) as u32
            }
        })
        .collect()
}

/// Binned plug-in estimate. `x` columns and `y` are each cut into
/// `config.bins` equal-width bins; the pointwise term of a sample is
/// `ln(p(bx, by) / (p(bx) p(by)))` at its cell.
pub fn histogram_mi(
    x: ArrayView2<'_, f64>,
    y: ArrayView1<'_, f64>,
    config: &EstimatorConfig,
) -> Result<MiEstimate> {
    config.validate()?;
    check_inputs(x, y, 2)?;
    let n = y.len();
    let x_cols: Vec<Vec<u32>> = x
        .columns()
        .into_iter()
        .map(|c| bin_column(c.iter(), config.bins))
        .collect();
    let y_bins = bin_column(y.iter(), config.bins);
    let x_cells: Vec<Vec<u32>> = (0..n)
        .map(|i| x_cols.iter().map(|c| c[i]).collect())
        .collect();

    let mut joint: HashMap<(&[u32], u32), usize> = HashMap::new();
    let mut marg_x: HashMap<&[u32], usize> = HashMap::new();
    let mut marg_y: HashMap<u32, usize> = HashMap::new();
    for i in 0..n {
        *joint.entry((&x_cells[i], y_bins[i])).or_default() += 1;
        *marg_x.entry(&x_cells[i]).or_default() += 1;
        *marg_y.entry(y_bins[i]).or_default() += 1;
    }
    let nf = n as f64;
    let terms = (0..n)
        .map(|i| {
            let nxy = joint[&(x_cells[i].as_slice(), y_bins[i])] as f64;
            let nx = marg_x[x_cells[i].as_slice()] as f64;
            let ny = marg_y[&y_bins[i]] as f64;
            (nxy * nf / (nx * ny)).ln()
        })
        .collect();
    Ok(MiEstimate::from_terms(terms, None))
}
