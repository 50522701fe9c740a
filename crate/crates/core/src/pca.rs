//! Two-component PCA projection for plotting embeddings.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the covariance trace count as
/// zero variance.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `(x, y)` per input row.
    pub coords: Vec<[f64; 2]>,
    /// Variance captured by each output axis.
    pub variances: [f64; 2],
    /// Number of axes with non-zero variance (0, 1 or 2).
    pub rank: usize,
}

/// Projects rows onto the two leading principal axes of the centered data.
///
/// Axes are ordered by decreasing eigenvalue; each axis is signed so that its
/// largest-magnitude loading is positive. An axis without variance projects
/// to zero and logs a warning.
pub fn project_2d(u: &EmbeddingMatrix) -> Result<Projection> {
    let (rows, dim) = (u.rows(), u.dim());
    if rows == 0 || dim == 0 {
        return Err(Error::invalid("cannot project an empty matrix"));
    }
    let mut mean = vec![0.0; dim];
    for k in 0..rows {
        for (m, v) in mean.iter_mut().zip(u.row(k)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    let centered = DMatrix::from_fn(rows, dim, |k, j| u.row(k)[j] - mean[j]);
    let cov = centered.transpose() * &centered / (rows as f64);

    let eig = SymmetricEigen::new(cov.clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let trace = cov.trace();

    let mut axes: Vec<Option<Vec<f64>>> = Vec::with_capacity(2);
    let mut variances = [0.0; 2];
    for slot in 0..2 {
        let Some(&idx) = order.get(slot) else {
            axes.push(None);
            continue;
        };
        let lambda = eig.eigenvalues[idx];
        if trace <= 0.0 || lambda <= RANK_TOLERANCE * trace {
            axes.push(None);
            continue;
        }
        let mut axis: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let lead = axis.iter().copied().fold(
            0.0f64,
            |best, v| if v.abs() > best.abs() { v } else { best },
        );
        if lead < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        variances[slot] = lambda;
        axes.push(Some(axis));
    }
    let rank = axes.iter().filter(|a| a.is_some()).count();
    if rank < 2 {
        warn!("covariance has rank {rank} < 2; missing components are set to zero");
    }

    let coords = (0..rows)
        .map(|k| {
            let row = centered.row(k);
            let mut xy = [0.0; 2];
            for (slot, axis) in axes.iter().enumerate() {
                if let Some(axis) = axis {
                    xy[slot] = row.iter().zip(axis).map(|(a, b)| a * b).sum();
                }
            }
            xy
        })
        .collect();
    Ok(Projection {
        coords,
        variances,
        rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairwise(points: &[Vec<f64>]) -> Vec<f64> {
        let mut out = Vec::new();
        for a in 0..points.len() {
            for b in (a + 1)..points.len() {
                let d: f64 = points[a]
                    .iter()
                    .zip(&points[b])
                    .map(|(x, y)| (x - y).powi(2))
                    .sum();
                out.push(d.sqrt());
            }
        }
        out
    }

    #[test]
    fn centered_2d_data_is_rotated() {
        let pts = vec![
            vec![1.0, 0.5],
            vec![-2.0, 0.3],
            vec![0.5, -1.5],
            vec![0.5, 0.7],
        ];
        let u = EmbeddingMatrix::from_rows(&pts).unwrap();
        let proj = project_2d(&u).unwrap();
        assert_eq!(proj.rank, 2);
        let out: Vec<Vec<f64>> = proj.coords.iter().map(|c| c.to_vec()).collect();
        for (a, b) in pairwise(&pts).iter().zip(pairwise(&out)) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(proj.variances[0] >= proj.variances[1]);
    }

    #[test]
    fn identical_rows_project_to_origin() {
        let u = EmbeddingMatrix::from_rows(&vec![vec![0.3, -1.0, 2.0]; 5]).unwrap();
        let proj = project_2d(&u).unwrap();
        assert_eq!(proj.rank, 0);
        assert!(proj.coords.iter().all(|c| *c == [0.0, 0.0]));
    }

    #[test]
    fn planar_3d_points_keep_distances() {
        // Points on the plane spanned by (1, 2, 0) and (0, 1, -1), offset.
        let s = [
            (0.0, 0.0),
            (1.0, 0.5),
            (-2.0, 1.0),
            (0.5, -1.5),
            (3.0, 2.0),
            (-1.0, -1.0),
        ];
        let pts: Vec<Vec<f64>> = s
            .iter()
            .map(|&(a, b)| vec![1.0 + a, 2.0 + 2.0 * a + b, -3.0 - b])
            .collect();
        let proj = project_2d(&EmbeddingMatrix::from_rows(&pts).unwrap()).unwrap();
        let out: Vec<Vec<f64>> = proj.coords.iter().map(|c| c.to_vec()).collect();
        for (a, b) in pairwise(&pts).iter().zip(pairwise(&out)) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_points_fill_second_axis_with_zero() {
        let pts: Vec<Vec<f64>> = (0..4).map(|t| vec![t as f64, 2.0 * t as f64]).collect();
        let proj = project_2d(&EmbeddingMatrix::from_rows(&pts).unwrap()).unwrap();
        assert_eq!(proj.rank, 1);
        assert!(proj.coords.iter().all(|c| c[1] == 0.0));
    }

    #[test]
    fn sign_convention_makes_leading_loading_positive() {
        let pts: Vec<Vec<f64>> = vec![
            vec![-3.0, 0.1],
            vec![3.0, -0.1],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let proj = project_2d(&EmbeddingMatrix::from_rows(&pts).unwrap()).unwrap();
        // First axis is +x: the row with the largest x maps to positive x.
        assert!(proj.coords[1][0] > 0.0);
    }
}
