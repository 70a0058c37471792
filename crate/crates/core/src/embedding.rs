//! Classical multidimensional scaling, Isomap and loading of externally
//! computed embeddings.

use std::path::Path;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph_build::{knn_graph, Ambient, PointCloud};
use crate::metric::{shortest_path_matrix, DistanceMatrix, Graph};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingResult {
    #[serde(skip)]
    pub points: PointCloud,
    pub d: usize,
    /// Eigenvalues backing the `d` coordinates, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Kruskal stress-1 of the embedding against the input distances.
    pub stress: f64,
    /// Negative eigenvalues in the full spectrum.
    pub negative_eigenvalues: usize,
}

/// Eigen-decomposition of the double-centered squared distance matrix,
/// reusable across target dimensions.
#[derive(Debug, Clone)]
pub struct MdsDecomposition {
    n: usize,
    /// Descending.
    values: Vec<f64>,
    /// Column `k` belongs to `values[k]`, sign-normalized.
    vectors: DMatrix<f64>,
    input: DistanceMatrix,
}

impl MdsDecomposition {
    pub fn new(d: &DistanceMatrix) -> Result<Self> {
        if !d.is_connected() {
            return Err(Error::Disconnected);
        }
        let n = d.n();
        if n < 2 {
            return Err(Error::param("MDS needs at least 2 points"));
        }
        let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j).powi(2));
        let row_mean: Vec<f64> = (0..n).map(|i| sq.row(i).sum() / n as f64).collect();
        let grand = row_mean.iter().sum::<f64>() / n as f64;
        let b = DMatrix::from_fn(n, n, |i, j| {
            -0.5 * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand)
        });
        let eig = SymmetricEigen::new(b);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then(a.cmp(&b))
        });
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let lead = (0..n)
                .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
                .unwrap_or(0);
            let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
            vectors.set_column(col, &(v * sign));
        }
        Ok(MdsDecomposition {
            n,
            values,
            vectors,
            input: d.clone(),
        })
    }

    /// Full spectrum, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.values
    }

    pub fn embed(&self, d: usize) -> Result<EmbeddingResult> {
        if d == 0 || d >= self.n {
            return Err(Error::param(format!(
                "target dimension must satisfy 1 ≤ d < n = {}, got {d}",
                self.n
            )));
        }
        let eigenvalues: Vec<f64> = self.values[..d].iter().map(|&l| l.max(0.0)).collect();
        let mut coords = vec![0.0; self.n * d];
        for i in 0..self.n {
            for k in 0..d {
                coords[i * d + k] = self.vectors[(i, k)] * eigenvalues[k].sqrt();
            }
        }
        let points = PointCloud::new(self.n, d, coords)?;
        let negative = self.values.iter().filter(|&&l| l < 0.0).count();
        Ok(EmbeddingResult {
            stress: kruskal_stress(&self.input, &points),
            points,
            d,
            eigenvalues,
            negative_eigenvalues: negative,
        })
    }
}

fn kruskal_stress(d: &DistanceMatrix, p: &PointCloud) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..d.n() {
        for j in (i + 1)..d.n() {
            let e = d.get(i, j);
            num += (e - p.distance(i, j)).powi(2);
            den += e * e;
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Classical (Torgerson) MDS into `d` dimensions.
pub fn classical_mds(d: &DistanceMatrix, dim: usize) -> Result<EmbeddingResult> {
    MdsDecomposition::new(d)?.embed(dim)
}

#[derive(Debug, Clone)]
pub struct IsomapResult {
    pub embedding: EmbeddingResult,
    /// Input indices of the embedded points.
    pub kept: Vec<usize>,
}

/// Geodesic distances on a graph, restricted to its largest component.
pub fn geodesic_metric(graph: &Graph) -> Result<(DistanceMatrix, Vec<usize>)> {
    let full = shortest_path_matrix(graph)?;
    if full.is_connected() {
        return Ok((full, (0..graph.n()).collect()));
    }
    let kept = full.largest_component();
    log::warn!(
        "neighborhood graph is disconnected; embedding the largest component ({} of {} points)",
        kept.len(),
        graph.n()
    );
    Ok((full.submatrix(&kept)?, kept))
}

/// Isomap: geodesic distances on the symmetric kNN graph, then classical MDS.
pub fn isomap<'a>(points: impl Into<Ambient<'a>>, k: usize, dim: usize) -> Result<IsomapResult> {
    let graph = knn_graph(points, k)?.to_graph();
    let (d, kept) = geodesic_metric(&graph)?;
    Ok(IsomapResult {
        embedding: classical_mds(&d, dim)?,
        kept,
    })
}

/// Reads an `n × d` coordinate CSV (header optional) and checks its row count.
pub fn load_external_embedding(path: &Path, expected_n: Option<usize>) -> Result<PointCloud> {
    let cloud = PointCloud::read_csv(path)?;
    if let Some(n) = expected_n {
        if cloud.n() != n {
            return Err(Error::RowMismatch {
                expected: n,
                found: cloud.n(),
            });
        }
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn max_error(d: &DistanceMatrix, p: &PointCloud) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..d.n() {
            for j in 0..d.n() {
                worst = worst.max((d.get(i, j) - p.distance(i, j)).abs());
            }
        }
        worst
    }

    #[test]
    fn equilateral_triangle_recovered() {
        let d = DistanceMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        let e = classical_mds(&d, 2).unwrap();
        assert!(max_error(&d, &e.points) < 1e-9);
        assert!(e.stress < 1e-9);
    }

    #[test]
    fn planar_points_recovered() {
        let p = PointCloud::from_rows(&[
            vec![0.0, 0.0],
            vec![3.0, 1.0],
            vec![-1.0, 2.0],
            vec![0.5, -2.5],
            vec![4.0, 4.0],
        ])
        .unwrap();
        let d = p.distance_matrix();
        let e = classical_mds(&d, 2).unwrap();
        assert!(max_error(&d, &e.points) < 1e-8);
        let e3 = classical_mds(&d, 3).unwrap();
        assert!(max_error(&d, &e3.points) < 1e-8);
        assert!(e3.eigenvalues[2] < 1e-8);
    }

    #[test]
    fn star_tree_is_not_flat() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        let d = shortest_path_matrix(&g).unwrap();
        let m = MdsDecomposition::new(&d).unwrap();
        assert!(m.spectrum().iter().any(|&l| l < -1e-9));
        let e = m.embed(2).unwrap();
        assert!(e.negative_eigenvalues >= 1);
        assert!(e.stress > 0.0);
    }

    #[test]
    fn eigenvalues_descending_and_signs_fixed() {
        let p = PointCloud::from_rows(&[
            vec![0.0, 0.0],
            vec![2.0, 0.1],
            vec![5.0, -0.3],
            vec![9.0, 0.2],
        ])
        .unwrap();
        let m = MdsDecomposition::new(&p.distance_matrix()).unwrap();
        assert!(m.spectrum().windows(2).all(|w| w[0] >= w[1]));
        let e = m.embed(1).unwrap();
        let col: Vec<f64> = (0..4).map(|i| e.points.point(i)[0]).collect();
        let lead = col
            .iter()
            .copied()
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        assert!(lead > 0.0);
    }

    #[test]
    fn parameter_checks() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let d = shortest_path_matrix(&g).unwrap();
        assert!(matches!(classical_mds(&d, 1), Err(Error::Disconnected)));
        let ok = DistanceMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(classical_mds(&ok, 2).is_err());
        assert!(classical_mds(&ok, 0).is_err());
    }

    #[test]
    fn isomap_complete_graph_matches_mds() {
        let p = PointCloud::from_rows(&[
            vec![0.0, 0.0, 1.0],
            vec![1.0, 2.0, 0.0],
            vec![2.0, -1.0, 0.5],
            vec![-1.0, 0.5, 2.0],
            vec![0.3, 0.3, 0.3],
        ])
        .unwrap();
        let iso = isomap(&p, 4, 2).unwrap();
        let mds = classical_mds(&p.distance_matrix(), 2).unwrap();
        assert_eq!(iso.kept, vec![0, 1, 2, 3, 4]);
        for (a, b) in iso.embedding.eigenvalues.iter().zip(&mds.eigenvalues) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn isomap_unrolls_an_arc() {
        let n = 60;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = i as f64 * 0.05;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let p = PointCloud::from_rows(&rows).unwrap();
        let iso = isomap(&p, 2, 1).unwrap();
        let chord = 2.0 * (0.025f64).sin();
        for i in 0..n {
            for j in (i + 1)..n {
                let arc = (j - i) as f64 * chord;
                let got = iso.embedding.points.distance(i, j);
                assert!((got - arc).abs() <= 0.05 * arc);
            }
        }
    }

    #[test]
    fn isomap_keeps_largest_component() {
        let mut rows: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 0.0]).collect();
        rows.extend([vec![100.0, 0.0], vec![101.0, 0.0]]);
        let p = PointCloud::from_rows(&rows).unwrap();
        let iso = isomap(&p, 1, 1).unwrap();
        assert_eq!(iso.kept, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn external_embedding_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "x,y").unwrap();
        for i in 0..100 {
            writeln!(f, "{i},{}", i * 2).unwrap();
        }
        let p = load_external_embedding(f.path(), Some(100)).unwrap();
        assert_eq!((p.n(), p.dim()), (100, 2));
        assert!(matches!(
            load_external_embedding(f.path(), Some(99)),
            Err(Error::RowMismatch {
                expected: 99,
                found: 100
            })
        ));
    }
}
