//! Concrete generators: graph and lattice Laplacians, diagonal spectra and
//! the Ornstein–Uhlenbeck generator in the Hermite basis.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{eigendecompose, MeasureSpace, SpectralOperator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Cycle {
        n: usize,
        #[serde(default = "unit")]
        h: f64,
    },
    Path {
        n: usize,
        #[serde(default = "unit")]
        h: f64,
    },
    Grid2d {
        nx: usize,
        ny: usize,
        #[serde(default = "unit")]
        h: f64,
    },
    Diagonal {
        eigenvalues: Vec<f64>,
    },
    Ou {
        n: usize,
    },
}

fn unit() -> f64 {
    1.0
}

impl GeneratorSpec {
    pub fn cycle(n: usize) -> Self {
        GeneratorSpec::Cycle { n, h: 1.0 }
    }

    pub fn path(n: usize) -> Self {
        GeneratorSpec::Path { n, h: 1.0 }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            GeneratorSpec::Cycle { .. } => "cycle",
            GeneratorSpec::Path { .. } => "path",
            GeneratorSpec::Grid2d { .. } => "grid2d",
            GeneratorSpec::Diagonal { .. } => "diagonal",
            GeneratorSpec::Ou { .. } => "ou",
        }
    }

    pub fn is_graph(&self) -> bool {
        matches!(
            self,
            GeneratorSpec::Cycle { .. } | GeneratorSpec::Path { .. } | GeneratorSpec::Grid2d { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidGenerator(msg));
        match self {
            GeneratorSpec::Cycle { n, h } | GeneratorSpec::Path { n, h } => {
                if *n < 2 {
                    return bad(format!("{} needs at least 2 vertices, got {n}", self.kind()));
                }
                if !(*h > 0.0) {
                    return bad(format!("lattice spacing must be positive, got {h}"));
                }
            }
            GeneratorSpec::Grid2d { nx, ny, h } => {
                if *nx < 2 || *ny < 2 {
                    return bad(format!("grid2d needs at least 2x2 vertices, got {nx}x{ny}"));
                }
                if !(*h > 0.0) {
                    return bad(format!("lattice spacing must be positive, got {h}"));
                }
            }
            GeneratorSpec::Diagonal { eigenvalues } => {
                if eigenvalues.is_empty() {
                    return bad("diagonal spectrum is empty".into());
                }
                if let Some(l) = eigenvalues.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                    return bad(format!("diagonal eigenvalue {l} is negative"));
                }
            }
            GeneratorSpec::Ou { n } => {
                if *n < 2 {
                    return bad(format!("ou truncation needs at least 2 Hermite modes, got {n}"));
                }
            }
        }
        Ok(())
    }

    /// Vertex count for graph kinds, dimension otherwise.
    pub fn size(&self) -> usize {
        match self {
            GeneratorSpec::Cycle { n, .. } | GeneratorSpec::Path { n, .. } => *n,
            GeneratorSpec::Grid2d { nx, ny, .. } => nx * ny,
            GeneratorSpec::Diagonal { eigenvalues } => eigenvalues.len(),
            GeneratorSpec::Ou { n } => *n,
        }
    }

    /// Edge list with edge weight `1/h²`, for graph kinds.
    pub fn edges(&self) -> Result<Vec<(usize, usize, f64)>> {
        self.validate()?;
        match *self {
            GeneratorSpec::Cycle { n, h } => {
                let c = 1.0 / (h * h);
                Ok((0..n).map(|i| (i, (i + 1) % n, c)).collect())
            }
            GeneratorSpec::Path { n, h } => {
                let c = 1.0 / (h * h);
                Ok((0..n - 1).map(|i| (i, i + 1, c)).collect())
            }
            GeneratorSpec::Grid2d { nx, ny, h } => {
                let c = 1.0 / (h * h);
                let idx = |x: usize, y: usize| y * nx + x;
                let mut e = Vec::new();
                for y in 0..ny {
                    for x in 0..nx {
                        if x + 1 < nx {
                            e.push((idx(x, y), idx(x + 1, y), c));
                        }
                        if y + 1 < ny {
                            e.push((idx(x, y), idx(x, y + 1), c));
                        }
                    }
                }
                Ok(e)
            }
            _ => Err(Error::InvalidGenerator(format!(
                "{} is not a graph kind",
                self.kind()
            ))),
        }
    }

    /// Combinatorial Laplacian matrix for graph kinds.
    pub fn laplacian(&self) -> Result<DMatrix<f64>> {
        let edges = self.edges()?;
        let n = self.size();
        let mut m = DMatrix::zeros(n, n);
        for (i, j, c) in edges {
            m[(i, i)] += c;
            m[(j, j)] += c;
            m[(i, j)] -= c;
            m[(j, i)] -= c;
        }
        Ok(m)
    }
}

/// Build the spectral operator described by `spec`.
///
/// Graph kinds use the counting measure; diagonal and OU kinds are diagonal
/// in the point (resp. Hermite-coefficient) basis with unit weights.
pub fn build(spec: &GeneratorSpec) -> Result<SpectralOperator> {
    spec.validate()?;
    match spec {
        GeneratorSpec::Diagonal { eigenvalues } => {
            SpectralOperator::diagonal(MeasureSpace::counting(eigenvalues.len()), eigenvalues)
        }
        GeneratorSpec::Ou { n } => {
            let spectrum: Vec<f64> = (0..*n).map(|k| k as f64).collect();
            SpectralOperator::diagonal(MeasureSpace::counting(*n), &spectrum)
        }
        _ => eigendecompose(&spec.laplacian()?, &MeasureSpace::counting(spec.size())),
    }
}

/// Dirichlet energy `Σ_edges (f_i − f_j)² / h²`.
pub fn dirichlet_energy(spec: &GeneratorSpec, f: &DVector<f64>) -> Result<f64> {
    if !spec.is_graph() {
        return Err(Error::InvalidGenerator(format!(
            "dirichlet energy needs a graph kind, got {}",
            spec.kind()
        )));
    }
    if f.len() != spec.size() {
        return Err(Error::Dimension {
            expected: spec.size(),
            got: f.len(),
        });
    }
    Ok(spec
        .edges()?
        .into_iter()
        .map(|(i, j, c)| c * (f[i] - f[j]).powi(2))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ou_spectrum_is_hermite_degrees() {
        let op = build(&GeneratorSpec::Ou { n: 4 }).unwrap();
        assert_eq!(op.eigenvalues(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn cycle_and_diagonal() {
        let op = build(&GeneratorSpec::cycle(4)).unwrap();
        for (a, b) in op.eigenvalues().iter().zip([0.0, 2.0, 2.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let op = build(&GeneratorSpec::Diagonal { eigenvalues: vec![0.0, 5.0] }).unwrap();
        let m = op.matrix();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 5.0]));
    }

    #[test]
    fn lattice_spacing_scales_spectrum() {
        let a = build(&GeneratorSpec::Path { n: 6, h: 1.0 }).unwrap();
        let b = build(&GeneratorSpec::Path { n: 6, h: 0.5 }).unwrap();
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((4.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(build(&GeneratorSpec::cycle(1)).is_err());
        assert!(build(&GeneratorSpec::Path { n: 4, h: 0.0 }).is_err());
        assert!(build(&GeneratorSpec::Diagonal { eigenvalues: vec![1.0, -1.0] }).is_err());
        assert!(dirichlet_energy(&GeneratorSpec::Ou { n: 3 }, &DVector::zeros(3)).is_err());
    }

    #[test]
    fn graph_laplacians_annihilate_constants_and_are_markov() {
        for spec in [
            GeneratorSpec::cycle(7),
            GeneratorSpec::path(5),
            GeneratorSpec::Grid2d { nx: 3, ny: 4, h: 0.7 },
        ] {
            let op = build(&spec).unwrap();
            assert!(op.eigenvalues()[0].abs() < 1e-12);
            let ones = DVector::from_element(spec.size(), 1.0);
            assert!(dirichlet_energy(&spec, &ones).unwrap().abs() < 1e-15);
            for t in [0.01, 0.5, 3.0] {
                let h = op.heat(t);
                assert!(h.iter().all(|&v| v > -1e-12), "negative kernel entry");
                let row_sums = &h * &ones;
                assert!((row_sums - &ones).amax() < 1e-9);
            }
        }
    }

    #[test]
    fn energy_matches_spectral_form() {
        let spec = GeneratorSpec::path(2);
        let f = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(dirichlet_energy(&spec, &f).unwrap(), 1.0);

        let spec = GeneratorSpec::cycle(8);
        let op = build(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
            let e = dirichlet_energy(&spec, &f).unwrap();
            let q = op.quadratic_form(1.0, &f).unwrap();
            assert!((e - q).abs() < 1e-9);
        }
    }
}
