use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::linalg::{Block, CsrMatrix};

/// Name of the generator behind [`gen_rhs`]; part of the reproducibility contract.
pub const RHS_GENERATOR: &str = "xoshiro256++ (seed_from_u64), v1";

/// Five-point finite-difference matrix of `−Δu + px·u_x + py·u_y` on the unit
/// square with homogeneous Dirichlet boundaries and an `nx × ny` interior grid.
///
/// Unknown `(i, j)` sits in row `j·nx + i`. Convection uses centered
/// differences while the mesh Péclet number `|p|·h/2` is at most one and
/// first-order upwinding beyond that, so every row is weakly diagonally
/// dominant and rows touching the boundary strictly so.
pub fn gen_convection_diffusion(nx: usize, ny: usize, px: f64, py: f64) -> CsrMatrix<f64> {
    assert!(nx >= 2 && ny >= 2, "grid must be at least 2x2");
    let hx = 1.0 / (nx as f64 + 1.0);
    let hy = 1.0 / (ny as f64 + 1.0);
    // (diag, lower neighbour, upper neighbour) contributions per direction
    let axis = |p: f64, h: f64| -> (f64, f64, f64) {
        let d = 1.0 / (h * h);
        if p.abs() * h / 2.0 <= 1.0 {
            (2.0 * d, -d - p / (2.0 * h), -d + p / (2.0 * h))
        } else if p > 0.0 {
            (2.0 * d + p / h, -d - p / h, -d)
        } else {
            (2.0 * d - p / h, -d, -d + p / h)
        }
    };
    let (dx, wx, ex) = axis(px, hx);
    let (dy, sy, ny_up) = axis(py, hy);
    let n = nx * ny;
    let mut trip = Vec::with_capacity(5 * n);
    for j in 0..ny {
        for i in 0..nx {
            let row = j * nx + i;
            if j > 0 {
                trip.push((row, row - nx, sy));
            }
            if i > 0 {
                trip.push((row, row - 1, wx));
            }
            trip.push((row, row, dx + dy));
            if i + 1 < nx {
                trip.push((row, row + 1, ex));
            }
            if j + 1 < ny {
                trip.push((row, row + nx, ny_up));
            }
        }
    }
    CsrMatrix::from_triplets(n, &trip).expect("stencil indices are in range")
}

/// Entry distribution of generated right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhsDistribution {
    /// Uniform on `(−1, 1)`.
    #[default]
    Symmetric,
    /// Uniform on `(0, 1)`, the convention of common numerical environments.
    Unit,
}

impl std::str::FromStr for RhsDistribution {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "symmetric" | "pm1" | "-1,1" => Ok(Self::Symmetric),
            "unit" | "01" | "0,1" => Ok(Self::Unit),
            other => Err(format!("unknown right-hand-side distribution '{other}'")),
        }
    }
}

/// `n × s` block with entries uniform on the open interval `(−1, 1)`.
pub fn gen_rhs(n: usize, s: usize, seed: u64) -> Block<f64> {
    gen_rhs_with(n, s, seed, RhsDistribution::Symmetric)
}

/// Entries are drawn column by column from xoshiro256++ seeded through
/// `seed_from_u64`. Each takes the top 52 bits of one output as an integer
/// `b` and maps it to `w = (b + ½)·2⁻⁵²`, strictly inside `(0, 1)`; the
/// symmetric distribution returns `2w − 1`. Both maps are exact in binary64.
pub fn gen_rhs_with(n: usize, s: usize, seed: u64, dist: RhsDistribution) -> Block<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let scale = 2f64.powi(-52);
    let mut data = Vec::with_capacity(n * s);
    for _ in 0..n * s {
        let bits = rng.next_u64() >> 12;
        let w = (bits as f64 + 0.5) * scale;
        data.push(match dist {
            RhsDistribution::Symmetric => 2.0 * w - 1.0,
            RhsDistribution::Unit => w,
        });
    }
    Block::from_col_major(n, s, data).expect("length matches")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_laplacian_2x2() {
        let a = gen_convection_diffusion(2, 2, 0.0, 0.0);
        assert_eq!(a.n(), 4);
        for i in 0..4 {
            assert_eq!(a.get(i, i), 4.0 * 9.0);
            for j in 0..4 {
                assert_eq!(a.get(i, j), a.get(j, i));
            }
        }
        assert_eq!(a.get(0, 1), -9.0);
        assert_eq!(a.get(0, 3), 0.0);
    }

    #[test]
    fn cdde2_sized_grid() {
        let a = gen_convection_diffusion(31, 31, 10.0, -20.0);
        assert_eq!(a.n(), 961);
        assert_eq!(a.nnz(), 4681);
        assert_eq!(a.max_row_nnz(), 5);
    }

    #[test]
    fn nonsymmetric_with_convection() {
        let a = gen_convection_diffusion(4, 3, 5.0, 1.0);
        assert_ne!(a.get(0, 1), a.get(1, 0));
    }

    #[test]
    fn rows_are_diagonally_dominant() {
        for &(px, py) in &[(0.0, 0.0), (30.0, -50.0), (500.0, 200.0), (-900.0, 64.0)] {
            let a = gen_convection_diffusion(9, 7, px, py);
            for i in 0..a.n() {
                let mut off = 0.0;
                let mut d = 0.0;
                for (j, v) in a.row(i) {
                    if i == j {
                        d = v;
                    } else {
                        off += v.abs();
                    }
                }
                assert!(d >= off * (1.0 - 1e-14), "row {i} px={px} py={py}");
            }
        }
    }

    #[test]
    fn rhs_reproducible_and_in_range() {
        let a = gen_rhs(50, 3, 7);
        assert_eq!(a, gen_rhs(50, 3, 7));
        assert_ne!(a, gen_rhs(50, 3, 8));
        assert!(a.as_slice().iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn unit_distribution_is_affine_image() {
        let a = gen_rhs(20, 2, 3);
        let u = gen_rhs_with(20, 2, 3, RhsDistribution::Unit);
        for (x, w) in a.as_slice().iter().zip(u.as_slice()) {
            assert!(*w > 0.0 && *w < 1.0);
            assert_eq!(*x, 2.0 * w - 1.0);
        }
    }

    #[test]
    fn rhs_mean_near_zero() {
        let b = gen_rhs(1_000_000, 1, 42);
        let mean: f64 = b.as_slice().iter().sum::<f64>() / 1e6;
        assert!(mean.abs() < 0.01);
    }
}
