//! Vector fields driving the variational inequality.

use nalgebra::DMatrix;

use crate::geometry::Point;
use crate::{ensure_finite, Error, Result};

/// Point-to-vector oracle for the monotone field `F`.
pub trait VectorField: Send + Sync {
    fn eval(&self, x: &Point) -> Point;
}

impl<F> VectorField for F
where
    F: Fn(&Point) -> Point + Send + Sync,
{
    fn eval(&self, x: &Point) -> Point {
        self(x)
    }
}

impl VectorField for Box<dyn VectorField + '_> {
    fn eval(&self, x: &Point) -> Point {
        (**self).eval(x)
    }
}

impl VectorField for &dyn VectorField {
    fn eval(&self, x: &Point) -> Point {
        (**self).eval(x)
    }
}

/// Affine strongly monotone field `F(x) = G (x - a)` with `G` symmetric
/// positive definite. Its variational inequality over a closed convex set
/// picks the `G`-weighted projection of `a` onto that set.
#[derive(Clone, Debug)]
pub struct MatrixField {
    matrix: DMatrix<f64>,
    target: Point,
}

pub fn matrix_field(matrix: DMatrix<f64>, target: Point) -> Result<MatrixField> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::InvalidInput(format!(
            "matrix must be square, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    if matrix.nrows() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            got: target.len(),
        });
    }
    ensure_finite("matrix field target", &target)?;
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("matrix field entries"));
    }
    let n = matrix.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = matrix[(i, j)].abs().max(matrix[(j, i)].abs()).max(1.0);
            if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::InvalidInput("matrix must be symmetric".into()));
            }
        }
    }
    if matrix.clone().cholesky().is_none() {
        return Err(Error::InvalidInput(
            "matrix must be positive definite".into(),
        ));
    }
    Ok(MatrixField { matrix, target })
}

impl MatrixField {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn target(&self) -> &Point {
        &self.target
    }

    /// Smallest eigenvalue; a strong monotonicity modulus for the field.
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

impl VectorField for MatrixField {
    fn eval(&self, x: &Point) -> Point {
        &self.matrix * (x - &self.target)
    }
}
