use super::{vector, Matrix, RngStream};
use crate::{Error, Result};

/// Uniform draw from the unit sphere in `d` dimensions (normalized standard Gaussian).
pub fn sample_unit_sphere(rng: &mut RngStream, d: usize) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidDimension("sphere dimension must be at least 1".into()));
    }
    loop {
        let mut x: Vec<f64> = (0..d).map(|_| rng.gaussian()).collect();
        let n = vector::norm(&x);
        // an all-zero Gaussian draw has probability zero, but redraw rather than divide by it
        if n > 1e-300 {
            x.iter_mut().for_each(|v| *v /= n);
            return Ok(x);
        }
    }
}

/// Uniform draw from the closed Euclidean ball of radius `r` in `d` dimensions.
pub fn sample_in_ball(rng: &mut RngStream, d: usize, r: f64) -> Result<Vec<f64>> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("ball radius must be finite and >= 0, got {r}")));
    }
    let mut x = sample_unit_sphere(rng, d)?;
    let radius = r * rng.uniform().powf(1.0 / d as f64);
    vector::scale(radius, &mut x);
    Ok(x)
}

/// `rows x cols` matrix with i.i.d. `N(0, variance)` entries.
pub fn sample_gaussian_matrix(
    rng: &mut RngStream,
    rows: usize,
    cols: usize,
    variance: f64,
) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension(format!("{rows}x{cols} matrix")));
    }
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::InvalidParameter(format!("variance must be positive, got {variance}")));
    }
    let sd = variance.sqrt();
    let data = (0..rows * cols).map(|_| sd * rng.gaussian()).collect();
    Matrix::from_vec(rows, cols, data)
}

/// Haar-distributed semi-orthogonal `rows x cols` matrix.
///
/// The orthonormal factor of a Gaussian matrix is taken with positive `R`
/// diagonal (Gram–Schmidt produces exactly that), which makes it Haar. Tall
/// matrices have orthonormal columns, wide ones orthonormal rows.
pub fn sample_orthogonal(rng: &mut RngStream, rows: usize, cols: usize) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidDimension(format!("{rows}x{cols} matrix")));
    }
    let (tall, short) = (rows.max(cols), rows.min(cols));
    // columns of a tall x short Gaussian, stored as `short` vectors of length `tall`
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(short);
    while basis.len() < short {
        let mut v: Vec<f64> = (0..tall).map(|_| rng.gaussian()).collect();
        let n0 = vector::norm(&v);
        // two passes of modified Gram-Schmidt keep orthogonality at machine precision
        for _ in 0..2 {
            for q in &basis {
                let c = vector::dot(q, &v);
                vector::axpy(-c, q, &mut v);
            }
        }
        let n = vector::norm(&v);
        if n <= 1e-8 * n0 {
            continue;
        }
        vector::scale(1.0 / n, &mut v);
        basis.push(v);
    }
    let mut m = Matrix::zeros(rows, cols);
    for (k, q) in basis.iter().enumerate() {
        for (t, value) in q.iter().enumerate() {
            if rows >= cols {
                m[(t, k)] = *value;
            } else {
                m[(k, t)] = *value;
            }
        }
    }
    Ok(m)
}
