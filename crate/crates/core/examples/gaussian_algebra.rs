//! Products of Gaussian messages, PSD repair and the Kronecker fit.

use ncmad::linalg::{
    abs_eigen_fix, gauss_multiply, hermitize, kron, log_gauss_pdf, nearest_kronecker_factor, GaussianMessage,
    HermitianMatrix, CMat, CVec, C64,
};

fn pd(n: usize, shift: f64) -> HermitianMatrix {
    let a = CMat::from_fn(n, n, |r, c| C64::new((r + 2 * c) as f64 * 0.3 - 1.0, (r * c) as f64 * 0.1));
    hermitize(&(&a * a.adjoint() + CMat::identity(n, n) * C64::from(shift)))
}

fn main() -> ncmad::Result<()> {
    let a = GaussianMessage::new(CVec::from_element(3, C64::new(1.0, 0.0)), pd(3, 1.0))?;
    let b = GaussianMessage::new(CVec::from_element(3, C64::new(0.0, -1.0)), pd(3, 2.0))?;
    let (prod, log_scale) = gauss_multiply(&a, &b)?;
    let x = CVec::from_fn(3, |i, _| C64::new(0.2 * i as f64, 0.1));
    let lhs = log_gauss_pdf(&x, &a.mean, &a.cov)? + log_gauss_pdf(&x, &b.mean, &b.cov)?;
    let rhs = log_scale + log_gauss_pdf(&x, &prod.mean, &prod.cov)?;
    println!("product identity residual: {:.3e}", (lhs - rhs).abs());

    let indefinite = CMat::from_diagonal(&CVec::from_vec(vec![C64::from(2.0), C64::from(-0.5), C64::from(1.0)]));
    let fixed = abs_eigen_fix(&indefinite)?;
    println!("abs eigen fix diagonal: {:?}", fixed.as_matrix().diagonal().map(|z| z.re).as_slice());

    let xi = pd(2, 0.5);
    let a4 = pd(3, 1.0);
    let c = hermitize(&kron(a4.as_matrix(), xi.as_matrix()));
    let recovered = nearest_kronecker_factor(&c, &xi)?;
    println!("kronecker factor error: {:.3e}", (recovered - a4.as_matrix()).norm());
    Ok(())
}
