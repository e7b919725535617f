//! Dense kernels for small real matrices: exponential, its time integral,
//! eigenvalues, and bracketed scalar root finding.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Padé(13,13) numerator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bound below which Padé(13) is accurate to double precision.
const THETA13: f64 = 5.371920351148152;

fn check_square(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "{what} requires a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

fn check_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "{what}: matrix has non-finite entries"
        )));
    }
    Ok(())
}

fn norm1(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{a t}` by scaling and squaring with a Padé(13) kernel.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    check_square(a, "expm")?;
    check_finite(a, "expm")?;
    if !t.is_finite() {
        return Err(Error::Domain(format!("expm: non-finite time {t}")));
    }
    let n = a.nrows();
    if t == 0.0 || n == 0 {
        return Ok(Matrix::identity(n, n));
    }

    let at = a * t;
    let norm = norm1(&at);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let scaled = at * 2f64.powi(-squarings);

    let ident = Matrix::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let denom = &v - &u;
    let numer = &v + &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Domain("expm: singular Padé denominator".into()))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// `∫₀ᵗ e^{aσ} dσ`, read off the exponential of the block matrix `[[a, I], [0, 0]]`.
/// Works for singular `a`.
pub fn expm_integral(a: &Matrix, t: f64) -> Result<Matrix> {
    check_square(a, "expm_integral")?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "expm_integral: need finite t >= 0, got {t}"
        )));
    }
    let n = a.nrows();
    let mut block = Matrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block
        .view_mut((0, n), (n, n))
        .copy_from(&Matrix::identity(n, n));
    let e = expm(&block, t)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// Flow of `ẋ = a x + bu` with constant `bu` over time `t`:
/// returns `(e^{at}, ∫₀ᵗ e^{aσ}dσ · bu)`.
pub fn affine_flow(a: &Matrix, bu: &DVector<f64>, t: f64) -> Result<(Matrix, DVector<f64>)> {
    check_square(a, "affine_flow")?;
    let n = a.nrows();
    if bu.len() != n {
        return Err(Error::Dimension(format!(
            "affine_flow: forcing has length {}, state dimension is {n}",
            bu.len()
        )));
    }
    let mut block = Matrix::zeros(n + 1, n + 1);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, 1)).copy_from(bu);
    let e = expm(&block, t)?;
    let flow = e.view((0, 0), (n, n)).into_owned();
    let forced = e.view((0, n), (n, 1)).column(0).into_owned();
    Ok((flow, forced))
}

/// All eigenvalues of a real square matrix, with multiplicity.
///
/// Balances the matrix, reduces it to upper Hessenberg form by stabilized
/// elimination, then runs the Francis double-shift QR iteration. Complex
/// eigenvalues come out as exact conjugate pairs.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Complex64>> {
    check_square(m, "eigenvalues")?;
    check_finite(m, "eigenvalues")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a);
    hqr(&mut a).ok_or_else(|| Error::EigenConvergence {
        n,
        matrix: m.transpose().as_slice().to_vec(),
    })
}

/// Parlett–Reinsch diagonal similarity scaling by powers of two.
fn balance(a: &mut Matrix) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / RADIX;
            let mut f = 1.0;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Reduction to upper Hessenberg form by Gaussian elimination with pivoting.
/// Entries below the subdiagonal are zeroed on exit.
fn hessenberg(a: &mut Matrix) {
    let n = a.nrows();
    for m in 1..n.saturating_sub(1) {
        let mut x: f64 = 0.0;
        let mut piv = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                piv = j;
            }
        }
        if piv != m {
            for j in (m - 1)..n {
                a.swap((piv, j), (m, j));
            }
            for j in 0..n {
                a.swap((j, piv), (j, m));
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        a[(i, j)] -= y * a[(m, j)];
                    }
                    for j in 0..n {
                        a[(j, m)] += y * a[(j, i)];
                    }
                }
            }
        }
    }
    for j in 0..n {
        for i in (j + 2)..n {
            a[(i, j)] = 0.0;
        }
    }
}

fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Eigenvalues of an upper Hessenberg matrix (destroyed). `None` if some
/// eigenvalue fails to deflate within the iteration budget.
fn hqr(a: &mut Matrix) -> Option<Vec<Complex64>> {
    const MAX_ITS: usize = 60;
    let n = a.nrows();
    let eps = f64::EPSILON;
    let mut wr = vec![Complex64::new(0.0, 0.0); n];

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let top = nn as usize;
            // Look for a single small subdiagonal element.
            let mut l = top;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }

            let mut x = a[(top, top)];
            if l == top {
                wr[top] = Complex64::new(x + shift, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[(top - 1, top - 1)];
            let mut w = a[(top, top - 1)] * a[(top - 1, top)];
            if l + 1 == top {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += shift;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[top - 1] = Complex64::new(x + z, 0.0);
                    wr[top] = wr[top - 1];
                    if z != 0.0 {
                        wr[top] = Complex64::new(x - w / z, 0.0);
                    }
                } else {
                    wr[top] = Complex64::new(x + p, -z);
                    wr[top - 1] = wr[top].conj();
                }
                nn -= 2;
                break;
            }

            if its == MAX_ITS {
                return None;
            }
            if its > 0 && its % 10 == 0 {
                // Exceptional shift.
                shift += x;
                for i in 0..=top {
                    a[(i, i)] -= x;
                }
                let s = a[(top, top - 1)].abs() + a[(top - 1, top - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // Look for two consecutive small subdiagonal elements.
            let mut m = top - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                r = x - z;
                let s = y - z;
                p = (r * s - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - r - s;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..(top - 1) {
                a[(i + 2, i)] = 0.0;
                if i != m {
                    a[(i + 2, i - 1)] = 0.0;
                }
            }

            // Double QR step on rows l..=top and columns m..=top.
            for k in m..top {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = if k + 1 != top { a[(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=top {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k + 1 != top {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * z;
                    }
                    a[(k + 1, j)] -= pp * y;
                    a[(k, j)] -= pp * x;
                }
                let mmin = if top < k + 3 { top } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k + 1 != top {
                        pp += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
        }
    }
    Some(wr)
}

/// Root of `f` in `[lo, hi]` by Brent's method. Returns the final bracket
/// `(root, other_end)`; the root is always one end of a sign-change bracket.
pub fn bracket_root<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "root finding needs finite bracket and tol > 0 (lo={lo}, hi={hi}, tol={tol})"
        )));
    }
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok((a, a));
    }
    if fb == 0.0 {
        return Ok((b, b));
    }
    if !(fa * fb < 0.0) {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..500 {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.25 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok((b, if fb == 0.0 { b } else { c }));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += sign(tol1, xm);
        }
        fb = f(b);
    }
    Ok((b, c))
}

/// Root of a continuous `f` with `f(lo)·f(hi) ≤ 0`, to bracket width `tol`.
pub fn find_root_scalar<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    bracket_root(f, lo, hi, tol).map(|(root, _)| root)
}

/// Solves `a x = b` by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &DVector<f64>) -> Result<DVector<f64>> {
    check_square(a, "solve")?;
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Domain("singular linear system".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        (a - b).iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        v
    }

    #[test]
    fn expm_at_zero_time_is_identity() {
        let a = dmatrix![1.0, 2.0, 3.0; -4.0, 5.0, 6.0; 7.0, 8.0, -9.0];
        assert_eq!(expm(&a, 0.0).unwrap(), Matrix::identity(3, 3));
    }

    #[test]
    fn expm_diagonal() {
        let a = dmatrix![-1.0, 0.0; 0.0, -2.0];
        let e = expm(&a, 1.0).unwrap();
        let want = dmatrix![(-1f64).exp(), 0.0; 0.0, (-2f64).exp()];
        assert!(max_abs_diff(&e, &want) < 1e-15);
    }

    #[test]
    fn expm_nilpotent() {
        let a = dmatrix![0.0, 1.0; 0.0, 0.0];
        let e = expm(&a, 1.0).unwrap();
        assert!(max_abs_diff(&e, &dmatrix![1.0, 1.0; 0.0, 1.0]) < 1e-15);
    }

    #[test]
    fn expm_large_norm_rotation() {
        // rotation generator scaled far past THETA13 exercises squaring
        let w = 50.0;
        let a = dmatrix![0.0, -w; w, 0.0];
        let e = expm(&a, 1.0).unwrap();
        let want = dmatrix![w.cos(), -w.sin(); w.sin(), w.cos()];
        assert!(max_abs_diff(&e, &want) < 1e-12);
    }

    #[test]
    fn expm_negative_time_inverts() {
        let a = dmatrix![0.3, -1.2; 0.4, -0.7];
        let p = expm(&a, 0.8).unwrap() * expm(&a, -0.8).unwrap();
        assert!(max_abs_diff(&p, &Matrix::identity(2, 2)) < 1e-14);
    }

    #[test]
    fn expm_rejects_bad_input() {
        let rect = Matrix::zeros(2, 3);
        assert!(matches!(expm(&rect, 1.0), Err(Error::Dimension(_))));
        let nan = dmatrix![f64::NAN, 0.0; 0.0, 1.0];
        assert!(matches!(expm(&nan, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn integral_of_zero_matrix_is_t_identity() {
        let w = expm_integral(&Matrix::zeros(3, 3), 3.0).unwrap();
        assert!(max_abs_diff(&w, &(Matrix::identity(3, 3) * 3.0)) < 1e-14);
    }

    #[test]
    fn integral_over_empty_interval_is_zero() {
        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        assert_eq!(expm_integral(&a, 0.0).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn integral_matches_closed_form_for_invertible() {
        let a = dmatrix![-2.0, 1.0, 0.0; 0.5, -3.0, 0.2; 0.0, 0.3, -1.0];
        let t = 0.7;
        let w = expm_integral(&a, t).unwrap();
        // a^{-1}(e^{at} - I) by linear solves
        let rhs = expm(&a, t).unwrap() - Matrix::identity(3, 3);
        let closed = a.clone().lu().solve(&rhs).unwrap();
        assert!(max_abs_diff(&w, &closed) < 1e-13);
    }

    #[test]
    fn integral_rejects_negative_time() {
        assert!(matches!(
            expm_integral(&Matrix::identity(2, 2), -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn affine_flow_scalar() {
        // x' = -x + 1 from x=0: x(t) = 1 - e^{-t}
        let a = dmatrix![-1.0];
        let (phi, f) = affine_flow(&a, &DVector::from_element(1, 1.0), 2.0).unwrap();
        assert!((phi[(0, 0)] - (-2f64).exp()).abs() < 1e-15);
        assert!((f[0] - (1.0 - (-2f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_diagonal() {
        let e = sorted_re(eigenvalues(&dmatrix![0.5, 0.0; 0.0, -1.2]).unwrap());
        assert!((e[0] - Complex64::new(-1.2, 0.0)).norm() < 1e-14);
        assert!((e[1] - Complex64::new(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn eigenvalues_rotation() {
        let th: f64 = 0.7;
        let m = dmatrix![th.cos(), -th.sin(); th.sin(), th.cos()];
        let e = eigenvalues(&m).unwrap();
        let want = Complex64::from_polar(1.0, th);
        assert!(e.iter().any(|z| (z - want).norm() < 1e-14));
        assert!(e.iter().any(|z| (z - want.conj()).norm() < 1e-14));
    }

    #[test]
    fn eigenvalues_companion_quadratic() {
        // z^2 - z + 0.24: roots by the quadratic formula
        let (b, c) = (-1.0f64, 0.24f64);
        let disc = (b * b - 4.0 * c).sqrt();
        let roots = [(-b - disc) / 2.0, (-b + disc) / 2.0];
        let m = dmatrix![0.0, -c; 1.0, -b];
        let e = sorted_re(eigenvalues(&m).unwrap());
        assert!((e[0].re - roots[0]).abs() < 1e-14 && e[0].im == 0.0);
        assert!((e[1].re - roots[1]).abs() < 1e-14 && e[1].im == 0.0);
        assert!((roots[0] - 0.4).abs() < 1e-15 && (roots[1] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_badly_scaled_matrix() {
        let s = 1e6;
        let base = dmatrix![-1.0, 2.0, 0.0; -2.0, -1.0, 0.5; 0.1, 0.0, -3.0];
        let d = Matrix::from_diagonal(&DVector::from_vec(vec![1.0, s, 1.0 / s]));
        let dinv = Matrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0 / s, s]));
        let scaled = &d * &base * &dinv;
        let mut e0 = sorted_re(eigenvalues(&base).unwrap());
        let mut e1 = sorted_re(eigenvalues(&scaled).unwrap());
        e0.truncate(3);
        e1.truncate(3);
        for (a, b) in e0.iter().zip(&e1) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn eigenvalues_large_nonsymmetric() {
        let n = 8;
        let m = Matrix::from_fn(n, n, |i, j| {
            ((i * 7 + j * 3) % 11) as f64 - 5.0 + if i == j { 2.0 } else { 0.0 }
        });
        let e = eigenvalues(&m).unwrap();
        assert_eq!(e.len(), n);
        let tr: f64 = (0..n).map(|i| m[(i, i)]).sum();
        let sum: Complex64 = e.iter().sum();
        assert!((sum.re - tr).abs() < 1e-9 && sum.im.abs() < 1e-9);
    }

    #[test]
    fn eigenvalues_one_by_one_and_empty() {
        assert_eq!(
            eigenvalues(&dmatrix![3.5]).unwrap(),
            vec![Complex64::new(3.5, 0.0)]
        );
        assert!(eigenvalues(&Matrix::zeros(0, 0)).unwrap().is_empty());
        assert!(matches!(
            eigenvalues(&Matrix::zeros(2, 3)),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn root_linear_and_cosine() {
        let r = find_root_scalar(|t| t - 0.25, 0.0, 1.0, 1e-14).unwrap();
        assert!((r - 0.25).abs() < 1e-14);
        let r = find_root_scalar(f64::cos, 1.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn root_bracket_width_honoured() {
        let tol = 1e-9;
        let (r, other) = bracket_root(|t| t * t * t - 0.3, 0.0, 1.0, tol).unwrap();
        assert!((r - other).abs() <= tol);
        assert!((r - 0.3f64.cbrt()).abs() <= tol);
    }

    #[test]
    fn root_without_sign_change_is_bracket_error() {
        assert!(matches!(
            find_root_scalar(|t| t * t + 1.0, -1.0, 1.0, 1e-12),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn root_at_endpoint() {
        assert_eq!(find_root_scalar(|t| t, 0.0, 1.0, 1e-12).unwrap(), 0.0);
    }
}
