//! Dense complex matrix kernels for small ranks (r ≤ 4).
//!
//! Fields on the grid store one r×r complex matrix per point, so every
//! operation here is written to run allocation-free on borrowed slices of
//! length r². Eigendecomposition of Hermitian matrices uses cyclic Jacobi
//! rotations, which is exact-enough and branch-cheap at these sizes.

use num_complex::Complex64 as C;

/// Largest supported fiber rank.
pub const MAX_RANK: usize = 4;
/// Scratch capacity for one matrix (MAX_RANK²).
pub const MAX_MAT: usize = MAX_RANK * MAX_RANK;

pub type Scratch = [C; MAX_MAT];

#[inline]
pub fn zero_scratch() -> Scratch {
    [C::new(0.0, 0.0); MAX_MAT]
}

/// out = a · b for r×r row-major matrices.
#[inline]
pub fn mul(a: &[C], b: &[C], out: &mut [C], r: usize) {
    for i in 0..r {
        for j in 0..r {
            let mut acc = C::new(0.0, 0.0);
            for k in 0..r {
                acc += a[i * r + k] * b[k * r + j];
            }
            out[i * r + j] = acc;
        }
    }
}

/// out = a† (conjugate transpose).
#[inline]
pub fn adjoint(a: &[C], out: &mut [C], r: usize) {
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = a[j * r + i].conj();
        }
    }
}

/// out = (a + a†)/2.
#[inline]
pub fn hermitian_part(a: &[C], out: &mut [C], r: usize) {
    for i in 0..r {
        for j in 0..r {
            out[i * r + j] = 0.5 * (a[i * r + j] + a[j * r + i].conj());
        }
    }
}

/// a ← a + c·b.
#[inline]
pub fn axpy(a: &mut [C], c: C, b: &[C], r: usize) {
    for k in 0..r * r {
        a[k] += c * b[k];
    }
}

/// Commutator out = a·b − b·a.
#[inline]
pub fn commutator(a: &[C], b: &[C], out: &mut [C], r: usize) {
    let mut ab = zero_scratch();
    let mut ba = zero_scratch();
    mul(a, b, &mut ab[..r * r], r);
    mul(b, a, &mut ba[..r * r], r);
    for k in 0..r * r {
        out[k] = ab[k] - ba[k];
    }
}

#[inline]
pub fn identity(out: &mut [C], r: usize) {
    out[..r * r].fill(C::new(0.0, 0.0));
    for i in 0..r {
        out[i * r + i] = C::new(1.0, 0.0);
    }
}

#[inline]
pub fn trace(a: &[C], r: usize) -> C {
    (0..r).map(|i| a[i * r + i]).sum()
}

/// Squared Frobenius norm Σ|a_ij|².
#[inline]
pub fn fro_sq(a: &[C], r: usize) -> f64 {
    a[..r * r].iter().map(|z| z.norm_sqr()).sum()
}

/// Largest entry modulus.
#[inline]
pub fn sup_abs(a: &[C], r: usize) -> f64 {
    a[..r * r].iter().fold(0.0f64, |m, z| m.max(z.norm()))
}

/// out = a⁻¹ by Gauss-Jordan with partial pivoting. Errors on (near-)singular
/// input; the pivot floor 1e-300 only rejects exact breakdown, conditioning is
/// the caller's concern.
pub fn inverse(a: &[C], out: &mut [C], r: usize) -> Result<(), &'static str> {
    let mut m = zero_scratch();
    m[..r * r].copy_from_slice(&a[..r * r]);
    identity(out, r);
    for col in 0..r {
        let mut piv = col;
        let mut best = m[col * r + col].norm();
        for row in col + 1..r {
            let v = m[row * r + col].norm();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-300 {
            return Err("singular matrix");
        }
        if piv != col {
            for j in 0..r {
                m.swap(col * r + j, piv * r + j);
                out.swap(col * r + j, piv * r + j);
            }
        }
        let d = m[col * r + col];
        for j in 0..r {
            m[col * r + j] /= d;
            out[col * r + j] /= d;
        }
        for row in 0..r {
            if row == col {
                continue;
            }
            let f = m[row * r + col];
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..r {
                let mcj = m[col * r + j];
                let ocj = out[col * r + j];
                m[row * r + j] -= f * mcj;
                out[row * r + j] -= f * ocj;
            }
        }
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues sorted descending; `vecs` holds the matching
/// eigenvectors as columns, so a = V·diag(λ)·V†.
pub fn eigh(a: &[C], r: usize, vals: &mut [f64], vecs: &mut [C]) {
    let mut m = zero_scratch();
    hermitian_part(a, &mut m[..r * r], r);
    identity(vecs, r);
    if r == 1 {
        vals[0] = m[0].re;
        return;
    }
    let scale = sup_abs(&m, r).max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..r {
            for q in p + 1..r {
                off += m[p * r + q].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..r {
            for q in p + 1..r {
                let apq = m[p * r + q];
                let napq = apq.norm();
                if napq <= 1e-18 * scale {
                    continue;
                }
                let app = m[p * r + p].re;
                let aqq = m[q * r + q].re;
                let phase = apq / napq;
                let zeta = (aqq - app) / (2.0 * napq);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary rotation R: R[p][p]=c, R[p][q]=s·phase,
                // R[q][p]=−s·conj(phase), R[q][q]=c; m ← R† m R, vecs ← vecs·R.
                let sp = s * phase;
                for k in 0..r {
                    let mkp = m[k * r + p];
                    let mkq = m[k * r + q];
                    m[k * r + p] = c * mkp - sp.conj() * mkq;
                    m[k * r + q] = sp * mkp + c * mkq;
                }
                for k in 0..r {
                    let mpk = m[p * r + k];
                    let mqk = m[q * r + k];
                    m[p * r + k] = c * mpk - sp * mqk;
                    m[q * r + k] = sp.conj() * mpk + c * mqk;
                }
                for k in 0..r {
                    let vkp = vecs[k * r + p];
                    let vkq = vecs[k * r + q];
                    vecs[k * r + p] = c * vkp - sp.conj() * vkq;
                    vecs[k * r + q] = sp * vkp + c * vkq;
                }
            }
        }
    }
    let mut idx = [0usize; MAX_RANK];
    for (i, v) in idx.iter_mut().enumerate().take(r) {
        *v = i;
        vals[i] = m[i * r + i].re;
    }
    idx[..r].sort_by(|&i, &j| vals[j].partial_cmp(&vals[i]).unwrap());
    let sorted_vals: Vec<f64> = idx[..r].iter().map(|&i| vals[i]).collect();
    let mut sorted_vecs = zero_scratch();
    for (new, &old) in idx[..r].iter().enumerate() {
        for k in 0..r {
            sorted_vecs[k * r + new] = vecs[k * r + old];
        }
    }
    vals[..r].copy_from_slice(&sorted_vals);
    vecs[..r * r].copy_from_slice(&sorted_vecs[..r * r]);
}

/// out = f(a) for Hermitian a, applying f to the eigenvalues.
pub fn hermitian_fn(a: &[C], r: usize, f: impl Fn(f64) -> f64, out: &mut [C]) {
    let mut vals = [0.0f64; MAX_RANK];
    let mut vecs = zero_scratch();
    eigh(a, r, &mut vals, &mut vecs);
    for i in 0..r {
        for j in 0..r {
            let mut acc = C::new(0.0, 0.0);
            for k in 0..r {
                acc += vecs[i * r + k] * f(vals[k]) * vecs[j * r + k].conj();
            }
            out[i * r + j] = acc;
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(a: &[C], r: usize) -> f64 {
    let mut vals = [0.0f64; MAX_RANK];
    let mut vecs = zero_scratch();
    eigh(a, r, &mut vals, &mut vecs);
    vals[r - 1]
}
