//! Small dense kernels behind the convolution and dense layers.
//!
//! One packed, register-blocked product serves all three layouts. Operands
//! are strided views, which lets the convolution pass overlapping input
//! windows without an im2col copy. Every output element accumulates in a
//! fixed order (k-blocks ascending, then k ascending within a block), and
//! the AVX2 path only widens independent lanes without fusing multiply-add,
//! so results are bit-identical across both paths and across runs.

const MR: usize = 4;
const NR: usize = 8;
const KC: usize = 128;
const MC: usize = 64;

#[derive(Clone, Copy)]
struct View<'a> {
    d: &'a [f64],
    rs: usize,
    cs: usize,
}

impl View<'_> {
    #[inline(always)]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.d[r * self.rs + c * self.cs]
    }
}

/// `c[m x n] += a[m x k] * b[k x n]`, `b` and `c` contiguous, `a` with row
/// stride `lda`.
pub(crate) fn gemm_nn(m: usize, n: usize, k: usize, a: &[f64], lda: usize, b: &[f64], c: &mut [f64]) {
    debug_assert!(c.len() >= m * n && b.len() >= k * n);
    gemm(m, n, k, View { d: a, rs: lda, cs: 1 }, View { d: b, rs: n, cs: 1 }, c);
}

/// `c[k x n] += a[m x k]^T * b[m x n]`, with row strides `lda` and `ldb`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_tn(
    m: usize,
    n: usize,
    k: usize,
    a: &[f64],
    lda: usize,
    b: &[f64],
    ldb: usize,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= k * n);
    gemm(k, n, m, View { d: a, rs: 1, cs: lda }, View { d: b, rs: ldb, cs: 1 }, c);
}

/// `c[m x n] += a[m x k] * b[n x k]^T`, all contiguous.
pub(crate) fn gemm_nt(m: usize, n: usize, k: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    debug_assert!(c.len() >= m * n);
    gemm(m, n, k, View { d: a, rs: k, cs: 1 }, View { d: b, rs: 1, cs: k }, c);
}

fn gemm(m: usize, n: usize, k: usize, a: View, b: View, c: &mut [f64]) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    #[cfg(target_arch = "x86_64")]
    {
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            unsafe { gemm_avx2(m, n, k, a, b, c) };
            return;
        }
    }
    gemm_impl(m, n, k, a, b, c);
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn gemm_avx2(m: usize, n: usize, k: usize, a: View, b: View, c: &mut [f64]) {
    gemm_impl(m, n, k, a, b, c);
}

#[inline(always)]
fn gemm_impl(m: usize, n: usize, k: usize, a: View, b: View, c: &mut [f64]) {
    let n_panels = n.div_ceil(NR);
    let mut bpack = vec![0.0f64; KC * NR * n_panels];
    let mut apack = vec![0.0f64; MC.div_ceil(MR) * MR * KC];
    let mut p0 = 0;
    while p0 < k {
        let kc = KC.min(k - p0);
        // B block [kc x n] as NR-wide panels, zero padded
        for jp in 0..n_panels {
            let panel = &mut bpack[jp * KC * NR..jp * KC * NR + kc * NR];
            for (p, row) in panel.chunks_exact_mut(NR).enumerate() {
                for (jj, v) in row.iter_mut().enumerate() {
                    let j = jp * NR + jj;
                    *v = if j < n { b.at(p0 + p, j) } else { 0.0 };
                }
            }
        }
        let mut i0 = 0;
        while i0 < m {
            let mc = MC.min(m - i0);
            let m_panels = mc.div_ceil(MR);
            for ip in 0..m_panels {
                let panel = &mut apack[ip * KC * MR..ip * KC * MR + kc * MR];
                for (p, col) in panel.chunks_exact_mut(MR).enumerate() {
                    for (ii, v) in col.iter_mut().enumerate() {
                        let i = ip * MR + ii;
                        *v = if i < mc { a.at(i0 + i, p0 + p) } else { 0.0 };
                    }
                }
            }
            for jp in 0..n_panels {
                let bp = &bpack[jp * KC * NR..jp * KC * NR + kc * NR];
                let nr = NR.min(n - jp * NR);
                for ip in 0..m_panels {
                    let ap = &apack[ip * KC * MR..ip * KC * MR + kc * MR];
                    let acc = micro_kernel(ap, bp);
                    let mr = MR.min(mc - ip * MR);
                    for (r, acc_row) in acc.iter().enumerate().take(mr) {
                        let row = i0 + ip * MR + r;
                        let dst = &mut c[row * n + jp * NR..row * n + jp * NR + nr];
                        for (d, v) in dst.iter_mut().zip(acc_row) {
                            *d += v;
                        }
                    }
                }
            }
            i0 += mc;
        }
        p0 += kc;
    }
}

#[inline(always)]
fn micro_kernel(ap: &[f64], bp: &[f64]) -> [[f64; NR]; MR] {
    let mut acc = [[0.0f64; NR]; MR];
    for (a, b) in ap.chunks_exact(MR).zip(bp.chunks_exact(NR)) {
        let a: &[f64; MR] = a.try_into().unwrap();
        let b: &[f64; NR] = b.try_into().unwrap();
        for r in 0..MR {
            for j in 0..NR {
                acc[r][j] += a[r] * b[j];
            }
        }
    }
    acc
}
