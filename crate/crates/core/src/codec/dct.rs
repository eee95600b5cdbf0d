//! Orthonormal 8×8 type-II DCT.

use std::sync::OnceLock;

pub const N: usize = 8;

pub type Block = [f64; 64];

fn basis() -> &'static [[f64; N]; N] {
    static BASIS: OnceLock<[[f64; N]; N]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut c = [[0.0; N]; N];
        for (k, row) in c.iter_mut().enumerate() {
            let alpha = if k == 0 { (1.0 / N as f64).sqrt() } else { (2.0 / N as f64).sqrt() };
            for (n, v) in row.iter_mut().enumerate() {
                *v = alpha * ((2 * n + 1) as f64 * k as f64 * std::f64::consts::PI / (2 * N) as f64).cos();
            }
        }
        c
    })
}

/// `C X Cᵀ`
pub fn forward(x: &Block) -> Block {
    let c = basis();
    let mut tmp = [0.0; 64];
    for u in 0..N {
        for j in 0..N {
            tmp[u * N + j] = (0..N).map(|i| c[u][i] * x[i * N + j]).sum();
        }
    }
    let mut out = [0.0; 64];
    for u in 0..N {
        for v in 0..N {
            out[u * N + v] = (0..N).map(|j| tmp[u * N + j] * c[v][j]).sum();
        }
    }
    out
}

/// `Cᵀ F C`
pub fn inverse(f: &Block) -> Block {
    let c = basis();
    let mut tmp = [0.0; 64];
    for i in 0..N {
        for v in 0..N {
            tmp[i * N + v] = (0..N).map(|u| c[u][i] * f[u * N + v]).sum();
        }
    }
    let mut out = [0.0; 64];
    for i in 0..N {
        for j in 0..N {
            out[i * N + j] = (0..N).map(|v| tmp[i * N + v] * c[v][j]).sum();
        }
    }
    out
}

/// Zigzag scan order (DC first), as row-major block indices.
pub fn zigzag() -> &'static [usize; 64] {
    static ORDER: OnceLock<[usize; 64]> = OnceLock::new();
    ORDER.get_or_init(|| {
        let mut order = [0usize; 64];
        let mut k = 0;
        for s in 0..(2 * N - 1) {
            let lo = s.saturating_sub(N - 1);
            let hi = s.min(N - 1);
            let rows: Vec<usize> = if s % 2 == 1 { (lo..=hi).collect() } else { (lo..=hi).rev().collect() };
            for r in rows {
                order[k] = r * N + (s - r);
                k += 1;
            }
        }
        order
    })
}
