//! Owen-scrambled Sobol points in the unit hypercube.
//!
//! Joe-Kuo direction numbers for the first 64 dimensions, natural (non-Gray)
//! ordering, and a hash-based nested uniform scramble applied to both the
//! index and each coordinate. The index shuffle only permutes within aligned
//! power-of-two blocks, so every prefix of length `2^m` keeps the
//! stratification of the unscrambled net.

use std::sync::OnceLock;

/// Primitive polynomial (with both end bits) and initial direction integers.
const TABLE: [(u32, [u32; 9]); 64] = [
    (1, [1, 0, 0, 0, 0, 0, 0, 0, 0]),
    (3, [1, 0, 0, 0, 0, 0, 0, 0, 0]),
    (7, [1, 3, 0, 0, 0, 0, 0, 0, 0]),
    (11, [1, 3, 1, 0, 0, 0, 0, 0, 0]),
    (13, [1, 1, 1, 0, 0, 0, 0, 0, 0]),
    (19, [1, 1, 3, 3, 0, 0, 0, 0, 0]),
    (25, [1, 3, 5, 13, 0, 0, 0, 0, 0]),
    (37, [1, 1, 5, 5, 17, 0, 0, 0, 0]),
    (41, [1, 1, 5, 5, 5, 0, 0, 0, 0]),
    (47, [1, 1, 7, 11, 19, 0, 0, 0, 0]),
    (55, [1, 1, 5, 1, 1, 0, 0, 0, 0]),
    (59, [1, 1, 1, 3, 11, 0, 0, 0, 0]),
    (61, [1, 3, 5, 5, 31, 0, 0, 0, 0]),
    (67, [1, 3, 3, 9, 7, 49, 0, 0, 0]),
    (91, [1, 1, 1, 15, 21, 21, 0, 0, 0]),
    (97, [1, 3, 1, 13, 27, 49, 0, 0, 0]),
    (103, [1, 1, 1, 15, 7, 5, 0, 0, 0]),
    (109, [1, 3, 1, 15, 13, 25, 0, 0, 0]),
    (115, [1, 1, 5, 5, 19, 61, 0, 0, 0]),
    (131, [1, 3, 7, 11, 23, 15, 103, 0, 0]),
    (137, [1, 3, 7, 13, 13, 15, 69, 0, 0]),
    (143, [1, 1, 3, 13, 7, 35, 63, 0, 0]),
    (145, [1, 3, 5, 9, 1, 25, 53, 0, 0]),
    (157, [1, 3, 1, 13, 9, 35, 107, 0, 0]),
    (167, [1, 3, 1, 5, 27, 61, 31, 0, 0]),
    (171, [1, 1, 5, 11, 19, 41, 61, 0, 0]),
    (185, [1, 3, 5, 3, 3, 13, 69, 0, 0]),
    (191, [1, 1, 7, 13, 1, 19, 1, 0, 0]),
    (193, [1, 3, 7, 5, 13, 19, 59, 0, 0]),
    (203, [1, 1, 3, 9, 25, 29, 41, 0, 0]),
    (211, [1, 3, 5, 13, 23, 1, 55, 0, 0]),
    (213, [1, 3, 7, 3, 13, 59, 17, 0, 0]),
    (229, [1, 3, 1, 3, 5, 53, 69, 0, 0]),
    (239, [1, 1, 5, 5, 23, 33, 13, 0, 0]),
    (241, [1, 1, 7, 7, 1, 61, 123, 0, 0]),
    (247, [1, 1, 7, 9, 13, 61, 49, 0, 0]),
    (253, [1, 3, 3, 5, 3, 55, 33, 0, 0]),
    (285, [1, 3, 1, 15, 31, 13, 49, 245, 0]),
    (299, [1, 3, 5, 15, 31, 59, 63, 97, 0]),
    (301, [1, 3, 1, 11, 11, 11, 77, 249, 0]),
    (333, [1, 3, 1, 11, 27, 43, 71, 9, 0]),
    (351, [1, 1, 7, 15, 21, 11, 81, 45, 0]),
    (355, [1, 3, 7, 3, 25, 31, 65, 79, 0]),
    (357, [1, 3, 1, 1, 19, 11, 3, 205, 0]),
    (361, [1, 1, 5, 9, 19, 21, 29, 157, 0]),
    (369, [1, 3, 7, 11, 1, 33, 89, 185, 0]),
    (391, [1, 3, 3, 3, 15, 9, 79, 71, 0]),
    (397, [1, 3, 7, 11, 15, 39, 119, 27, 0]),
    (425, [1, 1, 3, 1, 11, 31, 97, 225, 0]),
    (451, [1, 1, 1, 3, 23, 43, 57, 177, 0]),
    (463, [1, 3, 7, 7, 17, 17, 37, 71, 0]),
    (487, [1, 3, 1, 5, 27, 63, 123, 213, 0]),
    (501, [1, 1, 3, 5, 11, 43, 53, 133, 0]),
    (529, [1, 3, 5, 5, 29, 17, 47, 173, 479]),
    (539, [1, 3, 3, 11, 3, 1, 109, 9, 69]),
    (545, [1, 1, 1, 5, 17, 39, 23, 5, 343]),
    (557, [1, 3, 1, 5, 25, 15, 31, 103, 499]),
    (563, [1, 1, 1, 11, 11, 17, 63, 105, 183]),
    (601, [1, 1, 5, 11, 9, 29, 97, 231, 363]),
    (607, [1, 1, 5, 15, 19, 45, 41, 7, 383]),
    (617, [1, 3, 7, 7, 31, 19, 83, 137, 221]),
    (623, [1, 1, 1, 3, 23, 15, 111, 223, 83]),
    (631, [1, 1, 5, 13, 31, 15, 55, 25, 161]),
    (637, [1, 1, 3, 13, 25, 47, 39, 87, 257]),
];

pub const MAX_DIM: usize = TABLE.len();

const BITS: usize = 32;

fn directions() -> &'static Vec<[u32; BITS]> {
    static DIRS: OnceLock<Vec<[u32; BITS]>> = OnceLock::new();
    DIRS.get_or_init(|| {
        TABLE
            .iter()
            .enumerate()
            .map(|(j, &(poly, m))| {
                let mut v = [0u32; BITS];
                if j == 0 {
                    for (k, vk) in v.iter_mut().enumerate() {
                        *vk = 1 << (31 - k);
                    }
                    return v;
                }
                let s = (32 - poly.leading_zeros() - 1) as usize;
                let a = (poly >> 1) & ((1 << (s - 1)) - 1);
                for k in 0..BITS {
                    if k < s {
                        v[k] = m[k] << (31 - k);
                    } else {
                        let mut x = v[k - s] ^ (v[k - s] >> s);
                        for i in 1..s {
                            if (a >> (s - 1 - i)) & 1 == 1 {
                                x ^= v[k - i];
                            }
                        }
                        v[k] = x;
                    }
                }
                v
            })
            .collect()
    })
}

fn sobol_u32(index: u32, dim: usize) -> u32 {
    let v = &directions()[dim];
    let mut x = 0;
    let mut i = index;
    let mut k = 0;
    while i != 0 {
        if i & 1 == 1 {
            x ^= v[k];
        }
        i >>= 1;
        k += 1;
    }
    x
}

fn lk_permute(mut x: u32, seed: u32) -> u32 {
    x ^= x.wrapping_mul(0x3d20_adea);
    x = x.wrapping_add(seed);
    x = x.wrapping_mul((seed >> 16) | 1);
    x ^= x.wrapping_mul(0x0552_6c56);
    x ^= x.wrapping_mul(0x53a2_2864);
    x
}

fn nested_uniform_scramble(x: u32, seed: u32) -> u32 {
    lk_permute(x.reverse_bits(), seed).reverse_bits()
}

fn hash(mut x: u64) -> u32 {
    // splitmix64 finalizer
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    (x ^ (x >> 31)) as u32
}

fn to_unit(x: u32) -> f64 {
    // offset by half a cell so no coordinate is exactly 0
    (x as f64 + 0.5) / 4_294_967_296.0
}

/// The `index`-th point of the scrambled sequence in `(0,1)^dim`.
///
/// Panics if `dim` exceeds [`MAX_DIM`].
pub fn point(index: u32, dim: usize, seed: u64) -> Vec<f64> {
    assert!(dim <= MAX_DIM, "sobol sequence supports at most {MAX_DIM} dimensions");
    let shuffled = nested_uniform_scramble(index, hash(seed));
    (0..dim)
        .map(|d| {
            let x = sobol_u32(shuffled, d);
            to_unit(nested_uniform_scramble(x, hash(seed ^ ((d as u64 + 1) << 40))))
        })
        .collect()
}

/// The first `n` points of the scrambled sequence.
pub fn points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n as u32).map(|i| point(i, dim, seed)).collect()
}
