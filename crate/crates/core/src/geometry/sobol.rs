//! Two-dimensional Sobol sequence with Joe-Kuo direction numbers.
//!
//! Dimension 1 is the base-2 van der Corput sequence. Dimension 2 uses the
//! primitive polynomial of degree 1 (`s = 1, a = 0, m = [1]`) from the
//! `new-joe-kuo-6.21201` table. Points are produced in Gray-code order, so index
//! `i` is the XOR of the direction numbers selected by the bits of `i ^ (i >> 1)`.

const BITS: usize = 32;

const fn directions() -> [[u32; BITS]; 2] {
    let mut v = [[0u32; BITS]; 2];
    let mut k = 0;
    while k < BITS {
        v[0][k] = 1 << (31 - k);
        k += 1;
    }
    // s = 1, m_1 = 1: v_k = v_{k-1} ^ (v_{k-1} >> 1)
    v[1][0] = 1 << 31;
    let mut k = 1;
    while k < BITS {
        v[1][k] = v[1][k - 1] ^ (v[1][k - 1] >> 1);
        k += 1;
    }
    v
}

const DIRECTIONS: [[u32; BITS]; 2] = directions();

/// The `index`-th point of the sequence on the unit square.
pub fn sobol_point(index: u64) -> [f64; 2] {
    assert!(index < 1 << BITS, "Sobol index {index} exceeds 2^32");
    let gray = index ^ (index >> 1);
    let mut out = [0u32; 2];
    for (k, dirs) in (0..BITS).map(|k| (k, (DIRECTIONS[0][k], DIRECTIONS[1][k]))) {
        if gray >> k & 1 == 1 {
            out[0] ^= dirs.0;
            out[1] ^= dirs.1;
        }
    }
    const SCALE: f64 = 1.0 / (1u64 << 32) as f64;
    [out[0] as f64 * SCALE, out[1] as f64 * SCALE]
}

/// Iterator over the 2D Sobol sequence.
#[derive(Debug, Clone)]
pub struct Sobol2 {
    index: u64,
    state: [u32; 2],
}

impl Sobol2 {
    pub fn new() -> Self {
        Self::starting_at(0)
    }

    pub fn starting_at(index: u64) -> Self {
        let gray = index ^ (index >> 1);
        let mut state = [0u32; 2];
        for (k, (d0, d1)) in DIRECTIONS[0].iter().zip(&DIRECTIONS[1]).enumerate() {
            if gray >> k & 1 == 1 {
                state[0] ^= d0;
                state[1] ^= d1;
            }
        }
        Self { index, state }
    }
}

impl Default for Sobol2 {
    fn default() -> Self {
        Self::new()
    }
}

impl Iterator for Sobol2 {
    type Item = [f64; 2];

    fn next(&mut self) -> Option<[f64; 2]> {
        if self.index >= 1 << BITS {
            return None;
        }
        const SCALE: f64 = 1.0 / (1u64 << 32) as f64;
        let out = [self.state[0] as f64 * SCALE, self.state[1] as f64 * SCALE];
        // Gray-code step: flip the direction at the lowest zero bit of the current index.
        let c = self.index.trailing_ones() as usize;
        if c < BITS {
            self.state[0] ^= DIRECTIONS[0][c];
            self.state[1] ^= DIRECTIONS[1][c];
        }
        self.index += 1;
        Some(out)
    }
}
