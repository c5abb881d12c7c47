//! Small fixed-size symmetric-matrix helpers and compensated summation.

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub(crate) fn sym2_eigenvalues(m: &[[f64; 2]; 2]) -> [f64; 2] {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    [tr / 2.0 - disc, tr / 2.0 + disc]
}

/// Eigenvalues of a symmetric 3x3 matrix, ascending, via cyclic Jacobi.
pub(crate) fn sym3_eigenvalues(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut a = *m;
    let scale = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| a[i][j].abs())
        .fold(0.0f64, f64::max);
    if scale == 0.0 {
        return [0.0; 3];
    }
    for _ in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off <= scale * 1e-15 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() <= scale * 1e-30 {
                continue;
            }
            // Jacobi rotation zeroing a[p][q].
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut b = a;
            for i in 0..3 {
                b[i][p] = c * a[i][p] - s * a[i][q];
                b[i][q] = s * a[i][p] + c * a[i][q];
            }
            a = b;
            let mut bb = a;
            for j in 0..3 {
                bb[p][j] = c * a[p][j] - s * a[q][j];
                bb[q][j] = s * a[p][j] + c * a[q][j];
            }
            a = bb;
            a[p][q] = 0.0;
            a[q][p] = 0.0;
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Neumaier-compensated accumulator.
///
/// Keeps the running error term of naive summation, so the total is accurate
/// to ~2 ulp of the sum of magnitudes independently of summation order.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// splitmix64 mixing step; used to derive independent sub-seeds.
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sub-seed for stream `tag`, element `index`, derived from a master seed.
pub(crate) fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag ^ splitmix64(index)))
}
