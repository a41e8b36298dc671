use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{DiscreteOperator, DENSE_LIMIT};
use crate::linalg::generalized_symmetric_eig;
use crate::{Error, Result};

/// Extremes of the numerical range over random complex vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericalRange {
    /// `min Re⟨T u, u⟩ / ⟨M̃ u, u⟩`.
    pub min_re: f64,
    /// `max |Im⟨T u, u⟩| / Re⟨T u, u⟩`; the tangent of the sector half-angle.
    pub max_ratio: f64,
}

/// Samples `⟨T u, u⟩` over random complex `u = a + i b`.
///
/// With real `T`, `Re⟨T u, u⟩ = aᵀ T a + bᵀ T b` and
/// `Im⟨T u, u⟩ = aᵀ T b − bᵀ T a`. Samples whose real part vanishes to
/// rounding are skipped in the ratio.
pub fn numerical_range_check(op: &DiscreteOperator, samples: usize, seed: u64) -> NumericalRange {
    let n = op.n_dofs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = op.t.max_abs();
    let mut out = NumericalRange {
        min_re: f64::INFINITY,
        max_ratio: 0.0,
    };
    for _ in 0..samples {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (ta, tb) = (op.t.mul_vec(&a), op.t.mul_vec(&b));
        let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        let re = dot(&a, &ta) + dot(&b, &tb);
        let im = dot(&a, &tb) - dot(&b, &ta);
        let m = op.energy(&a) + op.energy(&b);
        out.min_re = out.min_re.min(re / m);
        let norm2 = dot(&a, &a) + dot(&b, &b);
        if re > 1e-12 * scale * norm2 {
            out.max_ratio = out.max_ratio.max(im.abs() / re);
        }
    }
    out
}

/// Spectral calculus of `I + M̃⁻¹ T` from a dense decomposition.
#[derive(Debug, Clone)]
pub struct FractionalPowers {
    values: DVector<f64>,
    vectors: DMatrix<f64>,
    m_tilde: DMatrix<f64>,
}

impl FractionalPowers {
    pub fn new(op: &DiscreteOperator) -> Result<Self> {
        let n = op.n_dofs();
        if n > DENSE_LIMIT {
            return Err(Error::Size {
                n,
                limit: DENSE_LIMIT,
            });
        }
        if !op.is_symmetric() {
            return Err(Error::InvalidArgument(
                "fractional powers need a symmetric stiffness".into(),
            ));
        }
        let m_tilde = op.m_tilde.to_dense();
        let (values, vectors) = generalized_symmetric_eig(&op.t.to_dense(), &m_tilde)?;
        Ok(Self {
            values,
            vectors,
            m_tilde,
        })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k).iter().copied().collect()
    }

    /// `(I + M̃⁻¹ T)^θ u` for real `θ`.
    pub fn apply(&self, theta: f64, u: &[f64]) -> Result<Vec<f64>> {
        if !theta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "power must be finite, got {theta}"
            )));
        }
        if u.len() != self.values.len() {
            return Err(Error::InvalidArgument(format!(
                "vector has length {}, expected {}",
                u.len(),
                self.values.len()
            )));
        }
        // coefficients in the M̃-orthonormal eigenbasis
        let coeffs = self.vectors.transpose() * (&self.m_tilde * DVector::from_column_slice(u));
        let scaled = DVector::from_iterator(
            coeffs.len(),
            coeffs
                .iter()
                .zip(self.values.iter())
                .map(|(c, l)| c * (1.0 + l.max(0.0)).powf(theta)),
        );
        Ok((&self.vectors * scaled).iter().copied().collect())
    }
}

/// `(I + M̃⁻¹ T)^θ u` through a fresh dense decomposition.
pub fn fractional_power_apply(op: &DiscreteOperator, theta: f64, u: &[f64]) -> Result<Vec<f64>> {
    FractionalPowers::new(op)?.apply(theta, u)
}

/// One refinement level of [`fractional_embedding_probe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub level: usize,
    pub h: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub theta: f64,
    pub p: f64,
    pub rows: Vec<ProbeRow>,
    /// No level-to-level increase of the worst ratio beyond [`PROBE_GROWTH`].
    pub bounded: bool,
}

/// Largest level-to-level growth factor still read as bounded.
pub const PROBE_GROWTH: f64 = 1.25;

impl ProbeReport {
    /// Table with header `level,h,ratio`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,ratio\n");
        for r in &self.rows {
            writeln!(s, "{},{},{}", r.level, r.h, r.ratio).unwrap();
        }
        s
    }
}

/// Worst observed `‖u‖_∞ / ‖(I + M̃⁻¹T)^θ u‖_{p,M}` per refinement level.
///
/// Candidates are `u = (I + M̃⁻¹T)^{−θ} g` for unit nodal spikes `g` at
/// random free nodes and for random `g`; the `ℓ^p` norm uses the lumped
/// block mass as weights. The verdict is a trend, not a certificate.
pub fn fractional_embedding_probe(
    ops: &[DiscreteOperator],
    theta: f64,
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "probe power must lie in (0, 1], got {theta}"
        )));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "probe exponent must be finite and at least 1, got {p}"
        )));
    }
    let mut rows = Vec::with_capacity(ops.len());
    for (level, op) in ops.iter().enumerate() {
        let powers = FractionalPowers::new(op)?;
        let n = op.n_dofs();
        let weights = op.m_tilde.row_sums();
        let lp = |g: &[f64]| {
            g.iter()
                .zip(&weights)
                .map(|(x, w)| w * x.abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(level as u64));
        let mut worst = 0.0f64;
        for s in 0..samples {
            let g: Vec<f64> = if s % 2 == 0 {
                let mut g = vec![0.0; n];
                g[rng.random_range(0..n)] = 1.0;
                g
            } else {
                (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
            };
            let u = powers.apply(-theta, &g)?;
            let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            worst = worst.max(sup / lp(&g));
        }
        rows.push(ProbeRow {
            level,
            h: op.mesh().max_diameter(),
            ratio: worst,
        });
    }
    let bounded = rows
        .windows(2)
        .all(|w| w[1].ratio <= PROBE_GROWTH * w[0].ratio);
    Ok(ProbeReport {
        theta,
        p,
        rows,
        bounded,
    })
}

/// `sup ‖tr_Σ u‖_{L²(Σ)} / ‖u‖_{W^{1,2}(μ*)}` over the discrete space: the
/// square root of the largest eigenvalue of the interface trace Gram
/// matrix against the weighted Sobolev Gram matrix.
pub fn trace_norm_ratio(op: &DiscreteOperator) -> Result<f64> {
    let n = op.n_dofs();
    if n > DENSE_LIMIT {
        return Err(Error::Size {
            n,
            limit: DENSE_LIMIT,
        });
    }
    let (values, _) =
        generalized_symmetric_eig(&op.l2_sigma.to_dense(), &op.h1_weighted.to_dense())?;
    Ok(values[n - 1].max(0.0).sqrt())
}
