//! First passage through the central state and `s`-avoiding probabilities.
//!
//! All functions take a [`PassageProblem`], which checks that every path
//! between the two halves `S_- = {n < s}` and `S_+ = {n > s}` has to go
//! through `s`.

use crate::chain::{DensityTrace, GeneratorMatrix};
use crate::error::{Error, FluxDirection, Result, Side};
use crate::quad::convolve;
use crate::symmetry::{verify_generator_symmetry, SymmetryCertificate};
use crate::transient::{communicating_classes, TransitionMatrixSequence};

/// Tolerance for the agreement of the two avoiding-probability forms.
pub const FORMS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PassageProblem {
    generator: GeneratorMatrix,
    center: usize,
    below: Vec<usize>,
    above: Vec<usize>,
    cert: Option<SymmetryCertificate>,
}

impl PassageProblem {
    pub fn generator(&self) -> &GeneratorMatrix {
        &self.generator
    }

    /// Label of the central state.
    pub fn center_label(&self) -> i64 {
        self.generator.space().label(self.center)
    }

    pub fn center_index(&self) -> usize {
        self.center
    }

    pub fn certificate(&self) -> Option<&SymmetryCertificate> {
        self.cert.as_ref()
    }

    pub fn side_of(&self, index: usize) -> Option<Side> {
        use std::cmp::Ordering::*;
        match index.cmp(&self.center) {
            Less => Some(Side::Below),
            Greater => Some(Side::Above),
            Equal => None,
        }
    }

    fn index(&self, label: i64) -> Result<usize> {
        self.generator.space().index_of(label)
    }

    fn mirror(&self, index: usize) -> usize {
        2 * self.center - index
    }

    fn cert(&self) -> Result<&SymmetryCertificate> {
        self.cert.as_ref().ok_or(Error::NoCertificate)
    }
}

/// Check the passage assumptions and fix the central state.
///
/// A supplied certificate must verify against `q` (tolerance 1e-9).
pub fn build_passage_problem(q: &GeneratorMatrix, cert: Option<SymmetryCertificate>) -> Result<PassageProblem> {
    let space = q.space();
    space.check_reflectable()?;
    let len = q.dim();
    if len.is_multiple_of(2) {
        return Err(Error::OddN);
    }
    let center = len / 2;
    let below: Vec<usize> = (0..center).collect();
    let above: Vec<usize> = (center + 1..len).collect();
    let r = q.rates();

    for &i in &below {
        for &j in &above {
            if r[(i, j)] != 0.0 || r[(j, i)] != 0.0 {
                return Err(Error::CrossJump { i: space.label(i), j: space.label(j) });
            }
        }
    }
    let into = |side: &[usize]| side.iter().map(|&i| r[(i, center)]).sum::<f64>();
    let out = |side: &[usize]| side.iter().map(|&i| r[(center, i)]).sum::<f64>();
    for (flux, dir) in [
        (into(&below), FluxDirection::IntoFromBelow),
        (into(&above), FluxDirection::IntoFromAbove),
        (out(&below), FluxDirection::OutToBelow),
        (out(&above), FluxDirection::OutToAbove),
    ] {
        if flux.is_nan() || flux <= 0.0 {
            return Err(Error::NoFluxAtS(dir));
        }
    }
    for (side, members) in [(Side::Below, &below), (Side::Above, &above)] {
        if communicating_classes(r, members) != 1 {
            return Err(Error::ReducibleSubchain(side));
        }
    }
    if let Some(c) = &cert {
        let check = verify_generator_symmetry(q, c, 1e-9)?;
        if !check.pass {
            let (k, n) = check.at.unwrap_or((0, 0));
            return Err(Error::SymmetryViolation { k, n, residual: check.max_residual });
        }
    }
    Ok(PassageProblem { generator: q.clone(), center, below, above, cert })
}

fn check_sequence(prob: &PassageProblem, p: &TransitionMatrixSequence) -> Result<()> {
    if p.dim() != prob.generator.dim() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn current(prob: &PassageProblem, p: &TransitionMatrixSequence, k: usize, side: &[usize]) -> DensityTrace {
    let r = prob.generator.rates();
    let s = prob.center;
    let values = p.matrices.iter().map(|m| side.iter().map(|&i| m[(k, i)] * r[(i, s)]).sum()).collect();
    DensityTrace { grid: p.grid, values }
}

/// Upward and downward probability currents into `s` from state `k`:
/// `h⁺_{k,s}(t) = Σ_{i<s} p_{k,i}(t) q_{i,s}` and
/// `h⁻_{k,s}(t) = Σ_{j>s} p_{k,j}(t) q_{j,s}`.
pub fn currents(prob: &PassageProblem, p: &TransitionMatrixSequence, k: i64) -> Result<(DensityTrace, DensityTrace)> {
    check_sequence(prob, p)?;
    let k = prob.index(k)?;
    Ok((current(prob, p, k, &prob.below), current(prob, p, k, &prob.above)))
}

/// First-passage density to `s` from `start` by solving the renewal
/// Volterra equation `g = h_start − g * h_{s,s}` with the product
/// trapezoidal rule.
pub fn fpt_density_volterra(prob: &PassageProblem, p: &TransitionMatrixSequence, start: i64) -> Result<DensityTrace> {
    check_sequence(prob, p)?;
    let k = prob.index(start)?;
    let side = match prob.side_of(k) {
        None => return Err(Error::StartIsCenter),
        Some(Side::Below) => &prob.below,
        Some(Side::Above) => &prob.above,
    };
    let forcing = current(prob, p, k, side);
    let kernel = current(prob, p, prob.center, side);
    Ok(DensityTrace { grid: p.grid, values: solve_volterra(&forcing.values, &kernel.values, p.grid.h()) })
}

/// March `g_m (1 + h K_0 / 2) = f_m − h [g_0 K_m / 2 + Σ_{0<j<m} g_j K_{m−j}]`.
fn solve_volterra(forcing: &[f64], kernel: &[f64], h: f64) -> Vec<f64> {
    let len = forcing.len();
    let mut g = Vec::with_capacity(len);
    g.push(forcing[0]);
    let diag = 1.0 + 0.5 * h * kernel[0];
    for m in 1..len {
        let mut acc = 0.5 * g[0] * kernel[m];
        for j in 1..m {
            acc += g[j] * kernel[m - j];
        }
        g.push((forcing[m] - h * acc) / diag);
    }
    g
}

/// First-passage density as a difference of currents, valid for chains
/// with a central symmetry: `g⁺ = h⁺ − h⁻` below `s`, `g⁻ = h⁻ − h⁺` above.
pub fn fpt_density_symmetric(prob: &PassageProblem, p: &TransitionMatrixSequence, start: i64) -> Result<DensityTrace> {
    prob.cert()?;
    check_sequence(prob, p)?;
    let k = prob.index(start)?;
    let (up, down) = (current(prob, p, k, &prob.below), current(prob, p, k, &prob.above));
    let (toward, away) = match prob.side_of(k) {
        None => return Err(Error::StartIsCenter),
        Some(Side::Below) => (up, down),
        Some(Side::Above) => (down, up),
    };
    let values = toward.values.iter().zip(&away.values).map(|(a, b)| a - b).collect();
    Ok(DensityTrace { grid: p.grid, values })
}

/// `s`-avoiding transition probabilities from `k` to every `n ≠ s`.
#[derive(Debug, Clone)]
pub struct AvoidingRow {
    pub labels: Vec<i64>,
    pub traces: Vec<DensityTrace>,
}

impl AvoidingRow {
    pub fn trace(&self, n: i64) -> Option<&DensityTrace> {
        self.labels.iter().position(|&l| l == n).map(|i| &self.traces[i])
    }
}

/// `p^{⟨s⟩}_{k,n}(t) = p_{k,n}(t) − ∫_0^t g(ϑ) p_{s,n}(t−ϑ) dϑ` for every
/// `n ≠ s`, including the opposite side, where it should vanish.
pub fn avoiding_probabilities_renewal(
    prob: &PassageProblem,
    p: &TransitionMatrixSequence,
    g: &DensityTrace,
    k: i64,
) -> Result<AvoidingRow> {
    check_sequence(prob, p)?;
    if g.grid != p.grid {
        return Err(Error::GridMismatch);
    }
    let ki = prob.index(k)?;
    if ki == prob.center {
        return Err(Error::StartIsCenter);
    }
    let space = prob.generator.space();
    let h = p.grid.h();
    let mut labels = Vec::new();
    let mut traces = Vec::new();
    for n in (0..prob.generator.dim()).filter(|&n| n != prob.center) {
        let direct = p.entry_trace(ki, n);
        let through = convolve(&g.values, &p.entry_trace(prob.center, n), h);
        let values = direct.iter().zip(&through).map(|(a, b)| a - b).collect();
        labels.push(space.label(n));
        traces.push(DensityTrace { grid: p.grid, values });
    }
    Ok(AvoidingRow { labels, traces })
}

/// Avoiding probability from the reflection formulas
/// `p_{k,n} − (x_k/x_s) p_{2s−k,n}` and `p_{k,n} − (x_s/x_n) p_{k,2s−n}`;
/// the two must agree within [`FORMS_TOL`]. `k` and `n` must lie on the
/// same side of `s`.
pub fn avoiding_probabilities_symmetric(
    prob: &PassageProblem,
    p: &TransitionMatrixSequence,
    k: i64,
    n: i64,
) -> Result<DensityTrace> {
    let cert = prob.cert()?;
    check_sequence(prob, p)?;
    let (ki, ni) = (prob.index(k)?, prob.index(n)?);
    let (sk, sn) = (prob.side_of(ki), prob.side_of(ni));
    if sk.is_none() || sn.is_none() {
        return Err(Error::CenterState(if sk.is_none() { k } else { n }));
    }
    if sk != sn {
        return Err(Error::OppositeSides { k, n });
    }
    let s = prob.center;
    let w = &cert.weights;
    let (first_scale, second_scale) = (w[ki] / w[s], w[s] / w[ni]);
    let (mk, mn) = (prob.mirror(ki), prob.mirror(ni));
    let mut values = Vec::with_capacity(p.grid.len());
    for (i, m) in p.matrices.iter().enumerate() {
        let first = m[(ki, ni)] - first_scale * m[(mk, ni)];
        let second = m[(ki, ni)] - second_scale * m[(ki, mn)];
        let residual = (first - second).abs();
        if residual > FORMS_TOL * first.abs().max(1.0) {
            return Err(Error::FormsDisagree { residual, t: p.grid.point(i) });
        }
        values.push(first);
    }
    Ok(DensityTrace { grid: p.grid, values })
}

/// Density from the mirror image of `from`, given the density `g` from
/// `from`: `g_{2s−from}(t) = (x_{2s−from}/x_s) g_{from}(t)`.
pub fn fpt_reflection(prob: &PassageProblem, g: &DensityTrace, from: i64) -> Result<DensityTrace> {
    let cert = prob.cert()?;
    let fi = prob.index(from)?;
    if fi == prob.center {
        return Err(Error::StartIsCenter);
    }
    Ok(reflect_density(cert, prob.center, fi, g))
}

/// Pointwise `(x_{mirror}/x_center) · g` for a given certificate.
pub fn reflect_density(cert: &SymmetryCertificate, center: usize, from: usize, g: &DensityTrace) -> DensityTrace {
    let scale = cert.weights[2 * center - from] / cert.weights[center];
    DensityTrace { grid: g.grid, values: g.values.iter().map(|v| scale * v).collect() }
}
