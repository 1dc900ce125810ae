//! Method-of-lines discretization of the pulse-response reactor and the
//! structured linear algebra behind the implicit integrator.
//!
//! State layout (length `n_gas * n_cells + n_channels + n_gas`):
//!
//! ```text
//! [ C_g0[0..n] | C_g1[0..n] | ... | xi[0..n_ch] | E[0..n_gas] ]
//! ```
//!
//! where `C` are cell-centered gas concentrations, `xi` are cumulative
//! channel extents, and `E` are cumulative exited moles per gas. The gas
//! equations are linear diffusion except at the catalyst cell; every
//! nonlinear coupling involves only border variables (catalyst-cell
//! concentrations and extents), so Newton systems are solved exactly with a
//! tridiagonal-plus-border Schur complement.

use super::mechanism::Kinetics;
use super::ReactorConfig;

pub(crate) struct TapSystem<'a> {
    pub kin: &'a Kinetics,
    pub n_cells: usize,
    pub cat: usize,
    /// D / (eps dx^2)
    pub alpha: f64,
    /// 1 / (eps dx): converts a molar point source into a concentration rate
    pub source_scale: f64,
    /// 2 D / dx: outlet flux per unit exit-cell concentration
    pub flux_coeff: f64,
    // scratch
    cov: Vec<f64>,
    rates: Vec<f64>,
    d_dc: Vec<f64>,
    d_dcov: Vec<Vec<f64>>,
}

impl<'a> TapSystem<'a> {
    pub fn new(config: &ReactorConfig, kin: &'a Kinetics) -> Self {
        let dx = config.length / config.n_cells as f64;
        let nc = kin.n_channels();
        let ns = kin.n_surfaces();
        TapSystem {
            kin,
            n_cells: config.n_cells,
            cat: config.catalyst_cell,
            alpha: config.diffusivity / (config.porosity * dx * dx),
            source_scale: 1.0 / (config.porosity * dx),
            flux_coeff: 2.0 * config.diffusivity / dx,
            cov: vec![0.0; ns],
            rates: vec![0.0; nc],
            d_dc: vec![0.0; nc],
            d_dcov: vec![vec![0.0; ns]; nc],
        }
    }

    pub fn n_states(&self) -> usize {
        self.kin.n_gases() * self.n_cells + self.kin.n_channels() + self.kin.n_gases()
    }

    pub fn gas_offset(&self, g: usize) -> usize {
        g * self.n_cells
    }

    pub fn extent_offset(&self) -> usize {
        self.kin.n_gases() * self.n_cells
    }

    pub fn exited_offset(&self) -> usize {
        self.extent_offset() + self.kin.n_channels()
    }

    /// Time derivative of the full state.
    pub fn rhs(&mut self, y: &[f64], dy: &mut [f64]) {
        let n = self.n_cells;
        let ng = self.kin.n_gases();
        let nch = self.kin.n_channels();
        let xi = &y[self.extent_offset()..self.extent_offset() + nch];
        self.kin.coverages(xi, &mut self.cov);
        let c_thin: Vec<f64> = (0..ng).map(|g| y[self.gas_offset(g) + self.cat]).collect();
        self.kin.rates(&c_thin, &self.cov, &mut self.rates);

        let a = self.alpha;
        for g in 0..ng {
            let c = &y[self.gas_offset(g)..self.gas_offset(g) + n];
            let d = &mut dy[g * n..(g + 1) * n];
            // zero-flux inlet face, zero-concentration outlet face
            d[0] = a * (c[1] - c[0]);
            for i in 1..n - 1 {
                d[i] = a * (c[i + 1] - 2.0 * c[i] + c[i - 1]);
            }
            d[n - 1] = a * (c[n - 2] - 3.0 * c[n - 1]);
            let src: f64 = self.kin.gas_source[g]
                .iter()
                .zip(&self.rates)
                .map(|(s, r)| s * r)
                .sum();
            d[self.cat] += src * self.source_scale;
        }
        for c in 0..nch {
            dy[self.extent_offset() + c] = self.rates[c];
        }
        for g in 0..ng {
            dy[self.exited_offset() + g] = self.flux_coeff * y[self.gas_offset(g) + n - 1];
        }
    }

    /// Channel rates evaluated at catalyst concentrations and extents.
    pub fn channel_rates(&mut self, c_thin: &[f64], xi: &[f64], out: &mut [f64]) {
        self.kin.coverages(xi, &mut self.cov);
        self.kin.rates(c_thin, &self.cov, out);
    }

    /// Builds and factors `M = I - a J(y)` for the current state.
    pub fn factor(&mut self, y: &[f64], a_coeff: f64) -> BorderedFactor {
        let n = self.n_cells;
        let ng = self.kin.n_gases();
        let nch = self.kin.n_channels();
        let ns = self.kin.n_surfaces();
        let j = self.cat;
        let xi = &y[self.extent_offset()..self.extent_offset() + nch];
        self.kin.coverages(xi, &mut self.cov);
        let c_thin: Vec<f64> = (0..ng).map(|g| y[self.gas_offset(g) + j]).collect();
        self.kin
            .rate_partials(&c_thin, &self.cov, &mut self.d_dc, &mut self.d_dcov);
        // d r_c / d xi_k through the coverages
        let mut dr_dxi = vec![vec![0.0; nch]; nch];
        for c in 0..nch {
            for k in 0..nch {
                let mut v = 0.0;
                for s in 0..ns {
                    v += self.d_dcov[c][s] * self.kin.coverage_of_extent[s][k];
                }
                dr_dxi[c][k] = v;
            }
        }

        // Border variables: catalyst concentration of each gas, then extents,
        // then exited integrals.
        let nb = ng + nch + ng;
        let a = self.alpha;
        let m_diag = 1.0 + 2.0 * a_coeff * a; // interior rows of M
        let m_off = -a_coeff * a;

        // Interior segments per gas: cells [0, j) and (j, n).
        let mut segments = Vec::with_capacity(2 * ng);
        for _g in 0..ng {
            // left segment: rows 0..j. Row 0 diag: 1 + a_coeff*a (one neighbor).
            let len = j;
            let mut diag = vec![m_diag; len];
            if len > 0 {
                diag[0] = 1.0 + a_coeff * a;
            }
            segments.push(Tridiag::factor(diag, m_off, len));
            // right segment: rows j+1..n. Last row diag: 1 + 3 a_coeff a.
            let len = n - j - 1;
            let mut diag = vec![m_diag; len];
            if len > 0 {
                diag[len - 1] = 1.0 + 3.0 * a_coeff * a;
            }
            segments.push(Tridiag::factor(diag, m_off, len));
        }

        // Z = M_II^{-1} M_IB, stored only for the catalyst-concentration
        // border columns (extent and exited columns have no interior entries).
        // Column for border gas g has entries m_off at interior rows (g, j-1)
        // and (g, j+1).
        let mut z_left = vec![Vec::new(); ng];
        let mut z_right = vec![Vec::new(); ng];
        for g in 0..ng {
            let left = &segments[2 * g];
            if left.len > 0 {
                let mut rhs = vec![0.0; left.len];
                rhs[left.len - 1] = m_off;
                z_left[g] = left.solve_vec(rhs);
            }
            let right = &segments[2 * g + 1];
            if right.len > 0 {
                let mut rhs = vec![0.0; right.len];
                rhs[0] = m_off;
                z_right[g] = right.solve_vec(rhs);
            }
        }

        // Dense border block M_BB.
        let mut w = vec![vec![0.0; nb]; nb];
        // catalyst rows
        for g in 0..ng {
            for h in 0..nb {
                w[g][h] = 0.0;
            }
            w[g][g] = m_diag;
            // reaction source coupling into concentrations and extents
            for c in 0..nch {
                let s = self.kin.gas_source[g][c];
                if s == 0.0 && self.d_dc[c] == 0.0 {
                    continue;
                }
                let gc = self.kin.channel_gas[c];
                w[g][gc] += -a_coeff * s * self.d_dc[c] * self.source_scale;
                for k in 0..nch {
                    w[g][ng + k] += -a_coeff * s * dr_dxi[c][k] * self.source_scale;
                }
            }
        }
        // extent rows
        for c in 0..nch {
            let row = ng + c;
            w[row][row] += 1.0;
            w[row][self.kin.channel_gas[c]] += -a_coeff * self.d_dc[c];
            for k in 0..nch {
                w[row][ng + k] += -a_coeff * dr_dxi[c][k];
            }
        }
        // exited rows: depend on the interior exit cell, handled via V below
        for g in 0..ng {
            let row = ng + nch + g;
            w[row][row] = 1.0;
        }

        // Schur complement S = W - V Z. V rows: catalyst row g hits interior
        // cols (g, j-1) and (g, j+1) with m_off; exited row g hits (g, n-1)
        // with -a_coeff * flux_coeff.
        let mut schur = w;
        for g in 0..ng {
            // catalyst row g
            if !z_left[g].is_empty() {
                let zl = &z_left[g];
                schur[g][g] -= m_off * zl[zl.len() - 1];
            }
            if !z_right[g].is_empty() {
                schur[g][g] -= m_off * z_right[g][0];
            }
            // exited row g couples to interior col (g, n-1) = last of right segment
            let row = ng + nch + g;
            let vf = -a_coeff * self.flux_coeff;
            if !z_right[g].is_empty() {
                schur[row][g] -= vf * z_right[g][z_right[g].len() - 1];
            }
        }
        let schur = DenseLu::factor(schur);

        BorderedFactor {
            n,
            ng,
            nch,
            cat: j,
            m_off,
            vf: -a_coeff * self.flux_coeff,
            segments,
            z_left,
            z_right,
            schur,
        }
    }
}

/// LU factorization of `M = I - a J` exploiting the tridiagonal-plus-border
/// structure.
pub(crate) struct BorderedFactor {
    n: usize,
    ng: usize,
    nch: usize,
    cat: usize,
    m_off: f64,
    vf: f64,
    segments: Vec<Tridiag>,
    z_left: Vec<Vec<f64>>,
    z_right: Vec<Vec<f64>>,
    schur: DenseLu,
}

impl BorderedFactor {
    /// Solves `M x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, ng, nch, j) = (self.n, self.ng, self.nch, self.cat);
        let nb = ng + nch + ng;
        // interior solve per segment
        let mut xi_int: Vec<Vec<f64>> = Vec::with_capacity(2 * ng);
        for g in 0..ng {
            let base = g * n;
            xi_int.push(self.segments[2 * g].solve_vec(b[base..base + j].to_vec()));
            xi_int.push(self.segments[2 * g + 1].solve_vec(b[base + j + 1..base + n].to_vec()));
        }
        // border right-hand side b_B - V x_I'
        let mut bb = vec![0.0; nb];
        for g in 0..ng {
            let mut v = b[g * n + j];
            let left = &xi_int[2 * g];
            if !left.is_empty() {
                v -= self.m_off * left[left.len() - 1];
            }
            let right = &xi_int[2 * g + 1];
            if !right.is_empty() {
                v -= self.m_off * right[0];
            }
            bb[g] = v;
        }
        for c in 0..nch {
            bb[ng + c] = b[ng * n + c];
        }
        for g in 0..ng {
            let mut v = b[ng * n + nch + g];
            let right = &xi_int[2 * g + 1];
            if !right.is_empty() {
                v -= self.vf * right[right.len() - 1];
            }
            bb[ng + nch + g] = v;
        }
        let xb = self.schur.solve(bb);
        // back-substitute x_I = x_I' - Z x_B
        for g in 0..ng {
            let base = g * n;
            let left = &xi_int[2 * g];
            for (i, &v) in left.iter().enumerate() {
                b[base + i] = v - self.z_left[g].get(i).map_or(0.0, |z| z * xb[g]);
            }
            b[base + j] = xb[g];
            let right = &xi_int[2 * g + 1];
            for (i, &v) in right.iter().enumerate() {
                b[base + j + 1 + i] = v - self.z_right[g].get(i).map_or(0.0, |z| z * xb[g]);
            }
        }
        for c in 0..nch {
            b[ng * n + c] = xb[ng + c];
        }
        for g in 0..ng {
            b[ng * n + nch + g] = xb[ng + nch + g];
        }
    }
}

/// Thomas factorization of a symmetric-pattern tridiagonal matrix with
/// constant off-diagonal.
struct Tridiag {
    len: usize,
    /// eliminated diagonal
    dprime: Vec<f64>,
    off: f64,
}

impl Tridiag {
    fn factor(diag: Vec<f64>, off: f64, len: usize) -> Self {
        let mut dprime = diag;
        for i in 1..len {
            let w = off / dprime[i - 1];
            dprime[i] -= w * off;
        }
        Tridiag { len, dprime, off }
    }

    fn solve_vec(&self, mut b: Vec<f64>) -> Vec<f64> {
        if self.len == 0 {
            return b;
        }
        for i in 1..self.len {
            let w = self.off / self.dprime[i - 1];
            b[i] -= w * b[i - 1];
        }
        b[self.len - 1] /= self.dprime[self.len - 1];
        for i in (0..self.len - 1).rev() {
            b[i] = (b[i] - self.off * b[i + 1]) / self.dprime[i];
        }
        b
    }
}

/// Dense LU with partial pivoting for the small border block.
struct DenseLu {
    n: usize,
    lu: Vec<Vec<f64>>,
    piv: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: Vec<Vec<f64>>) -> Self {
        let n = a.len();
        let mut piv = (0..n).collect::<Vec<_>>();
        for k in 0..n {
            let mut p = k;
            for i in k + 1..n {
                if a[i][k].abs() > a[p][k].abs() {
                    p = i;
                }
            }
            if p != k {
                a.swap(p, k);
                piv.swap(p, k);
            }
            let pivot = a[k][k];
            for i in k + 1..n {
                let f = a[i][k] / pivot;
                a[i][k] = f;
                for j in k + 1..n {
                    let akj = a[k][j];
                    a[i][j] -= f * akj;
                }
            }
        }
        DenseLu { n, lu: a, piv }
    }

    fn solve(&self, b: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        let mut x = vec![0.0; n];
        for i in 0..n {
            x[i] = b[self.piv[i]];
        }
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reactor::mechanism::{MechanismKind, MechanismSpec};
    use std::collections::BTreeMap;

    fn lh_spec() -> MechanismSpec {
        let mut k_forward = BTreeMap::new();
        k_forward.insert("O2".into(), 0.2);
        k_forward.insert("CO".into(), 0.5);
        k_forward.insert("CO2".into(), 5.0);
        let mut k_reverse = BTreeMap::new();
        k_reverse.insert("CO".into(), 0.3);
        MechanismSpec {
            kind: MechanismKind::LangmuirHinshelwood,
            k_forward,
            k_reverse,
            n_sites: 1.0,
            co_delay: 0.0,
        }
    }

    fn test_config(n_cells: usize) -> ReactorConfig {
        ReactorConfig {
            length: 1.0,
            porosity: 0.5,
            diffusivity: 1.0,
            pulse_moles: 1.0,
            t_end: 3.0,
            dt_out: 1e-3,
            n_cells,
            catalyst_cell: n_cells / 2,
        }
    }

    /// Dense reference: M x = b with M = I - a J, J from finite differences
    /// of the rhs. Exercises every coupling path in the bordered solver.
    #[test]
    fn bordered_solve_matches_dense_reference() {
        let spec = lh_spec();
        let kin = spec.kinetics();
        let cfg = test_config(14);
        let mut sys = TapSystem::new(&cfg, &kin);
        let ns = sys.n_states();

        // a generic strictly positive state
        let y: Vec<f64> = (0..ns)
            .map(|i| 0.3 + 0.1 * ((i as f64) * 0.7).sin().abs())
            .collect();
        let a_coeff = 0.013;

        // finite-difference Jacobian
        let mut f0 = vec![0.0; ns];
        sys.rhs(&y, &mut f0);
        let h = 1e-7;
        let mut m = vec![vec![0.0; ns]; ns];
        for col in 0..ns {
            let mut yp = y.clone();
            yp[col] += h;
            let mut f1 = vec![0.0; ns];
            sys.rhs(&yp, &mut f1);
            for row in 0..ns {
                m[row][col] = -(a_coeff) * (f1[row] - f0[row]) / h;
            }
            m[col][col] += 1.0;
        }

        let b: Vec<f64> = (0..ns).map(|i| ((i * 13 % 7) as f64) - 3.0).collect();
        let x_dense = DenseLu::factor(m).solve(b.clone());

        let factor = sys.factor(&y, a_coeff);
        let mut x_bord = b;
        factor.solve(&mut x_bord);

        for i in 0..ns {
            assert!(
                (x_dense[i] - x_bord[i]).abs() < 1e-6 * (1.0 + x_dense[i].abs()),
                "state {i}: dense {} vs bordered {}",
                x_dense[i],
                x_bord[i]
            );
        }
    }

    #[test]
    fn rhs_conserves_mass_discretely() {
        // d(total gas)/dt + flux - source must vanish per gas
        let spec = lh_spec();
        let kin = spec.kinetics();
        let cfg = test_config(20);
        let mut sys = TapSystem::new(&cfg, &kin);
        let ns = sys.n_states();
        let y: Vec<f64> = (0..ns)
            .map(|i| 0.2 + 0.05 * (i as f64).cos().abs())
            .collect();
        let mut dy = vec![0.0; ns];
        sys.rhs(&y, &mut dy);
        let dx = cfg.length / cfg.n_cells as f64;
        let eps = cfg.porosity;
        let xi = &y[sys.extent_offset()..sys.extent_offset() + kin.n_channels()];
        let mut cov = vec![0.0; kin.n_surfaces()];
        kin.coverages(xi, &mut cov);
        let c_thin: Vec<f64> = (0..3).map(|g| y[sys.gas_offset(g) + sys.cat]).collect();
        let mut rates = vec![0.0; kin.n_channels()];
        kin.rates(&c_thin, &cov, &mut rates);
        for g in 0..3 {
            let dgas: f64 = dy[sys.gas_offset(g)..sys.gas_offset(g) + cfg.n_cells]
                .iter()
                .sum::<f64>()
                * eps
                * dx;
            let flux = dy[sys.exited_offset() + g];
            let src: f64 = kin.gas_source[g]
                .iter()
                .zip(&rates)
                .map(|(s, r)| s * r)
                .sum();
            assert!(
                (dgas + flux - src).abs() < 1e-10,
                "gas {g}: {dgas} + {flux} != {src}"
            );
        }
    }
}
