//! Change-rate optimization: minimize ½ Σ β I βᵀ subject to the ternary
//! entropy payload constraint.
//!
//! For a fixed Lagrange multiplier λ the per-coefficient stationarity
//! conditions
//!
//!   β⁺I⁺ + β⁻I^± = λ ln((1-β⁺-β⁻)/β⁺)
//!   β⁻I⁻ + β⁺I^± = λ ln((1-β⁺-β⁻)/β⁻)
//!
//! are solved by a damped 2x2 Newton iteration (1D when one direction is
//! wet), and an outer bisection drives the total entropy to the payload.
//! The total entropy is strictly increasing in λ, so larger payloads yield
//! larger multipliers. The payload is supplied in bits; internally the
//! constraint is solved in nats.

use crate::error::{JeepError, Result};
use crate::fisher::FisherField;
use crate::image::{CoefGrid, QuantizedImage, BLOCK_AREA};
use crate::stego::ChangeRates;

/// Payload accounting unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadUnit {
    /// Bits per non-zero AC DCT coefficient.
    BitsPerNonzeroAc,
    /// Total message bits.
    TotalBits,
}

/// Solver tuning knobs; the defaults satisfy the acceptance tolerances.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative tolerance on the achieved payload.
    pub payload_tol: f64,
    /// Relative tolerance on the per-coefficient stationarity residuals.
    pub newton_tol: f64,
    /// Newton iterations per coefficient and λ.
    pub max_newton_iters: usize,
    /// Outer bisection iterations.
    pub max_bisections: usize,
    /// Doublings allowed while bracketing λ.
    pub max_doublings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            payload_tol: 1e-4,
            newton_tol: 1e-10,
            max_newton_iters: 60,
            max_bisections: 80,
            max_doublings: 200,
        }
    }
}

/// Result of a change-rate solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub rates: ChangeRates,
    /// Multiplier of the stationarity equations (larger payload, larger λ).
    pub lambda: f64,
    /// Achieved total entropy in bits.
    pub payload_bits: f64,
    /// Worst absolute stationarity residual over non-wet coefficients.
    pub max_kkt_residual: f64,
    /// Minimized quadratic form ½ Σ β I βᵀ (nats).
    pub objective_nats: f64,
}

const MIN_RATE: f64 = 1e-15;
const MAX_SUM: f64 = 1.0 - 1e-9;

/// Ternary entropy in bits; errors outside the probability simplex.
pub fn ternary_entropy(beta_plus: f64, beta_minus: f64) -> Result<f64> {
    if !(beta_plus >= 0.0 && beta_minus >= 0.0 && beta_plus + beta_minus <= 1.0) {
        return Err(JeepError::InvalidParameter(format!(
            "rates ({beta_plus}, {beta_minus}) outside the simplex"
        )));
    }
    Ok(ternary_entropy_nats(beta_plus, beta_minus) / std::f64::consts::LN_2)
}

/// H₃ in nats with 0·ln 0 = 0.
pub fn ternary_entropy_nats(beta_plus: f64, beta_minus: f64) -> f64 {
    let xlnx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    let rest = 1.0 - beta_plus - beta_minus;
    -xlnx(beta_plus) - xlnx(beta_minus) - xlnx(rest)
}

/// Embedding costs ρ± = ln((1-β⁺-β⁻)/β±); degenerate rates map to +∞.
#[derive(Debug, Clone)]
pub struct CostField {
    pub plus: CoefGrid<f64>,
    pub minus: CoefGrid<f64>,
}

pub fn rates_to_costs(rates: &ChangeRates) -> Result<CostField> {
    rates.validate()?;
    let (w, h) = (rates.plus.width(), rates.plus.height());
    let cost = |b: f64, rest: f64| {
        if b > 0.0 && rest > 0.0 {
            (rest / b).ln()
        } else {
            f64::INFINITY
        }
    };
    let mut plus = vec![0.0; rates.len()];
    let mut minus = vec![0.0; rates.len()];
    for (i, (&bp, &bm)) in rates.plus.data().iter().zip(rates.minus.data()).enumerate() {
        let rest = 1.0 - bp - bm;
        plus[i] = cost(bp, rest);
        minus[i] = cost(bm, rest);
    }
    Ok(CostField {
        plus: CoefGrid::new(w, h, plus)?,
        minus: CoefGrid::new(w, h, minus)?,
    })
}

/// Optimal rates for given costs at inverse temperature λ:
/// β± = e^{-λρ±} / (1 + e^{-λρ⁺} + e^{-λρ⁻}).
pub fn costs_to_rates(costs: &CostField, lambda: f64) -> Result<ChangeRates> {
    if !(lambda > 0.0) {
        return Err(JeepError::InvalidParameter(format!(
            "cost-domain λ must be positive, got {lambda}"
        )));
    }
    let (w, h) = (costs.plus.width(), costs.plus.height());
    let mut plus = vec![0.0; costs.plus.len()];
    let mut minus = vec![0.0; costs.plus.len()];
    for (i, (&cp, &cm)) in costs.plus.data().iter().zip(costs.minus.data()).enumerate() {
        let ep = (-lambda * cp).exp();
        let em = (-lambda * cm).exp();
        let z = 1.0 + ep + em;
        plus[i] = ep / z;
        minus[i] = em / z;
    }
    Ok(ChangeRates {
        plus: CoefGrid::new(w, h, plus)?,
        minus: CoefGrid::new(w, h, minus)?,
    })
}

/// Total payload in bits for the requested α and unit. The bpnzAC
/// denominator counts AC modes (k,l) != (0,0) with c != 0.
pub fn payload_bits(cover: &QuantizedImage, alpha: f64, unit: PayloadUnit) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(JeepError::InvalidParameter(format!(
            "payload α must be nonnegative, got {alpha}"
        )));
    }
    match unit {
        PayloadUnit::TotalBits => Ok(alpha),
        PayloadUnit::BitsPerNonzeroAc => {
            let nnz = cover.nonzero_ac();
            if nnz == 0 && alpha > 0.0 {
                return Err(JeepError::InvalidParameter(
                    "no non-zero AC coefficients to carry a bpnzAC payload".into(),
                ));
            }
            Ok(alpha * nnz as f64)
        }
    }
}

#[derive(Clone, Copy)]
struct Coef {
    ip: f64,
    im: f64,
    ix: f64,
    wet_plus: bool,
    wet_minus: bool,
}

impl Coef {
    fn from_field(field: &FisherField, i: usize) -> Self {
        let ip = field.plus.data()[i];
        let im = field.minus.data()[i];
        Self {
            ip,
            im,
            ix: field.cross.data()[i],
            wet_plus: ip.is_infinite(),
            wet_minus: im.is_infinite(),
        }
    }

    fn capacity_nats(&self) -> f64 {
        match (self.wet_plus, self.wet_minus) {
            (true, true) => 0.0,
            (true, false) | (false, true) => std::f64::consts::LN_2,
            (false, false) => 3.0_f64.ln(),
        }
    }
}

/// 1D stationarity β I = λ ln((1-β)/β) for a single free direction; the
/// left side is increasing and the right decreasing, so bisection is safe.
fn solve_single(info: f64, lambda: f64, tol: f64, max_iters: usize) -> (f64, f64) {
    let f = |b: f64| b * info - lambda * ((1.0 - b) / b).ln();
    let mut lo = MIN_RATE;
    let mut hi = 0.5; // f(1/2) = info/2 >= 0, root is below
    if f(hi) < 0.0 {
        hi = MAX_SUM;
    }
    for _ in 0..(max_iters + 60) {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < tol * hi.max(MIN_RATE) {
            break;
        }
    }
    let b = 0.5 * (lo + hi);
    (b, f(b).abs())
}

/// Newton on the 2x2 stationarity system with backtracking on the strictly
/// convex merit Φ(β) = ½ β I βᵀ - λ H₃(β); returns rates and the final
/// residual norm. The Hessian is SPD for λ > 0, so the Newton direction is
/// a descent direction and the iteration converges globally.
fn solve_pair(
    c: &Coef,
    lambda: f64,
    start: (f64, f64),
    tol: f64,
    max_iters: usize,
) -> ((f64, f64), f64) {
    let clamp = |bp: f64, bm: f64| {
        let mut bp = bp.clamp(MIN_RATE, MAX_SUM);
        let mut bm = bm.clamp(MIN_RATE, MAX_SUM);
        let s = bp + bm;
        if s > MAX_SUM {
            let f = MAX_SUM / s;
            bp *= f;
            bm *= f;
        }
        (bp, bm)
    };
    let residual = |bp: f64, bm: f64| {
        let rest = 1.0 - bp - bm;
        let f1 = bp * c.ip + bm * c.ix - lambda * (rest / bp).ln();
        let f2 = bm * c.im + bp * c.ix - lambda * (rest / bm).ln();
        (f1, f2)
    };
    let merit = |bp: f64, bm: f64| {
        0.5 * (bp * bp * c.ip + 2.0 * bp * bm * c.ix + bm * bm * c.im)
            - lambda * ternary_entropy_nats(bp, bm)
    };
    let scale = lambda.max(1e-300);
    let (mut bp, mut bm) = clamp(start.0.max(1e-9), start.1.max(1e-9));
    let (mut f1, mut f2) = residual(bp, bm);
    let mut phi = merit(bp, bm);
    let mut norm = f1.abs().max(f2.abs());
    for _ in 0..max_iters {
        if norm <= tol * scale {
            break;
        }
        let rest = 1.0 - bp - bm;
        let inv_rest = lambda / rest;
        let j11 = c.ip + lambda / bp + inv_rest;
        let j22 = c.im + lambda / bm + inv_rest;
        let j12 = c.ix + inv_rest;
        let det = j11 * j22 - j12 * j12;
        if det.abs() < 1e-300 || !det.is_finite() {
            break;
        }
        let dp = -(f1 * j22 - f2 * j12) / det;
        let dm = -(j11 * f2 - j12 * f1) / det;
        let slope = f1 * dp + f2 * dm; // directional derivative of Φ, negative
        let mut step = 1.0;
        let mut improved = false;
        for _ in 0..40 {
            let (np, nm) = clamp(bp + step * dp, bm + step * dm);
            let nphi = merit(np, nm);
            if nphi <= phi + 1e-4 * step * slope || nphi < phi {
                bp = np;
                bm = nm;
                phi = nphi;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        let (n1, n2) = residual(bp, bm);
        f1 = n1;
        f2 = n2;
        norm = f1.abs().max(f2.abs());
    }
    ((bp, bm), norm)
}

struct Workspace {
    coefs: Vec<Coef>,
    warm: Vec<(f64, f64)>,
}

impl Workspace {
    /// Entropy (nats) at multiplier λ; rates are left in `warm`.
    fn evaluate(&mut self, lambda: f64, cfg: &SolverConfig) -> (f64, f64) {
        let mut worst = 0.0_f64;
        let blocks = self.coefs.len() / BLOCK_AREA;
        let mut block_sums = vec![0.0; blocks.max(1)];
        for (i, c) in self.coefs.iter().enumerate() {
            let (rates, res) = match (c.wet_plus, c.wet_minus) {
                (true, true) => ((0.0, 0.0), 0.0),
                (true, false) => {
                    let (b, r) = solve_single(c.im, lambda, cfg.newton_tol, cfg.max_newton_iters);
                    ((0.0, b), r)
                }
                (false, true) => {
                    let (b, r) = solve_single(c.ip, lambda, cfg.newton_tol, cfg.max_newton_iters);
                    ((b, 0.0), r)
                }
                (false, false) => {
                    let start = self.warm[i];
                    let start = if start.0 > 0.0 && start.1 > 0.0 {
                        start
                    } else {
                        (1e-3, 1e-3)
                    };
                    solve_pair(c, lambda, start, cfg.newton_tol, cfg.max_newton_iters)
                }
            };
            self.warm[i] = rates;
            worst = worst.max(res);
            block_sums[i / BLOCK_AREA] += ternary_entropy_nats(rates.0, rates.1);
        }
        (block_sums.iter().sum(), worst)
    }
}

/// Solve for change rates hitting `target_bits` of total ternary entropy.
pub fn solve_change_rates(
    fisher: &FisherField,
    target_bits: f64,
    cfg: &SolverConfig,
) -> Result<Solution> {
    let n = fisher.len();
    let (w, h) = (fisher.plus.width(), fisher.plus.height());
    if !(target_bits >= 0.0 && target_bits.is_finite()) {
        return Err(JeepError::InvalidParameter(format!(
            "payload target {target_bits} bits"
        )));
    }
    let coefs: Vec<Coef> = (0..n).map(|i| Coef::from_field(fisher, i)).collect();
    let capacity_nats: f64 = coefs.iter().map(Coef::capacity_nats).sum();
    let target_nats = target_bits * std::f64::consts::LN_2;
    if target_nats > capacity_nats * (1.0 - 1e-9) {
        return Err(JeepError::InfeasiblePayload {
            requested_bits: target_bits,
            capacity_bits: capacity_nats / std::f64::consts::LN_2,
        });
    }

    let finish = |ws: &Workspace, lambda: f64, payload_nats: f64, worst: f64| -> Result<Solution> {
        let mut plus = vec![0.0; n];
        let mut minus = vec![0.0; n];
        let mut objective = 0.0;
        for (i, &(bp, bm)) in ws.warm.iter().enumerate() {
            plus[i] = bp;
            minus[i] = bm;
            let c = &ws.coefs[i];
            if bp > 0.0 || bm > 0.0 {
                let ip = if c.wet_plus { 0.0 } else { c.ip };
                let im = if c.wet_minus { 0.0 } else { c.im };
                let ix = if c.wet_plus || c.wet_minus { 0.0 } else { c.ix };
                objective += 0.5 * (bp * bp * ip + 2.0 * bp * bm * ix + bm * bm * im);
            }
        }
        Ok(Solution {
            rates: ChangeRates {
                plus: CoefGrid::new(w, h, plus)?,
                minus: CoefGrid::new(w, h, minus)?,
            },
            lambda,
            payload_bits: payload_nats / std::f64::consts::LN_2,
            max_kkt_residual: worst,
            objective_nats: objective,
        })
    };

    let mut ws = Workspace {
        coefs,
        warm: vec![(0.0, 0.0); n],
    };

    if target_nats == 0.0 {
        return finish(&ws, 0.0, 0.0, 0.0);
    }

    // bracket: entropy is increasing in λ
    let mut hi = 1.0;
    let (mut h_hi, mut worst) = ws.evaluate(hi, cfg);
    let mut doublings = 0;
    while h_hi < target_nats {
        hi *= 2.0;
        doublings += 1;
        if doublings > cfg.max_doublings {
            return Err(JeepError::SolverDiverged(format!(
                "payload bracket not found below λ = {hi:e}"
            )));
        }
        let (e, r) = ws.evaluate(hi, cfg);
        h_hi = e;
        worst = r;
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };

    let mut lambda = hi;
    let mut payload = h_hi;
    if (payload - target_nats).abs() > cfg.payload_tol * target_nats * 0.5 {
        for _ in 0..cfg.max_bisections {
            let mid = 0.5 * (lo + hi);
            let (e, r) = ws.evaluate(mid, cfg);
            lambda = mid;
            payload = e;
            worst = r;
            if (e - target_nats).abs() <= cfg.payload_tol * target_nats * 0.5 {
                break;
            }
            if e < target_nats {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if (payload - target_nats).abs() > cfg.payload_tol * target_nats {
        return Err(JeepError::SolverDiverged(format!(
            "payload {payload:.6} nats vs target {target_nats:.6} after {} bisections (worst KKT residual {worst:.3e})",
            cfg.max_bisections
        )));
    }
    // the last evaluation may not be the accepted λ; re-evaluate to keep
    // rates, λ and payload consistent
    let (e, r) = ws.evaluate(lambda, cfg);
    finish(&ws, lambda, e, r)
}
