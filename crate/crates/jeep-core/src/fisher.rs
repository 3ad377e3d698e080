//! Per-coefficient Fisher information for the realistic and omniscient
//! attacker.
//!
//! `fisher_base` returns the raw sums
//!
//!   I_kl = q⁴ Σ_ij f⁴/σ⁴,   ι_kl = 2 q² Σ_ij f²/σ²,
//!
//! and the 2x2 matrices are the exact Hessian of the block KL divergence at
//! β = 0, so that D ≈ ½ β I βᵀ holds with the same matrices the
//! finite-difference oracle produces:
//!
//!   realistic:  I⁺ = ½(1-2u)⁴ I_kl,           I⁻ = ½(1+2u)⁴ I_kl,
//!               I^± = ½(1-2u)²(1+2u)² I_kl;
//!   omniscient: the same plus ½ι_kl on the diagonal and -½ι_kl off it.
//!
//! Wet coefficients carry an infinite-information sentinel on the blocked
//! direction; the solver maps it to a zero change rate.

use crate::dct;
use crate::error::Result;
use crate::image::{CoefGrid, QuantTable, VarianceField, BLOCK_AREA};
use crate::side_info::{SideInfo, WetMask};

/// Raw per-coefficient information sums (I_kl, ι_kl).
#[derive(Debug, Clone)]
pub struct FisherBase {
    pub i: CoefGrid<f64>,
    pub iota: CoefGrid<f64>,
}

/// Per-coefficient symmetric 2x2 information matrix [[I⁺, I^±], [I^±, I⁻]].
#[derive(Debug, Clone)]
pub struct FisherField {
    pub plus: CoefGrid<f64>,
    pub minus: CoefGrid<f64>,
    pub cross: CoefGrid<f64>,
}

impl FisherField {
    pub fn len(&self) -> usize {
        self.plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plus.is_empty()
    }

    /// Both directions blocked.
    pub fn fully_wet(&self, i: usize) -> bool {
        self.plus.data()[i].is_infinite() && self.minus.data()[i].is_infinite()
    }
}

/// I_kl = q⁴ Σ f⁴/σ⁴ and ι_kl = 2q² Σ f²/σ², blockwise.
pub fn fisher_base(quant: &QuantTable, var: &VarianceField) -> Result<FisherBase> {
    let plane = var.plane();
    let (w, h) = (plane.width(), plane.height());
    let (bxs, bys) = (plane.blocks_x(), plane.blocks_y());
    let mut i_data = vec![0.0; w * h];
    let mut iota_data = vec![0.0; w * h];
    for by in 0..bys {
        for bx in 0..bxs {
            let cover = plane.block(bx, by);
            let mut inv2 = [0.0; BLOCK_AREA];
            let mut inv4 = [0.0; BLOCK_AREA];
            for n in 0..BLOCK_AREA {
                inv2[n] = 1.0 / cover[n];
                inv4[n] = inv2[n] * inv2[n];
            }
            let quartic = dct::quartic_mode_sums(&inv4);
            let quad = dct::quadratic_mode_sums(&inv2);
            let base = (by * bxs + bx) * BLOCK_AREA;
            for n in 0..BLOCK_AREA {
                let q2 = f64::from(quant.steps()[n]) * f64::from(quant.steps()[n]);
                i_data[base + n] = q2 * q2 * quartic[n];
                iota_data[base + n] = 2.0 * q2 * quad[n];
            }
        }
    }
    Ok(FisherBase {
        i: CoefGrid::new(w, h, i_data)?,
        iota: CoefGrid::new(w, h, iota_data)?,
    })
}

fn modulation(u: f64) -> (f64, f64, f64) {
    let a = 1.0 - 2.0 * u;
    let b = 1.0 + 2.0 * u;
    let a2 = a * a;
    let b2 = b * b;
    (a2 * a2, b2 * b2, a2 * b2)
}

/// Fisher matrix for the realistic attacker (no knowledge of E[η] or u);
/// rank-1 by construction: I⁺I⁻ = (I^±)².
pub fn fisher_realistic(base: &FisherBase, side: &SideInfo) -> Result<FisherField> {
    base.i.same_geometry(side.grid())?;
    let n = base.i.len();
    let (w, h) = (base.i.width(), base.i.height());
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut cross = vec![0.0; n];
    for idx in 0..n {
        let i = base.i.data()[idx];
        let u = side.u()[idx];
        let (mp, mm, mx) = modulation(u);
        plus[idx] = 0.5 * mp * i;
        minus[idx] = 0.5 * mm * i;
        cross[idx] = 0.5 * mx * i;
    }
    Ok(FisherField {
        plus: CoefGrid::new(w, h, plus)?,
        minus: CoefGrid::new(w, h, minus)?,
        cross: CoefGrid::new(w, h, cross)?,
    })
}

/// Fisher matrix for the omniscient attacker, who also observes the mean
/// shift: the ι_kl term enters the diagonal and (negated) the off-diagonal.
pub fn fisher_omniscient(base: &FisherBase, side: &SideInfo) -> Result<FisherField> {
    base.i.same_geometry(side.grid())?;
    let n = base.i.len();
    let (w, h) = (base.i.width(), base.i.height());
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    let mut cross = vec![0.0; n];
    for idx in 0..n {
        let i = base.i.data()[idx];
        let iota = base.iota.data()[idx];
        let u = side.u()[idx];
        let (mp, mm, mx) = modulation(u);
        plus[idx] = 0.5 * (mp * i + iota);
        minus[idx] = 0.5 * (mm * i + iota);
        cross[idx] = 0.5 * (mx * i - iota);
    }
    Ok(FisherField {
        plus: CoefGrid::new(w, h, plus)?,
        minus: CoefGrid::new(w, h, minus)?,
        cross: CoefGrid::new(w, h, cross)?,
    })
}

/// Put the infinite-information sentinel on every blocked direction.
pub fn apply_wet_mask(field: &mut FisherField, mask: &WetMask) -> Result<()> {
    field.plus.same_geometry(&mask.plus)?;
    for (i, (&wp, &wm)) in mask.plus.data().iter().zip(mask.minus.data()).enumerate() {
        if wp {
            field.plus.data_mut()[i] = f64::INFINITY;
        }
        if wm {
            field.minus.data_mut()[i] = f64::INFINITY;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::QuantTable;
    use rand::{Rng, SeedableRng};

    fn unit_side(w: usize, h: usize, u: f64) -> SideInfo {
        SideInfo::new(CoefGrid::filled(w, h, u).unwrap()).unwrap()
    }

    #[test]
    fn base_sums_at_unit_variance() {
        let quant = QuantTable::new([1; 64]).unwrap();
        let var = VarianceField::constant(8, 8, 1.0).unwrap();
        let base = fisher_base(&quant, &var).unwrap();
        // mode (0,0): Σ f⁴ = 64·(1/8)⁴ = 1/64
        assert!((base.i.at(0, 0, 0) - 1.0 / 64.0).abs() < 1e-14);
        // ι = 2 Σ f² = 2 for every mode
        for &v in base.iota.data() {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn base_scaling_in_q() {
        let var = VarianceField::constant(8, 8, 1.7).unwrap();
        let b1 = fisher_base(&QuantTable::new([2; 64]).unwrap(), &var).unwrap();
        let b2 = fisher_base(&QuantTable::new([4; 64]).unwrap(), &var).unwrap();
        for i in 0..64 {
            assert!((b2.i.data()[i] / b1.i.data()[i] - 16.0).abs() < 1e-9);
            assert!((b2.iota.data()[i] / b1.iota.data()[i] - 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn realistic_matrix_values() {
        let quant = QuantTable::new([1; 64]).unwrap();
        let var = VarianceField::constant(8, 8, 1.0).unwrap();
        let base = fisher_base(&quant, &var).unwrap();

        // u = 0: all entries equal half the base information
        let f0 = fisher_realistic(&base, &unit_side(8, 8, 0.0)).unwrap();
        for i in 0..64 {
            let half = 0.5 * base.i.data()[i];
            assert!((f0.plus.data()[i] - half).abs() < 1e-15);
            assert!((f0.minus.data()[i] - half).abs() < 1e-15);
            assert!((f0.cross.data()[i] - half).abs() < 1e-15);
        }

        // u = 1/2: the + direction is free, the - direction 16x stiffer
        let fh = fisher_realistic(&base, &unit_side(8, 8, 0.5)).unwrap();
        for i in 0..64 {
            assert_eq!(fh.plus.data()[i], 0.0);
            assert!((fh.minus.data()[i] - 16.0 * 0.5 * base.i.data()[i]).abs() < 1e-12);
            assert_eq!(fh.cross.data()[i], 0.0);
        }
    }

    #[test]
    fn realistic_is_rank_one() {
        let quant = QuantTable::new([3; 64]).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(42);
        let var = VarianceField::new(crate::image::Plane::new(
            8,
            8,
            (0..64).map(|_| rng.gen_range(0.5..20.0)).collect(),
        )
        .unwrap())
        .unwrap();
        let base = fisher_base(&quant, &var).unwrap();
        for _ in 0..200 {
            let u = rng.gen_range(-0.5..0.5);
            let f = fisher_realistic(&base, &unit_side(8, 8, u)).unwrap();
            for i in 0..64 {
                let det = f.plus.data()[i] * f.minus.data()[i] - f.cross.data()[i].powi(2);
                let scale = (f.plus.data()[i] * f.minus.data()[i]).max(1e-300);
                assert!(det.abs() <= 1e-12 * scale, "det {det} at u {u}");
            }
        }
    }

    #[test]
    fn omniscient_matrix_values_and_psd() {
        let quant = QuantTable::new([2; 64]).unwrap();
        let var = VarianceField::constant(8, 8, 1.3).unwrap();
        let base = fisher_base(&quant, &var).unwrap();

        let f0 = fisher_omniscient(&base, &unit_side(8, 8, 0.0)).unwrap();
        for i in 0..64 {
            let (bi, iota) = (base.i.data()[i], base.iota.data()[i]);
            assert!((f0.plus.data()[i] - 0.5 * (bi + iota)).abs() < 1e-12);
            assert!((f0.cross.data()[i] - 0.5 * (bi - iota)).abs() < 1e-12);
        }

        let fh = fisher_omniscient(&base, &unit_side(8, 8, 0.5)).unwrap();
        for i in 0..64 {
            let (bi, iota) = (base.i.data()[i], base.iota.data()[i]);
            assert!((fh.plus.data()[i] - 0.5 * iota).abs() < 1e-12);
            assert!((fh.minus.data()[i] - 0.5 * (16.0 * bi + iota)).abs() < 1e-12);
            assert!((fh.cross.data()[i] + 0.5 * iota).abs() < 1e-12);
        }

        // PSD across sampled u
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let u = rng.gen_range(-0.5..0.5);
            let f = fisher_omniscient(&base, &unit_side(8, 8, u)).unwrap();
            for i in 0..64 {
                let (a, d, c) = (f.plus.data()[i], f.minus.data()[i], f.cross.data()[i]);
                let tr = a + d;
                let det = a * d - c * c;
                let min_eig = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
                assert!(min_eig >= -1e-12 * tr.max(1.0), "min eig {min_eig}");
            }
        }
    }

    #[test]
    fn sign_swap_symmetry() {
        let quant = QuantTable::new([5; 64]).unwrap();
        let var = VarianceField::constant(8, 8, 2.0).unwrap();
        let base = fisher_base(&quant, &var).unwrap();
        for &u in &[0.1, 0.33, 0.49] {
            for field in [
                (
                    fisher_realistic(&base, &unit_side(8, 8, u)).unwrap(),
                    fisher_realistic(&base, &unit_side(8, 8, -u)).unwrap(),
                ),
                (
                    fisher_omniscient(&base, &unit_side(8, 8, u)).unwrap(),
                    fisher_omniscient(&base, &unit_side(8, 8, -u)).unwrap(),
                ),
            ] {
                let (f, g) = field;
                for i in 0..64 {
                    assert!((f.plus.data()[i] - g.minus.data()[i]).abs() < 1e-12);
                    assert!((f.minus.data()[i] - g.plus.data()[i]).abs() < 1e-12);
                    assert!((f.cross.data()[i] - g.cross.data()[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn iota_leads_when_variance_at_least_one() {
        let quant = crate::jpeg::quality_to_quant_table(95).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(77);
        let var = VarianceField::new(crate::image::Plane::new(
            16,
            16,
            (0..256).map(|_| rng.gen_range(1.0..40.0)).collect(),
        )
        .unwrap())
        .unwrap();
        let base = fisher_base(&quant, &var).unwrap();
        // with σ² >= 1, ι_kl >= I_kl / q² · 2 Σf²... checked numerically:
        // compare the two sums coefficient-wise
        let dominated = base
            .i
            .data()
            .iter()
            .zip(base.iota.data())
            .filter(|(&i, &iota)| iota >= i)
            .count();
        assert!(
            dominated as f64 / base.i.len() as f64 > 0.9,
            "ι should lead for most coefficients"
        );
    }

    #[test]
    fn wet_sentinel_applied_per_direction() {
        let quant = QuantTable::new([1; 64]).unwrap();
        let var = VarianceField::constant(8, 8, 1.0).unwrap();
        let base = fisher_base(&quant, &var).unwrap();
        let mut field = fisher_realistic(&base, &unit_side(8, 8, 0.2)).unwrap();
        let mut mask = WetMask::all_dry(8, 8).unwrap();
        mask.plus.data_mut()[3] = true;
        mask.plus.data_mut()[9] = true;
        mask.minus.data_mut()[9] = true;
        apply_wet_mask(&mut field, &mask).unwrap();
        assert!(field.plus.data()[3].is_infinite());
        assert!(field.minus.data()[3].is_finite());
        assert!(field.fully_wet(9));
        assert!(!field.fully_wet(3));
    }
}
