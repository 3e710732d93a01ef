//! Partial-wave kernels, pointwise 3D kernels, the momentum grid and the
//! symmetric Nyström matrix of a channel operator `b_{l,s}`.

mod assembly;
mod channel;
mod grid;
mod kernel;

pub use assembly::{
    assemble, assemble_with, cell_average_diagonal, diagonal_kernel, diagonal_kernel_with, subtraction_diagonal,
    AssemblyOptions, ChannelFunction, ChannelMatrix, DiagonalKernel, DiagonalRule, MatrixMetadata,
};
pub use channel::{Channel, Spin};
pub use grid::{build_grid, GridMap, MomentumGrid, MIN_NODES};
pub use kernel::{
    kernel_channel, kernel_full, kernel_k1, kernel_k2, mass_difference_bound_check, mass_difference_sample, FullKernel,
    MassDifferenceReport, MassDifferenceSample,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::PhysicalParams;
    use proptest::prelude::*;

    #[test]
    fn dilation_covariance_of_matrix() {
        let grid = build_grid(40, GridMap::default()).unwrap();
        let params = PhysicalParams::natural(0.5).unwrap();
        let ch = Channel::new(0, Spin::Up).unwrap();
        let base = assemble(ch, &grid, &params).unwrap();
        for a in [0.5, 2.0, 3.7] {
            let scaled = assemble(ch, &grid.scaled(a).unwrap(), &params.with_mass(a).unwrap()).unwrap();
            let diff = (scaled.matrix() - base.matrix() * a).amax();
            assert!(diff <= 1e-12 * a * base.matrix().amax(), "a={a}: {diff}");
        }
    }

    proptest! {
        #[test]
        fn kernel_symmetry(p in 1e-3f64..1e3, q in 1e-3f64..1e3, l in 1u32..6, up in any::<bool>()) {
            prop_assume!((p - q).abs() > 1e-6 * p.max(q));
            let params = PhysicalParams::natural(0.5).unwrap();
            let ch = Channel::new(l, if up { Spin::Up } else { Spin::Down }).unwrap();
            let a = kernel_channel(ch, p, q, &params).unwrap();
            let b = kernel_channel(ch, q, p, &params).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * a);
        }

        #[test]
        fn kernel_scaling(p in 1e-2f64..1e2, q in 1e-2f64..1e2, a in 0.1f64..10.0) {
            prop_assume!((p - q).abs() > 1e-4 * p.max(q));
            let params = PhysicalParams::natural(0.5).unwrap();
            let ch = Channel::new(1, Spin::Down).unwrap();
            let k = kernel_channel(ch, p, q, &params).unwrap();
            let ks = kernel_channel(ch, a * p, a * q, &params.with_mass(a).unwrap()).unwrap();
            prop_assert!((k - ks).abs() <= 1e-12 * k);
        }

        #[test]
        fn k1_decreases_with_order(p in 1e-3f64..1e3, q in 1e-3f64..1e3, l in 0u32..12) {
            prop_assume!((p - q).abs() > 1e-6 * p.max(q));
            let params = PhysicalParams::natural(0.5).unwrap();
            let lo = kernel_k1(crate::LegendreOrder::new(l).unwrap(), p, q, &params).unwrap();
            let hi = kernel_k1(crate::LegendreOrder::new(l + 1).unwrap(), p, q, &params).unwrap();
            prop_assert!(hi <= lo);
        }
    }
}
