use crate::geom::Rotation3;
use crate::linalg::{Mat3, Vec3};
use crate::num::Real;

const COLLINEAR_CONDITION: f64 = 1e8;

/// Plane through the contact points and the footprint frame it defines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainEstimate<T> {
    /// Upward plane normal in the base frame.
    pub normal: Vec3<T>,
    /// Footprint orientation relative to the base.
    pub c_bf: Rotation3<T>,
    /// Footprint orientation relative to the world.
    pub c_wf: Rotation3<T>,
    pub valid: bool,
}

impl<T: Real> TerrainEstimate<T> {
    /// Flat ground under a level base.
    pub fn flat() -> Self {
        Self {
            normal: Vec3::unit_z(),
            c_bf: Rotation3::identity(),
            c_wf: Rotation3::identity(),
            valid: true,
        }
    }

    fn invalid() -> Self {
        Self {
            valid: false,
            ..Self::flat()
        }
    }

    pub fn c_fw(&self) -> Rotation3<T> {
        self.c_wf.inverse()
    }

    /// `(roll, pitch, yaw)` of the footprint frame in the world.
    pub fn footprint_euler(&self) -> (T, T, T) {
        self.c_wf.euler_zyx()
    }
}

/// Least-squares plane `z = p0 + p1 x + p2 y` through contact points given
/// in the base frame. The footprint x axis is the base x axis projected onto
/// the plane. Fewer than three points or a collinear set gives an estimate
/// with `valid == false`.
pub fn estimate_terrain<T: Real>(contacts: &[Vec3<T>], c_wb: &Rotation3<T>) -> TerrainEstimate<T> {
    if contacts.len() < 3 {
        return TerrainEstimate::invalid();
    }
    let n = T::lit(contacts.len() as f64);
    let mean = contacts.iter().fold(Vec3::zero(), |a, p| a + *p).scale(T::one() / n);
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for p in contacts {
        let d = *p - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
        sxz += d.x * d.z;
        syz += d.y * d.z;
    }
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    let disc = ((sxx - syy) * (sxx - syy) + T::lit(4.0) * sxy * sxy).sqrt();
    let lmax = (tr + disc) * T::half();
    let lmin = det / lmax.max(T::min_positive_value());
    if !(lmax > T::zero()) || !(lmin > T::zero()) || lmax / lmin > T::lit(COLLINEAR_CONDITION) {
        return TerrainEstimate::invalid();
    }
    let p1 = (sxz * syy - syz * sxy) / det;
    let p2 = (syz * sxx - sxz * sxy) / det;
    let Some(normal) = Vec3::new(-p1, -p2, T::one()).normalized() else {
        return TerrainEstimate::invalid();
    };
    let ex = Vec3::unit_x();
    let Some(x_f) = (ex - normal.scale(ex.dot(normal))).normalized() else {
        return TerrainEstimate::invalid();
    };
    let y_f = normal.cross(x_f);
    let c_bf = Rotation3::from_matrix(&Mat3::from_columns(x_f, y_f, normal));
    TerrainEstimate {
        normal,
        c_bf,
        c_wf: c_wb.compose(&c_bf),
        valid: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feet_on(plane: &Rotation3<f64>, h: f64) -> Vec<Vec3<f64>> {
        [(0.25, 0.15), (0.25, -0.15), (-0.25, 0.15), (-0.25, -0.15)]
            .iter()
            .map(|(x, y)| plane.rotate(Vec3::new(*x, *y, 0.0)) - Vec3::new(0.0, 0.0, h))
            .collect()
    }

    #[test]
    fn flat_ground_gives_identity() {
        let e = estimate_terrain(&feet_on(&Rotation3::identity(), 0.38), &Rotation3::identity());
        assert!(e.valid);
        assert!(e.c_bf.angle() < 1e-15 && e.c_wf.angle() < 1e-15);
    }

    #[test]
    fn collinear_and_sparse_contacts_are_invalid() {
        let line = vec![
            Vec3::new(0.0, 0.0, -0.4),
            Vec3::new(0.1, 0.1, -0.4),
            Vec3::new(0.3, 0.3, -0.4),
        ];
        assert!(!estimate_terrain(&line, &Rotation3::identity()).valid);
        assert!(!estimate_terrain(&line[..2], &Rotation3::identity()).valid);
    }

    #[test]
    fn imu_orientation_chains_into_world_frame() {
        let c_wb = Rotation3::from_euler_zyx(0.0, -0.2, 0.7);
        let e = estimate_terrain(&feet_on(&Rotation3::identity(), 0.4), &c_wb);
        assert!(boxdist(&e.c_wf, &c_wb) < 1e-12);
    }

    fn boxdist(a: &Rotation3<f64>, b: &Rotation3<f64>) -> f64 {
        crate::geom::boxminus(a, b).norm()
    }

    #[test]
    fn normal_points_up_for_steep_planes() {
        for deg in [-30.0f64, -10.0, 0.0, 17.0, 30.0] {
            let plane = Rotation3::from_euler_zyx(0.1, deg.to_radians(), 0.0);
            let e = estimate_terrain(&feet_on(&plane, 0.35), &Rotation3::identity());
            assert!(e.normal.z > 0.0);
            assert!((e.normal.norm() - 1.0).abs() < 1e-15);
        }
    }
}
