//! Shared linear-algebra aliases and quaternion helpers.

use nalgebra::{Isometry3, Quaternion, UnitQuaternion, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Quat = UnitQuaternion<f64>;
pub type Rigid = Isometry3<f64>;

/// Inputs whose norm is this close to one are accepted and renormalized.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-3;

/// Below this deviation the quaternion is taken as-is, so well-formed data
/// round-trips bit-identically through load and save.
const QUAT_EXACT_TOLERANCE: f64 = 1e-12;

/// Builds a unit quaternion from `[w, x, y, z]`, renormalizing slightly
/// off-unit input and rejecting anything further than [`QUAT_NORM_TOLERANCE`].
pub fn quat_from_wxyz(q: [f64; 4], path: &str) -> Result<Quat> {
    if q.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid(path, "quaternion has non-finite component"));
    }
    let raw = Quaternion::new(q[0], q[1], q[2], q[3]);
    let norm = raw.norm();
    if (norm - 1.0).abs() > QUAT_NORM_TOLERANCE {
        return Err(Error::invalid(
            path,
            format!("quaternion norm {norm} is not within {QUAT_NORM_TOLERANCE} of 1"),
        ));
    }
    if (norm - 1.0).abs() <= QUAT_EXACT_TOLERANCE {
        Ok(UnitQuaternion::new_unchecked(raw))
    } else {
        Ok(UnitQuaternion::from_quaternion(raw))
    }
}

pub fn quat_to_wxyz(q: &Quat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

pub fn vec3(v: [f64; 3]) -> Vec3 {
    Vec3::new(v[0], v[1], v[2])
}

pub fn vec3_array(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

pub(crate) fn finite3(v: [f64; 3], path: &str) -> Result<Vec3> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(vec3(v))
    } else {
        Err(Error::invalid(path, "non-finite component"))
    }
}

/// Spherical linear interpolation along the shorter arc.
///
/// `t = 0` returns `a` and `t = 1` returns `b` (up to sign, which is
/// irrelevant for rotations).
pub fn slerp(a: &Quat, b: &Quat, t: f64) -> Quat {
    let qa = a.quaternion();
    let mut qb = *b.quaternion();
    let mut dot = qa.coords.dot(&qb.coords);
    if dot < 0.0 {
        qb = -qb;
        dot = -dot;
    }
    let coords = if dot > 0.9995 {
        qa.coords * (1.0 - t) + qb.coords * t
    } else {
        let theta = dot.min(1.0).acos();
        let sin_theta = theta.sin();
        let wa = ((1.0 - t) * theta).sin() / sin_theta;
        let wb = (t * theta).sin() / sin_theta;
        qa.coords * wa + qb.coords * wb
    };
    UnitQuaternion::from_quaternion(Quaternion::from(coords))
}

/// Minimal rotation taking direction `from` onto direction `to`.
///
/// Anti-parallel inputs get a half turn about an arbitrary perpendicular axis.
pub fn rotation_between(from: &Vec3, to: &Vec3) -> Quat {
    UnitQuaternion::rotation_between(from, to).unwrap_or_else(|| {
        let helper = if from.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let axis = nalgebra::Unit::new_normalize(from.cross(&helper));
        UnitQuaternion::from_axis_angle(&axis, std::f64::consts::PI)
    })
}
