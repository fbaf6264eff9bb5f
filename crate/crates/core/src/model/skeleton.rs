use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::math::{Quat, Rigid, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Joint {
    pub name: String,
    /// `None` only for the root.
    pub parent: Option<usize>,
    /// Translation from the parent joint in the canonical pose, meters.
    pub offset: Vec3,
}

/// A joint hierarchy stored in topological order (parents before children).
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    joints: Vec<Joint>,
    children: Vec<Vec<usize>>,
    rest_world: Vec<Rigid>,
}

impl Skeleton {
    pub fn new(joints: Vec<Joint>) -> Result<Self> {
        if joints.len() < 2 {
            return Err(Error::invalid(
                "skeleton.joints",
                format!("need at least 2 joints, got {}", joints.len()),
            ));
        }
        let mut names = HashSet::new();
        let mut children = vec![Vec::new(); joints.len()];
        for (index, joint) in joints.iter().enumerate() {
            let path = format!("skeleton.joints[{index}]");
            if !names.insert(joint.name.as_str()) {
                return Err(Error::invalid(
                    format!("{path}.name"),
                    format!("duplicate joint name `{}`", joint.name),
                ));
            }
            if !joint.offset.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(format!("{path}.offset"), "non-finite offset"));
            }
            match (index, joint.parent) {
                (0, None) => {}
                (0, Some(_)) => {
                    return Err(Error::invalid(
                        format!("{path}.parent"),
                        "the first joint must be the root",
                    ))
                }
                (_, None) => {
                    return Err(Error::invalid(
                        format!("{path}.parent"),
                        "more than one root joint",
                    ))
                }
                (_, Some(parent)) if parent >= index => {
                    return Err(Error::invalid(
                        format!("{path}.parent"),
                        format!("parent {parent} does not precede joint {index}"),
                    ))
                }
                (_, Some(parent)) => children[parent].push(index),
            }
        }
        let rest_world = rest_transforms(&joints);
        Ok(Self {
            joints,
            children,
            rest_world,
        })
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn len(&self) -> usize {
        self.joints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joints.is_empty()
    }

    pub fn children(&self, joint: usize) -> &[usize] {
        &self.children[joint]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// World transforms of the canonical pose.
    pub fn rest_world(&self) -> &[Rigid] {
        &self.rest_world
    }

    /// Canonical world-space joint positions.
    pub fn rest_positions(&self) -> Vec<Vec3> {
        self.rest_world
            .iter()
            .map(|t| t.translation.vector)
            .collect()
    }

    pub fn rest_pose(&self) -> Pose {
        Pose::identity(self.len())
    }
}

fn rest_transforms(joints: &[Joint]) -> Vec<Rigid> {
    let mut world: Vec<Rigid> = Vec::with_capacity(joints.len());
    for joint in joints {
        let local = Rigid::translation(joint.offset.x, joint.offset.y, joint.offset.z);
        let w = match joint.parent {
            Some(p) => world[p] * local,
            None => local,
        };
        world.push(w);
    }
    world
}

/// One frame of skeletal motion: root translation plus local joint rotations.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub root_t: Vec3,
    pub rots: Vec<Quat>,
}

impl Pose {
    pub fn identity(joints: usize) -> Self {
        Self {
            root_t: Vec3::zeros(),
            rots: vec![Quat::identity(); joints],
        }
    }

    pub fn joint_count(&self) -> usize {
        self.rots.len()
    }

    pub fn check_matches(&self, skeleton: &Skeleton) -> Result<()> {
        if self.rots.len() != skeleton.len() {
            return Err(Error::Mismatch(format!(
                "pose has {} joint rotations, skeleton has {} joints",
                self.rots.len(),
                skeleton.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn joint(name: &str, parent: Option<usize>, offset: [f64; 3]) -> Joint {
        Joint {
            name: name.into(),
            parent,
            offset: Vec3::new(offset[0], offset[1], offset[2]),
        }
    }

    #[test]
    fn rejects_bad_topology() {
        let single = Skeleton::new(vec![joint("a", None, [0.0; 3])]);
        assert!(single.is_err());

        let two_roots = Skeleton::new(vec![joint("a", None, [0.0; 3]), joint("b", None, [0.0; 3])]);
        assert!(two_roots.unwrap_err().to_string().contains("more than one root"));

        let forward = Skeleton::new(vec![
            joint("a", None, [0.0; 3]),
            joint("b", Some(2), [0.0; 3]),
            joint("c", Some(0), [0.0; 3]),
        ]);
        assert!(forward.unwrap_err().to_string().contains("does not precede"));

        let dup = Skeleton::new(vec![joint("a", None, [0.0; 3]), joint("a", Some(0), [0.0; 3])]);
        assert!(dup.unwrap_err().to_string().contains("duplicate"));
    }

    #[test]
    fn rest_positions_accumulate_offsets() {
        let s = Skeleton::new(vec![
            joint("root", None, [0.0, 1.0, 0.0]),
            joint("a", Some(0), [0.0, 0.5, 0.0]),
            joint("b", Some(1), [0.25, 0.0, 0.0]),
        ])
        .unwrap();
        let p = s.rest_positions();
        assert_eq!(p[2], Vec3::new(0.25, 1.5, 0.0));
        assert_eq!(s.children(0), &[1]);
    }
}
