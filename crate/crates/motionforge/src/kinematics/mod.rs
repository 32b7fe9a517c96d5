//! Skeleton definitions, forward kinematics and analytic Jacobians.
//!
//! A [`KinematicTree`] is an immutable, topologically ordered list of joints.
//! Every joint origin doubles as a named keypoint, so forward kinematics
//! produces one 3D position per joint plus a per-link orientation. Trees are
//! safe to share across threads; FK and Jacobian evaluation are pure.

mod builtin;

pub use builtin::{
    g1_27, human22, retarget_correspondence_12, retarget_correspondence_13,
    trajectory_keypoints_g1, G1_STANDING_ROOT_HEIGHT, G1_TRAJECTORY_KEYPOINTS, HUMAN22_KEYPOINTS,
    HUMAN22_STANDING_ROOT_HEIGHT,
};

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, Point3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degrees of freedom of a single joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointDof {
    /// Rigid attachment, no scalar variables.
    Fixed,
    /// Single hinge about a fixed local axis.
    Revolute { axis: [f64; 3] },
    /// Three scalar variables, intrinsic XYZ Euler angles.
    Ball,
}

impl JointDof {
    pub fn n_scalars(&self) -> usize {
        match self {
            JointDof::Fixed => 0,
            JointDof::Revolute { .. } => 1,
            JointDof::Ball => 3,
        }
    }
}

/// One joint record: a link attached to its parent by a translation offset
/// and the joint's rotational degrees of freedom.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    /// Index of the parent joint; `None` only for the root.
    pub parent: Option<usize>,
    /// Translation from the parent joint origin, in the parent frame (m).
    pub offset: [f64; 3],
    pub dof: JointDof,
    /// Angle limits in radians, one `[lo, hi]` per scalar variable.
    #[serde(default)]
    pub limits: Vec<[f64; 2]>,
}

/// A rigid kinematic skeleton. Immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "TreeSpec", into = "TreeSpec")]
pub struct KinematicTree {
    joints: Vec<Joint>,
    root_name: String,
    n_dof: usize,
    dof_offsets: Vec<usize>,
    name_index: HashMap<String, usize>,
}

/// On-disk JSON schema for a skeleton: a name plus the ordered joint list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeSpec {
    pub name: String,
    pub joints: Vec<Joint>,
}

impl TryFrom<TreeSpec> for KinematicTree {
    type Error = Error;
    fn try_from(spec: TreeSpec) -> Result<Self> {
        KinematicTree::new(spec.name, spec.joints)
    }
}

impl From<KinematicTree> for TreeSpec {
    fn from(tree: KinematicTree) -> Self {
        TreeSpec {
            name: tree.root_name,
            joints: tree.joints,
        }
    }
}

impl KinematicTree {
    /// Builds and validates a tree. Joints must be topologically ordered
    /// (parent index < joint index) with exactly one root at index 0.
    pub fn new(name: impl Into<String>, joints: Vec<Joint>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::invalid("tree must contain at least one joint"));
        }
        let mut name_index = HashMap::new();
        let mut dof_offsets = Vec::with_capacity(joints.len());
        let mut n_dof = 0usize;
        for (i, j) in joints.iter().enumerate() {
            match j.parent {
                None if i != 0 => {
                    return Err(Error::invalid(format!(
                        "joint '{}' has no parent but is not first; exactly one root allowed",
                        j.name
                    )))
                }
                Some(p) if p >= i => {
                    return Err(Error::invalid(format!(
                        "joint '{}' parent index {} is not < {}",
                        j.name, p, i
                    )))
                }
                Some(_) if i == 0 => {
                    return Err(Error::invalid("first joint must be the root"))
                }
                _ => {}
            }
            if !j.offset.iter().all(|v| v.is_finite()) {
                return Err(Error::invalid(format!("joint '{}' offset not finite", j.name)));
            }
            if j.limits.len() != j.dof.n_scalars() {
                return Err(Error::invalid(format!(
                    "joint '{}' has {} limit pairs for {} scalar dof",
                    j.name,
                    j.limits.len(),
                    j.dof.n_scalars()
                )));
            }
            for &[lo, hi] in &j.limits {
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                    return Err(Error::invalid(format!("joint '{}' limits invalid", j.name)));
                }
            }
            if let JointDof::Revolute { axis } = &j.dof {
                let n = Vector3::from(*axis).norm();
                if !(n.is_finite() && n > 1e-12) {
                    return Err(Error::invalid(format!("joint '{}' axis degenerate", j.name)));
                }
            }
            if name_index.insert(j.name.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate joint name '{}'", j.name)));
            }
            dof_offsets.push(n_dof);
            n_dof += j.dof.n_scalars();
        }
        Ok(Self {
            joints,
            root_name: name.into(),
            n_dof,
            dof_offsets,
            name_index,
        })
    }

    pub fn from_json(json: &str) -> Result<Self> {
        serde_json::from_str(json).map_err(|e| Error::Format(format!("skeleton json: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serialization")
    }

    pub fn name(&self) -> &str {
        &self.root_name
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn n_dof(&self) -> usize {
        self.n_dof
    }

    /// Start of joint `i`'s scalar variables within a [`JointConfig`].
    pub fn dof_offset(&self, i: usize) -> usize {
        self.dof_offsets[i]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.name_index.get(name).copied()
    }

    pub fn joint_names(&self) -> Vec<String> {
        self.joints.iter().map(|j| j.name.clone()).collect()
    }

    /// True if `ancestor` is a strict ancestor of `joint`.
    pub fn is_ancestor(&self, ancestor: usize, joint: usize) -> bool {
        let mut cur = self.joints[joint].parent;
        while let Some(p) = cur {
            if p == ancestor {
                return true;
            }
            cur = self.joints[p].parent;
        }
        false
    }

    /// Clamps a configuration into the joint limits in place, returning the
    /// indices of clamped scalars.
    pub fn clamp_to_limits(&self, q: &mut JointConfig) -> Vec<usize> {
        let mut clamped = Vec::new();
        for (i, j) in self.joints.iter().enumerate() {
            let off = self.dof_offsets[i];
            for (k, &[lo, hi]) in j.limits.iter().enumerate() {
                let v = q.values[off + k];
                let c = v.clamp(lo, hi);
                if c != v {
                    q.values[off + k] = c;
                    clamped.push(off + k);
                }
            }
        }
        clamped
    }
}

/// A vector of scalar joint variables (radians) for one tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub values: DVector<f64>,
}

impl JointConfig {
    pub fn zeros(tree: &KinematicTree) -> Self {
        Self {
            values: DVector::zeros(tree.n_dof()),
        }
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self {
            values: DVector::from_vec(values),
        }
    }

    pub fn validate(&self, tree: &KinematicTree) -> Result<()> {
        if self.values.len() != tree.n_dof() {
            return Err(Error::invalid(format!(
                "joint config has {} values, tree '{}' expects {}",
                self.values.len(),
                tree.name(),
                tree.n_dof()
            )));
        }
        if !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("joint config contains non-finite values"));
        }
        Ok(())
    }
}

/// Global SE(3) pose of the skeleton root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootPose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl RootPose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self { rotation, translation }
    }

    /// Yaw-only pose: rotation about +Y by `yaw`, at `translation`.
    pub fn yaw(yaw: f64, translation: Vector3<f64>) -> Self {
        Self {
            rotation: UnitQuaternion::from_axis_angle(&Vector3::y_axis(), yaw),
            translation,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rotation.as_ref().norm();
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("root quaternion norm {n} not unit")));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("root translation not finite"));
        }
        Ok(())
    }

    /// Applies a minimal 6-parameter update: rotation `exp([delta_rot])·R`,
    /// translation `t + delta_t`. Matches the Jacobian's root tangent.
    pub fn perturbed(&self, delta: &[f64]) -> RootPose {
        debug_assert!(delta.len() == 6);
        let w = Vector3::new(delta[0], delta[1], delta[2]);
        let dr = UnitQuaternion::from_scaled_axis(w);
        RootPose {
            rotation: dr * self.rotation,
            translation: self.translation + Vector3::new(delta[3], delta[4], delta[5]),
        }
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords + self.translation)
    }
}

/// Named keypoint pairing between two skeletons with per-pair weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Correspondence {
    /// `(source keypoint name, target keypoint name)` pairs.
    pub pairs: Vec<(String, String)>,
    pub weights: Vec<f64>,
}

impl Correspondence {
    pub fn uniform(pairs: Vec<(String, String)>) -> Self {
        let weights = vec![1.0; pairs.len()];
        Self { pairs, weights }
    }

    /// Identity correspondence over a keypoint name list.
    pub fn identity(names: &[String]) -> Self {
        Self::uniform(names.iter().map(|n| (n.clone(), n.clone())).collect())
    }

    /// Resolves names against the source keypoint list and the target tree.
    pub fn resolve(&self, source_names: &[String], target: &KinematicTree) -> Result<ResolvedCorrespondence> {
        if self.pairs.len() != self.weights.len() {
            return Err(Error::invalid("correspondence weights length mismatch"));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("correspondence weights must be nonnegative"));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = ResolvedCorrespondence::default();
        for ((src, dst), &w) in self.pairs.iter().zip(&self.weights) {
            let si = source_names
                .iter()
                .position(|n| n == src)
                .ok_or_else(|| Error::invalid(format!("source keypoint '{src}' not found")))?;
            let ti = target
                .joint_index(dst)
                .ok_or_else(|| Error::invalid(format!("target keypoint '{dst}' not found")))?;
            if !seen.insert(ti) {
                return Err(Error::invalid(format!("duplicate target keypoint '{dst}'")));
            }
            out.source.push(si);
            out.target.push(ti);
            out.weights.push(w);
        }
        if out.source.is_empty() {
            return Err(Error::invalid("correspondence resolves zero pairs"));
        }
        Ok(out)
    }
}

/// Index-resolved correspondence.
#[derive(Debug, Clone, Default)]
pub struct ResolvedCorrespondence {
    pub source: Vec<usize>,
    pub target: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Forward kinematics output: one position and orientation per joint.
#[derive(Debug, Clone)]
pub struct FkResult {
    pub positions: Vec<Point3<f64>>,
    pub orientations: Vec<UnitQuaternion<f64>>,
}

fn local_rotation(dof: &JointDof, q: &[f64]) -> UnitQuaternion<f64> {
    match dof {
        JointDof::Fixed => UnitQuaternion::identity(),
        JointDof::Revolute { axis } => {
            let a = Unit::new_normalize(Vector3::from(*axis));
            UnitQuaternion::from_axis_angle(&a, q[0])
        }
        JointDof::Ball => {
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), q[0])
                * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), q[1])
                * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q[2])
        }
    }
}

/// Composes the root pose with chained local joint transforms.
pub fn forward_kinematics(tree: &KinematicTree, q: &JointConfig, root: &RootPose) -> Result<FkResult> {
    q.validate(tree)?;
    root.validate()?;
    let n = tree.n_joints();
    let mut positions = Vec::with_capacity(n);
    let mut orientations = Vec::with_capacity(n);
    for (i, joint) in tree.joints().iter().enumerate() {
        let (parent_rot, parent_pos) = match joint.parent {
            None => (root.rotation, Point3::from(root.translation)),
            Some(p) => (orientations[p], positions[p]),
        };
        let off = tree.dof_offset(i);
        let qs = &q.values.as_slice()[off..off + joint.dof.n_scalars()];
        let pos = parent_pos + parent_rot * Vector3::from(joint.offset);
        let rot = parent_rot * local_rotation(&joint.dof, qs);
        positions.push(pos);
        orientations.push(rot);
    }
    Ok(FkResult { positions, orientations })
}

/// Analytic Jacobian of selected keypoint positions w.r.t. `(q, root)`.
///
/// Shape `(3·|sel|) × (n_dof + 6)`; the root block comes last as a minimal
/// tangent `[rotation (3), translation (3)]` matching [`RootPose::perturbed`].
pub fn fk_jacobian(
    tree: &KinematicTree,
    q: &JointConfig,
    root: &RootPose,
    selected: &[usize],
) -> Result<DMatrix<f64>> {
    let fk = forward_kinematics(tree, q, root)?;
    Ok(fk_jacobian_with(tree, q, root, selected, &fk))
}

/// Jacobian variant reusing an existing FK evaluation at `(q, root)`.
pub fn fk_jacobian_with(
    tree: &KinematicTree,
    q: &JointConfig,
    root: &RootPose,
    selected: &[usize],
    fk: &FkResult,
) -> DMatrix<f64> {
    let n_dof = tree.n_dof();
    let mut jac = DMatrix::zeros(3 * selected.len(), n_dof + 6);

    // Global rotation axis for every scalar dof, in the frame preceding the
    // joint's own rotation.
    let mut dof_axes: Vec<(usize, Vector3<f64>)> = Vec::with_capacity(n_dof);
    for (i, joint) in tree.joints().iter().enumerate() {
        let parent_rot = match joint.parent {
            None => root.rotation,
            Some(p) => fk.orientations[p],
        };
        let off = tree.dof_offset(i);
        match &joint.dof {
            JointDof::Fixed => {}
            JointDof::Revolute { axis } => {
                let a = Unit::new_normalize(Vector3::from(*axis));
                dof_axes.push((i, parent_rot * a.into_inner()));
            }
            JointDof::Ball => {
                let rx = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), q.values[off]);
                let ry = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), q.values[off + 1]);
                dof_axes.push((i, parent_rot * Vector3::x()));
                dof_axes.push((i, (parent_rot * rx) * Vector3::y()));
                dof_axes.push((i, (parent_rot * rx * ry) * Vector3::z()));
            }
        }
    }
    debug_assert_eq!(dof_axes.len(), n_dof);

    for (row_block, &kp) in selected.iter().enumerate() {
        let xk = fk.positions[kp];
        for (col, (joint_idx, axis)) in dof_axes.iter().enumerate() {
            // A joint variable moves strictly downstream keypoints only.
            if *joint_idx == kp || !tree.is_ancestor(*joint_idx, kp) {
                continue;
            }
            let arm = xk - fk.positions[*joint_idx];
            let d = axis.cross(&arm);
            for r in 0..3 {
                jac[(3 * row_block + r, col)] = d[r];
            }
        }
        // Root rotation: columns e_m × (x − t).
        let arm = xk.coords - root.translation;
        for m in 0..3 {
            let mut e = Vector3::zeros();
            e[m] = 1.0;
            let d = e.cross(&arm);
            for r in 0..3 {
                jac[(3 * row_block + r, n_dof + m)] = d[r];
            }
        }
        // Root translation: identity.
        for r in 0..3 {
            jac[(3 * row_block + r, n_dof + 3 + r)] = 1.0;
        }
    }
    jac
}

#[cfg(test)]
mod tests;
