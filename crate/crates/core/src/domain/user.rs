use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{GroupId, UserId, VideoRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Teacher,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub user_id: UserId,
    pub role: Role,
    #[serde(default)]
    pub group_ids: BTreeSet<GroupId>,
}

impl User {
    pub fn is_teacher(&self) -> bool {
        self.role == Role::Teacher
    }

    /// Whether the user belongs to at least one group assigned to `video`.
    pub fn is_member_of(&self, video: &VideoRecord) -> bool {
        video.shares_group_with(&self.group_ids)
    }
}

/// Visibility of another user's responses and replies on `video`.
///
/// Teachers see everything. Students see their own records and those of
/// users sharing at least one of the video's groups with them.
pub fn can_view(viewer: &User, author: &User, video: &VideoRecord) -> bool {
    if viewer.is_teacher() || viewer.user_id == author.user_id {
        return true;
    }
    viewer
        .group_ids
        .intersection(&author.group_ids)
        .any(|g| video.group_ids.contains(g))
}
