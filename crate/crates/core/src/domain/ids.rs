use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! opaque_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(raw: impl Into<String>) -> Self {
                Self(raw.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(raw: &str) -> Self {
                Self(raw.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(raw: String) -> Self {
                Self(raw)
            }
        }
    };
}

opaque_id!(VideoId);
opaque_id!(UserId);
opaque_id!(
    /// Identifier of a class group. Visibility between students is decided by
    /// shared groups.
    GroupId
);
opaque_id!(ResponseId);
opaque_id!(ReplyId);
opaque_id!(EventId);
opaque_id!(AnnotationId);
opaque_id!(TrackId);
opaque_id!(JobId);
opaque_id!(
    /// Key of a stored prompt envelope. Assistant replies point at the exact
    /// envelope that produced them.
    SnapshotId
);
