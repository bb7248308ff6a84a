//! Normalized development-artifact model and its loaders.

mod archive;
mod classify;
pub mod forge;
mod model;
mod slice;

pub use archive::{
    load_archive, load_archive_dir, load_roster, load_windows, write_archive, write_windows, ArchivePaths,
    COMMITS_FILE, DEVELOPERS_FILE, ISSUES_FILE, PR_COMMENTS_FILE, SPRINT_WINDOWS_FILE,
};
pub use classify::{classify_path, Classification, PathRules};
pub use forge::{
    fetch_forge, CannedTransport, FetchRequest, FetchedArchive, ForgeClient, ForgeConfig,
    HttpResponse, HttpTransport, RepoSlug, SystemClock, UreqTransport,
};
pub use model::{
    Commit, CommentKind, DatasetParts, Developer, FileChange, IssueRecord, IssueStatus,
    PRCommentRecord, ProjectDataset, Role, SprintWindow, StatusChange, Timestamp, MAX_SPRINT,
};
pub use slice::{slice_sprint, slice_sprint_with, SliceOptions, SprintSlice};
