use super::model::{Commit, PRCommentRecord, ProjectDataset, SprintWindow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SliceOptions {
    /// Drop merge commits. Off by default; the merge convention is unknown.
    pub exclude_merges: bool,
}

/// One team's artifacts inside one sprint window.
#[derive(Debug, Clone)]
pub struct SprintSlice<'a> {
    pub window: &'a SprintWindow,
    pub commits: Vec<&'a Commit>,
    pub comments: Vec<&'a PRCommentRecord>,
}

impl<'a> SprintSlice<'a> {
    /// Narrow the slice to a single author.
    pub fn for_developer(&self, developer_id: &str) -> SprintSlice<'a> {
        SprintSlice {
            window: self.window,
            commits: self
                .commits
                .iter()
                .copied()
                .filter(|c| c.author_id == developer_id)
                .collect(),
            comments: self
                .comments
                .iter()
                .copied()
                .filter(|c| c.author_id == developer_id)
                .collect(),
        }
    }
}

pub fn slice_sprint<'a>(
    dataset: &'a ProjectDataset,
    team_id: &str,
    sprint_id: u32,
) -> Result<SprintSlice<'a>> {
    slice_sprint_with(dataset, team_id, sprint_id, SliceOptions::default())
}

pub fn slice_sprint_with<'a>(
    dataset: &'a ProjectDataset,
    team_id: &str,
    sprint_id: u32,
    options: SliceOptions,
) -> Result<SprintSlice<'a>> {
    let window = dataset.window(team_id, sprint_id).ok_or_else(|| {
        Error::Lookup(format!(
            "no sprint window for team {team_id:?} sprint {sprint_id}"
        ))
    })?;
    let in_team = |author: &str| {
        dataset
            .developer(author)
            .is_some_and(|d| d.team_id == team_id)
    };
    let commits = dataset
        .commits()
        .iter()
        .filter(|c| window.contains(c.timestamp) && in_team(&c.author_id))
        .filter(|c| !(options.exclude_merges && c.is_merge))
        .collect();
    let comments = dataset
        .pr_comments()
        .iter()
        .filter(|c| window.contains(c.timestamp) && in_team(&c.author_id))
        .collect();
    Ok(SprintSlice {
        window,
        commits,
        comments,
    })
}

#[cfg(test)]
mod tests {
    use chrono::Duration;

    use super::*;
    use crate::store::model::{DatasetParts, Developer, Role, Timestamp};

    fn ts(s: &str) -> Timestamp {
        s.parse().unwrap()
    }

    fn commit(sha: &str, author: &str, t: Timestamp) -> Commit {
        Commit {
            sha: sha.into(),
            author_id: author.into(),
            timestamp: t,
            message: String::new(),
            is_merge: sha.starts_with("merge"),
            changes: vec![],
        }
    }

    fn dataset(commits: Vec<Commit>) -> ProjectDataset {
        let dev = |id: &str, team: &str| Developer {
            id: id.into(),
            team_id: team.into(),
            role: Role::Developer,
        };
        let review = ts("2024-04-14T10:00:00Z");
        ProjectDataset::new(DatasetParts {
            developers: vec![dev("a", "A"), dev("b", "B"), dev("idle", "C")],
            sprint_windows: vec![
                SprintWindow {
                    team_id: "A".into(),
                    sprint_id: 1,
                    start: ts("2024-04-01T00:00:00Z"),
                    review_meeting: review,
                },
                SprintWindow {
                    team_id: "A".into(),
                    sprint_id: 2,
                    start: ts("2024-04-15T00:00:00Z"),
                    review_meeting: ts("2024-04-28T10:00:00Z"),
                },
                SprintWindow {
                    team_id: "C".into(),
                    sprint_id: 1,
                    start: ts("2024-04-01T00:00:00Z"),
                    review_meeting: review,
                },
            ],
            commits,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn review_meeting_is_inclusive() {
        let review = ts("2024-04-14T10:00:00Z");
        let ds = dataset(vec![
            commit("at", "a", review),
            commit("after", "a", review + Duration::seconds(1)),
        ]);
        let s = slice_sprint(&ds, "A", 1).unwrap();
        let shas: Vec<_> = s.commits.iter().map(|c| c.sha.as_str()).collect();
        assert_eq!(shas, ["at"]);
    }

    #[test]
    fn other_teams_excluded() {
        let ds = dataset(vec![commit("x", "b", ts("2024-04-05T00:00:00Z"))]);
        assert!(slice_sprint(&ds, "A", 1).unwrap().commits.is_empty());
    }

    #[test]
    fn idle_team_gives_empty_view() {
        let ds = dataset(vec![commit("x", "a", ts("2024-04-05T00:00:00Z"))]);
        let s = slice_sprint(&ds, "C", 1).unwrap();
        assert!(s.commits.is_empty() && s.comments.is_empty());
    }

    #[test]
    fn missing_window_is_lookup_error() {
        let ds = dataset(vec![]);
        assert!(matches!(slice_sprint(&ds, "B", 1), Err(Error::Lookup(_))));
    }

    #[test]
    fn merge_flag() {
        let ds = dataset(vec![
            commit("merge-1", "a", ts("2024-04-05T00:00:00Z")),
            commit("c", "a", ts("2024-04-05T01:00:00Z")),
        ]);
        assert_eq!(slice_sprint(&ds, "A", 1).unwrap().commits.len(), 2);
        let opts = SliceOptions {
            exclude_merges: true,
        };
        assert_eq!(slice_sprint_with(&ds, "A", 1, opts).unwrap().commits.len(), 1);
    }

    #[test]
    fn windows_partition_commits() {
        let ds = dataset(vec![
            commit("s1", "a", ts("2024-04-03T00:00:00Z")),
            commit("gap", "a", ts("2024-04-14T18:00:00Z")),
            commit("s2", "a", ts("2024-04-20T00:00:00Z")),
        ]);
        let s1 = slice_sprint(&ds, "A", 1).unwrap();
        let s2 = slice_sprint(&ds, "A", 2).unwrap();
        let mut seen: Vec<_> = s1
            .commits
            .iter()
            .chain(&s2.commits)
            .map(|c| c.sha.as_str())
            .collect();
        seen.sort();
        assert_eq!(seen, ["s1", "s2"]);
    }
}
