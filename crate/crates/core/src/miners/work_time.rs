use std::collections::BTreeMap;

use chrono::{DateTime, Datelike, Timelike};
use serde::Serialize;

use super::{fold_commits, CommitMiner, MinedCommit, MinerResult};
use crate::error::{Error, Result};
use crate::mappers::EntityId;

/// Day-of-week (Monday = 0) x hour-of-day commit counts.
pub type WeekGrid = [[u64; 24]; 7];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct WorkTimeHistogram(pub BTreeMap<EntityId, WeekGrid>);

impl MinerResult for WorkTimeHistogram {
    const FILE_NAME: &'static str = "WorkTime.json";
}

/// Local (day-of-week, hour) of an author timestamp.
pub fn local_bucket(author_time: i64, tz_offset_minutes: i32) -> Result<(usize, usize)> {
    let local = author_time + i64::from(tz_offset_minutes) * 60;
    let when = DateTime::from_timestamp(local, 0)
        .ok_or_else(|| Error::CorruptObject(format!("timestamp {author_time} out of range")))?;
    Ok((when.weekday().num_days_from_monday() as usize, when.hour() as usize))
}

pub struct WorkTimeMiner;

impl CommitMiner for WorkTimeMiner {
    type Output = WorkTimeHistogram;

    fn process(&self, commit: &MinedCommit, acc: &mut WorkTimeHistogram) -> Result<()> {
        // Extra merge-parent pairs repeat a commit already counted.
        if !commit.is_first_parent_pair() {
            return Ok(());
        }
        let meta = &commit.pair.current;
        let (day, hour) = local_bucket(meta.author_time, meta.tz_offset)?;
        acc.0.entry(commit.author_id).or_insert([[0; 24]; 7])[day][hour] += 1;
        Ok(())
    }

    fn merge(&self, acc: &mut WorkTimeHistogram, other: WorkTimeHistogram) {
        for (user, grid) in other.0 {
            let mine = acc.0.entry(user).or_insert([[0; 24]; 7]);
            for (day, hours) in grid.iter().enumerate() {
                for (hour, n) in hours.iter().enumerate() {
                    mine[day][hour] += n;
                }
            }
        }
    }
}

/// Histogram of commit times over the week, per author, in author-local time.
pub fn mine_work_time(commits: &[MinedCommit]) -> Result<WorkTimeHistogram> {
    fold_commits(&WorkTimeMiner, commits)
}
