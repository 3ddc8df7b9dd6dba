//! File-backed campaign store.
//!
//! Layout: `<data_dir>/<campaign id>/campaign.json` holds the immutable
//! campaign, `responses.jsonl` the accepted responses, one per line, in
//! arrival order. The response file is append-only.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clarte::evaluation::{write_jsonl, BwsDesign, BwsResponse, RatingResponse};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown campaign {0:?}")]
    UnknownCampaign(String),
    #[error("campaign {campaign:?} has no task {unit:?}")]
    UnknownTask { campaign: String, unit: String },
    #[error("invalid: {0}")]
    Invalid(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// What a campaign asks annotators to do, with the display text of every
/// referenced text id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CampaignSpec {
    /// Best-worst judgments over the tuples of a design; each tuple takes as
    /// many annotators as it has slots.
    Bws { design: BwsDesign, texts: BTreeMap<String, String> },
    /// Direct 0–100 ratings; every text is rated by `raters` annotators.
    Rating { text_ids: Vec<String>, raters: usize, texts: BTreeMap<String, String> },
}

impl CampaignSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            CampaignSpec::Bws { .. } => "bws",
            CampaignSpec::Rating { .. } => "rating",
        }
    }

    fn texts(&self) -> &BTreeMap<String, String> {
        match self {
            CampaignSpec::Bws { texts, .. } | CampaignSpec::Rating { texts, .. } => texts,
        }
    }

    pub fn validate(&self) -> Result<(), StoreError> {
        let referenced: Vec<&String> = match self {
            CampaignSpec::Bws { design, .. } => {
                design.validate().map_err(|e| StoreError::Invalid(e.to_string()))?;
                design.texts.iter().collect()
            }
            CampaignSpec::Rating { text_ids, raters, .. } => {
                if text_ids.is_empty() || *raters == 0 {
                    return Err(StoreError::Invalid("a rating campaign needs texts and at least one rater".into()));
                }
                if text_ids.iter().collect::<HashSet<_>>().len() != text_ids.len() {
                    return Err(StoreError::Invalid("duplicate text ids".into()));
                }
                text_ids.iter().collect()
            }
        };
        match referenced.into_iter().find(|id| !self.texts().contains_key(*id)) {
            Some(id) => Err(StoreError::Invalid(format!("text {id:?} has no display text"))),
            None => Ok(()),
        }
    }

    /// Content hash; equal specs get equal ids.
    pub fn content_id(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("campaign specs serialize");
        format!("c{}", &hex::encode(Sha256::digest(bytes))[..16])
    }

    /// Task units with their capacities, in serving order.
    fn units(&self) -> Vec<(String, usize)> {
        match self {
            CampaignSpec::Bws { design, .. } => design
                .tuples
                .iter()
                .map(|q| (q.id.clone(), design.assignments.get(&q.id).map_or(0, Vec::len)))
                .collect(),
            CampaignSpec::Rating { text_ids, raters, .. } => text_ids.iter().map(|t| (t.clone(), *raters)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub id: String,
    #[serde(flatten)]
    pub spec: CampaignSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskText {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    Bws { campaign: String, tuple_id: String, texts: Vec<TaskText> },
    Rating { campaign: String, text_id: String, text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    Bws(BwsResponse),
    Rating(RatingResponse),
}

impl Response {
    fn unit(&self) -> &str {
        match self {
            Response::Bws(r) => &r.tuple_id,
            Response::Rating(r) => &r.text_id,
        }
    }

    fn annotator(&self) -> &str {
        match self {
            Response::Bws(r) => &r.annotator_id,
            Response::Rating(r) => &r.rater_id,
        }
    }

    fn timestamp(&self) -> u64 {
        match self {
            Response::Bws(r) => r.timestamp,
            Response::Rating(r) => r.timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub campaign: String,
    pub kind: String,
    pub tasks: usize,
    /// Total annotator slots over all tasks.
    pub slots: usize,
    pub completed: usize,
    /// Slots served to an annotator and not yet answered.
    pub leased: usize,
    pub remaining: usize,
    pub annotators: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct StoreOptions {
    /// A served task is reserved for its annotator this long; afterwards the
    /// slot may go to someone else.
    pub lease_ttl: Duration,
    /// fsync each appended response.
    pub sync: bool,
}

impl Default for StoreOptions {
    fn default() -> Self {
        StoreOptions { lease_ttl: Duration::from_secs(30 * 60), sync: false }
    }
}

struct Unit {
    capacity: usize,
    answered: HashSet<String>,
    leases: HashMap<String, Instant>,
}

impl Unit {
    fn expire(&mut self, now: Instant, ttl: Duration) {
        self.leases.retain(|_, t| now.duration_since(*t) < ttl);
    }

    fn open(&self) -> bool {
        self.answered.len() + self.leases.len() < self.capacity
    }
}

struct State {
    units: Vec<(String, Unit)>,
    index: HashMap<String, usize>,
    responses: Vec<Response>,
    file: File,
}

struct Entry {
    campaign: Campaign,
    state: Mutex<State>,
}

/// All campaigns under one data directory. Assignment and appends for a
/// campaign go through that campaign's lock, one writer at a time.
pub struct Store {
    root: PathBuf,
    options: StoreOptions,
    campaigns: RwLock<BTreeMap<String, Arc<Entry>>>,
}

fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

impl Store {
    /// Opens `root`, creating it if needed, and loads every campaign in it.
    pub fn open(root: impl Into<PathBuf>, options: StoreOptions) -> Result<Store, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        let mut campaigns = BTreeMap::new();
        for dir in fs::read_dir(&root)? {
            let dir = dir?.path();
            if dir.join("campaign.json").is_file() {
                let entry = load_entry(&dir)?;
                campaigns.insert(entry.campaign.id.clone(), Arc::new(entry));
            }
        }
        Ok(Store { root, options, campaigns: RwLock::new(campaigns) })
    }

    /// Creates a campaign, or returns the existing one with the same
    /// content. The flag is true when the campaign is new.
    pub fn create(&self, spec: CampaignSpec) -> Result<(String, bool), StoreError> {
        spec.validate()?;
        let id = spec.content_id();
        let mut campaigns = self.campaigns.write().expect("store lock");
        if campaigns.contains_key(&id) {
            return Ok((id, false));
        }
        let dir = self.root.join(&id);
        fs::create_dir_all(&dir)?;
        let campaign = Campaign { id: id.clone(), spec };
        let tmp = dir.join("campaign.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(&campaign).map_err(io::Error::other)?)?;
        File::create(dir.join("responses.jsonl"))?.sync_all()?;
        fs::rename(&tmp, dir.join("campaign.json"))?;
        campaigns.insert(id.clone(), Arc::new(load_entry(&dir)?));
        Ok((id, true))
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, StoreError> {
        self.campaigns
            .read()
            .expect("store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::UnknownCampaign(id.to_string()))
    }

    pub fn campaign_ids(&self) -> Vec<String> {
        self.campaigns.read().expect("store lock").keys().cloned().collect()
    }

    pub fn campaign(&self, id: &str) -> Result<Campaign, StoreError> {
        Ok(self.entry(id)?.campaign.clone())
    }

    /// Serves the annotator their outstanding task if they have one, else
    /// reserves the first task with a free slot that they have not
    /// answered. `None` once nothing is left for them.
    pub fn next_task(&self, id: &str, annotator: &str) -> Result<Option<Task>, StoreError> {
        let entry = self.entry(id)?;
        let now = Instant::now();
        let mut state = entry.state.lock().expect("campaign lock");
        let mut chosen = None;
        for (i, (_, unit)) in state.units.iter_mut().enumerate() {
            unit.expire(now, self.options.lease_ttl);
            if unit.leases.contains_key(annotator) {
                chosen = Some(i);
                break;
            }
        }
        if chosen.is_none() {
            chosen = state.units.iter().position(|(_, u)| !u.answered.contains(annotator) && u.open());
            if let Some(i) = chosen {
                state.units[i].1.leases.insert(annotator.to_string(), now);
            }
        }
        Ok(chosen.map(|i| task_for(&entry.campaign, &state.units[i].0)))
    }

    /// Validates and appends a response. A missing (zero) timestamp is set
    /// from the server clock.
    pub fn submit(&self, id: &str, mut response: Response) -> Result<Progress, StoreError> {
        let entry = self.entry(id)?;
        match (&entry.campaign.spec, &mut response) {
            (CampaignSpec::Bws { design, .. }, Response::Bws(r)) => {
                let tuple = design.tuple(&r.tuple_id).ok_or_else(|| StoreError::UnknownTask {
                    campaign: id.to_string(),
                    unit: r.tuple_id.clone(),
                })?;
                r.validate(tuple).map_err(|e| StoreError::Invalid(e.to_string()))?;
                if r.timestamp == 0 {
                    r.timestamp = now_millis();
                }
            }
            (CampaignSpec::Rating { .. }, Response::Rating(r)) => {
                r.validate().map_err(|e| StoreError::Invalid(e.to_string()))?;
                if r.timestamp == 0 {
                    r.timestamp = now_millis();
                }
            }
            (spec, _) => {
                return Err(StoreError::Invalid(format!("response does not match a {} campaign", spec.kind())))
            }
        }
        if response.annotator().is_empty() {
            return Err(StoreError::Invalid("empty annotator id".into()));
        }
        let mut state = entry.state.lock().expect("campaign lock");
        let i = *state.index.get(response.unit()).ok_or_else(|| StoreError::UnknownTask {
            campaign: id.to_string(),
            unit: response.unit().to_string(),
        })?;
        let annotator = response.annotator().to_string();
        {
            let unit = &mut state.units[i].1;
            unit.expire(Instant::now(), self.options.lease_ttl);
            if unit.answered.contains(&annotator) {
                return Err(StoreError::Conflict(format!("{annotator:?} already answered {:?}", response.unit())));
            }
            if !unit.leases.contains_key(&annotator) && !unit.open() {
                return Err(StoreError::Conflict(format!("no open slot on {:?}", response.unit())));
            }
        }
        let mut line = serde_json::to_vec(&response).map_err(io::Error::other)?;
        line.push(b'\n');
        // One write per record: a crash leaves at most a torn last line,
        // which loading discards.
        state.file.write_all(&line)?;
        if self.options.sync {
            state.file.sync_data()?;
        }
        let unit = &mut state.units[i].1;
        unit.leases.remove(&annotator);
        unit.answered.insert(annotator);
        state.responses.push(response);
        Ok(progress_of(&entry.campaign, &state))
    }

    pub fn progress(&self, id: &str) -> Result<Progress, StoreError> {
        let entry = self.entry(id)?;
        let mut state = entry.state.lock().expect("campaign lock");
        let now = Instant::now();
        for (_, unit) in &mut state.units {
            unit.expire(now, self.options.lease_ttl);
        }
        Ok(progress_of(&entry.campaign, &state))
    }

    /// Accepted responses ordered by task id, annotator id, then timestamp.
    pub fn responses(&self, id: &str) -> Result<Vec<Response>, StoreError> {
        let entry = self.entry(id)?;
        let mut out = entry.state.lock().expect("campaign lock").responses.clone();
        out.sort_by(|a, b| {
            (a.unit(), a.annotator(), a.timestamp()).cmp(&(b.unit(), b.annotator(), b.timestamp()))
        });
        Ok(out)
    }

    /// [`Store::responses`] as JSONL bytes.
    pub fn export(&self, id: &str) -> Result<Vec<u8>, StoreError> {
        let mut out = Vec::new();
        write_jsonl(&self.responses(id)?, &mut out)?;
        Ok(out)
    }
}

fn task_for(campaign: &Campaign, unit: &str) -> Task {
    match &campaign.spec {
        CampaignSpec::Bws { design, texts } => Task::Bws {
            campaign: campaign.id.clone(),
            tuple_id: unit.to_string(),
            texts: design
                .tuple(unit)
                .map(|q| q.texts.iter().map(|t| TaskText { id: t.clone(), text: texts[t].clone() }).collect())
                .unwrap_or_default(),
        },
        CampaignSpec::Rating { texts, .. } => Task::Rating {
            campaign: campaign.id.clone(),
            text_id: unit.to_string(),
            text: texts[unit].clone(),
        },
    }
}

fn progress_of(campaign: &Campaign, state: &State) -> Progress {
    let slots: usize = state.units.iter().map(|(_, u)| u.capacity).sum();
    let completed: usize = state.units.iter().map(|(_, u)| u.answered.len()).sum();
    let leased: usize = state.units.iter().map(|(_, u)| u.leases.len()).sum();
    let annotators: HashSet<&str> = state.responses.iter().map(Response::annotator).collect();
    Progress {
        campaign: campaign.id.clone(),
        kind: campaign.spec.kind().to_string(),
        tasks: state.units.len(),
        slots,
        completed,
        leased,
        remaining: slots - completed,
        annotators: annotators.len(),
    }
}

fn corrupt(path: &Path, line: usize, message: impl ToString) -> StoreError {
    StoreError::Corrupt { path: path.to_path_buf(), line, message: message.to_string() }
}

fn load_entry(dir: &Path) -> Result<Entry, StoreError> {
    let path = dir.join("campaign.json");
    let campaign: Campaign = serde_json::from_slice(&fs::read(&path)?).map_err(|e| corrupt(&path, 0, e))?;
    campaign.spec.validate()?;
    let units: Vec<(String, Unit)> = campaign
        .spec
        .units()
        .into_iter()
        .map(|(id, capacity)| (id, Unit { capacity, answered: HashSet::new(), leases: HashMap::new() }))
        .collect();
    let index = units.iter().enumerate().map(|(i, (id, _))| (id.clone(), i)).collect();
    let mut state = State {
        units,
        index,
        responses: Vec::new(),
        file: OpenOptions::new().read(true).append(true).create(true).open(dir.join("responses.jsonl"))?,
    };
    replay(&campaign, &mut state, &dir.join("responses.jsonl"))?;
    Ok(Entry { campaign, state: Mutex::new(state) })
}

fn replay(campaign: &Campaign, state: &mut State, path: &Path) -> Result<(), StoreError> {
    state.file.seek(SeekFrom::Start(0))?;
    let mut reader = BufReader::new(&state.file);
    let mut good_len = 0u64;
    let mut buf = String::new();
    let mut line_no = 0;
    let mut loaded = Vec::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 || !buf.ends_with('\n') {
            break;
        }
        line_no += 1;
        good_len += n as u64;
        if buf.trim().is_empty() {
            continue;
        }
        let response: Response = match campaign.spec {
            CampaignSpec::Bws { .. } => serde_json::from_str(&buf).map(Response::Bws),
            CampaignSpec::Rating { .. } => serde_json::from_str(&buf).map(Response::Rating),
        }
        .map_err(|e| corrupt(path, line_no, e))?;
        loaded.push(response);
    }
    drop(reader);
    if state.file.metadata()?.len() > good_len {
        // Torn final append from a crash: it was never acknowledged.
        state.file.set_len(good_len)?;
    }
    for response in loaded {
        let i = *state
            .index
            .get(response.unit())
            .ok_or_else(|| corrupt(path, 0, format!("unknown task {:?}", response.unit())))?;
        let unit = &mut state.units[i].1;
        if !unit.answered.insert(response.annotator().to_string()) || unit.answered.len() > unit.capacity {
            return Err(corrupt(path, 0, format!("over-assigned task {:?}", response.unit())));
        }
        state.responses.push(response);
    }
    Ok(())
}
