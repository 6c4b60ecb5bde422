//! Synthetic query log with planted events, aspects and relevance grades.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::labels::{events_to_csv, EventRecord, GradedLabelSet, PERIOD_OFFSET_DAYS};
use crate::error::{Error, Result};
use crate::eventclf::EventType;
use crate::features::{CorpusStore, EntityDoc, Section};
use crate::logstore::{format_timestamp, Day};
use crate::signals::{spikem_simulate, SpikeMParams};

/// Ranges for an event type's attention curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveRange {
    /// Infectivity times population.
    pub beta_n: (f64, f64),
    pub s_b: (f64, f64),
    pub p_a: (f64, f64),
    /// Peak daily volume of the curve.
    pub peak: (f64, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub start: Day,
    pub days: usize,
    pub breaking: usize,
    pub anticipated: usize,
    /// Earliest event day, as an offset from `start`.
    pub first_event: usize,
    /// Explicit event offsets, breaking entities first; drawn when empty.
    pub event_offsets: Vec<usize>,
    pub breaking_curve: CurveRange,
    pub anticipated_curve: CurveRange,
    /// Daily rate of bare entity queries.
    pub base_volume: f64,
    pub users: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            seed: 42,
            start: Day::from_ymd(2006, 3, 1).expect("valid date"),
            days: 92,
            breaking: 60,
            anticipated: 60,
            first_event: 25,
            event_offsets: vec![],
            breaking_curve: CurveRange {
                beta_n: (1.35, 1.8),
                s_b: (200.0, 350.0),
                p_a: (0.0, 0.0),
                peak: (60.0, 120.0),
            },
            anticipated_curve: CurveRange {
                beta_n: (0.8, 1.05),
                s_b: (80.0, 150.0),
                p_a: (0.3, 0.6),
                peak: (40.0, 80.0),
            },
            base_volume: 4.0,
            users: 5000,
        }
    }
}

impl SynthSpec {
    fn last_event(&self) -> usize {
        self.days.saturating_sub(1 + PERIOD_OFFSET_DAYS as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.breaking + self.anticipated == 0 {
            return Err(Error::param("at least one entity is required"));
        }
        if self.first_event < PERIOD_OFFSET_DAYS as usize || self.first_event > self.last_event() {
            return Err(Error::param(format!(
                "event days must fit in [{}, {}] of a {}-day span",
                PERIOD_OFFSET_DAYS,
                self.last_event(),
                self.days
            )));
        }
        if !self.event_offsets.is_empty() {
            if self.event_offsets.len() != self.breaking + self.anticipated {
                return Err(Error::param("one event offset per entity is required"));
            }
            if let Some(o) = self.event_offsets.iter().find(|&&o| o < self.first_event || o > self.last_event()) {
                return Err(Error::param(format!(
                    "event offset {o} outside the generated span window [{}, {}]",
                    self.first_event,
                    self.last_event()
                )));
            }
        }
        for c in [self.breaking_curve, self.anticipated_curve] {
            for (lo, hi) in [c.beta_n, c.s_b, c.p_a, c.peak] {
                if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                    return Err(Error::param("curve ranges must be finite, non-negative and ordered"));
                }
            }
            if c.p_a.1 >= 1.0 {
                return Err(Error::param("periodicity amplitude must stay below 1"));
            }
        }
        if !(self.base_volume >= 0.0) || self.users == 0 {
            return Err(Error::param("base volume must be non-negative and users positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    /// Steady interest.
    Static,
    /// Steady with random bursts; never relevant.
    Noise,
    /// Builds up before the event and fades after it.
    Pre,
    /// Peaks on the event day only.
    Live,
    /// A two-day flare shortly before the event; never relevant.
    Precursor,
    /// Follows the attention curve shifted `delay` days past the event.
    Curve(i64),
}

struct Aspect {
    name: &'static str,
    variants: &'static [&'static str],
    /// Before, during, after.
    grades: [u8; 3],
    kind: Kind,
    /// Daily rate for steady kinds, share of the curve otherwise.
    rate: f64,
    /// Occurrences in the entity article.
    article: usize,
    /// Aspects in the same group share a landing page.
    group: &'static str,
}

const fn asp(
    name: &'static str,
    variants: &'static [&'static str],
    grades: [u8; 3],
    kind: Kind,
    rate: f64,
    article: usize,
    group: &'static str,
) -> Aspect {
    Aspect {
        name,
        variants,
        grades,
        kind,
        rate,
        article,
        group,
    }
}

const BREAKING_STATIC: [Aspect; 5] = [
    asp("biography", &["bio", "biography facts"], [3, 2, 2], Kind::Static, 1.5, 6, "profile"),
    asp("photos", &["pictures", "photo gallery"], [2, 1, 1], Kind::Static, 3.0, 3, "profile"),
    asp("family", &["wife", "family life"], [2, 2, 1], Kind::Static, 1.0, 4, "profile"),
    asp("myspace", &["myspace page"], [1, 1, 1], Kind::Noise, 2.5, 0, "social"),
    asp("rumors", &["rumor"], [1, 1, 1], Kind::Precursor, 0.3, 0, "gossip"),
];

const BREAKING_THEMES: [[Aspect; 4]; 2] = [
    [
        asp("death", &["dies", "death cause"], [1, 3, 2], Kind::Curve(0), 0.35, 3, "news"),
        asp("accident", &["crash", "accident report"], [1, 3, 1], Kind::Curve(0), 0.25, 2, "news"),
        asp("funeral", &["memorial", "funeral service"], [1, 1, 3], Kind::Curve(3), 0.35, 2, "news"),
        asp("tribute", &["tributes"], [1, 1, 3], Kind::Curve(4), 0.3, 1, "news"),
    ],
    [
        asp("arrest", &["arrested", "arrest warrant"], [1, 3, 2], Kind::Curve(0), 0.35, 3, "news"),
        asp("charges", &["charged", "criminal charges"], [1, 3, 1], Kind::Curve(0), 0.25, 2, "news"),
        asp("trial", &["court", "trial date"], [1, 1, 3], Kind::Curve(3), 0.35, 2, "news"),
        asp("statement", &["apology"], [1, 1, 3], Kind::Curve(4), 0.3, 1, "news"),
    ],
];

const ANTICIPATED: [Aspect; 9] = [
    asp("tickets", &["ticket", "ticket prices"], [3, 2, 1], Kind::Pre, 0.22, 3, "preview"),
    asp("odds", &["betting odds", "odds 2006"], [3, 2, 1], Kind::Pre, 0.18, 2, "preview"),
    asp("schedule", &["schedules", "start time"], [3, 3, 1], Kind::Pre, 0.15, 3, "preview"),
    asp("live", &["live stream", "watch live"], [1, 3, 1], Kind::Live, 0.35, 1, "coverage"),
    asp("results", &["result", "final results"], [1, 3, 3], Kind::Curve(0), 0.35, 3, "coverage"),
    asp("winner", &["winners", "who won"], [1, 3, 3], Kind::Curve(0), 0.3, 3, "coverage"),
    asp("highlights", &["video highlights"], [1, 2, 3], Kind::Curve(1), 0.2, 1, "coverage"),
    asp("history", &["origins", "history facts"], [2, 1, 2], Kind::Static, 1.5, 5, "profile"),
    asp("merchandise", &["souvenirs"], [1, 1, 1], Kind::Noise, 2.5, 0, "shop"),
];

const SYLLABLES: [&str; 24] = [
    "ba", "ko", "ri", "zu", "ne", "ta", "vo", "li", "sa", "mu", "pe", "dro", "gan", "fel", "tor", "quin", "zar", "mel",
    "rud", "kis", "lom", "vex", "dal", "nor",
];

const FILLER: [&str; 24] = [
    "known", "public", "national", "major", "figure", "season", "career", "early", "later", "popular", "record", "city",
    "team", "media", "role", "group", "series", "title", "member", "country", "award", "annual", "young", "famous",
];

const GENERIC: [(&str, &str); 8] = [
    ("weather", "http://weather.example.com"),
    ("google", "http://www.google.com"),
    ("ebay", "http://www.ebay.com"),
    ("yahoo mail", "http://mail.yahoo.com"),
    ("maps", "http://maps.example.com"),
    ("white pages", "http://www.whitepages.com"),
    ("lottery numbers", "http://lottery.example.com"),
    ("horoscope", "http://horoscope.example.com"),
];

struct Entity {
    id: String,
    alias: String,
    kind: EventType,
    event: usize,
    aspects: Vec<&'static Aspect>,
    /// Normalized attention curve, peak 1, indexed by day offset.
    curve: Vec<f64>,
    peak: f64,
    p_a: f64,
    phase: f64,
}

impl Entity {
    fn slug(&self) -> String {
        self.alias.replace(' ', "-")
    }

    fn weekly(&self, d: usize) -> f64 {
        1.0 + self.p_a * (std::f64::consts::PI * (d as f64 + self.phase) / 7.0).sin().abs()
    }

    /// Linear build-up over the two weeks before an anticipated event.
    fn ramp(&self, d: usize) -> f64 {
        let r = d as i64 - self.event as i64;
        if self.kind == EventType::Anticipated && (-14..0).contains(&r) {
            (15 + r) as f64 / 15.0
        } else {
            0.0
        }
    }

    fn entity_rate(&self, base: f64, d: usize) -> f64 {
        let w = self.weekly(d);
        base * w + self.peak * (0.3 * self.curve[d] + 0.3 * self.ramp(d)) * w
    }

    fn aspect_rate(&self, a: &Aspect, d: usize, burst: bool) -> f64 {
        let r = d as i64 - self.event as i64;
        let w = self.weekly(d);
        match a.kind {
            Kind::Static => a.rate * w,
            Kind::Noise => a.rate * w * if burst { 5.0 } else { 1.0 },
            Kind::Pre => {
                let level = if r < 0 {
                    self.ramp(d)
                } else if r == 0 {
                    0.6
                } else {
                    0.1 * 0.5f64.powi(r as i32)
                };
                0.2 + a.rate * self.peak * level * w
            }
            Kind::Live => match r {
                0 => a.rate * self.peak,
                1 => 0.1 * a.rate * self.peak,
                _ => 0.0,
            },
            Kind::Precursor => match r {
                -4 => a.rate * self.peak,
                -3 => 0.4 * a.rate * self.peak,
                _ => 0.0,
            },
            Kind::Curve(delay) => {
                if r < delay {
                    0.0
                } else {
                    a.rate * self.peak * self.curve[d - delay as usize] * w
                }
            }
        }
    }

    fn aspect_url(&self, a: &Aspect) -> String {
        format!("http://{}.example.com/{}", a.name, self.slug())
    }

    fn group_url(&self, a: &Aspect) -> String {
        format!("http://{}.example.org/{}", a.group, self.slug())
    }

    fn wiki_url(&self) -> String {
        format!("http://en.wikipedia.org/wiki/{}", self.alias.replace(' ', "_"))
    }

    fn official_url(&self) -> String {
        format!("http://www.{}.com", self.alias.replace(' ', ""))
    }
}

/// Everything [`generate`] produces, as file contents.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthOutput {
    pub log_tsv: String,
    pub aliases_json: String,
    pub corpus_jsonl: String,
    pub edits_csv: String,
    pub embeddings_txt: String,
    pub labels: GradedLabelSet,
    pub events: Vec<EventRecord>,
}

pub const SYNTH_FILES: [&str; 7] = [
    "queries.tsv",
    "aliases.json",
    "corpus.jsonl",
    "edits.csv",
    "embeddings.txt",
    "labels.csv",
    "events.csv",
];

impl SynthOutput {
    /// Writes the files named in [`SYNTH_FILES`] into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let contents = [
            self.log_tsv.clone(),
            self.aliases_json.clone(),
            self.corpus_jsonl.clone(),
            self.edits_csv.clone(),
            self.embeddings_txt.clone(),
            self.labels.to_csv(),
            events_to_csv(&self.events),
        ];
        for (name, body) in SYNTH_FILES.iter().zip(contents) {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.gen_range(lo..hi)
    } else {
        lo
    }
}

fn poisson(rng: &mut ChaCha8Rng, rate: f64) -> u64 {
    if rate <= 0.0 {
        return 0;
    }
    Poisson::new(rate).map(|p| p.sample(rng) as u64).unwrap_or(0)
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.gen_range(2..4);
    (0..n).map(|_| *SYLLABLES.choose(rng).expect("non-empty")).collect()
}

fn entity_names(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    let mut used = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (a, b) = (pseudo_word(rng), pseudo_word(rng));
        if a == b || used.contains(&a) || used.contains(&b) {
            continue;
        }
        used.insert(a.clone());
        used.insert(b.clone());
        out.push(format!("{a} {b}"));
    }
    out
}

fn curve(spec: &SynthSpec, rng: &mut ChaCha8Rng, kind: EventType, event: usize) -> Result<(Vec<f64>, f64, f64)> {
    let range = match kind {
        EventType::Breaking => spec.breaking_curve,
        EventType::Anticipated => spec.anticipated_curve,
    };
    let n_pop = rng.gen_range(2000.0..4000.0);
    let p_a = uniform(rng, range.p_a);
    let params = SpikeMParams {
        n_pop,
        beta: uniform(rng, range.beta_n) / n_pop,
        // the first surge lands the day after the shock index
        n_b: event - 1,
        s_b: uniform(rng, range.s_b),
        epsilon: 0.0,
        p_a: 0.0,
        p_p: 7.0,
        p_s: 0.0,
    };
    let raw = spikem_simulate(&params, spec.days)?;
    let max = raw.iter().copied().fold(0.0f64, f64::max);
    let norm = raw.iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect();
    Ok((norm, uniform(rng, range.peak), p_a))
}

fn filler(rng: &mut ChaCha8Rng, n: usize) -> Vec<&'static str> {
    (0..n).map(|_| *FILLER.choose(rng).expect("non-empty")).collect()
}

fn article(rng: &mut ChaCha8Rng, e: &Entity) -> Vec<Section> {
    let mut overview = vec![e.alias.as_str()];
    overview.extend(filler(rng, 12));
    let mut body: Vec<&str> = filler(rng, 20);
    for a in &e.aspects {
        body.extend(std::iter::repeat(a.name).take(a.article));
    }
    body.shuffle(rng);
    vec![
        Section {
            title: "Overview".into(),
            text: overview.join(" "),
        },
        Section {
            title: match e.kind {
                EventType::Breaking => "Life".into(),
                EventType::Anticipated => "History".into(),
            },
            text: body.join(" "),
        },
    ]
}

/// Builds the synthetic world. Pure in `spec`.
pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.breaking + spec.anticipated;
    let names = entity_names(&mut rng, n);
    let mut entities = Vec::with_capacity(n);
    for (i, alias) in names.into_iter().enumerate() {
        let kind = if i < spec.breaking {
            EventType::Breaking
        } else {
            EventType::Anticipated
        };
        let event = match spec.event_offsets.get(i) {
            Some(&o) => o,
            None => rng.gen_range(spec.first_event..=spec.last_event()),
        };
        let aspects: Vec<&'static Aspect> = match kind {
            EventType::Breaking => BREAKING_STATIC
                .iter()
                .chain(BREAKING_THEMES[i % BREAKING_THEMES.len()].iter())
                .collect(),
            EventType::Anticipated => ANTICIPATED.iter().collect(),
        };
        let (curve, peak, p_a) = curve(spec, &mut rng, kind, event)?;
        entities.push(Entity {
            id: format!("e{:03}", i + 1),
            alias,
            kind,
            event,
            aspects,
            curve,
            peak,
            p_a,
            phase: rng.gen_range(0.0..7.0),
        });
    }

    let mut log = String::from("AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n");
    let mut lines: Vec<(i64, String)> = Vec::new();
    let mut push = |rng: &mut ChaCha8Rng, day: Day, query: &str, click: Option<&str>| {
        let time = day.start_timestamp() + rng.gen_range(0..86_400);
        let user = rng.gen_range(0..spec.users);
        let (rank, url) = match click {
            Some(u) => (rng.gen_range(1..6).to_string(), u.to_string()),
            None => (String::new(), String::new()),
        };
        lines.push((time, format!("{user}\t{query}\t{}\t{rank}\t{url}", format_timestamp(time))));
    };
    for d in 0..spec.days {
        let day = spec.start.offset(d as i64);
        for &(q, url) in &GENERIC {
            for _ in 0..poisson(&mut rng, 6.0) {
                let click = rng.gen_bool(0.8).then_some(url);
                push(&mut rng, day, q, click);
            }
        }
        for e in &entities {
            let (wiki, official) = (e.wiki_url(), e.official_url());
            for _ in 0..poisson(&mut rng, e.entity_rate(spec.base_volume, d)) {
                let click = if rng.gen_bool(0.85) {
                    Some(if rng.gen_bool(0.6) { wiki.as_str() } else { official.as_str() })
                } else {
                    None
                };
                push(&mut rng, day, &e.alias, click);
            }
            for a in &e.aspects {
                let burst = rng.gen_bool(0.15);
                let (own, group) = (e.aspect_url(a), e.group_url(a));
                for _ in 0..poisson(&mut rng, e.aspect_rate(a, d, burst)) {
                    let text = if a.variants.is_empty() || rng.gen_bool(0.75) {
                        a.name
                    } else {
                        a.variants.choose(&mut rng).expect("non-empty")
                    };
                    let query = format!("{} {}", e.alias, text);
                    let click = if rng.gen_bool(0.8) {
                        let u: f64 = rng.gen();
                        Some(if u < 0.65 {
                            own.as_str()
                        } else if u < 0.85 {
                            wiki.as_str()
                        } else {
                            group.as_str()
                        })
                    } else {
                        None
                    };
                    push(&mut rng, day, &query, click);
                }
            }
        }
    }
    lines.sort_by_key(|(t, _)| *t);
    for (_, l) in lines {
        log.push_str(&l);
        log.push('\n');
    }

    let aliases: BTreeMap<&str, Vec<&str>> = entities.iter().map(|e| (e.id.as_str(), vec![e.alias.as_str()])).collect();
    let aliases_json = serde_json::to_string_pretty(&aliases).expect("map serializes");

    let mut corpus = CorpusStore::new();
    let ids: Vec<String> = entities.iter().map(|e| e.id.clone()).collect();
    for e in &entities {
        let sections = article(&mut rng, e);
        let wiki_text: Vec<&str> = sections.iter().map(|s| s.text.as_str()).collect();
        corpus.add_url(e.wiki_url(), wiki_text.join(" "));
        corpus.add_url(e.official_url(), format!("{} official site {}", e.alias, filler(&mut rng, 8).join(" ")));
        let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for a in &e.aspects {
            let mut words = vec![e.alias.as_str()];
            words.extend(std::iter::repeat(a.name).take(4));
            words.extend(a.variants.iter().copied());
            words.extend(filler(&mut rng, 6));
            corpus.add_url(e.aspect_url(a), words.join(" "));
            groups.entry(a.group).or_default().push(a.name);
        }
        for a in &e.aspects {
            let mut words = vec![e.alias.as_str()];
            words.extend(groups[a.group].iter().copied());
            corpus.add_url(e.group_url(a), words.join(" "));
        }
        let inlinks = (0..rng.gen_range(0..3))
            .map(|_| ids.choose(&mut rng).expect("non-empty").clone())
            .filter(|id| *id != e.id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        corpus.add_entity(EntityDoc {
            entity_id: e.id.clone(),
            title: e.alias.clone(),
            sections,
            inlinks,
        })?;
    }

    let mut edits = String::from("entity_id,day,edit_count\n");
    for e in &entities {
        for d in 0..spec.days {
            let rate = match e.kind {
                EventType::Breaking => 0.5 + 15.0 * e.curve[d],
                EventType::Anticipated => 1.5 * e.weekly(d) + 6.0 * e.ramp(d) + 8.0 * e.curve[d],
            };
            let c = poisson(&mut rng, rate);
            if c > 0 {
                edits += &format!("{},{},{}\n", e.id, spec.start.offset(d as i64), c);
            }
        }
    }

    let mut labels = GradedLabelSet::new();
    for e in &entities {
        for a in &e.aspects {
            labels.insert(&e.id, &format!("{} {}", e.alias, a.name), a.grades)?;
            for v in a.variants {
                labels.insert(&e.id, &format!("{} {}", e.alias, v), a.grades)?;
            }
        }
    }

    let embeddings_txt = embeddings(&mut rng, &entities);
    let events = entities
        .iter()
        .map(|e| EventRecord {
            entity: e.id.clone(),
            kind: e.kind,
            day: spec.start.offset(e.event as i64),
        })
        .collect();
    Ok(SynthOutput {
        log_tsv: log,
        aliases_json,
        corpus_jsonl: corpus.to_jsonl(),
        edits_csv: edits,
        embeddings_txt,
        labels,
        events,
    })
}

/// 16-d vectors; words of one aspect sit near a shared centre.
fn embeddings(rng: &mut ChaCha8Rng, entities: &[Entity]) -> String {
    const DIM: usize = 16;
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let noise = Normal::new(0.0, 0.1).expect("valid normal");
    let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let all = BREAKING_STATIC
        .iter()
        .chain(BREAKING_THEMES.iter().flatten())
        .chain(ANTICIPATED.iter());
    for a in all {
        let centre: Vec<f64> = (0..DIM).map(|_| normal.sample(rng)).collect();
        let words = std::iter::once(a.name).chain(a.variants.iter().flat_map(|v| v.split(' ')));
        for w in words {
            vectors
                .entry(w.to_string())
                .or_insert_with(|| centre.iter().map(|c| c + noise.sample(rng)).collect());
        }
    }
    let mut rest: BTreeSet<String> = FILLER.iter().map(|s| s.to_string()).collect();
    for e in entities {
        rest.extend(e.alias.split(' ').map(String::from));
    }
    for w in rest {
        let v = (0..DIM).map(|_| normal.sample(rng)).collect();
        vectors.entry(w).or_insert(v);
    }
    let mut out = format!("{} {}\n", vectors.len(), DIM);
    for (w, v) in vectors {
        let vals: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        out += &format!("{w} {}\n", vals.join(" "));
    }
    out
}
