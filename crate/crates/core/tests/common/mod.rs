//! Synthetic corpora and independent reference computations shared by the
//! integration tests.
#![allow(dead_code)]

pub mod oracles;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use entrain::entrainment::{measure_team, MEASURE_NAMES};
use entrain::lexicon::Lexicon;
use entrain::transcript::{GameSession, Interjections, IpuRecord, Role};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FUNCTION_WORDS: [&str; 24] = [
    "i", "you", "we", "it", "the", "a", "to", "of", "in", "on", "and", "but", "or", "is", "are",
    "was", "not", "no", "very", "really", "all", "some", "so", "don't",
];
const CONTENT_WORDS: [&str; 24] = [
    "left", "right", "wire", "red", "blue", "module", "cut", "button", "panel", "switch", "code",
    "bomb", "light", "green", "yellow", "press", "turn", "number", "symbol", "top", "bottom",
    "hold", "dial", "star",
];
const ROLES: [Role; 4] = [Role::Engineer, Role::Pilot, Role::Messenger, Role::Explorer];
const ETHNICITIES: [&str; 4] = ["Caucasian", "EastAsian", "Hispanic", "Black"];

/// Teams per gender-composition condition: (female members, team size, count).
/// Totals 62 teams with condition sizes 2/4/7/9/18/10/12.
const COMPOSITIONS: [(usize, usize, usize); 8] = [
    (0, 3, 2),
    (1, 4, 4),
    (1, 3, 7),
    (2, 4, 9),
    (2, 3, 18),
    (3, 4, 10),
    (3, 3, 7),
    (4, 4, 5),
];

#[derive(Debug, Clone)]
pub struct Member {
    pub speaker_id: String,
    pub female: bool,
    pub age: u32,
    pub ethnicity: &'static str,
}

#[derive(Debug, Clone)]
pub struct Team {
    pub team_id: String,
    pub members: Vec<Member>,
    pub ipus: Vec<IpuRecord>,
    /// Per member: the seven scale scores.
    pub survey: Vec<[f64; 7]>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub teams: Vec<Team>,
}

#[derive(Debug, Clone)]
pub struct CorpusFiles {
    pub transcripts: PathBuf,
    pub roster: PathBuf,
    pub survey: PathBuf,
}

fn utterance(rng: &mut ChaCha8Rng, function_share: f64) -> String {
    let len = rng.random_range(2..10);
    let mut words = Vec::with_capacity(len + 1);
    if rng.random_bool(0.08) {
        words.push("um");
    }
    for _ in 0..len {
        let pool: &[&str] = if rng.random_bool(function_share) {
            &FUNCTION_WORDS
        } else {
            &CONTENT_WORDS
        };
        words.push(pool[rng.random_range(0..pool.len())]);
    }
    let mut text = words.join(" ");
    if rng.random_bool(0.3) {
        text.push(if rng.random_bool(0.5) { '?' } else { '.' });
    }
    text
}

fn team_transcript(rng: &mut ChaCha8Rng, team_id: &str, members: &[Member]) -> Vec<IpuRecord> {
    let duration: i64 = rng.random_range(600_000..1_200_000);
    let target: f64 = rng.random_range(0.35..0.55);
    let mut ipus = Vec::new();
    for (k, m) in members.iter().enumerate() {
        // each speaker drifts from their own style towards a shared one
        let start_share: f64 = rng.random_range(0.15..0.75);
        let pull: f64 = rng.random_range(-0.2..1.0);
        let mut cursor: i64 = rng.random_range(0..5_000);
        while cursor < duration {
            let len = rng.random_range(400..4_000);
            let progress = cursor as f64 / duration as f64;
            let share = (start_share + (target - start_share) * pull * progress).clamp(0.05, 0.95);
            ipus.push(IpuRecord {
                team_id: team_id.to_string(),
                speaker_id: m.speaker_id.clone(),
                role: ROLES[k],
                start_ms: cursor,
                end_ms: (cursor + len).min(duration),
                text: utterance(rng, share),
            });
            cursor += len + rng.random_range(300..25_000);
        }
    }
    ipus
}

fn noise(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    // sum of uniforms, close enough to normal for survey scores
    let s: f64 = (0..6).map(|_| rng.random_range(-1.0..1.0)).sum();
    s * sd / 2.0_f64.sqrt()
}

fn zscores(v: &[f64]) -> Vec<f64> {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
    v.iter().map(|x| (x - m) / sd).collect()
}

/// A 62-team corpus whose conflict scores depend on the teams' absMax
/// measures, so that forward selection has something to find.
pub fn synthetic_corpus(seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut teams = Vec::new();
    for &(females, size, count) in &COMPOSITIONS {
        for _ in 0..count {
            let team_id = format!("T{:03}", teams.len() + 1);
            let members: Vec<Member> = (0..size)
                .map(|k| Member {
                    speaker_id: format!("{team_id}-{}", k + 1),
                    female: k < females,
                    age: rng.random_range(18..40),
                    ethnicity: ETHNICITIES[rng.random_range(0..ETHNICITIES.len())],
                })
                .collect();
            let ipus = team_transcript(&mut rng, &team_id, &members);
            teams.push(Team {
                team_id,
                members,
                ipus,
                survey: Vec::new(),
            });
        }
    }

    let lex = Lexicon::bundled();
    let ij = Interjections::default();
    let measures: Vec<[Option<f64>; 8]> = teams
        .iter()
        .map(|t| {
            let session = GameSession::new(t.team_id.clone(), t.ipus.clone());
            measure_team(&session, &lex, 10, &ij)
                .expect("synthetic team measures")
                .values()
        })
        .collect();
    let col = |name: &str| -> Vec<f64> {
        let k = MEASURE_NAMES.iter().position(|&m| m == name).unwrap();
        measures.iter().map(|m| m[k].unwrap()).collect()
    };
    let z_unw = zscores(&col("unw_absmax"));
    let z_w = zscores(&col("w_absmax"));

    for (i, team) in teams.iter_mut().enumerate() {
        let quality = noise(&mut rng, 1.0);
        let big = if team.members.len() == 4 { 1.0 } else { 0.0 };
        let task = 1.8 - 0.3 * z_unw[i] + 0.15 * big + noise(&mut rng, 0.15);
        let process = 1.6 - 0.25 * z_w[i] + 0.1 * big + noise(&mut rng, 0.15);
        let relation = 1.2 + noise(&mut rng, 0.1);
        team.survey = team
            .members
            .iter()
            .map(|_| {
                let mut s = [0.0; 7];
                for slot in s.iter_mut().take(4) {
                    *slot = 3.6 + 0.5 * quality + noise(&mut rng, 0.25);
                }
                s[4] = task + noise(&mut rng, 0.2);
                s[5] = process + noise(&mut rng, 0.2);
                s[6] = relation + noise(&mut rng, 0.1);
                s.map(|v| (v.clamp(1.0, 5.0) * 1000.0).round() / 1000.0)
            })
            .collect();
    }
    Corpus { teams }
}

/// Two small teams, enough for a smoke run of every stage.
pub fn toy_corpus() -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut teams = Vec::new();
    for (t, females) in [(1usize, 1usize), (2, 2)] {
        let team_id = format!("toy{t}");
        let members: Vec<Member> = (0..3)
            .map(|k| Member {
                speaker_id: format!("{team_id}-{k}"),
                female: k < females,
                age: 20 + 3 * k as u32 + t as u32,
                ethnicity: ETHNICITIES[(k + t) % 2],
            })
            .collect();
        let ipus = team_transcript(&mut rng, &team_id, &members);
        let survey = (0..3)
            .map(|k| {
                let b = 2.0 + t as f64 * 0.5 + k as f64 * 0.25;
                [
                    b,
                    b + 0.5,
                    b + 0.25,
                    b + 0.75,
                    2.0,
                    1.5 + 0.1 * t as f64,
                    1.0,
                ]
            })
            .collect();
        teams.push(Team {
            team_id,
            members,
            ipus,
            survey,
        });
    }
    Corpus { teams }
}

pub fn write_corpus(corpus: &Corpus, dir: &Path) -> CorpusFiles {
    std::fs::create_dir_all(dir).unwrap();
    let mut transcripts = String::from("team_id,speaker_id,role,start_ms,end_ms,text\n");
    let mut roster = String::from("speaker_id,team_id,gender,age,ethnicity\n");
    let mut survey = String::from(
        "speaker_id,team_id,cohesion,satisfaction,potency,shared_cognition,task_conflict,process_conflict,relationship_conflict\n",
    );
    for team in &corpus.teams {
        for ipu in &team.ipus {
            writeln!(
                transcripts,
                "{},{},{},{},{},\"{}\"",
                ipu.team_id, ipu.speaker_id, ipu.role, ipu.start_ms, ipu.end_ms, ipu.text
            )
            .unwrap();
        }
        for (m, scores) in team.members.iter().zip(&team.survey) {
            let gender = if m.female { "female" } else { "male" };
            writeln!(
                roster,
                "{},{},{gender},{},{}",
                m.speaker_id, team.team_id, m.age, m.ethnicity
            )
            .unwrap();
            let joined: Vec<String> = scores.iter().map(|v| v.to_string()).collect();
            writeln!(
                survey,
                "{},{},{}",
                m.speaker_id,
                team.team_id,
                joined.join(",")
            )
            .unwrap();
        }
    }
    let files = CorpusFiles {
        transcripts: dir.join("transcripts.csv"),
        roster: dir.join("roster.csv"),
        survey: dir.join("survey.csv"),
    };
    std::fs::write(&files.transcripts, transcripts).unwrap();
    std::fs::write(&files.roster, roster).unwrap();
    std::fs::write(&files.survey, survey).unwrap();
    files
}
