//! Deterministic workload generation from band-matched prompt templates.
//!
//! Slot markers in template text are filled from fixed pools drawn from the
//! detector's vocabulary, so generated prompts and history turns carry
//! entities the sanitizer is guaranteed to find.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{SensitivityBand, TemplateSpec, WorkloadSpec};
use crate::tide::Tick;
use crate::waves::{History, InferenceRequest, Modality, TierClass};

/// Simulator-assigned request identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RequestId(pub u64);

impl std::fmt::Display for RequestId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:06}", self.0)
    }
}

/// One generated request with its intended sensitivity band and arrival tick.
#[derive(Debug, Clone)]
pub struct GeneratedRequest {
    pub id: RequestId,
    pub tick: Tick,
    pub band: SensitivityBand,
    pub request: InferenceRequest,
}

#[derive(Debug, thiserror::Error)]
pub enum WorkloadError {
    #[error("no template declared for the {0} band")]
    MissingTemplate(&'static str),
}

const FIRST_NAMES: &[&str] = &[
    "John", "Jane", "Alice", "Robert", "Maria", "David", "Emma", "Frank", "Grace", "Henry",
    "Priya", "Wei", "Yusuf", "Sarah", "Thomas", "Nancy",
];
const SURNAMES: &[&str] = &[
    "Doe", "Smith", "Patel", "Garcia", "Kim", "Novak", "Okafor", "Jensen",
];
const LOCATIONS: &[&str] = &[
    "Chicago", "Boston", "Seattle", "Austin", "Denver", "Miami", "London", "Paris", "Berlin",
    "Tokyo", "Mumbai", "Toronto", "Dublin", "Zurich",
];
const MEDICATIONS: &[&str] = &[
    "metformin", "insulin", "lisinopril", "atorvastatin", "amoxicillin", "warfarin",
    "omeprazole", "metoprolol", "sertraline", "gabapentin",
];
const CONDITIONS: &[&str] = &["diabetes", "hypertension", "asthma", "pneumonia", "arthritis"];
const ORGS: &[&str] = &[
    "Acme Corp", "Globex Corporation", "Initech", "Wayne Enterprises Inc",
];

/// Built-in history turn templates; every turn carries detectable entities.
const HISTORY_TEMPLATES: &[&str] = &[
    "Patient {person} was diagnosed with {condition} on {date}",
    "{person} lives in {location} and works at {org}",
    "Reach {person} at {email} or {phone}",
    "Insurance claim {mrn} for {person}, card {credit_card}",
    "Dr. {person} prescribed {medication} in {location}",
];

fn fill_slots(template: &str, rng: &mut ChaCha8Rng) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open..];
        match tail.find('}') {
            Some(close) => {
                let slot = &tail[1..close];
                match render_slot(slot, rng) {
                    Some(value) => out.push_str(&value),
                    None => out.push_str(&tail[..=close]), // unknown slot: verbatim
                }
                rest = &tail[close + 1..];
            }
            None => {
                out.push_str(tail);
                return out;
            }
        }
    }
    out.push_str(rest);
    out
}

fn render_slot(slot: &str, rng: &mut ChaCha8Rng) -> Option<String> {
    let pick = |pool: &[&str], rng: &mut ChaCha8Rng| -> String {
        (*pool.choose(rng).expect("pool is nonempty")).to_owned()
    };
    Some(match slot {
        "person" => format!(
            "{} {}",
            pick(FIRST_NAMES, rng),
            pick(SURNAMES, rng)
        ),
        "location" => pick(LOCATIONS, rng),
        "medication" => pick(MEDICATIONS, rng),
        "condition" => pick(CONDITIONS, rng),
        "org" => pick(ORGS, rng),
        "date" => format!(
            "{:04}-{:02}-{:02}",
            rng.random_range(2020..=2025),
            rng.random_range(1..=12u32),
            rng.random_range(1..=28u32)
        ),
        "ssn" => format!(
            "{:03}-{:02}-{:04}",
            rng.random_range(100..=899),
            rng.random_range(10..=99u32),
            rng.random_range(1000..=9999u32)
        ),
        "email" => format!(
            "{}.{}@example.com",
            pick(FIRST_NAMES, rng).to_lowercase(),
            pick(SURNAMES, rng).to_lowercase()
        ),
        "phone" => format!(
            "({:03}) 555-{:04}",
            rng.random_range(200..=989),
            rng.random_range(100..=9999u32)
        ),
        "credit_card" => luhn_card(rng),
        "mrn" => format!("MRN-{:06}", rng.random_range(100_000..=999_999)),
        _ => return None,
    })
}

fn luhn_card(rng: &mut ChaCha8Rng) -> String {
    let mut digits: Vec<u32> = (0..15).map(|_| rng.random_range(0..=9u32)).collect();
    digits[0] = 4; // keep a conventional issuer prefix
    let mut sum = 0;
    for (i, &d) in digits.iter().rev().enumerate() {
        // position 0 (rightmost of the final card) is the check digit itself
        let mut value = d;
        if i % 2 == 0 {
            value *= 2;
            if value > 9 {
                value -= 9;
            }
        }
        sum += value;
    }
    let check = (10 - (sum % 10)) % 10;
    digits.push(check);
    let text: String = digits.iter().map(|d| char::from_digit(*d, 10).unwrap()).collect();
    format!("{} {} {} {}", &text[0..4], &text[4..8], &text[8..12], &text[12..16])
}

/// Largest-remainder apportionment of `total` across `fractions`; the
/// realized count for each part is within one of `fraction * total`.
fn apportion(total: u64, fractions: &[f64]) -> Vec<u64> {
    let mut counts: Vec<u64> = fractions
        .iter()
        .map(|f| (f * total as f64).floor() as u64)
        .collect();
    let assigned: u64 = counts.iter().sum();
    let mut remainders: Vec<(usize, f64)> = fractions
        .iter()
        .enumerate()
        .map(|(i, f)| (i, f * total as f64 - counts[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for k in 0..(total - assigned) as usize {
        counts[remainders[k % remainders.len()].0] += 1;
    }
    counts
}

/// Generate the deterministic request stream for a workload spec.
pub fn generate_workload(
    spec: &WorkloadSpec,
    seed: u64,
) -> Result<Vec<GeneratedRequest>, WorkloadError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bands = [
        SensitivityBand::High,
        SensitivityBand::Moderate,
        SensitivityBand::Low,
    ];
    let band_counts = apportion(
        spec.total,
        &[
            spec.sensitivity_mix.high,
            spec.sensitivity_mix.moderate,
            spec.sensitivity_mix.low,
        ],
    );
    let tier_classes = [TierClass::Primary, TierClass::Secondary, TierClass::Burstable];
    let tier_counts = apportion(
        spec.total,
        &[
            spec.tier_mix.primary,
            spec.tier_mix.secondary,
            spec.tier_mix.burstable,
        ],
    );

    let mut band_deck: Vec<SensitivityBand> = bands
        .iter()
        .zip(&band_counts)
        .flat_map(|(band, count)| std::iter::repeat_n(*band, *count as usize))
        .collect();
    let mut tier_deck: Vec<TierClass> = tier_classes
        .iter()
        .zip(&tier_counts)
        .flat_map(|(class, count)| std::iter::repeat_n(*class, *count as usize))
        .collect();
    shuffle(&mut band_deck, &mut rng);
    shuffle(&mut tier_deck, &mut rng);

    let templates_for = |band: SensitivityBand| -> Vec<&TemplateSpec> {
        spec.templates.iter().filter(|t| t.band == band).collect()
    };
    for band in bands {
        if spec.sensitivity_mix.fraction(band) > 0.0 && templates_for(band).is_empty() {
            return Err(WorkloadError::MissingTemplate(band.label()));
        }
    }

    let mut stream = Vec::with_capacity(spec.total as usize);
    for i in 0..spec.total {
        let band = band_deck[i as usize];
        let tier_class = tier_deck[i as usize];
        let pool = templates_for(band);
        let template = pool[rng.random_range(0..pool.len())];
        let prompt = fill_slots(&template.text, &mut rng);
        let history = if spec.history_rate > 0.0 && rng.random::<f64>() < spec.history_rate {
            let turns = (0..rng.random_range(1..=3u32))
                .map(|_| {
                    let turn_template =
                        HISTORY_TEMPLATES[rng.random_range(0..HISTORY_TEMPLATES.len())];
                    fill_slots(turn_template, &mut rng)
                })
                .collect();
            History {
                turns,
                provenance_privacy: spec.history_provenance_privacy,
            }
        } else {
            History::empty()
        };
        stream.push(GeneratedRequest {
            id: RequestId(i),
            tick: i / u64::from(spec.requests_per_tick),
            band,
            request: InferenceRequest {
                prompt,
                modality: template.modality.unwrap_or(Modality::TextGeneration),
                sensitivity: 0.0, // attached by the analyzer in the pipeline
                deadline_ms: template.deadline_ms.unwrap_or(spec.default_deadline_ms),
                history,
                tier_class,
                required_assets: template.requires.iter().cloned().collect(),
            },
        });
    }
    Ok(stream)
}

fn shuffle<T>(deck: &mut [T], rng: &mut ChaCha8Rng) {
    use rand::seq::SliceRandom;
    deck.shuffle(rng);
}
