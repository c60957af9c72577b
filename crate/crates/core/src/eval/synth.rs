//! Seeded generator of semi-structured detail pages with planted
//! (label, value) tuples.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Annotation, Dataset, KeywordSpec, RawPage, Vertical, Website};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    SpecInvalid(String),
}

/// Noise knobs. All zero means every page is a clean rendering of its
/// template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Wrong but candidate-eligible value nodes per page (notes inside value
    /// cells and filler rows).
    pub distractor_values: usize,
    /// Nodes per page that each break one candidate condition: too long,
    /// too short, site-wide boilerplate, or out of hop range.
    pub irrelevant_nodes: usize,
    /// Chance that a relation is left off a page.
    pub missing_rate: f64,
    /// Keyword whose value cell sometimes holds two values of the same kind.
    pub ambiguous_keyword: Option<String>,
    pub ambiguity: f64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::zero()
    }
}

impl NoiseSpec {
    pub fn zero() -> Self {
        Self { distractor_values: 0, irrelevant_nodes: 0, missing_rate: 0.0, ambiguous_keyword: None, ambiguity: 0.0 }
    }

    pub fn moderate() -> Self {
        Self {
            distractor_values: 2,
            irrelevant_nodes: 4,
            missing_rate: 0.05,
            ambiguous_keyword: Some("price".into()),
            ambiguity: 0.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub vertical_count: usize,
    pub websites_per_vertical: usize,
    pub pages_per_website: usize,
    pub relations_per_vertical: usize,
    /// Label every relation with its keyword instead of a site-chosen
    /// surface form.
    pub verbatim_labels: bool,
    pub noise: NoiseSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            vertical_count: 3,
            websites_per_vertical: 3,
            pages_per_website: 50,
            relations_per_vertical: 6,
            verbatim_labels: false,
            noise: NoiseSpec::moderate(),
        }
    }
}

impl SynthSpec {
    pub fn zero_noise(verticals: usize, websites: usize, pages: usize) -> Self {
        Self {
            vertical_count: verticals,
            websites_per_vertical: websites,
            pages_per_website: pages,
            noise: NoiseSpec::zero(),
            ..Self::default()
        }
    }

    pub fn moderate(verticals: usize, websites: usize, pages: usize) -> Self {
        Self {
            vertical_count: verticals,
            websites_per_vertical: websites,
            pages_per_website: pages,
            noise: NoiseSpec::moderate(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::SpecInvalid(m));
        let catalog = catalog();
        if self.vertical_count == 0 || self.vertical_count > catalog.len() {
            return bad(format!("vertical_count must be in 1..={}", catalog.len()));
        }
        if self.websites_per_vertical == 0 {
            return bad("websites_per_vertical must be positive".into());
        }
        // A label needs text_freq > 0.5 and a value < 0.5, which needs a few pages.
        if self.pages_per_website < 3 {
            return bad("pages_per_website must be at least 3".into());
        }
        let max_rel = catalog.iter().map(|v| v.relations.len()).min().unwrap_or(0);
        if self.relations_per_vertical == 0 || self.relations_per_vertical > max_rel {
            return bad(format!("relations_per_vertical must be in 1..={max_rel}"));
        }
        let n = &self.noise;
        if !(0.0..0.5).contains(&n.missing_rate) {
            return bad("missing_rate must be in [0, 0.5)".into());
        }
        if !(0.0..=1.0).contains(&n.ambiguity) {
            return bad("ambiguity must be in [0, 1]".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum ValueKind {
    Money { lo: u32, hi: u32 },
    MoneyMillions,
    Engine,
    Mpg,
    Unit { lo: u32, hi: u32, unit: &'static str },
    Gearbox,
    Person,
    Isbn,
    Company(&'static [&'static str]),
    Date,
    Year { lo: u32, hi: u32 },
    Pick { a: &'static [&'static str], b: &'static [&'static str], sep: &'static str },
    Decimal { lo: u32, hi: u32, unit: &'static str },
    Sensor,
    IsoRange,
    HeightFtIn,
    CityState,
    Percent,
}

struct RelationDef {
    keyword: &'static str,
    description: &'static str,
    forms: &'static [&'static str],
    value: ValueKind,
}

struct VerticalDef {
    id: &'static str,
    entity: fn(&mut ChaCha8Rng) -> String,
    relations: Vec<RelationDef>,
}

const FIRST: &[&str] = &[
    "James", "Maria", "Chen", "Aisha", "Lucas", "Sofia", "Omar", "Elena", "Kenji", "Grace", "Mateo", "Nora",
    "Ravi", "Lena", "Tomas", "Ines", "Dmitri", "Zara", "Felix", "Hana",
];
const LAST: &[&str] = &[
    "Alvarez", "Brooks", "Castillo", "Dubois", "Eriksen", "Fischer", "Gupta", "Hoffman", "Ivanova", "Jensen",
    "Kowalski", "Laurent", "Moreau", "Nakamura", "Okafor", "Petrov", "Quinn", "Rossi", "Sato", "Tanaka",
];
const ADJ: &[&str] = &[
    "Silent", "Crimson", "Hidden", "Broken", "Golden", "Last", "Distant", "Frozen", "Wild", "Quiet", "Burning",
    "Lost", "Northern", "Hollow", "Bright", "Secret",
];
const NOUN: &[&str] = &[
    "River", "Harbor", "Garden", "Empire", "Signal", "Orchard", "Lantern", "Frontier", "Mirror", "Tide",
    "Summit", "Archive", "Meadow", "Compass", "Voyage", "Canyon",
];
const CITIES: &[(&str, &str)] = &[
    ("Springfield", "IL"), ("Madison", "WI"), ("Austin", "TX"), ("Boulder", "CO"), ("Eugene", "OR"),
    ("Athens", "GA"), ("Ithaca", "NY"), ("Provo", "UT"), ("Durham", "NC"), ("Ames", "IA"), ("Tempe", "AZ"),
    ("Berkeley", "CA"), ("Lawrence", "KS"), ("Norman", "OK"), ("Tucson", "AZ"), ("Lincoln", "NE"),
];
const MONTHS: &[&str] = &[
    "January", "February", "March", "April", "May", "June", "July", "August", "September", "October",
    "November", "December",
];

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs[rng.gen_range(0..xs.len())]
}

fn thousands(n: u64) -> String {
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl ValueKind {
    fn generate(self, rng: &mut ChaCha8Rng) -> String {
        match self {
            ValueKind::Money { lo, hi } => format!("${}", thousands(rng.gen_range(lo..hi) as u64 / 10 * 10)),
            ValueKind::MoneyMillions => format!("${}.{} million", rng.gen_range(1..900), rng.gen_range(0..10)),
            ValueKind::Engine => {
                let size = rng.gen_range(12..62) as f64 / 10.0;
                let cyl = pick(rng, &["I3", "I4", "V6", "V8", "H4", "I6"]);
                let extra = pick(rng, &["", " Turbo", " Hybrid", " Supercharged"]);
                format!("{size:.1}L {cyl}{extra}")
            }
            ValueKind::Mpg => {
                let c = rng.gen_range(14..45);
                format!("{c} city / {} hwy", c + rng.gen_range(3..12))
            }
            ValueKind::Unit { lo, hi, unit } => format!("{} {unit}", thousands(rng.gen_range(lo..hi) as u64)),
            ValueKind::Gearbox => format!(
                "{}-speed {}",
                rng.gen_range(4..11),
                pick(rng, &["automatic", "manual", "dual-clutch", "automated manual"])
            ),
            ValueKind::Person => format!("{} {}", pick(rng, FIRST), pick(rng, LAST)),
            ValueKind::Isbn => format!(
                "978-{}-{:03}-{:05}-{}",
                rng.gen_range(0..10),
                rng.gen_range(0..1000),
                rng.gen_range(0..100000),
                rng.gen_range(0..10)
            ),
            ValueKind::Company(suffixes) => {
                format!("{} {} {}", pick(rng, ADJ), pick(rng, NOUN), pick(rng, suffixes))
            }
            ValueKind::Date => format!(
                "{} {}, {}",
                pick(rng, MONTHS),
                rng.gen_range(1..29),
                rng.gen_range(1950..2024)
            ),
            ValueKind::Year { lo, hi } => rng.gen_range(lo..hi).to_string(),
            ValueKind::Pick { a, b, sep } => format!("{}{sep}{}", pick(rng, a), pick(rng, b)),
            ValueKind::Decimal { lo, hi, unit } => {
                let v = rng.gen_range(lo..hi);
                format!("{}.{} {unit}", v / 10, v % 10)
            }
            ValueKind::Sensor => format!(
                "{} {} ({:.1} x {:.1} mm)",
                pick(rng, &["Full-frame", "APS-C", "Micro Four Thirds", "1-inch"]),
                pick(rng, &["CMOS", "BSI CMOS", "Stacked CMOS", "X-Trans CMOS"]),
                rng.gen_range(120..360) as f64 / 10.0,
                rng.gen_range(90..240) as f64 / 10.0
            ),
            ValueKind::IsoRange => {
                format!("{}-{}", pick(rng, &["50", "64", "80", "100", "160", "200"]), 100 * rng.gen_range(64..2048))
            }
            ValueKind::HeightFtIn => format!("{} ft {} in", rng.gen_range(5..8), rng.gen_range(0..12)),
            ValueKind::CityState => {
                let (c, s) = CITIES[rng.gen_range(0..CITIES.len())];
                format!("{c}, {s}")
            }
            ValueKind::Percent => format!("{}.{}%", rng.gen_range(3..95), rng.gen_range(0..10)),
        }
    }
}

fn rel(keyword: &'static str, description: &'static str, forms: &'static [&'static str], value: ValueKind) -> RelationDef {
    RelationDef { keyword, description, forms, value }
}

/// Built-in verticals. Within a vertical, no relation's label words occur in
/// another relation's keyword or description (checked by a unit test).
fn catalog() -> Vec<VerticalDef> {
    vec![
        VerticalDef {
            id: "auto",
            entity: |r| format!("{} {} {}", r.gen_range(2005..2024), pick(r, &["Ardent", "Bexley", "Corvane", "Daltry", "Everly", "Fenwick"]), pick(r, &["Ranger", "Aurora", "Vista", "Comet", "Sierra", "Pulse", "Nomad"])),
            relations: vec![
                rel("price", "msrp or cost", &["Price", "MSRP", "Cost"], ValueKind::Money { lo: 12000, hi: 90000 }),
                rel("engine", "motor type", &["Engine", "Motor", "Engine Type"], ValueKind::Engine),
                rel("fuel economy", "mpg", &["Fuel Economy", "MPG", "EPA Fuel Economy"], ValueKind::Mpg),
                rel("horsepower", "hp, power output", &["Horsepower", "HP", "Power"], ValueKind::Unit { lo: 90, hi: 700, unit: "hp" }),
                rel("transmission", "gearbox", &["Transmission", "Gearbox"], ValueKind::Gearbox),
                rel("curb weight", "vehicle mass", &["Curb Weight", "Weight", "Mass"], ValueKind::Unit { lo: 2200, hi: 6500, unit: "lbs" }),
            ],
        },
        VerticalDef {
            id: "book",
            entity: |r| format!("The {} {}", pick(r, ADJ), pick(r, NOUN)),
            relations: vec![
                rel("author", "writer, written by", &["Author", "Writer", "Written by"], ValueKind::Person),
                rel("isbn", "book number", &["ISBN", "Book Number"], ValueKind::Isbn),
                rel("publisher", "imprint, publishing house", &["Publisher", "Imprint", "Publishing House"], ValueKind::Company(&["Press", "Books", "Publishing", "House"])),
                rel("pages", "page count, length", &["Pages", "Page Count", "Length"], ValueKind::Unit { lo: 80, hi: 1200, unit: "pages" }),
                rel("publication date", "date published, pub date", &["Publication Date", "Published", "Pub Date"], ValueKind::Date),
                rel("format", "binding", &["Format", "Binding"], ValueKind::Pick { a: &["Hardcover", "Paperback", "Mass market paperback", "Library binding"], b: &["1st printing", "2nd printing", "3rd printing", "4th printing", "5th printing", "6th printing", "7th printing", "8th printing", "9th printing", "10th printing", "11th printing", "12th printing"], sep: ", " }),
            ],
        },
        VerticalDef {
            id: "camera",
            entity: |r| format!("{} {}-{}", pick(r, &["Optima", "Lumex", "Kadence", "Pentaro", "Zephyr"]), pick(r, &["X", "Z", "R", "GT", "Pro"]), r.gen_range(10..990)),
            relations: vec![
                rel("price", "list price, retail", &["Price", "List Price", "Retail"], ValueKind::Money { lo: 300, hi: 6500 }),
                rel("resolution", "megapixels, effective pixels", &["Resolution", "Megapixels", "Effective Pixels"], ValueKind::Decimal { lo: 120, hi: 1020, unit: "MP" }),
                rel("sensor", "image sensor type", &["Sensor", "Sensor Type", "Image Sensor"], ValueKind::Sensor),
                rel("weight", "body mass", &["Weight", "Body Weight", "Mass"], ValueKind::Unit { lo: 250, hi: 1600, unit: "g" }),
                rel("iso range", "sensitivity", &["ISO Range", "ISO", "Sensitivity"], ValueKind::IsoRange),
                rel("screen", "display, lcd monitor", &["Screen", "Display", "LCD Monitor"], ValueKind::Decimal { lo: 25, hi: 36, unit: "in LCD" }),
            ],
        },
        VerticalDef {
            id: "movie",
            entity: |r| format!("{} {}", pick(r, ADJ), pick(r, NOUN)),
            relations: vec![
                rel("director", "directed by, filmmaker", &["Director", "Directed by", "Filmmaker"], ValueKind::Person),
                rel("runtime", "running time, duration", &["Runtime", "Running Time", "Duration"], ValueKind::Unit { lo: 75, hi: 200, unit: "min" }),
                rel("release date", "released, premiere", &["Release Date", "Released", "Premiere"], ValueKind::Date),
                rel("box office", "gross, worldwide gross", &["Box Office", "Gross", "Worldwide Gross"], ValueKind::MoneyMillions),
                rel("genre", "category", &["Genre", "Category"], ValueKind::Pick { a: &["Drama", "Comedy", "Thriller", "Horror", "Romance", "Western", "Musical", "Mystery"], b: &["Adventure", "Crime", "Fantasy", "Sci-Fi", "War", "Biography", "Sport"], sep: " / " }),
                rel("studio", "production company, distributor", &["Studio", "Distributor", "Production Company"], ValueKind::Company(&["Pictures", "Films", "Studios", "Entertainment"])),
            ],
        },
        VerticalDef {
            id: "nbaplayer",
            entity: |r| format!("{} {}", pick(r, FIRST), pick(r, LAST)),
            relations: vec![
                rel("team", "current team, club", &["Team", "Current Team", "Club"], ValueKind::Pick { a: &["Portland", "Memphis", "Denver", "Orlando", "Phoenix", "Boston", "Dallas", "Utah"], b: &["Comets", "Rapids", "Miners", "Owls", "Storm", "Pioneers"], sep: " " }),
                rel("height", "ht", &["Height", "Ht"], ValueKind::HeightFtIn),
                rel("weight", "wt", &["Weight", "Wt"], ValueKind::Unit { lo: 160, hi: 320, unit: "lbs" }),
                rel("position", "pos", &["Position", "Pos"], ValueKind::Pick { a: &["Point Guard", "Shooting Guard", "Small Forward", "Power Forward", "Center"], b: &["", " (starter)", " (reserve)", " (two-way)"], sep: "" }),
                rel("birth date", "born, birthday", &["Birth Date", "Born", "Birthday"], ValueKind::Date),
                rel("college", "school, alma mater", &["College", "School", "Alma Mater"], ValueKind::Pick { a: &["Lakeside", "Riverton", "Westbrook", "Granite", "Harlow", "Pinecrest", "Kingsford", "Marlow"], b: &["State", "University", "College", "Tech"], sep: " " }),
            ],
        },
        VerticalDef {
            id: "university",
            entity: |r| format!("{} {}", pick(r, &["Lakeside", "Riverton", "Westbrook", "Granite", "Harlow", "Pinecrest"]), pick(r, &["University", "College", "Institute of Technology", "State University"])),
            relations: vec![
                rel("tuition", "annual tuition, fees", &["Tuition", "Annual Tuition", "Fees"], ValueKind::Money { lo: 4000, hi: 65000 }),
                rel("enrollment", "students, student body", &["Enrollment", "Students", "Student Body"], ValueKind::Unit { lo: 800, hi: 60000, unit: "students" }),
                rel("founded", "established, year founded", &["Founded", "Established", "Year Founded"], ValueKind::Year { lo: 1636, hi: 2005 }),
                rel("location", "city, campus", &["Location", "City", "Campus"], ValueKind::CityState),
                rel("acceptance rate", "admit rate, admission rate", &["Acceptance Rate", "Admit Rate", "Admission Rate"], ValueKind::Percent),
                rel("mascot", "nickname, athletics nickname", &["Mascot", "Nickname", "Athletics Nickname"], ValueKind::Pick { a: &["Fighting", "Golden", "Mighty", "Flying", "Roaring", "Running"], b: &["Owls", "Bears", "Hawks", "Foxes", "Rams", "Herons", "Wolves", "Bison"], sep: " " }),
            ],
        },
    ]
}

/// Site-wide texts, shared by every website.
const BOILERPLATE: &[&str] = &["Advertisement", "Sponsored", "Social sharing"];
const NAV: &[&str] = &["Home", "Browse", "Contact"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Template {
    Table,
    DefList,
    List,
    DivRows,
    Headings,
}

const TEMPLATES: [Template; 5] = [Template::Table, Template::DefList, Template::List, Template::DivRows, Template::Headings];

enum Cell {
    Plain(String),
    WithNote(String, String),
    Pair(String, String),
}

enum Item {
    Row { label: String, cell: Cell },
    Filler(String),
}

struct Placed {
    block: usize,
    item: Item,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_cell(c: &Cell) -> String {
    match c {
        Cell::Plain(v) => esc(v),
        Cell::WithNote(v, n) => format!("{}<small>{}</small>", esc(v), esc(n)),
        Cell::Pair(a, b) => format!("<span>{}</span><span>{}</span>", esc(a), esc(b)),
    }
}

fn render_block(t: Template, items: &[&Item]) -> String {
    let mut s = String::new();
    let (open, close) = match t {
        Template::Table => ("<table class=\"specs\"><tbody>", "</tbody></table>"),
        Template::DefList => ("<dl class=\"specs\">", "</dl>"),
        Template::List => ("<ul class=\"facts\">", "</ul>"),
        Template::DivRows => ("<div class=\"specs\">", "</div>"),
        Template::Headings => ("<section class=\"specs\">", "</section>"),
    };
    s.push_str(open);
    for item in items {
        s.push('\n');
        match item {
            Item::Row { label, cell } => {
                let (l, v) = (esc(label), render_cell(cell));
                s.push_str(&match t {
                    Template::Table => format!("<tr><th>{l}</th><td>{v}</td></tr>"),
                    Template::DefList => format!("<div class=\"pair\"><dt>{l}</dt><dd>{v}</dd></div>"),
                    Template::List => format!("<li><span class=\"key\">{l}</span><span class=\"val\">{v}</span></li>"),
                    Template::DivRows => format!(
                        "<div class=\"row\"><div class=\"label\">{l}</div><div class=\"value\">{v}</div></div>"
                    ),
                    Template::Headings => format!("<article><h4>{l}</h4><p>{v}</p></article>"),
                });
            }
            Item::Filler(x) => {
                let x = esc(x);
                s.push_str(&match t {
                    Template::Table => format!("<tr><td colspan=\"2\">{x}</td></tr>"),
                    Template::DefList | Template::DivRows => format!("<div class=\"note\">{x}</div>"),
                    Template::List => format!("<li>{x}</li>"),
                    Template::Headings => format!("<p class=\"note\">{x}</p>"),
                });
            }
        }
    }
    s.push('\n');
    s.push_str(close);
    s
}

struct SiteStyle {
    name: String,
    templates: [Template; 2],
    /// Block index per relation.
    block_of: Vec<usize>,
    labels: Vec<String>,
    order: Vec<usize>,
}

fn seed_for(seed: u64, parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for p in parts {
        for b in p.bytes().chain([0xff]) {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
    }
    h
}

fn long_text(rng: &mut ChaCha8Rng, entity: &str) -> String {
    let mut s = format!("{entity} has been");
    while s.chars().count() <= 120 {
        s.push(' ');
        s.push_str(pick(rng, &["praised", "widely", "noted", "for", "its", "design", "balance", "value", "reviewers", "often", "mention", "lasting", "appeal", "among", "owners", "and", "critics", "alike"]));
    }
    s.push('.');
    s
}

/// Builds the dataset in memory. Website `w` of vertical `v` lays out its
/// relations in two blocks using templates `(v + w) mod 5` and
/// `(v + w + 2) mod 5`, so consecutive websites differ in layout.
pub fn generate_synthetic(spec: &SynthSpec, seed: u64) -> Result<Dataset, SynthError> {
    spec.validate()?;
    let catalog = catalog();
    let noise = &spec.noise;
    let mut ds = Dataset::default();
    for (vi, vdef) in catalog.iter().take(spec.vertical_count).enumerate() {
        let rels = &vdef.relations[..spec.relations_per_vertical];
        let keywords: Vec<KeywordSpec> = rels
            .iter()
            .map(|r| KeywordSpec {
                keyword: r.keyword.into(),
                description: r.description.into(),
                surface_forms: std::iter::once(r.keyword.to_string())
                    .chain(r.forms.iter().map(|f| f.to_string()))
                    .collect(),
            })
            .collect();
        let mut websites = Vec::new();
        for wi in 0..spec.websites_per_vertical {
            let site_id = format!("site{wi:02}");
            let mut rng = ChaCha8Rng::seed_from_u64(seed_for(seed, &[vdef.id, &site_id]));
            let templates = [TEMPLATES[(vi + wi) % TEMPLATES.len()], TEMPLATES[(vi + wi + 2) % TEMPLATES.len()]];
            let mut order: Vec<usize> = (0..rels.len()).collect();
            order.shuffle(&mut rng);
            let mut block_of = vec![0; rels.len()];
            for (pos, &ri) in order.iter().enumerate() {
                block_of[ri] = usize::from(2 * pos >= rels.len());
            }
            let labels = rels
                .iter()
                .enumerate()
                .map(|(ri, r)| {
                    let base = if spec.verbatim_labels { r.keyword } else { pick(&mut rng, r.forms) };
                    if templates[block_of[ri]] == Template::DivRows { format!("{base}:") } else { base.to_string() }
                })
                .collect();
            let name = format!("{} {}", pick(&mut rng, ADJ), pick(&mut rng, NOUN));
            let style = SiteStyle { name, templates, block_of, labels, order };

            let mut pages = Vec::new();
            let mut annotations = Vec::new();
            for pi in 0..spec.pages_per_website {
                let page_id = format!("page{pi:04}");
                let (html, anns) = render_page(&style, vdef, rels, noise, &mut rng);
                annotations.extend(anns.into_iter().map(|(relation, value)| Annotation {
                    page_id: page_id.clone(),
                    relation,
                    value,
                }));
                pages.push(RawPage::new(page_id, site_id.clone(), vdef.id, html.into_bytes()));
            }
            websites.push(Website {
                id: site_id,
                vertical_id: vdef.id.into(),
                pages,
                annotations,
                sidecars: BTreeMap::new(),
            });
        }
        ds.verticals.push(Vertical { id: vdef.id.into(), keywords, websites });
    }
    Ok(ds)
}

fn render_page(
    style: &SiteStyle,
    vdef: &VerticalDef,
    rels: &[RelationDef],
    noise: &NoiseSpec,
    rng: &mut ChaCha8Rng,
) -> (String, Vec<(String, String)>) {
    let entity = (vdef.entity)(rng);
    let mut present: Vec<usize> = style.order.iter().copied().filter(|_| !rng.gen_bool(noise.missing_rate)).collect();
    if present.is_empty() {
        present.push(style.order[0]);
    }
    let mut annotations = Vec::new();
    let mut items: Vec<Placed> = Vec::new();
    for &ri in &present {
        let r = &rels[ri];
        let value = r.value.generate(rng);
        let ambiguous = noise.ambiguous_keyword.as_deref() == Some(r.keyword) && rng.gen_bool(noise.ambiguity);
        let cell = if ambiguous {
            let mut other = r.value.generate(rng);
            while other == value {
                other = r.value.generate(rng);
            }
            if rng.gen_bool(0.5) {
                Cell::Pair(value.clone(), other)
            } else {
                Cell::Pair(other, value.clone())
            }
        } else {
            Cell::Plain(value.clone())
        };
        annotations.push((style.labels[ri].clone(), value));
        items.push(Placed { block: style.block_of[ri], item: Item::Row { label: style.labels[ri].clone(), cell } });
    }

    for i in 0..noise.distractor_values {
        if i % 2 == 0 {
            let plain: Vec<usize> = (0..items.len())
                .filter(|&j| matches!(items[j].item, Item::Row { cell: Cell::Plain(_), .. }))
                .collect();
            if let Some(&j) = plain.choose(rng) {
                let note = match rng.gen_range(0..3) {
                    0 => format!("({} reviews)", rng.gen_range(2..5000)),
                    1 => format!("updated {} {}", pick(rng, MONTHS), rng.gen_range(2010..2024)),
                    _ => format!("ref {}", rng.gen_range(10000..99999)),
                };
                if let Item::Row { cell, .. } = &mut items[j].item {
                    if let Cell::Plain(v) = cell {
                        *cell = Cell::WithNote(std::mem::take(v), note);
                    }
                }
                continue;
            }
        }
        let at = rng.gen_range(0..=items.len());
        let block = rng.gen_range(0..2);
        items.insert(at, Placed { block, item: Item::Filler(format!("Listing #{}", rng.gen_range(100000..999999))) });
    }

    let mut footer_extra = String::new();
    for i in 0..noise.irrelevant_nodes {
        let text = match i % 4 {
            0 => long_text(rng, &entity),
            1 => pick(rng, &["|", "•", "-"]).to_string(),
            2 => BOILERPLATE[(i / 4) % BOILERPLATE.len()].to_string(),
            _ => {
                footer_extra.push_str(&format!(
                    "<div><div><div><div><span>Updated {} {}, {}</span></div></div></div></div>",
                    pick(rng, MONTHS),
                    rng.gen_range(1..29),
                    rng.gen_range(2015..2024)
                ));
                continue;
            }
        };
        let at = rng.gen_range(0..=items.len());
        let block = rng.gen_range(0..2);
        items.insert(at, Placed { block, item: Item::Filler(text) });
    }

    let block: String = (0..2)
        .map(|b| {
            let members: Vec<&Item> = items.iter().filter(|p| p.block == b).map(|p| &p.item).collect();
            render_block(style.templates[b], &members)
        })
        .collect::<Vec<_>>()
        .join("\n");
    let nav: String = NAV.iter().map(|n| format!("<a href=\"#\">{n}</a> ")).collect();
    let html = format!(
        "<!DOCTYPE html>\n<html><head><title>{title}</title></head>\n<body>\n<div class=\"nav\">{nav}</div>\n<h1>{title}</h1>\n<div class=\"main\">\n{block}\n</div>\n<div class=\"footer\"><p>{site}</p>{footer_extra}</div>\n</body></html>\n",
        title = esc(&entity),
        block = block,
        site = esc(&style.name),
    );
    (html, annotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::words;
    use std::collections::BTreeSet;

    #[test]
    fn labels_do_not_leak_into_other_queries() {
        for v in catalog() {
            for (i, a) in v.relations.iter().enumerate() {
                let label_words: BTreeSet<String> = a.forms.iter().flat_map(|f| words(f)).collect();
                for (j, b) in v.relations.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let q: BTreeSet<String> = words(b.keyword).into_iter().chain(words(b.description)).collect();
                    let shared: Vec<_> = label_words.intersection(&q).collect();
                    assert!(shared.is_empty(), "{}: {} vs {}: {shared:?}", v.id, a.keyword, b.keyword);
                }
            }
        }
    }

    #[test]
    fn every_label_overlaps_its_query() {
        for v in catalog() {
            for r in &v.relations {
                let q: BTreeSet<String> = words(r.keyword).into_iter().chain(words(r.description)).collect();
                for f in r.forms {
                    assert!(words(f).iter().any(|w| q.contains(w)), "{}: {f}", r.keyword);
                }
            }
        }
    }

    #[test]
    fn site_texts_share_no_words_with_queries() {
        let site: BTreeSet<String> = BOILERPLATE.iter().chain(NAV).flat_map(|s| words(s)).collect();
        for v in catalog() {
            for r in &v.relations {
                for w in words(r.keyword).into_iter().chain(words(r.description)) {
                    assert!(!site.contains(&w), "{w}");
                }
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SynthSpec::zero_noise(3, 3, 2).validate().is_err());
        assert!(SynthSpec::zero_noise(7, 3, 5).validate().is_err());
        assert!(SynthSpec::moderate(3, 3, 5).validate().is_ok());
    }

    #[test]
    fn deterministic_and_counted() {
        let spec = SynthSpec::moderate(3, 3, 20);
        let a = generate_synthetic(&spec, 7).unwrap();
        let b = generate_synthetic(&spec, 7).unwrap();
        assert_eq!(a.page_count(), 180);
        assert_eq!(
            a.websites().flat_map(|w| &w.pages).map(|p| &p.html).collect::<Vec<_>>(),
            b.websites().flat_map(|w| &w.pages).map(|p| &p.html).collect::<Vec<_>>()
        );
        let c = generate_synthetic(&spec, 8).unwrap();
        assert_ne!(a.verticals[0].websites[0].pages[0].html, c.verticals[0].websites[0].pages[0].html);
    }

    #[test]
    fn money_formatting() {
        assert_eq!(thousands(24860), "24,860");
        assert_eq!(thousands(999), "999");
        assert_eq!(thousands(1000000), "1,000,000");
    }
}
