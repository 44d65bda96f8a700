//! Seeded fixture data standing in for live API backends.
//!
//! Entity identities (titles, ids, city names, tickers) are fixed so that
//! query templates can name them; every other attribute is drawn from the
//! seed, so different seeds give different ground truths for the same query.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::seed::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureStore {
    pub seed: u64,
    pub tables: BTreeMap<String, Vec<Value>>,
}

impl FixtureStore {
    pub fn from_tables(seed: u64, tables: BTreeMap<String, Vec<Value>>) -> Self {
        Self { seed, tables }
    }

    pub fn table(&self, name: &str) -> Option<&Vec<Value>> {
        self.tables.get(name)
    }

    pub fn table_mut(&mut self, name: &str) -> Option<&mut Vec<Value>> {
        self.tables.get_mut(name)
    }

    pub fn from_json(raw: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(raw)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture store serializes")
    }

    /// Builds the bundled fixture tables for `seed`.
    pub fn generate(seed: u64) -> Self {
        let mut tables = BTreeMap::new();
        let rng = |table: &str| rng_from_seed(derive_seed(seed, &["fixtures", table], &[]));
        tables.insert("movies".into(), movies(&mut rng("movies")));
        tables.insert("cities".into(), cities(&mut rng("cities")));
        tables.insert("countries".into(), countries(&mut rng("countries")));
        let agents = crm_agents(&mut rng("crm_agents"));
        let accounts = crm_accounts();
        tables.insert("cases".into(), crm_cases(&mut rng("cases"), &agents, &accounts));
        tables.insert("crm_agents".into(), agents);
        tables.insert("accounts".into(), accounts);
        tables.insert("authors".into(), authors());
        tables.insert("books".into(), books(&mut rng("books")));
        tables.insert("properties".into(), properties(&mut rng("properties")));
        tables.insert("companies".into(), companies(&mut rng("companies")));
        tables.insert("exchange_rates".into(), exchange_rates(&mut rng("exchange_rates")));
        Self { seed, tables }
    }
}

fn round_to(x: f64, places: i32) -> f64 {
    let k = 10f64.powi(places);
    (x * k).round() / k
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items.choose(rng).copied().expect("non-empty list")
}

fn pick_distinct(rng: &mut ChaCha8Rng, items: &[&str], n: usize) -> Vec<String> {
    let mut chosen: Vec<&str> = items.choose_multiple(rng, n).copied().collect();
    chosen.shuffle(rng);
    chosen.into_iter().map(String::from).collect()
}

pub(crate) const MOVIES: &[(u64, &str, &str, &str, u32)] = &[
    (155, "The Dark Knight", "tt0468569", "Christopher Nolan", 2008),
    (27205, "Inception", "tt1375666", "Christopher Nolan", 2010),
    (157336, "Interstellar", "tt0816692", "Christopher Nolan", 2014),
    (603, "The Matrix", "tt0133093", "Lana Wachowski", 1999),
    (680, "Pulp Fiction", "tt0110912", "Quentin Tarantino", 1994),
    (550, "Fight Club", "tt0137523", "David Fincher", 1999),
    (13, "Forrest Gump", "tt0109830", "Robert Zemeckis", 1994),
    (238, "The Godfather", "tt0068646", "Francis Ford Coppola", 1972),
    (597, "Titanic", "tt0120338", "James Cameron", 1997),
    (329, "Jurassic Park", "tt0107290", "Steven Spielberg", 1993),
    (19995, "Avatar", "tt0499549", "James Cameron", 2009),
    (98, "Gladiator", "tt0172495", "Ridley Scott", 2000),
    (278, "The Shawshank Redemption", "tt0111161", "Frank Darabont", 1994),
    (496243, "Parasite", "tt6751668", "Bong Joon-ho", 2019),
    (129, "Spirited Away", "tt0245429", "Hayao Miyazaki", 2001),
    (348, "Alien", "tt0078748", "Ridley Scott", 1979),
    (949, "Heat", "tt0113277", "Michael Mann", 1995),
    (77, "Memento", "tt0209144", "Christopher Nolan", 2000),
    (14160, "Up", "tt1049413", "Pete Docter", 2009),
    (354912, "Coco", "tt2380307", "Lee Unkrich", 2017),
    (807, "Se7en", "tt0114369", "David Fincher", 1995),
    (105, "Back to the Future", "tt0088763", "Robert Zemeckis", 1985),
    (424, "Schindler's List", "tt0108052", "Steven Spielberg", 1993),
    (857, "Saving Private Ryan", "tt0120815", "Steven Spielberg", 1998),
];

const GENRES: &[&str] = &[
    "Action", "Adventure", "Animation", "Comedy", "Crime", "Drama", "Family", "Fantasy",
    "History", "Mystery", "Romance", "Science Fiction", "Thriller", "War",
];

const STUDIOS: &[&str] = &[
    "Warner Bros. Pictures", "Legendary Pictures", "Syncopy", "Paramount", "Universal Pictures",
    "20th Century Studios", "Miramax", "DreamWorks", "Pixar", "Studio Ghibli", "Columbia Pictures",
    "Lionsgate", "New Line Cinema", "A24",
];

const ACTORS: &[&str] = &[
    "Christian Bale", "Heath Ledger", "Gary Oldman", "Morgan Freeman", "Tom Hanks",
    "Leonardo DiCaprio", "Keanu Reeves", "Uma Thurman", "Brad Pitt", "Edward Norton",
    "Marlon Brando", "Kate Winslet", "Sam Neill", "Russell Crowe", "Tim Robbins",
    "Song Kang-ho", "Sigourney Weaver", "Al Pacino", "Robert De Niro", "Guy Pearce",
    "Matthew McConaughey", "Anne Hathaway", "Michael J. Fox", "Liam Neeson",
];

const TITLE_ADJ: &[&str] = &["Silent", "Crimson", "Last", "Hidden", "Broken", "Golden", "Distant"];
const TITLE_NOUN: &[&str] = &["Harbor", "Signal", "Orchard", "Frontier", "Lantern", "Meridian"];

fn movie_record(
    rng: &mut ChaCha8Rng,
    id: u64,
    title: &str,
    imdb_id: &str,
    director: &str,
    year: u32,
) -> Value {
    let n_genres = rng.random_range(2..=3);
    let genres = pick_distinct(rng, GENRES, n_genres).join(", ");
    let n_studios = rng.random_range(1..=2);
    json!({
        "id": id,
        "title": title,
        "imdb_id": imdb_id,
        "director": director,
        "genres": genres,
        "release_date": format!("{year}-{:02}-{:02}", rng.random_range(1..=12), rng.random_range(1..=28)),
        "runtime": rng.random_range(85..=180),
        "vote_average": round_to(rng.random_range(5.5..9.3), 1),
        "vote_count": rng.random_range(1_000..=35_000),
        "budget": rng.random_range(5..=250) * 1_000_000u64,
        "production_companies": pick_distinct(rng, STUDIOS, n_studios),
        "cast": pick_distinct(rng, ACTORS, 3),
    })
}

fn movies(rng: &mut ChaCha8Rng) -> Vec<Value> {
    let mut out: Vec<Value> = MOVIES
        .iter()
        .map(|&(id, title, imdb, director, year)| movie_record(rng, id, title, imdb, director, year))
        .collect();
    // a few seed-dependent extra records so the table is not purely canonical
    let mut titles: Vec<String> = TITLE_ADJ
        .iter()
        .flat_map(|a| TITLE_NOUN.iter().map(move |n| format!("The {a} {n}")))
        .collect();
    titles.shuffle(rng);
    for (k, title) in titles.into_iter().take(8).enumerate() {
        let id = 900_001 + k as u64;
        let imdb = format!("tt9{:06}", rng.random_range(0..1_000_000));
        let director = pick(rng, &["Ava Lindqvist", "Tomas Rey", "Mira Okafor", "Jun Sato"]);
        let year = rng.random_range(1980..=2023);
        out.push(movie_record(rng, id, &title, &imdb, director, year));
    }
    out
}

pub(crate) const CITIES: &[(&str, &str, f64, f64, &str)] = &[
    ("London", "United Kingdom", 51.51, -0.13, "Europe/London"),
    ("Paris", "France", 48.86, 2.35, "Europe/Paris"),
    ("Berlin", "Germany", 52.52, 13.41, "Europe/Berlin"),
    ("Madrid", "Spain", 40.42, -3.70, "Europe/Madrid"),
    ("Rome", "Italy", 41.90, 12.50, "Europe/Rome"),
    ("Tokyo", "Japan", 35.68, 139.69, "Asia/Tokyo"),
    ("Seoul", "South Korea", 37.57, 126.98, "Asia/Seoul"),
    ("Mumbai", "India", 19.08, 72.88, "Asia/Kolkata"),
    ("Sydney", "Australia", -33.87, 151.21, "Australia/Sydney"),
    ("Toronto", "Canada", 43.65, -79.38, "America/Toronto"),
    ("New York", "United States", 40.71, -74.01, "America/New_York"),
    ("San Francisco", "United States", 37.77, -122.42, "America/Los_Angeles"),
    ("Chicago", "United States", 41.88, -87.63, "America/Chicago"),
    ("Mexico City", "Mexico", 19.43, -99.13, "America/Mexico_City"),
    ("Sao Paulo", "Brazil", -23.55, -46.63, "America/Sao_Paulo"),
    ("Cairo", "Egypt", 30.04, 31.24, "Africa/Cairo"),
    ("Nairobi", "Kenya", -1.29, 36.82, "Africa/Nairobi"),
    ("Singapore", "Singapore", 1.35, 103.82, "Asia/Singapore"),
    ("Dubai", "United Arab Emirates", 25.20, 55.27, "Asia/Dubai"),
    ("Oslo", "Norway", 59.91, 10.75, "Europe/Oslo"),
];

const CONDITIONS: &[&str] = &["Clear", "Partly cloudy", "Overcast", "Light rain", "Thunderstorm", "Fog", "Snow"];
const WEEKDAYS: &[&str] = &["Monday", "Tuesday", "Wednesday"];

fn cities(rng: &mut ChaCha8Rng) -> Vec<Value> {
    CITIES
        .iter()
        .map(|&(city, country, lat, lon, tz)| {
            let temp = round_to(rng.random_range(-8.0..36.0), 1);
            let forecast: Vec<Value> = WEEKDAYS
                .iter()
                .map(|day| {
                    let high = round_to(temp + rng.random_range(-4.0..5.0), 1);
                    let low = round_to(high - rng.random_range(3.0..11.0), 1);
                    json!({"day": day, "high_c": high, "low_c": low, "condition": pick(rng, CONDITIONS)})
                })
                .collect();
            json!({
                "city": city,
                "country": country,
                "lat": lat,
                "lon": lon,
                "timezone": tz,
                "temperature_c": temp,
                "feels_like_c": round_to(temp + rng.random_range(-3.0..2.0), 1),
                "humidity": rng.random_range(18..=97),
                "wind_kph": round_to(rng.random_range(0.0..42.0), 1),
                "condition": pick(rng, CONDITIONS),
                "aqi": rng.random_range(8..=190),
                "forecast": forecast,
            })
        })
        .collect()
}

pub(crate) const COUNTRIES: &[(&str, &str, &str, &str, f64)] = &[
    ("France", "Paris", "EUR", "Europe", 68.2),
    ("Germany", "Berlin", "EUR", "Europe", 84.4),
    ("Spain", "Madrid", "EUR", "Europe", 48.3),
    ("Italy", "Rome", "EUR", "Europe", 58.9),
    ("United Kingdom", "London", "GBP", "Europe", 67.7),
    ("Norway", "Oslo", "NOK", "Europe", 5.5),
    ("Japan", "Tokyo", "JPY", "Asia", 124.5),
    ("South Korea", "Seoul", "KRW", "Asia", 51.7),
    ("India", "New Delhi", "INR", "Asia", 1428.6),
    ("Australia", "Canberra", "AUD", "Oceania", 26.6),
    ("Canada", "Ottawa", "CAD", "Americas", 40.1),
    ("United States", "Washington, D.C.", "USD", "Americas", 334.9),
    ("Mexico", "Mexico City", "MXN", "Americas", 128.5),
    ("Brazil", "Brasilia", "BRL", "Americas", 216.4),
    ("Egypt", "Cairo", "EGP", "Africa", 112.7),
    ("Kenya", "Nairobi", "KES", "Africa", 55.1),
];

const HOLIDAYS: &[&str] = &[
    "New Year's Day", "Labour Day", "Independence Day", "Harvest Festival", "Constitution Day",
    "Spring Festival", "National Day", "Remembrance Day", "Unity Day",
];

fn countries(rng: &mut ChaCha8Rng) -> Vec<Value> {
    COUNTRIES
        .iter()
        .map(|&(country, capital, currency, region, population)| {
            let jitter = rng.random_range(0.95..1.05);
            json!({
                "country": country,
                "capital": capital,
                "currency": currency,
                "region": region,
                "population_millions": round_to(population * jitter, 1),
                "next_holiday": pick(rng, HOLIDAYS),
                "calling_code": format!("+{}", rng.random_range(1..=999)),
            })
        })
        .collect()
}

const AGENT_NAMES: &[(&str, &str)] = &[
    ("AGT-01", "Dana Whitfield"),
    ("AGT-02", "Marcus Lee"),
    ("AGT-03", "Priya Raman"),
    ("AGT-04", "Jonas Berg"),
    ("AGT-05", "Lucia Ortega"),
    ("AGT-06", "Samuel Okoye"),
    ("AGT-07", "Hana Kobayashi"),
    ("AGT-08", "Elliot Grant"),
];

pub(crate) const REGIONS: &[&str] = &["North America", "EMEA", "APAC", "LATAM"];

fn crm_agents(rng: &mut ChaCha8Rng) -> Vec<Value> {
    AGENT_NAMES
        .iter()
        .map(|&(id, name)| {
            json!({
                "agent_id": id,
                "name": name,
                "region": pick(rng, REGIONS),
                "skill": pick(rng, &["Billing", "Technical", "Onboarding", "Returns"]),
                "tenure_years": rng.random_range(1..=12),
            })
        })
        .collect()
}

const ACCOUNTS: &[(&str, &str, &str, &str)] = &[
    ("ACC-001", "Northwind Traders", "Retail", "North America"),
    ("ACC-002", "Contoso Health", "Healthcare", "North America"),
    ("ACC-003", "Fabrikam Energy", "Energy", "EMEA"),
    ("ACC-004", "Tailspin Airlines", "Travel", "EMEA"),
    ("ACC-005", "Wide World Importers", "Logistics", "APAC"),
    ("ACC-006", "Blue Yonder Bank", "Finance", "APAC"),
    ("ACC-007", "Litware Labs", "Software", "North America"),
    ("ACC-008", "Adventure Works", "Manufacturing", "LATAM"),
    ("ACC-009", "Proseware Media", "Media", "EMEA"),
    ("ACC-010", "Coho Vineyard", "Food", "LATAM"),
    ("ACC-011", "Woodgrove Insurance", "Finance", "North America"),
    ("ACC-012", "Lucerne Publishing", "Media", "APAC"),
];

fn crm_accounts() -> Vec<Value> {
    ACCOUNTS
        .iter()
        .map(|&(id, name, industry, region)| {
            json!({"account_id": id, "name": name, "industry": industry, "region": region})
        })
        .collect()
}

pub(crate) const CASE_COUNT: usize = 48;
pub(crate) const CASE_STATUSES: &[&str] = &["New", "Working", "Escalated", "Closed"];
pub(crate) const CASE_MONTHS: &[&str] = &["2024-01", "2024-02", "2024-03", "2024-04", "2024-05", "2024-06"];

fn crm_cases(rng: &mut ChaCha8Rng, agents: &[Value], accounts: &[Value]) -> Vec<Value> {
    (1..=CASE_COUNT)
        .map(|k| {
            let agent = agents.choose(rng).expect("agents");
            let account = accounts.choose(rng).expect("accounts");
            json!({
                "case_id": format!("CASE-{k:04}"),
                "account_id": account["account_id"],
                "agent_id": agent["agent_id"],
                "region": account["region"],
                "status": pick(rng, CASE_STATUSES),
                "priority": pick(rng, &["Low", "Medium", "High", "Critical"]),
                "subject": pick(rng, &[
                    "Invoice discrepancy", "Login failure", "Shipment delayed", "Refund request",
                    "Feature question", "Data export error", "Contract renewal", "Damaged item",
                ]),
                "handle_time_minutes": rng.random_range(5..=240),
                "transfer_count": rng.random_range(0..=4),
                "created_month": pick(rng, CASE_MONTHS),
            })
        })
        .collect()
}

const AUTHORS: &[(u64, &str, &str, u32)] = &[
    (1, "Jane Austen", "British", 1775),
    (2, "George Orwell", "British", 1903),
    (3, "Toni Morrison", "American", 1931),
    (4, "Gabriel Garcia Marquez", "Colombian", 1927),
    (5, "Haruki Murakami", "Japanese", 1949),
    (6, "Chimamanda Ngozi Adichie", "Nigerian", 1977),
    (7, "Fyodor Dostoevsky", "Russian", 1821),
    (8, "Ursula K. Le Guin", "American", 1929),
    (9, "Kazuo Ishiguro", "British", 1954),
    (10, "Isabel Allende", "Chilean", 1942),
];

pub(crate) const BOOKS: &[(u64, &str, u64, &str, u32)] = &[
    (101, "Pride and Prejudice", 1, "Romance", 1813),
    (102, "Emma", 1, "Romance", 1815),
    (103, "Nineteen Eighty-Four", 2, "Dystopian", 1949),
    (104, "Animal Farm", 2, "Satire", 1945),
    (105, "Beloved", 3, "Historical", 1987),
    (106, "Song of Solomon", 3, "Literary", 1977),
    (107, "One Hundred Years of Solitude", 4, "Magical Realism", 1967),
    (108, "Love in the Time of Cholera", 4, "Romance", 1985),
    (109, "Kafka on the Shore", 5, "Magical Realism", 2002),
    (110, "Norwegian Wood", 5, "Literary", 1987),
    (111, "Half of a Yellow Sun", 6, "Historical", 2006),
    (112, "Americanah", 6, "Literary", 2013),
    (113, "Crime and Punishment", 7, "Literary", 1866),
    (114, "The Brothers Karamazov", 7, "Literary", 1880),
    (115, "A Wizard of Earthsea", 8, "Fantasy", 1968),
    (116, "The Left Hand of Darkness", 8, "Science Fiction", 1969),
    (117, "The Remains of the Day", 9, "Literary", 1989),
    (118, "Never Let Me Go", 9, "Dystopian", 2005),
    (119, "The House of the Spirits", 10, "Magical Realism", 1982),
    (120, "Eva Luna", 10, "Literary", 1987),
];

fn authors() -> Vec<Value> {
    AUTHORS
        .iter()
        .map(|&(id, name, nationality, born)| {
            json!({"author_id": id, "name": name, "nationality": nationality, "birth_year": born})
        })
        .collect()
}

fn books(rng: &mut ChaCha8Rng) -> Vec<Value> {
    BOOKS
        .iter()
        .map(|&(id, title, author_id, genre, year)| {
            json!({
                "book_id": id,
                "title": title,
                "author_id": author_id,
                "genre": genre,
                "published_year": year,
                "pages": rng.random_range(120..=900),
                "rating": round_to(rng.random_range(3.0..5.0), 2),
                "review_count": rng.random_range(50..=25_000),
                "available_copies": rng.random_range(0..=9),
                "isbn": format!("978{:010}", rng.random_range(0..10_000_000_000u64)),
            })
        })
        .collect()
}

pub(crate) const PROPERTY_CITIES: &[&str] = &["Austin", "Denver", "Seattle", "Boston", "Miami", "Portland"];
const STREETS: &[&str] = &["Oak Street", "Maple Avenue", "Cedar Lane", "Pine Road", "Elm Drive"];

pub(crate) fn property_address(index: usize) -> (u64, String, &'static str) {
    let id = 1001 + index as u64;
    let number = 10 + (index * 37) % 890;
    let street = STREETS[index % STREETS.len()];
    let city = PROPERTY_CITIES[index % PROPERTY_CITIES.len()];
    (id, format!("{number} {street}"), city)
}

pub(crate) const PROPERTY_COUNT: usize = 30;

fn properties(rng: &mut ChaCha8Rng) -> Vec<Value> {
    (0..PROPERTY_COUNT)
        .map(|i| {
            let (id, address, city) = property_address(i);
            let price = rng.random_range(250..=1_800) * 1_000u64;
            let history: Vec<Value> = (0..3)
                .map(|k| {
                    let factor = 1.0 - 0.08 * (3 - k) as f64 + rng.random_range(-0.03..0.03);
                    json!({"year": 2021 + k, "price": ((price as f64 * factor) / 1000.0).round() as u64 * 1000})
                })
                .collect();
            json!({
                "property_id": id,
                "address": address,
                "city": city,
                "price": price,
                "bedrooms": rng.random_range(1..=6),
                "bathrooms": rng.random_range(1..=4),
                "sqft": rng.random_range(550..=4_200),
                "year_built": rng.random_range(1920..=2023),
                "school_rating": rng.random_range(1..=10),
                "listing_agent": pick(rng, &["Rosa Diaz", "Ken Adams", "Maya Patel", "Leo Fischer"]),
                "agent_phone": format!("555-{:04}", rng.random_range(0..10_000)),
                "price_history": history,
            })
        })
        .collect()
}

pub(crate) const COMPANIES: &[(&str, &str, &str, &str)] = &[
    ("AAPL", "Apple Inc.", "Technology", "Cupertino"),
    ("MSFT", "Microsoft Corporation", "Technology", "Redmond"),
    ("GOOGL", "Alphabet Inc.", "Technology", "Mountain View"),
    ("AMZN", "Amazon.com Inc.", "Consumer Cyclical", "Seattle"),
    ("NVDA", "NVIDIA Corporation", "Technology", "Santa Clara"),
    ("TSLA", "Tesla Inc.", "Consumer Cyclical", "Austin"),
    ("META", "Meta Platforms Inc.", "Communication Services", "Menlo Park"),
    ("JPM", "JPMorgan Chase & Co.", "Financial Services", "New York"),
    ("V", "Visa Inc.", "Financial Services", "San Francisco"),
    ("JNJ", "Johnson & Johnson", "Healthcare", "New Brunswick"),
    ("WMT", "Walmart Inc.", "Consumer Defensive", "Bentonville"),
    ("PG", "Procter & Gamble Co.", "Consumer Defensive", "Cincinnati"),
    ("XOM", "Exxon Mobil Corporation", "Energy", "Spring"),
    ("KO", "The Coca-Cola Company", "Consumer Defensive", "Atlanta"),
    ("DIS", "The Walt Disney Company", "Communication Services", "Burbank"),
];

fn companies(rng: &mut ChaCha8Rng) -> Vec<Value> {
    COMPANIES
        .iter()
        .map(|&(symbol, name, sector, hq)| {
            json!({
                "symbol": symbol,
                "company_name": name,
                "sector": sector,
                "headquarters": hq,
                "price": round_to(rng.random_range(20.0..900.0), 2),
                "change_percent": round_to(rng.random_range(-4.0..4.0), 2),
                "market_cap_billion": round_to(rng.random_range(50.0..3200.0), 1),
                "dividend_yield": round_to(rng.random_range(0.0..3.5), 2),
                "employees": rng.random_range(10..=2_100) * 1_000u64,
            })
        })
        .collect()
}

pub(crate) const CURRENCIES: &[(&str, f64)] = &[
    ("USD", 1.0),
    ("EUR", 0.92),
    ("GBP", 0.79),
    ("JPY", 151.0),
    ("CAD", 1.36),
    ("AUD", 1.52),
    ("CHF", 0.88),
];

fn exchange_rates(rng: &mut ChaCha8Rng) -> Vec<Value> {
    let per_usd: Vec<(&str, f64)> = CURRENCIES
        .iter()
        .map(|&(code, rate)| {
            let jitter = if code == "USD" { 1.0 } else { rng.random_range(0.97..1.03) };
            (code, rate * jitter)
        })
        .collect();
    let mut out = Vec::new();
    for &(base, base_rate) in &per_usd {
        for &(quote, quote_rate) in &per_usd {
            if base != quote {
                out.push(json!({
                    "base": base,
                    "quote": quote,
                    "rate": round_to(quote_rate / base_rate, 4),
                }));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seed_deterministic() {
        assert_eq!(FixtureStore::generate(3), FixtureStore::generate(3));
        assert_ne!(FixtureStore::generate(3), FixtureStore::generate(4));
    }

    #[test]
    fn canonical_identities_survive_reseeding() {
        for seed in [0, 1, 99] {
            let store = FixtureStore::generate(seed);
            let dk = store.table("movies").unwrap().iter()
                .find(|m| m["title"] == "The Dark Knight").unwrap();
            assert_eq!(dk["id"], 155);
            assert_eq!(store.table("cases").unwrap().len(), CASE_COUNT);
        }
    }

    #[test]
    fn json_round_trip() {
        let store = FixtureStore::generate(11);
        assert_eq!(FixtureStore::from_json(&store.to_json()).unwrap(), store);
    }

    #[test]
    fn movie_titles_are_unique() {
        let store = FixtureStore::generate(5);
        let mut titles: Vec<_> = store.table("movies").unwrap().iter()
            .map(|m| m["title"].as_str().unwrap().to_lowercase()).collect();
        let n = titles.len();
        titles.sort();
        titles.dedup();
        assert_eq!(titles.len(), n);
    }
}
