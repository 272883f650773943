use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use hapticmap_client::Client;
use hapticmap_core::agent::{ProviderConfig, ProviderKind};
use hapticmap_core::api::{CreatePlaceRequest, PlaceSource};
use hapticmap_core::exploration::{format_visited, parse_trace, TraceRecord};
use hapticmap_core::ingest::{fetch_dataset, FixtureSource, Geocoder, OverpassClient, PlaceQuery, RawFeatureSource};
use hapticmap_core::render::{encode_jpeg, render_canvas, RenderStyle};
use hapticmap_core::replay::{replay_trace, ReplayTranscript, TranscriptWriter};
use hapticmap_core::{fixtures, CanvasPoint, GeoPoint, MapWorld, ZoneDataset};
use hapticmap_server::ServerConfig;
use tracing::info;

use crate::{FetchArgs, RenderArgs, ReplayArgs, ServeArgs};

/// `lat,lon` or `x,y`.
fn parse_pair(s: &str) -> Option<(f64, f64)> {
    let (a, b) = s.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

fn load_dataset(path: &Path) -> Result<ZoneDataset> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    ZoneDataset::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn dataset_file_name(ds: &ZoneDataset) -> String {
    format!("dataset_{:.4}_{:.4}_r{:.0}.json", ds.center.lat, ds.center.lon, ds.radius_m)
}

fn write_dataset(dir: &Path, ds: &ZoneDataset) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(dataset_file_name(ds));
    std::fs::write(&path, ds.to_json()).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub async fn fetch(args: FetchArgs) -> Result<()> {
    let coords = args.place.as_deref().and_then(parse_pair);
    let text = args.place.clone().filter(|_| coords.is_none());

    let dataset = if let Some(server) = &args.server {
        let client = Client::new(server.as_str());
        let req = CreatePlaceRequest {
            query: text,
            lat: coords.map(|c| c.0),
            lon: coords.map(|c| c.1),
            radius_m: Some(args.radius),
            source: Some(if args.fixture.is_some() {
                PlaceSource::Fixture
            } else {
                PlaceSource::Overpass
            }),
            fixture: args.fixture.clone(),
            refresh: args.refresh,
        };
        let summary = client.create_place(&req).await?;
        client.dataset(&summary.dataset_id).await?
    } else {
        let (source, offline): (Box<dyn RawFeatureSource + Send>, bool) = match (&args.offline_fixture, &args.fixture) {
            (Some(path), _) => (Box::new(FixtureSource::from_path(path).with_context(|| format!("loading {}", path.display()))?), true),
            (None, Some(name)) => (
                Box::new(fixtures::fixture_source(name).ok_or_else(|| {
                    anyhow!("unknown fixture {name:?}; bundled: {}", fixtures::FIXTURE_NAMES.join(", "))
                })?),
                true,
            ),
            (None, None) => {
                let mut client = OverpassClient::from_env();
                if let Some(dir) = &args.cache_dir {
                    client = client.with_cache_dir(dir.join("overpass"));
                }
                client.refresh = args.refresh;
                (Box::new(client), false)
            }
        };
        let center = match (coords, &text) {
            (Some((lat, lon)), _) => GeoPoint::new(lat, lon),
            (None, Some(t)) => {
                let geocoder = if offline { Geocoder::offline() } else { Geocoder::from_env() };
                geocoder.resolve(&PlaceQuery::text(t.as_str()))?
            }
            (None, None) => match (&args.offline_fixture, &args.fixture) {
                (Some(path), _) => FixtureSource::from_path(path)?
                    .bbox_center()
                    .ok_or_else(|| anyhow!("{} has no features to centre on", path.display()))?,
                (None, Some(name)) => fixtures::fixture_center(name).expect("known fixture has a centre"),
                (None, None) => bail!("a place or `lat,lon` is required"),
            },
        };
        let radius = args.radius;
        tokio::task::spawn_blocking(move || fetch_dataset(source.as_ref(), center, radius, text))
            .await
            .context("fetch task")??
    };
    let path = write_dataset(&args.out, &dataset)?;
    info!(zones = dataset.zones.len(), "dataset written");
    println!("{}", path.display());
    Ok(())
}

pub fn render(args: RenderArgs) -> Result<()> {
    let world = MapWorld::new(load_dataset(&args.dataset)?);
    let cursor = match &args.cursor {
        Some(s) => {
            let (x, y) = parse_pair(s).ok_or_else(|| anyhow!("--cursor expects x,y, got {s:?}"))?;
            Some(CanvasPoint::new(x, y))
        }
        None => None,
    };
    let mut style = RenderStyle::default();
    if args.labels {
        style = style.with_labels();
    }
    let jpeg = encode_jpeg(&render_canvas(&world, cursor, &style), args.quality)?;
    std::fs::write(&args.output, &jpeg).with_context(|| format!("writing {}", args.output.display()))?;
    println!("{} ({} bytes)", args.output.display(), jpeg.len());
    Ok(())
}

async fn replay_remote(server: &str, dataset: ZoneDataset, trace: &[TraceRecord]) -> Result<ReplayTranscript> {
    let client = Client::new(server);
    let summary = client.upload_dataset(&dataset).await?;
    let session = client.create_session(&summary.dataset_id, None).await?;
    let id = session.session_id.clone();
    let mut out = TranscriptWriter::new(&dataset);
    let mut cursor = session.cursor;
    let mut now = 0u64;
    for rec in trace {
        match rec {
            TraceRecord::Move { t_ms, x, y } => {
                now = *t_ms;
                let resp = client.move_cursor(&id, *x, *y).await?;
                cursor = resp.cursor;
                for mut e in resp.events {
                    // Service clocks are wall time; the transcript uses trace time.
                    e.at_ms = now;
                    out.event(e);
                }
            }
            TraceRecord::Ask { ask, t_ms } => {
                if let Some(t) = t_ms {
                    now = *t;
                }
                let resp = client.ask(&id, ask).await?;
                out.exchange(now, cursor, ask, &resp.answer);
            }
        }
    }
    let visited = format_visited(&client.session(&id).await?.visited);
    client.close_session(&id).await?;
    Ok(out.finish(&visited))
}

pub async fn replay(args: ReplayArgs) -> Result<()> {
    let dataset = load_dataset(&args.dataset)?;
    let trace_text = std::fs::read_to_string(&args.trace).with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = parse_trace(&trace_text)?;

    let transcript = match &args.server {
        Some(server) => replay_remote(server, dataset, &trace).await?,
        None => {
            let mut config = ProviderConfig::mock().apply_env()?;
            config.provider_kind = args.provider.unwrap_or(ProviderKind::MockGrounded);
            config.validate()?;
            let provider = config.build()?;
            let world = Arc::new(MapWorld::new(dataset));
            tokio::task::spawn_blocking(move || replay_trace(world, &trace, provider.as_ref()))
                .await
                .context("replay task")??
        }
    };
    print!("{}", transcript.text);

    if let Some(golden) = &args.golden {
        if args.bless || !golden.exists() {
            std::fs::write(golden, &transcript.text).with_context(|| format!("writing {}", golden.display()))?;
            eprintln!("wrote {}", golden.display());
        } else {
            let expected =
                std::fs::read_to_string(golden).with_context(|| format!("reading {}", golden.display()))?;
            if let Some((n, (want, got))) = expected
                .lines()
                .chain(std::iter::repeat("<eof>"))
                .zip(transcript.text.lines().chain(std::iter::repeat("<eof>")))
                .take(expected.lines().count().max(transcript.text.lines().count()))
                .enumerate()
                .find(|(_, (a, b))| a != b)
            {
                bail!(
                    "transcript differs from {} at line {}\n  expected: {want}\n  actual:   {got}",
                    golden.display(),
                    n + 1
                );
            }
            if expected != transcript.text {
                bail!("transcript differs from {} in trailing whitespace", golden.display());
            }
            eprintln!("matches {}", golden.display());
        }
    }
    Ok(())
}

pub async fn serve(args: ServeArgs) -> Result<()> {
    let mut config = ServerConfig::load(args.config.as_deref())?;
    if let Some(p) = args.port {
        config.port = p;
    }
    if let Some(h) = args.host {
        config.host = h;
    }
    hapticmap_server::serve(config).await?;
    Ok(())
}
