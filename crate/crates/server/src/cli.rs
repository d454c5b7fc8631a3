use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Parser, Subcommand};

use prepline_core::prompt::PromptBuilder;
use prepline_core::subtitle::SubtitleFormat;
use prepline_core::{GroupId, ResponseId, VideoId};
use prepline_store::Store;

use crate::captions::CaptionClient;
use crate::config::ApiConfig;
use crate::ops::{self, NewVideo};

#[derive(Debug, Parser)]
#[command(name = "prepline", version, about = "Video response collector with automatic question answering")]
pub struct Cli {
    /// Service configuration file.
    #[arg(long, short, global = true, default_value = "prepline.toml")]
    pub config: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve,
    /// Register a video and print its record.
    RegisterVideo {
        #[arg(long)]
        title: String,
        #[arg(long)]
        external_source_id: String,
        #[arg(long)]
        duration_s: f64,
        /// Group allowed to watch the video; repeatable.
        #[arg(long = "group")]
        groups: Vec<String>,
        /// Use this id instead of a generated one.
        #[arg(long)]
        video_id: Option<String>,
    },
    /// Parse a subtitle file and make it the video's track.
    IngestSubtitles {
        video_id: String,
        file: PathBuf,
        #[arg(long, value_parser = parse_format)]
        format: SubtitleFormat,
        #[arg(long, default_value = "en")]
        language: String,
    },
    /// Download captions from the configured caption server and ingest them.
    FetchSubtitles {
        video_id: String,
        #[arg(long, default_value = "en")]
        language: String,
    },
    /// Print the prompt for a question with and without subtitles.
    DumpPrompt {
        response_id: String,
        /// Print only the variant without subtitles.
        #[arg(long)]
        without_subtitles: bool,
    },
    /// Write one collection as newline-delimited JSON to stdout.
    Export { collection: String },
    /// Rewrite the journals, dropping superseded lines.
    Compact,
}

fn parse_format(s: &str) -> Result<SubtitleFormat, String> {
    s.parse()
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

pub async fn run(cli: Cli) -> anyhow::Result<()> {
    let config = ApiConfig::load(&cli.config)?;
    if let Command::Serve = cli.command {
        return crate::serve(config).await;
    }
    let store = Store::open(&config.data_dir)?;
    match cli.command {
        Command::Serve => unreachable!(),
        Command::RegisterVideo {
            title,
            external_source_id,
            duration_s,
            groups,
            video_id,
        } => {
            let video = ops::register_video(
                &store,
                NewVideo {
                    video_id: video_id.map(VideoId::new),
                    title,
                    external_source_id,
                    duration_s,
                    group_ids: groups.into_iter().map(GroupId::new).collect(),
                },
            )?;
            print_json(&video)
        }
        Command::IngestSubtitles {
            video_id,
            file,
            format,
            language,
        } => {
            let document = std::fs::read_to_string(&file)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", file.display()))?;
            let summary = ops::ingest_subtitles(&store, &VideoId::new(video_id), &document, format, &language)?;
            print_json(&summary)
        }
        Command::FetchSubtitles { video_id, language } => {
            let base = config
                .captions
                .base_url
                .clone()
                .ok_or_else(|| anyhow::anyhow!("captions.base_url is not configured"))?;
            let video_id = VideoId::new(video_id);
            let video = store.video(&video_id)?;
            let client = CaptionClient::new(base, Duration::from_secs_f64(config.captions.timeout_s.unwrap_or(30.0)));
            let document = client.fetch_remote_track(&video.external_source_id, &language).await?;
            let summary = ops::ingest_subtitles(&store, &video_id, &document, SubtitleFormat::Webvtt, &language)?;
            print_json(&summary)
        }
        Command::DumpPrompt {
            response_id,
            without_subtitles,
        } => {
            let builder = PromptBuilder::new(config.prompt.template.clone(), config.prompt_settings())?;
            let dump = ops::dump_prompt(&store, &builder, &ResponseId::new(response_id), without_subtitles)?;
            print_json(&dump)
        }
        Command::Export { collection } => {
            let mut out = std::io::stdout().lock();
            let n = store.export(&collection, &mut out)?;
            out.flush()?;
            tracing::info!(collection, records = n, "exported");
            Ok(())
        }
        Command::Compact => {
            let counts: serde_json::Map<String, serde_json::Value> = store
                .compact()?
                .into_iter()
                .map(|(name, n)| (name.to_owned(), n.into()))
                .collect();
            print_json(&counts)
        }
    }
}
