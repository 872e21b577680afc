use std::net::SocketAddr;

use clap::Parser;
use tokio::net::TcpListener;

/// Serve interactive stylization sessions over WebSocket.
#[derive(Debug, Parser)]
#[command(name = "stylize-studio", version)]
struct Args {
    #[arg(long, default_value_t = stylize_studio::DEFAULT_PORT)]
    port: u16,

    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let listener = TcpListener::bind(SocketAddr::new(args.host, args.port)).await?;
    log::info!("listening on ws://{}", listener.local_addr()?);
    stylize_studio::serve(listener).await
}
